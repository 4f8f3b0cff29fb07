"""Vehicle routing with multiple time windows.

Core pieces: the data model and file formats (model), constant-amortised
insertion evaluation for both variants (schedule), exhaustive ground-truth
evaluators (oracle), the adaptive large neighbourhood search (alns), and the
command-line front end (cli).
"""

from .model import (
    CostBreakdown,
    Instance,
    ScheduledStop,
    Solution,
    TimeWindow,
    Visit,
    evaluate_objective,
    parse_instance,
    parse_solution,
    perturb_instance,
    random_instance,
    validate_solution,
    write_instance,
    write_solution,
)

__version__ = "0.1.0"

__all__ = [
    "CostBreakdown", "Instance", "ScheduledStop", "Solution", "TimeWindow",
    "Visit", "evaluate_objective", "parse_instance", "parse_solution",
    "perturb_instance", "random_instance", "validate_solution",
    "write_instance", "write_solution", "__version__",
]
