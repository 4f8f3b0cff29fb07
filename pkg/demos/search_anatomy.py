"""
Inside one search run
=====================

Runs the solver with statistics enabled and unpacks what the adaptive layer
did: the tuned temperature, the two phases, which destroy/repair operators
earned their keep, and how the best cost fell over time.
"""

from vrpmtw.alns import make_config, run
from vrpmtw.model import random_instance

instance = random_instance(100, seed=11, max_windows=3)
cfg = make_config(False, iterations=4000, seed=2)
solution, stats = run(instance, cfg)

print(f"cost {solution.cost.total:.1f} with {len(solution.routes)} routes")

# the start temperature is tuned so that a reference worsening of the
# post-tuning cost is a coin flip; it then cools geometrically
print(f"\ntuned on cost {stats.cost_init:.1f}: "
      f"tau {stats.tau_start:.2f} -> {stats.tau_end:.2f}")
print(f"iterations: {stats.iterations_tuning} tuning, "
      f"{stats.iterations_route_min} route-min, "
      f"{stats.iterations_optimise} final")
total = max(1, stats.accepted + stats.rejected)
print(f"acceptance rate {stats.accepted / total:.2f}, "
      f"{stats.new_best} new bests, {stats.improving} improving moves")

# operator weights start at 1, are bumped by outcome scores, and never
# fall below 1; uses follow the weights through the roulette wheel
print("\noperator            uses   weight")
for kind, name, uses, weight in stats.operator_rows:
    print(f"  {kind}:{name:<16s} {uses:5d} {weight:8.2f}")

# the trace records the best phase cost as the run progresses; in the final
# phase it is monotone because only full solutions can become the best
# (in fixed-iteration mode the trace clock is the iteration number)
milestones = [row for row in stats.trace if row[0] == "optimise"]
step = max(1, len(milestones) // 8)
print("\nbest-cost milestones (final phase):")
for phase, it, clock, best in milestones[::step]:
    print(f"  iter {it:5d}  best {best:.1f}")

# routes untouched by a destroy keep their insertion evaluations; with large
# removals most routes are hit every iteration, so reuse is a bonus, not the
# main effect - the cheap per-query evaluation is what carries the load
total_q = max(1, stats.cache_hits + stats.cache_misses)
print(f"\ninsertion cache: {stats.cache_hits} of {total_q} queries answered "
      f"from cache ({stats.cache_hits / total_q:.1%})")
