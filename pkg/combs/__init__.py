# Exact comb-state calculus and theta fibers
