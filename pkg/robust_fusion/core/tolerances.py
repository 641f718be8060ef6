# Input probabilities (kernels, priors).
INPUT_TOL = 1e-12
# Objects produced by the solvers (joints, garblings, potentials).
COMPUTED_TOL = 1e-8
# Values compared across methods.
VALUE_TOL = 1e-6

PIVOT_TOL = 1e-9
FEASIBILITY_TOL = 1e-9

# Slack below which two numbers count as a tie in argmax-style selections.
TIE_TOL = 1e-9
