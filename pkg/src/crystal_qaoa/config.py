"""Tunable defaults.

Everything here is a plain value so callers (and the CLI) can override it
per call instead of patching module globals.
"""
import math

# Upper bound on N for brute-force enumeration of all 2**N configurations.
EXHAUSTIVE_LIMIT = 28
# Upper bound on N for the state-vector engine (2**28 complex128 = 4 GiB).
MAX_QUBITS = 28

# Linear-ramp parameters used as the fixed-angle schedule and as the
# initial point for every optimizer.
FIXED_ANGLE_PARAMS = {"alpha_I": 0.03, "b_I": 0.20, "alpha_z": 1.2, "b_z": 1.5}

# Central finite-difference step (radians) for quasi-Newton gradients.
FD_STEP = 1e-6

BUDGET_FULL = 500
BUDGET_LINEAR_RAMP = 200
BUDGET_GAMMA_ONLY = 100

# Box bounds for the derivative-free searches, in (alpha_I, b_I, alpha_z, b_z) order.
RAMP_BOUNDS = ((-2.0, 2.0), (-2.0, 2.0), (0.0, 2 * math.pi), (0.0, 2 * math.pi))

SHOTS = 100_000

# Relative tolerance used to group degenerate energy levels.
ENERGY_RTOL = 1e-9
# Tolerance (Angstrom) for matching realized pair distances to table entries.
DISTANCE_MATCH_TOL = 1e-3
# Realized pair distances are rounded to this many decimals (1e-6 Angstrom).
DISTANCE_DECIMALS = 6
# Refuse periodic-image searches needing more translations than this per axis.
MAX_IMAGE_SHELLS = 6

HISTOGRAM_BINS = 50
