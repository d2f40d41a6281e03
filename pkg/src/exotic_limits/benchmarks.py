"""Published benchmark values the reproduction report checks against.

All fields are SI. The harmonic tables refer to a coupling product of
1e-20 at a force range of 100 um; the budget and bound benchmarks refer
to 330 um (spin-velocity) and 30 um (monopole-dipole).

Three table entries and two diamagnetism summary numbers are tagged
known_discrepancy: the converged integrals here disagree with the
published small values, and the analysis (decision ledger, README)
attributes those entries to the noise floor and angle sensitivity of
the original computation. They are reported, never enforced.
"""

TABLE_COUPLING = 1e-20
TABLE_FORCE_RANGE = 1e-4

AV_TABLE = {"a1": 9.62e-12, "a2": 0.02e-12, "a3": 0.0}
SP_TABLE = {"b1": 5.24e-12, "b2": -0.06e-12, "b3": -0.06e-12}
TABLE_RESOLUTION = 0.005e-12  # entries are printed to two decimals in pT

DIAMAG_AVG_LOW = 0.738e-12
DIAMAG_AVG_HIGH = 0.740e-12
DIAMAG_AVG_TOL = 0.01e-12
DIAMAG_CENTERED_P2P = 0.002e-12
DIAMAG_MISALIGNED_AMPLITUDE = 0.5e-12

AV_FORCE_RANGE = 330e-6
SP_FORCE_RANGE = 30e-6

BUDGET_AV_THETA = (-2.8e-25, 2.9e-25)
BUDGET_AV_CALIBRATION = 1.2e-25
BUDGET_AV_FINAL = 4.3e-25
BUDGET_SP_DIAMAG = 2.9e-21
BUDGET_SP_FINAL = 3.1e-21

BOUND_AV = 2.5e-22
BOUND_SP = 2.5e-20

ROW_TOLERANCE = 0.30
FINAL_TOLERANCE = 0.20
BOUND_TOLERANCE = 0.25
TABLE_TOLERANCE = 0.02
SMALL_ENTRY_TOLERANCE = 0.50
DIAMAG_TOLERANCE = 0.50

AV_TABLE_RUNTIME_LIMIT = 60.0  # seconds, single-threaded at 2^20 pairs
