from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

CG_TOL = 1e-10
ORACLE_RTOL = 1e-6
ANALYTIC_RTOL = 0.01
DECOMPOSITION_TOL = 1e-10
ORTHOGONALITY_BOUND = 1e-8

# mu = lambda = 1: Q^gamma(I2) and Q^gamma(e1 x e1) of the homogeneous plate
Q_IDENTITY = 5.0 / 9.0
Q_E11 = 2.0 / 9.0

GAMMAS = (0.5, 1.0, 2.0)
COERCIVITY_ALLOWANCE = 0.05
RANDOM_LOADS = 50

LAMINATE_CONTRAST = 10.0
LAMINATE_RTOL = 0.02
LAMINATE_GAMMA = 16.0
LAMINATE_MAXITER = 50_000
LAMINATE_PROFILE_ATOL = 1e-6

TAYLOR_STEPS = (1e-1, 1e-2, 1e-3, 1e-4)
TAYLOR_SAMPLES = 20
HESSIAN_STEP = 1e-4
HESSIAN_RTOL = 1e-5

BIRKHOFF_EPSILONS = (1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32)
VORONOI_SEEDS = 50
STANDARD_ERRORS = 3.0
SIGNIFICANCE = 1e-3

ISOTROPY_SEEDS = 20
ISOTROPY_BOUND = 0.10

RECOVERY_SCHEDULE = (0.08, 0.04, 0.02)
RECOVERY_GAP_BOUND = 0.15
RECOVERY_LOWER_SLACK = 0.20
OBJECTIVITY_RTOL = 1e-10
