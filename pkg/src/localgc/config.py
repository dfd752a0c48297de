"""Grid densities and tolerances used by certification sweeps and tests."""

import math

import numpy as np

CERT_TOL = 1e-12

# sub-gamma MGF grid: q log-spaced, s in [q, e^-3], t in [0, 0.99 * t_max(q, s)]
SUBGAMMA_Q_POINTS = 50
SUBGAMMA_S_POINTS = 20
SUBGAMMA_T_POINTS = 50
SUBGAMMA_Q_MIN = 1e-6
SUBGAMMA_S_MAX = math.exp(-3.0)
SUBGAMMA_T_FRACTION = 0.99

# classical-inequality grids (n <= 200)
CLASSICAL_N_MAX = 200
KL_Q_POINTS = 60
KL_EPS_POINTS = 60
CHERNOFF_Q_POINTS = 40
CHERNOFF_EPS_POINTS = 40
OKAMOTO_Q_POINTS = 40
OKAMOTO_T_POINTS = 40
MAD_Q_POINTS = 40

# Bernstein comparison on the s = q slice: log(sub-gamma rhs) / log(Bernstein rhs)
# equals (1 - t/3) / ((1 - q)(1 - t)); its sup over q <= e^-3, t <= 1/2 is
# 5 / (3 (1 - e^-3)) = 1.7536...
BERNSTEIN_T_MAX = 0.5
BERNSTEIN_LOG_RATIO = 1.76

# upper/lower bound domination grids
POWER_T_SMALL = (0.25, 0.4)
POWER_T_LARGE = (1.0, 2.0, 4.0)
DOMINATION_N = tuple(int(2 ** k) for k in range(5, 13))   # 32 ... 4096
DOMINATION_D = (10, 100, 1000)


def subgamma_grid():
    """Yield (q, s, t) triples of the sub-gamma certification grid."""
    for q in np.geomspace(SUBGAMMA_Q_MIN, SUBGAMMA_S_MAX, SUBGAMMA_Q_POINTS):
        for s in np.linspace(q, SUBGAMMA_S_MAX, SUBGAMMA_S_POINTS):
            t_max = math.log(1.0 / q) / math.log(1.0 / s)
            for t in np.linspace(0.0, SUBGAMMA_T_FRACTION * t_max, SUBGAMMA_T_POINTS):
                yield float(q), float(s), float(t)
