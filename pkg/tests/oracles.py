"""Independent reference computations used by the tests.

Nothing here imports the transform, solver or area code under test; the
framelet matrix is rebuilt from its literal entries.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import linprog

P_LITERAL = 0.5 * np.array(
    [
        [1, 1, 1, 1],
        [1, -1, 0, 0],
        [1, 0, -1, 0],
        [1, 0, 0, -1],
        [0, 1, -1, 0],
        [0, 1, 0, -1],
        [0, 0, 1, -1],
    ]
)

_NODES, _WEIGHTS = leggauss(80)


def quad_area(u_lo, u_hi, v_lo, v_hi):
    """Tensor Gauss-Legendre quadrature of the cap-map area density."""
    u = 0.5 * (u_hi - u_lo) * _NODES + 0.5 * (u_hi + u_lo)
    v = 0.5 * (v_hi - v_lo) * _NODES + 0.5 * (v_hi + v_lo)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    dens = (1 + uu**2 + vv**2) ** -1.5
    w = np.outer(_WEIGHTS, _WEIGHTS) * 0.25 * (u_hi - u_lo) * (v_hi - v_lo)
    return float(np.sum(w * dens))


def dense_analysis_j1():
    """Matrix of one-level analysis at J=1 in the flat layout [low, band1..band6]."""
    blocks = np.kron(np.eye(6), P_LITERAL)  # row = face * 7 + r
    order = [f * 7 for f in range(6)] + [f * 7 + b for b in range(1, 7) for f in range(6)]
    return blocks[order]


def l1_inpaint_lp(F, g, observed):
    """min ||F x||_1 subject to x = g on observed entries, as a linear program."""
    n, m = F.shape[1], F.shape[0]
    c = np.r_[np.zeros(n), np.ones(m)]
    eye = np.eye(m)
    A = np.block([[F, -eye], [-F, -eye]])
    bounds = [(g[i], g[i]) if observed[i] else (None, None) for i in range(n)]
    bounds += [(0, None)] * m
    res = linprog(c, A_ub=A, b_ub=np.zeros(2 * m), bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return res.fun, res.x[:n]


def admm_step_scalar(F, x, lam1, lam2, g, observed, beta1, beta2, lam):
    """Straight-line transcription of one iteration with the identity denoiser."""
    m, n = F.shape
    Fx = [sum(F[i, j] * x[j] for j in range(n)) for i in range(m)]
    y = []
    for i in range(m):
        t = Fx[i] - lam1[i] / beta1
        mag = max(abs(t) - 1.0 / beta1, 0.0)
        y.append(mag if t > 0 else -mag)
    z = [x[j] - lam2[j] / beta2 for j in range(n)]  # identity denoiser
    Fty = [sum(F[i, j] * y[i] for i in range(m)) for j in range(n)]
    Ftl = [sum(F[i, j] * lam1[i] for i in range(m)) for j in range(n)]
    x_new = [
        g[j] if observed[j] else (beta1 * Fty[j] + beta2 * z[j] + Ftl[j] + lam2[j]) / (beta1 + beta2)
        for j in range(n)
    ]
    Fxn = [sum(F[i, j] * x_new[j] for j in range(n)) for i in range(m)]
    lam1_new = [lam1[i] + (y[i] - Fxn[i]) for i in range(m)]
    lam2_new = [lam2[j] + (z[j] - x_new[j]) for j in range(n)]
    return np.array(x_new), np.array(y), np.array(z), np.array(lam1_new), np.array(lam2_new)


def smooth_field(points):
    """Three low-order real spherical harmonics on the [0, 255] scale."""
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    return 128.0 + 50.0 * z + 40.0 * x + 30.0 * (3.0 * z**2 - 1.0) / 2.0
