"""Shared test oracles, independent of the library's solver paths."""

from functools import lru_cache
from itertools import combinations, product

import numpy as np


@lru_cache(maxsize=64)
def _exchange_templates(m, s):
    subsets = np.array(list(combinations(range(m), s + 1)))
    sign_tail = np.array(list(product([1.0, -1.0], repeat=s)))
    sigmas = np.column_stack([np.ones(len(sign_tail)), sign_tail])
    return subsets, sigmas


def minimax_residual_oracle(a_mat, y, tol=1e-9):
    """Exact value of min_theta ||A theta - y||_inf by exchange enumeration.

    The optimal residual equioscillates on some set of s+1 rows with
    alternating-ish signs, so enumerating every (s+1)-row subset and sign
    pattern and solving the square system [A_J, -sigma] (theta, t) = y_J
    recovers the optimum. Purely linear-algebraic; no LP involved.
    """
    a_mat = np.asarray(a_mat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, s = a_mat.shape
    if m <= s:
        theta, *_ = np.linalg.lstsq(a_mat, y, rcond=None)
        return float(np.max(np.abs(a_mat @ theta - y)))

    subsets, sigmas = _exchange_templates(m, s)  # first sign fixed

    aj = a_mat[subsets]                          # (nJ, s+1, s)
    yj = y[subsets]                              # (nJ, s+1)
    n_j, n_s = len(subsets), len(sigmas)
    systems = np.empty((n_j, n_s, s + 1, s + 1))
    systems[:, :, :, :s] = aj[:, None, :, :]
    systems[:, :, :, s] = -sigmas[None, :, :]
    systems = systems.reshape(-1, s + 1, s + 1)
    rhs = np.broadcast_to(yj[:, None, :], (n_j, n_s, s + 1)).reshape(-1, s + 1)

    dets = np.linalg.det(systems)
    ok = np.abs(dets) > 1e-12
    if not ok.any():
        raise ValueError("all exchange systems singular")
    sols = np.linalg.solve(systems[ok], rhs[ok][..., None])[..., 0]
    thetas, ts = sols[:, :s], np.abs(sols[:, s])  # (sigma, t<0) == (-sigma, |t|)
    residuals = np.abs(a_mat @ thetas.T - y[:, None]).max(axis=0)
    attained = residuals <= ts + tol
    if not attained.any():
        raise ValueError("no exchange candidate attained its level")
    return float(ts[attained].min())


def sparse_minimax_oracle(psi, targets, s, tol=1e-9):
    """Brute-force enumeration over supports, each solved by the exchange
    oracle; independent duplicate of the library's recovery route."""
    psi = np.asarray(psi, dtype=np.float64)
    d = psi.shape[1]
    best = np.inf
    for support in combinations(range(d), s):
        best = min(best, minimax_residual_oracle(psi[:, list(support)], targets, tol))
    return best
