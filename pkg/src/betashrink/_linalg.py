"""Symmetric solves with a pseudo-inverse fallback for near-singular systems."""

import numpy as np

PIVOT_TOL = 1e-12


def sym_solve(A, b, tol=PIVOT_TOL):
    """Solve ``A x = b`` for symmetric ``A``.

    Returns ``(x, degenerate)``. When the smallest eigenvalue falls below
    ``tol`` times the largest (in magnitude) the system is solved with the
    eigen pseudo-inverse and ``degenerate`` is True.
    """
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    lam, Q = np.linalg.eigh(A)
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    if scale == 0.0:
        return np.zeros_like(np.asarray(b, dtype=float)), True
    keep = lam > tol * scale
    degenerate = not keep.all()
    inv = np.where(keep, 1.0 / np.where(keep, lam, 1.0), 0.0)
    x = Q @ (inv[:, None] * (Q.T @ np.asarray(b, dtype=float)).reshape(lam.size, -1))
    return x.reshape(np.shape(b)), degenerate
