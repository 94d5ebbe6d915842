"""Dense linear algebra, seeded randomness and finite-difference checking.

Matrices are plain 2-D ``float64`` numpy arrays. Hot paths use LAPACK via
numpy; :func:`jacobi_eigh` is a from-scratch cyclic Jacobi solver kept as an
independent route for the CCA oracle and for tests.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

SYMMETRY_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-6


class NumericError(ValueError):
    pass


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise NumericError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name} contains non-finite entries")
    return a


def rng_stream(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for ``(seed, stream...)``.

    Streams with distinct ids are statistically independent, and the same
    ids always reproduce the same draws, regardless of how many other
    streams were created before.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1),
                                spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise NumericError(f"shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NumericError(f"matrix must be square, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise NumericError("matrix is not symmetric")
    return a


def _fix_signs(q: np.ndarray) -> np.ndarray:
    # first nonzero component of every eigenvector is made positive
    q = q.copy()
    for j in range(q.shape[1]):
        col = q[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            q[:, j] = -col
    return q


def symm_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix.

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in descending order.
    q : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, sign-normalised so that the
        first nonzero component of each column is positive.
    """
    a = _check_symmetric(a)
    a = 0.5 * (a + a.T)
    w, q = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_signs(q[:, order])


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigen-solver with the same output convention as
    :func:`symm_eig`."""
    a = _check_symmetric(a)
    n = a.shape[0]
    A = 0.5 * (a + a.T)
    V = np.eye(n)
    scale = max(float(np.sum(A * A)), 1e-300)
    for _ in range(max_sweeps):
        off = float(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise NumericError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_signs(V[:, order])


def inv_sqrt_psd(a, floor: float = 1e-12, eig=symm_eig) -> np.ndarray:
    """Inverse square root of a symmetric positive semi-definite matrix.

    Eigenvalues below ``floor`` are clamped to it; eigenvalues below
    ``-1e-6`` mean the input is not PSD and raise.
    """
    w, q = eig(a)
    if w.size and w[-1] < -NEGATIVE_EIG_TOL:
        raise NumericError(f"matrix has a negative eigenvalue {w[-1]:.3g}")
    w = np.maximum(w, floor)
    return (q / np.sqrt(w)) @ q.T


def singular_values(a) -> np.ndarray:
    a = as_matrix(a)
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)


def grad_check(f: Callable[[np.ndarray], float], x, analytic_grad, eps: float = 1e-5) -> float:
    """Max relative error between ``analytic_grad`` and central differences.

    The error per coordinate is ``|g_fd - g_an| / max(1, |g_fd|, |g_an|)``.
    """
    x = np.array(x, dtype=np.float64)
    g_an = np.asarray(analytic_grad, dtype=np.float64).reshape(x.shape)
    flat = x.reshape(-1)
    g_fd = np.empty(flat.size)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(f(x))
        flat[i] = orig - eps
        fm = float(f(x))
        flat[i] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NumericError(f"f is not finite near coordinate {i}")
        g_fd[i] = (fp - fm) / (2 * eps)
    g_an = g_an.reshape(-1)
    denom = np.maximum(1.0, np.maximum(np.abs(g_fd), np.abs(g_an)))
    return float(np.max(np.abs(g_fd - g_an) / denom)) if flat.size else 0.0


def grad_check_params(f: Callable[[], float], params: dict, grads: dict,
                      eps: float = 1e-5, max_coords: int | None = None,
                      rng: np.random.Generator | None = None) -> dict[str, float]:
    """Run :func:`grad_check` on every array of a parameter dict in place.

    ``f`` reads the arrays of ``params`` directly. With ``max_coords`` set,
    only a random subset of coordinates per array is probed.
    """
    errors = {}
    for name, arr in params.items():
        flat = arr.reshape(-1)
        g = np.asarray(grads[name]).reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            rng = rng if rng is not None else np.random.default_rng(0)
            idx = np.sort(rng.choice(flat.size, max_coords, replace=False))
        sub = flat[idx].copy()

        def f_sub(v, idx=idx, flat=flat):
            flat[idx] = v
            return f()

        errors[name] = grad_check(f_sub, sub, g[idx], eps)
        flat[idx] = sub
    return errors
