"""Regularised canonical correlation between two stacked views.

``total_correlation`` is the sum of the top ``L`` singular values of the
whitened cross-covariance ``T = S_cc^-1/2 S_ca S_aa^-1/2``, which is the
optimum of the trace objective under the whitening constraints. The
gradient with respect to both stacked views drives encoder training, and
``compute_projections`` freezes the canonical directions after training.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .artifacts import read_artifact, write_artifact
from .numeric import NumericError, as_matrix, inv_sqrt_psd, jacobi_eigh

log = logging.getLogger(__name__)

GAP_TOL = 1e-8
JITTER = 1e-6
MAX_JITTER_TRIES = 5


class DccaError(ValueError):
    pass


def _check_views(m_c, m_a, L):
    m_c = as_matrix(m_c, "code view")
    m_a = as_matrix(m_a, "text view")
    if m_c.shape[0] != m_a.shape[0]:
        raise DccaError(f"views have {m_c.shape[0]} and {m_a.shape[0]} rows")
    if m_c.shape[0] <= 1:
        raise DccaError("need at least two rows")
    if not 1 <= L <= min(m_c.shape[1], m_a.shape[1]):
        raise DccaError(f"L={L} out of range for widths {m_c.shape[1]}, {m_a.shape[1]}")
    return m_c, m_a


def _moments(m_c, m_a, r_c, r_a, center):
    n = m_c.shape[0]
    mu_c = m_c.mean(axis=0) if center else np.zeros(m_c.shape[1])
    mu_a = m_a.mean(axis=0) if center else np.zeros(m_a.shape[1])
    xc = m_c - mu_c
    xa = m_a - mu_a
    s_cc = xc.T @ xc / n + r_c * np.eye(xc.shape[1])
    s_aa = xa.T @ xa / n + r_a * np.eye(xa.shape[1])
    s_ca = xc.T @ xa / n
    return xc, xa, mu_c, mu_a, s_cc, s_aa, s_ca


def _whitened(m_c, m_a, r_c, r_a, center):
    xc, xa, mu_c, mu_a, s_cc, s_aa, s_ca = _moments(m_c, m_a, r_c, r_a, center)
    k_c = inv_sqrt_psd(s_cc)
    k_a = inv_sqrt_psd(s_aa)
    t = k_c @ s_ca @ k_a
    p, s, qt = np.linalg.svd(t)
    return xc, xa, mu_c, mu_a, k_c, k_a, p, s, qt.T


def total_correlation(m_c, m_a, r_c: float = 1e-4, r_a: float = 1e-4, L: int = 20,
                      center: bool = True) -> float:
    m_c, m_a = _check_views(m_c, m_a, L)
    *_, s, _ = _whitened(m_c, m_a, r_c, r_a, center)
    return float(np.sum(s[:L]))


def dcca_gradient(m_c, m_a, r_c: float = 1e-4, r_a: float = 1e-4, L: int = 20,
                  center: bool = True):
    """Total correlation and its gradient with respect to both views.

    Returns ``(corr, d_corr/d_m_c, d_corr/d_m_a)``. When the L-th and
    (L+1)-th singular values coincide the objective is not differentiable;
    the regularisers are then jittered by a relative ``1e-6`` and the solve
    retried a few times before giving up.
    """
    m_c, m_a = _check_views(m_c, m_a, L)
    for attempt in range(MAX_JITTER_TRIES + 1):
        xc, xa, _, _, k_c, k_a, p, s, q = _whitened(m_c, m_a, r_c, r_a, center)
        if L >= len(s) or s[L - 1] - s[L] > GAP_TOL:
            break
        log.warning("non-differentiable top-L boundary (gap %.2e); jittering regularizers",
                    s[L - 1] - s[L])
        r_c *= 1 + JITTER
        r_a *= 1 + JITTER
    else:
        raise DccaError("non-differentiable top-L boundary")
    n = m_c.shape[0]
    pl, ql, sl = p[:, :L], q[:, :L], s[:L]
    nabla_ca = k_c @ pl @ ql.T @ k_a
    nabla_cc = -0.5 * k_c @ (pl * sl) @ pl.T @ k_c
    nabla_aa = -0.5 * k_a @ (ql * sl) @ ql.T @ k_a
    g_c = (2 * xc @ nabla_cc + xa @ nabla_ca.T) / n
    g_a = (2 * xa @ nabla_aa + xc @ nabla_ca) / n
    if center:
        g_c -= g_c.mean(axis=0)
        g_a -= g_a.mean(axis=0)
    return float(np.sum(sl)), g_c, g_a


@dataclass(frozen=True)
class DccaProjection:
    U: np.ndarray
    V: np.ndarray
    r_c: float
    r_a: float
    L: int
    mean_c: np.ndarray
    mean_a: np.ndarray
    correlations: np.ndarray

    def save(self, path) -> None:
        write_artifact(path, "dcca_projection",
                       {"L": self.L, "r_c": self.r_c, "r_a": self.r_a},
                       {"U": self.U, "V": self.V, "mean_c": self.mean_c,
                        "mean_a": self.mean_a, "correlations": self.correlations})

    @classmethod
    def load(cls, path) -> "DccaProjection":
        meta, arr = read_artifact(path, "dcca_projection")
        return cls(arr["U"], arr["V"], float(meta["r_c"]), float(meta["r_a"]),
                   int(meta["L"]), arr["mean_c"], arr["mean_a"], arr["correlations"])


def compute_projections(m_c, m_a, r_c: float = 1e-4, r_a: float = 1e-4, L: int = 20,
                        center: bool = True) -> DccaProjection:
    m_c, m_a = _check_views(m_c, m_a, L)
    _, _, mu_c, mu_a, k_c, k_a, p, s, q = _whitened(m_c, m_a, r_c, r_a, center)
    if s[L - 1] <= GAP_TOL:
        raise DccaError(f"cross-covariance rank is below L={L} after regularisation")
    return DccaProjection(k_c @ p[:, :L], k_a @ q[:, :L], float(r_c), float(r_a), int(L),
                          mu_c, mu_a, s[:L].copy())


def project(x, proj: DccaProjection, view: str) -> np.ndarray:
    """Canonical variates ``(x - mean) @ U`` for ``view='code'`` or
    ``(x - mean) @ V`` for ``view='text'``. Accepts a vector or a batch."""
    if view == "code":
        w, mu = proj.U, proj.mean_c
    elif view == "text":
        w, mu = proj.V, proj.mean_a
    else:
        raise DccaError(f"unknown view {view!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != w.shape[0]:
        raise DccaError(f"expected width {w.shape[0]}, got {x.shape[-1]}")
    return (x - mu) @ w


def cca_oracle(x, y, r: float = 0.0, r_y: float | None = None) -> np.ndarray:
    """Classical canonical correlations by explicit whitening.

    Uses the Jacobi eigen-solver for both covariance square roots and a
    plain SVD of the whitened cross-covariance. Returns all
    ``min(dx, dy)`` correlations, descending.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[0] != y.shape[0] or x.shape[0] < 2:
        raise DccaError("views need equal row counts of at least 2")
    r_y = r if r_y is None else r_y
    n = x.shape[0]
    xc = x - x.sum(axis=0) / n
    yc = y - y.sum(axis=0) / n
    cxx = np.einsum("ni,nj->ij", xc, xc) / n + r * np.eye(x.shape[1])
    cyy = np.einsum("ni,nj->ij", yc, yc) / n + r_y * np.eye(y.shape[1])
    cxy = np.einsum("ni,nj->ij", xc, yc) / n

    def whiten(c):
        w, q = jacobi_eigh(c)
        if w[-1] < -1e-6:
            raise NumericError("covariance is not positive semi-definite")
        return q @ np.diag(1.0 / np.sqrt(np.maximum(w, 1e-12))) @ q.T

    t = whiten(cxx) @ cxy @ whiten(cyy)
    return np.linalg.svd(t, compute_uv=False)
