"""Dense linear-algebra kernels used by the design and analysis layers.

Everything here operates on small dense systems (n <= 10 or so): symmetric
eigenvalue extremes, induced 2-norms, Hurwitz tests, and a continuous
Lyapunov solver based on a Kronecker unfolding of the linear system.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "NotHurwitzError",
    "SingularLyapunovError",
    "as_matrix",
    "as_sym_matrix",
    "is_hurwitz",
    "eig_sym_extremes",
    "norm2",
    "solve_lyapunov",
    "TOL_HURWITZ",
]

# Strictness threshold on eigenvalue real parts; machine-scale on purpose.
TOL_HURWITZ = 1e-12


class NotHurwitzError(ValueError):
    """A matrix required to be Hurwitz has an eigenvalue with Re >= 0."""


class SingularLyapunovError(ValueError):
    """The unfolded Lyapunov system is numerically singular."""


def as_matrix(a, rows: int | None = None, cols: int | None = None,
              name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries, checking shape."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_sym_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a symmetric float matrix (symmetrized after a strict check)."""
    m = as_matrix(a, name=name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > 1e-12 * scale:
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (m + m.T)


def is_hurwitz(a, tol: float = TOL_HURWITZ) -> bool:
    """True iff every eigenvalue of the square matrix has real part < -tol."""
    m = as_matrix(a, name="A")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"A must be square, got shape {m.shape}")
    return bool(np.all(np.linalg.eigvals(m).real < -tol))


def eig_sym_extremes(s) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix."""
    m = as_sym_matrix(s, name="S")
    w = np.linalg.eigvalsh(m)
    return float(w[0]), float(w[-1])


def norm2(m) -> float:
    """Induced 2-norm (largest singular value), via the eigenvalues of M^T M."""
    a = as_matrix(m, name="M")
    w = np.linalg.eigvalsh(a.T @ a)
    return float(np.sqrt(max(float(w[-1]), 0.0)))


def solve_lyapunov(acl, q, resid_tol: float = 1e-9) -> np.ndarray:
    """Solve ``Acl^T P + P Acl = -Q`` for symmetric positive definite ``P``.

    ``Acl`` must be Hurwitz and ``Q`` symmetric positive definite. The
    equation is unfolded with Kronecker products and solved densely, which
    is O(n^6) but entirely adequate at the state dimensions used here.

    Raises ``NotHurwitzError`` if ``Acl`` has an eigenvalue with
    nonnegative real part, and ``SingularLyapunovError`` if the unfolded
    system cannot be solved to ``resid_tol`` relative residual.
    """
    a = as_matrix(acl, name="Acl")
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError(f"Acl must be square, got shape {a.shape}")
    qm = as_sym_matrix(q, name="Q")
    if qm.shape[0] != n:
        raise ValueError(f"Q must match Acl: {qm.shape} vs {a.shape}")
    if not is_hurwitz(a):
        raise NotHurwitzError("Acl has an eigenvalue with nonnegative real part")

    # Row-major vec: vec(Acl^T P) = (Acl^T (x) I) vec(P),
    #                vec(P Acl)   = (I (x) Acl^T) vec(P).
    eye = np.eye(n)
    k = np.kron(a.T, eye) + np.kron(eye, a.T)
    try:
        p = np.linalg.solve(k, -qm.reshape(-1)).reshape(n, n)
    except np.linalg.LinAlgError as exc:
        raise SingularLyapunovError(f"unfolded Lyapunov system is singular: {exc}") from exc
    p = 0.5 * (p + p.T)

    resid = norm2(a.T @ p + p @ a + qm)
    if not np.isfinite(resid) or resid > resid_tol * norm2(qm):
        raise SingularLyapunovError(
            f"Lyapunov residual {resid:.3e} exceeds {resid_tol:.1e} * |Q|")
    return p
