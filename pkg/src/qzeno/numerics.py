"""Numerical kernels: tridiagonal eigensolver, matrix exponential, an adaptive
Runge-Kutta propagator for complex-symmetric tridiagonal operators and Bessel
functions of the first kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, PropagationError

#: Below this size the implicit QL solver is used by ``eig_tridiagonal``.
QL_MAX_SIZE = 400


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix, entries in units of the hopping."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        d = np.array(self.diagonal, dtype=float)
        e = np.array(self.off_diagonal, dtype=float)
        if d.ndim != 1 or e.ndim != 1 or d.size < 1 or e.size != d.size - 1:
            raise ValueError(
                f"inconsistent tridiagonal lengths: diagonal {d.shape}, off-diagonal {e.shape}"
            )
        object.__setattr__(self, "diagonal", _frozen(d))
        object.__setattr__(self, "off_diagonal", _frozen(e))

    @property
    def size(self) -> int:
        return self.diagonal.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return _tridiag_matvec(self.diagonal, self.off_diagonal, v)

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.off_diagonal, 1)
            + np.diag(self.off_diagonal, -1)
        )


@dataclass(frozen=True)
class ComplexTridiagonalOperator:
    """Complex-symmetric tridiagonal operator with absorbing (Im <= 0) diagonal."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        d = np.array(self.diagonal, dtype=complex)
        e = np.array(self.off_diagonal, dtype=complex)
        if d.ndim != 1 or e.ndim != 1 or d.size < 1 or e.size != d.size - 1:
            raise ValueError(
                f"inconsistent tridiagonal lengths: diagonal {d.shape}, off-diagonal {e.shape}"
            )
        if np.any(d.imag > 0):
            raise ValueError("diagonal must have non-positive imaginary part (absorbing only)")
        object.__setattr__(self, "diagonal", _frozen(d))
        object.__setattr__(self, "off_diagonal", _frozen(e))

    @property
    def size(self) -> int:
        return self.diagonal.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return _tridiag_matvec(self.diagonal, self.off_diagonal, v)

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.off_diagonal, 1)
            + np.diag(self.off_diagonal, -1)
        )


def _tridiag_matvec(d, e, v):
    y = d * v
    y[:-1] += e * v[1:]
    y[1:] += e * v[:-1]
    return y


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        """Apply ``exp(-i H t)`` to ``psi`` through the eigenbasis."""
        V = self.eigenvectors
        c = V.T @ np.asarray(psi, dtype=complex)
        return V @ (np.exp(-1j * self.eigenvalues * t) * c)

    def propagator(self, t: float) -> np.ndarray:
        V = self.eigenvectors
        return (V * np.exp(-1j * self.eigenvalues * t)) @ V.T


def eig_tridiagonal(
    op: TridiagonalOperator, method: str = "auto", tol: float = 0.0, max_iter: int = 60
) -> SpectralDecomposition:
    """Diagonalize a real symmetric tridiagonal operator.

    Parameters
    ----------
    op : TridiagonalOperator
    method : {"auto", "ql", "lapack"}
        ``"ql"`` runs the implicit-shift QL iteration in this module,
        ``"lapack"`` calls LAPACK (``scipy.linalg.eigh_tridiagonal``).
        ``"auto"`` picks QL up to ``QL_MAX_SIZE`` sites.
    tol : float
        Relative deflation threshold for the QL iteration, never below machine
        epsilon. Eigenvectors are only good to about ``tol / gap``.
    max_iter : int
        QL iteration cap per eigenvalue.

    Returns
    -------
    SpectralDecomposition
        Ascending eigenvalues; each eigenvector has its first non-negligible
        component positive.
    """
    if method == "auto":
        method = "ql" if op.size <= QL_MAX_SIZE else "lapack"
    if method == "ql":
        w, Z = tql_implicit(op.diagonal, op.off_diagonal, tol=tol, max_iter=max_iter)
    elif method == "lapack":
        if op.size == 1:
            w, Z = op.diagonal.copy(), np.ones((1, 1))
        else:
            w, Z = scipy.linalg.eigh_tridiagonal(op.diagonal, op.off_diagonal)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    order = np.argsort(w, kind="stable")
    w, Z = w[order], Z[:, order]
    _fix_signs(Z)
    return SpectralDecomposition(_frozen(w), _frozen(np.ascontiguousarray(Z)))


def _fix_signs(Z: np.ndarray, rel: float = 1e-8) -> None:
    # first component with |z| > rel * max|z| made positive
    mags = np.abs(Z)
    lead = np.argmax(mags > rel * mags.max(axis=0), axis=0)
    signs = np.sign(Z[lead, np.arange(Z.shape[1])])
    signs[signs == 0] = 1.0
    Z *= signs


def tql_implicit(d, e, tol: float = 0.0, max_iter: int = 60):
    """Implicit-shift QL iteration with eigenvector accumulation.

    Returns unsorted ``(eigenvalues, eigenvectors)``; eigenvectors are columns.
    Raises ``ConvergenceError`` if an eigenvalue does not converge within
    ``max_iter`` sweeps.
    """
    d = np.array(d, dtype=float)
    n = d.size
    off = np.zeros(n)
    off[: n - 1] = e
    Z = np.eye(n)
    eps = max(tol, np.finfo(float).eps)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(off[m]) <= eps * dd or dd + abs(off[m]) == dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                raise ConvergenceError(l, max_iter)
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * off[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + off[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * off[i]
                b = c * off[i]
                r = math.hypot(f, g)
                off[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    off[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi1 = Z[:, i + 1].copy()
                Z[:, i + 1] = s * Z[:, i] + c * zi1
                Z[:, i] = c * Z[:, i] - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            off[l] = g
            off[m] = 0.0
    return d, Z


# Pade(13) scaling and squaring, Higham (2005) coefficients and thresholds.
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(M: np.ndarray) -> np.ndarray:
    """Matrix exponential by Pade(13) scaling and squaring."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    norm1 = np.abs(A).sum(axis=0).max() if n else 0.0
    s = 0
    if norm1 > _THETA13:
        s = max(0, int(math.ceil(math.log2(norm1 / _THETA13))))
        A = A / 2.0**s
    b = _PADE13
    ident = np.eye(n, dtype=complex)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    F = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        F = F @ F
    return F


def expm_apply_oracle(M: np.ndarray, t: float, psi: np.ndarray) -> np.ndarray:
    """Return ``exp(-i M t) psi`` with a dense matrix exponential.

    Reference path for validating the faster propagators; meant for N <= 64.
    """
    M = np.asarray(M)
    psi = np.asarray(psi, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != psi.shape[0]:
        raise ValueError(f"dimension mismatch: operator {M.shape}, state {psi.shape}")
    return expm(-1j * t * M) @ psi


# Dormand-Prince 5(4) tableau.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def dopri5(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    times: Sequence[float],
    rtol: float = 1e-9,
    atol: float = 1e-12,
    h0: float | None = None,
) -> Iterator[np.ndarray]:
    """Integrate the autonomous system ``y' = rhs(y)`` from t=0.

    Yields the state at each entry of ``times`` (non-decreasing, >= 0).
    The local error is controlled in the Euclidean norm of the whole vector.
    """
    y = np.array(y0, dtype=complex)
    t = 0.0
    k1 = rhs(y)
    h = h0
    if h is None:
        scale = atol + rtol * np.linalg.norm(y)
        d0 = np.linalg.norm(y) / scale
        d1 = np.linalg.norm(k1) / scale
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    for target in times:
        if target < t:
            raise ValueError("output times must be non-decreasing and non-negative")
        while t < target:
            h_try = min(h, target - t)
            ks = [k1]
            for i in range(1, 7):
                yi = y.copy()
                for aij, kj in zip(_DP_A[i], ks):
                    if aij:
                        yi += h_try * aij * kj
                if i == 6:
                    y_new = yi
                ks.append(rhs(yi))
            err = h_try * sum(ei * ki for ei, ki in zip(_DP_E, ks) if ei)
            scale = atol + rtol * max(np.linalg.norm(y), np.linalg.norm(y_new))
            err_norm = np.linalg.norm(err) / scale
            if not np.isfinite(err_norm):
                raise PropagationError(t, "non-finite local error estimate")
            if err_norm <= 1.0:
                t = target if h_try == target - t else t + h_try
                y = y_new
                k1 = ks[6]
                factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm**-0.2))
                if h_try == h or factor < 1.0:
                    h = h_try * factor
            else:
                h = h_try * max(0.2, 0.9 * err_norm**-0.2)
            if h < 1e-14 * max(1.0, abs(t)):
                raise PropagationError(t, "step size underflow")
        yield y.copy()


def propagate_nonhermitian(
    op: ComplexTridiagonalOperator | TridiagonalOperator,
    psi: np.ndarray,
    t: float,
    tol: float = 1e-9,
) -> np.ndarray:
    """Solve ``i dpsi/dt = H psi`` up to time ``t`` with adaptive Dormand-Prince."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (op.size,):
        raise ValueError(f"dimension mismatch: operator {op.size}, state {psi.shape}")
    (out,) = dopri5(lambda v: -1j * op.matvec(v), psi, [t], rtol=tol, atol=tol * 1e-3)
    return out


def propagate_nonhermitian_grid(op, psi, times, tol: float = 1e-9) -> np.ndarray:
    """States at each of ``times`` as rows of a (len(times), N) array."""
    psi = np.asarray(psi, dtype=complex)
    rhs = lambda v: -1j * op.matvec(v)  # noqa: E731
    return np.array(list(dopri5(rhs, psi, times, rtol=tol, atol=tol * 1e-3)))


def bessel_j(order: int, x):
    """Bessel function of the first kind ``J_order(x)`` for integer order >= 0.

    Power series for x <= 4, Miller's backward recurrence normalized by
    ``J_0 + 2 sum J_2k = 1`` otherwise. Accepts scalar or array ``x >= 0``.
    """
    a = int(order)
    if a < 0 or a != order:
        raise ValueError("order must be a non-negative integer")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or not np.all(np.isfinite(x_arr)):
        raise ValueError("x must be finite and non-negative")
    flat = x_arr.ravel()
    out = np.zeros_like(flat)
    small = flat <= 4.0
    if small.any():
        out[small] = _bessel_series(a, flat[small])
    if (~small).any():
        out[~small] = _bessel_miller(a, flat[~small])
    out = out.reshape(x_arr.shape)
    return float(out) if out.ndim == 0 else out


def _bessel_series(a: int, x: np.ndarray) -> np.ndarray:
    res = np.zeros_like(x)
    pos = x > 0
    if a == 0:
        res[~pos] = 1.0
    xs = x[pos]
    if xs.size == 0:
        return res
    if a == 0:
        term = np.ones_like(xs)
    else:
        with np.errstate(divide="ignore"):  # subnormal x underflows to log(0) -> term 0
            term = np.exp(a * np.log(xs / 2.0) - math.lgamma(a + 1))
    total = term.copy()
    q = -(xs / 2.0) ** 2
    for k in range(1, 60):
        term = term * q / (k * (k + a))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
            break
    res[pos] = total
    return res


def _bessel_miller(a: int, x: np.ndarray) -> np.ndarray:
    xmax = float(x.max())
    m = int(max(a, xmax) + 40 + 6 * xmax ** (1.0 / 3.0))
    m += m % 2
    big = 1e250
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    result = np.zeros_like(x)
    for k in range(m, 0, -1):
        # j_cur = J_k, compute J_{k-1}
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if k - 1 == a:
            result = j_cur.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        over = np.abs(j_cur) > big
        if over.any():
            j_cur[over] /= big
            j_next[over] /= big
            norm[over] /= big
            result[over] /= big
    norm += j_cur  # J_0
    return result / norm
