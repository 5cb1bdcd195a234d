"""Splitting-matrix symbol, eigenvectors, vertical wave numbers and impedances.

The splitting symbol is

    b0 = (1/pi) * integral over lam_I of (a1 - lam I)^{-1},  lam = c + i lam_I,

taken along a vertical line ``Re lam = c`` inside the resolvent strip.  It
equals the matrix sign of ``a1`` (difference of the spectral projectors onto
the right- and left-half-plane eigenvalues).  Two independent routes are
provided:

* ``residue``: the resolvent is written as ``adj(a1 - lam I) / det`` with a
  cubic matrix-polynomial numerator, and each scalar integral
  ``I_{n,m} = integral lam^n / det^m dlam_I`` is evaluated in closed form
  from the roots of the quartic.
* ``sign``: scaled Newton iteration for the matrix sign function.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ConvergenceError, DivergentIntegralError, NumericGuardError, SingularBlockError
from .medium import MediumSpec
from .spectrum import RootQuartet, quartic_roots
from .symbols import (
    SymbolPoint,
    det_coefficients_arrays,
    principal_symbol,
    resolvent_polynomial,
    split_blocks,
)

#: condition-number guard for inverting b21
B21_COND_GUARD = 1e12
#: involution residual required before eigenvectors are built
INVOLUTION_TOL = 1e-9
SIGN_TOL = 1e-12
SIGN_MAXITER = 100


# --------------------------------------------------------------------------
# scalar lambda integrals


def _pair_sum(n: int, a, b, c, d, coalesced: bool) -> complex:
    """Sum of residues at ``a`` and ``b`` of ``lam^n / ((lam-a)(lam-b)(lam-c)(lam-d))``.

    This is the divided difference ``h[a, b]`` of ``h = lam^n / ((lam-c)(lam-d))``,
    written with the product rule so that nothing cancels when ``a -> b``:
    ``h[a,b] = g[a,b] q(b) + g(a) q[a,b]`` with ``g = lam^n`` and
    ``q = 1/((lam-c)(lam-d))``.  For a flagged double root the confluent
    limit ``h'(a)`` is used at the pair mean.
    """
    if coalesced:
        r = 0.5 * (a + b)
        q = 1.0 / ((r - c) * (r - d))
        dq = -(2 * r - c - d) * q * q
        dg = n * r ** (n - 1) if n > 0 else 0.0
        return dg * q + r**n * dq
    gab = sum(a**k * b ** (n - 1 - k) for k in range(n))
    qb = 1.0 / ((b - c) * (b - d))
    qab = -(a + b - c - d) / ((a - c) * (a - d) * (b - c) * (b - d))
    return gab * qb + a**n * qab


def _merged_roots(roots: RootQuartet, m: int):
    """Distinct roots with multiplicities (for ``det^m``), split by side."""
    out = []
    for pair, flag, side in ((roots.plus, roots.coalesced_plus, +1), (roots.minus, roots.coalesced_minus, -1)):
        if flag:
            out.append((0.5 * (pair[0] + pair[1]), 2 * m, side))
        else:
            out.extend((r, m, side) for r in pair)
    return out


def _residue(n: int, k: int, poles) -> complex:
    """Residue at ``poles[k]`` of ``lam^n * prod_j (lam - r_j)^(-p_j)``.

    Expands every factor in powers of ``u = lam - r_k`` and picks the
    coefficient of ``u^(p_k - 1)``.
    """
    r, p, _ = poles[k]
    order = p - 1
    # lam^n = (r + u)^n
    series = np.array([comb(n, j) * r ** (n - j) if j <= n else 0.0 for j in range(order + 1)], dtype=complex)
    for j, (rj, pj, _) in enumerate(poles):
        if j == k:
            continue
        delta = r - rj
        fac = np.array([comb(pj + i - 1, i) * (-1) ** i * delta ** (-pj - i) for i in range(order + 1)], dtype=complex)
        series = np.convolve(series, fac)[: order + 1]
    return complex(series[order])


def integrate_Inm(roots: RootQuartet, n: int, m: int) -> complex:
    """``I_{n,m} = integral_{-inf}^{inf} lam^n / det(alpha1)^m dlam_I`` along the strip.

    ``det(alpha1) = prod (lam - lam_i)`` is monic with the given roots.  For
    ``4m - n >= 2`` the integrand decays fast enough to close the contour on
    the right: ``I = -2 pi * sum of right residues``.  For ``4m - n == 1``
    the integral is a principal value and equals
    ``pi * (sum of left residues - sum of right residues)``.

    Raises
    ------
    DivergentIntegralError
        If ``4m - n <= 0`` or ``n < 0``.
    """
    if m < 1 or n < 0 or 4 * m - n <= 0:
        raise DivergentIntegralError(f"I_(n={n}, m={m}) does not converge")
    if m == 1:
        a, b = roots.plus
        c, d = roots.minus
        right = _pair_sum(n, a, b, c, d, roots.coalesced_plus)
        if n <= 2:
            return -2 * np.pi * right
        left = _pair_sum(n, c, d, a, b, roots.coalesced_minus)
        return np.pi * (left - right)
    poles = _merged_roots(roots, m)
    res = [_residue(n, k, poles) for k in range(len(poles))]
    right = sum(r for r, (_, _, side) in zip(res, poles) if side > 0)
    if 4 * m - n >= 2:
        return -2 * np.pi * right
    left = sum(r for r, (_, _, side) in zip(res, poles) if side < 0)
    return np.pi * (left - right)


# --------------------------------------------------------------------------
# splitting symbol


@dataclass(frozen=True)
class SplitSymbol:
    """Splitting symbol ``b0`` at one ``(x, xi', s)``."""

    b0: np.ndarray
    method: str
    roots: RootQuartet | None = None
    iterations: int = 0

    @property
    def blocks(self):
        return split_blocks(self.b0)

    @property
    def b11(self):
        return self.b0[:2, :2]

    @property
    def b12(self):
        return self.b0[:2, 2:]

    @property
    def b21(self):
        return self.b0[2:, :2]

    @property
    def b22(self):
        return self.b0[2:, 2:]

    def involution_residual(self) -> float:
        return float(np.linalg.norm(self.b0 @ self.b0 - np.eye(4)))


def _default_tau(m: MediumSpec, s, S_R):
    S_R = complex(s).real / 2 if S_R is None else S_R
    if not complex(s).real > S_R > 0:
        raise NumericGuardError(f"need Re s > S_R > 0 (Re s = {complex(s).real}, S_R = {S_R})")
    return m.strip_tau(S_R)


def splitting_from_residues(a1, tau: float):
    """Residue-route ``b0`` for a single 4x4 symbol; returns ``(b0, roots)``.

    For strongly non-normal symbols (large ``||b0||``, nearly parallel
    eigenvectors) the forward error stays at the level of the matrix-sign
    route, but ``||b0^2 - I||`` grows like ``||b0||`` times that error: the
    sum is not constrained to be an exact involution.
    """
    a1 = np.asarray(a1, dtype=complex)
    roots = quartic_roots(det_coefficients_arrays(a1), tau, a1=a1)
    # interpolating on the spectral radius keeps the cubic's coefficients
    # balanced; the Frobenius norm can overshoot by orders of magnitude
    C = resolvent_polynomial(a1, scale=np.abs(roots.all).max())
    integrals = [integrate_Inm(roots, n, 1) for n in range(4)]
    b0 = sum(C[n] * integrals[n] for n in range(4)) / np.pi
    return b0, roots


def splitting_symbol_residue(m: MediumSpec, x, xi, s, S_R: float | None = None) -> SplitSymbol:
    """``b0`` from the partial-fraction/residue evaluation of the defining integral.

    ``S_R`` defaults to ``Re s / 2`` and fixes the strip half-width used for
    the root-clearance check.
    """
    tau = _default_tau(m, s, S_R)
    sp = principal_symbol(m, x, xi, s)
    b0, roots = splitting_from_residues(sp.a1, tau)
    return SplitSymbol(b0, "residue", roots)


def matrix_sign(a, tol: float = SIGN_TOL, maxiter: int = SIGN_MAXITER):
    """Matrix sign of stacked square matrices by scaled Newton iteration.

    ``X <- (mu X + (mu X)^{-1}) / 2`` with determinant scaling
    ``mu = |det X|^(-1/n)`` while far from convergence.  A matrix counts as
    converged once ``||X^2 - I||_F <= tol``, or, for badly conditioned
    matrices whose rounding floor sits above ``tol``, once the residual has
    stopped decreasing and is below ``tol * ||X||_F^2``.

    Returns
    -------
    (X, iterations)
    """
    X = np.array(a, dtype=complex)
    nd = X.shape[-1]
    eye = np.eye(nd)
    scaling = True
    prev = np.full(X.shape[:-2], np.inf)
    for it in range(1, maxiter + 1):
        try:
            Xi = np.linalg.inv(X)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("matrix sign iteration hit a singular iterate (eigenvalue on the imaginary axis?)") from exc
        if scaling:
            mu = np.abs(np.linalg.det(X)) ** (-1.0 / nd)
            mu = mu[..., None, None]
        else:
            mu = 1.0
        Xn = 0.5 * (mu * X + Xi / mu)
        step = np.linalg.norm(Xn - X, axis=(-2, -1)) / np.linalg.norm(Xn, axis=(-2, -1))
        X = Xn
        if scaling and np.max(step) < 1e-2:
            scaling = False
        res = np.linalg.norm(X @ X - eye, axis=(-2, -1))
        floor = tol * np.maximum(1.0, np.linalg.norm(X, axis=(-2, -1)) ** 2)
        stalled = ~scaling & (res > 0.5 * prev) & (res <= floor)
        if np.all((res <= tol) | stalled):
            return X, it
        prev = res
    raise ConvergenceError(f"matrix sign iteration did not converge in {maxiter} iterations")


def splitting_symbol_sign(m: MediumSpec, x, xi, s, S_R: float | None = None) -> SplitSymbol:
    """``b0`` as the matrix sign of the principal symbol ``a1``."""
    _default_tau(m, s, S_R)
    sp = principal_symbol(m, x, xi, s)
    b0, it = matrix_sign(sp.a1)
    return SplitSymbol(b0, "sign", None, it)


def splitting_symbol(m: MediumSpec, x, xi, s, method: str = "sign", S_R: float | None = None) -> SplitSymbol:
    if method == "sign":
        return splitting_symbol_sign(m, x, xi, s, S_R)
    if method == "residue":
        return splitting_symbol_residue(m, x, xi, s, S_R)
    raise ValueError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# eigenvectors, vertical wave numbers, impedances


def _guarded_inv(b, what="b21"):
    cond = np.linalg.cond(b)
    if not np.isfinite(cond) or cond > B21_COND_GUARD:
        raise SingularBlockError(f"{what} not safely invertible", cond)
    return np.linalg.inv(b)


@dataclass(frozen=True)
class SplitBasis:
    """Generalized eigenvectors ``l+-`` (4x2) with their normalization.

    ``s_plus``/``s_minus`` and ``y_plus``/``y_minus`` are filled by
    :func:`split_basis`; :func:`eigenvectors` leaves them as ``None``.
    """

    l_plus: np.ndarray
    l_minus: np.ndarray
    n_norm: str
    n_plus: np.ndarray
    n_minus: np.ndarray
    s_plus: np.ndarray | None = None
    s_minus: np.ndarray | None = None
    y_plus: np.ndarray | None = None
    y_minus: np.ndarray | None = None

    @property
    def L(self) -> np.ndarray:
        """The 4x4 composition matrix ``[l+ l-]``."""
        return np.concatenate([self.l_plus, self.l_minus], axis=1)


def _normalizers(sp: SplitSymbol, norm: str):
    if norm == "identity":
        return np.eye(2), np.eye(2)
    if norm == "impedance":
        g = _guarded_inv(sp.b21)
        return g, g
    raise ValueError(f"unknown normalization {norm!r}")


def eigenvectors(sp: SplitSymbol, norm: str = "identity") -> SplitBasis:
    """``l+- = [[+-I + b11], [b21]] N`` with ``N = I`` or ``N = b21^{-1}``.

    The columns satisfy ``b0 l+- = +- l+-`` whenever ``b0`` is an involution.
    """
    res = sp.involution_residual()
    if res > INVOLUTION_TOL * max(1.0, np.linalg.norm(sp.b0) ** 2):
        raise NumericGuardError(f"b0 is not an involution (residual {res:.3e})")
    n_plus, n_minus = _normalizers(sp, norm)
    eye = np.eye(2)
    l_plus = np.vstack([eye + sp.b11, sp.b21]) @ n_plus
    l_minus = np.vstack([-eye + sp.b11, sp.b21]) @ n_minus
    return SplitBasis(l_plus, l_minus, norm, n_plus, n_minus)


def vertical_wavenumber(sp: SplitSymbol, a: SymbolPoint, norm: str = "identity"):
    """``s+- = N^-1 b21^-1 (a21 (+-I + b11) + a22 b21) N``.

    These satisfy ``a1 l+- = l+- s+-``; the eigenvalues of ``s+`` are the
    right-half-plane roots of the quartic.
    """
    g = _guarded_inv(sp.b21)
    n_plus, n_minus = _normalizers(sp, norm)
    eye = np.eye(2)
    out = []
    for sign, N in ((1.0, n_plus), (-1.0, n_minus)):
        core = g @ (a.a21 @ (sign * eye + sp.b11) + a.a22 @ sp.b21)
        out.append(np.linalg.solve(N, core @ N))
    return out[0], out[1]


def riccati_residual(Y, a: SymbolPoint) -> np.ndarray:
    """``Y a21 Y + Y a22 - a11 Y - a12``."""
    return Y @ a.a21 @ Y + Y @ a.a22 - a.a11 @ Y - a.a12


def admittance_residual(G, a: SymbolPoint) -> np.ndarray:
    """``G a12 G + G a11 - a22 G - a21`` (vanishes for ``G = Y^{-1}``)."""
    return G @ a.a12 @ G + G @ a.a11 - a.a22 @ G - a.a21


def impedance_and_riccati(sp: SplitSymbol, a: SymbolPoint):
    """Impedance maps ``Y+- = (+-I + b11) b21^-1`` and their Riccati residuals.

    Returns
    -------
    (y_plus, y_minus, residual_plus, residual_minus)
        Residuals are returned as 2x2 matrices.
    """
    g = _guarded_inv(sp.b21)
    eye = np.eye(2)
    y_plus = (eye + sp.b11) @ g
    y_minus = (-eye + sp.b11) @ g
    return y_plus, y_minus, riccati_residual(y_plus, a), riccati_residual(y_minus, a)


def split_basis(sp: SplitSymbol, a: SymbolPoint, norm: str = "identity") -> SplitBasis:
    """Eigenvectors plus vertical wave numbers and impedance maps."""
    basis = eigenvectors(sp, norm)
    s_plus, s_minus = vertical_wavenumber(sp, a, norm)
    y_plus, y_minus, _, _ = impedance_and_riccati(sp, a)
    return SplitBasis(basis.l_plus, basis.l_minus, norm, basis.n_plus, basis.n_minus, s_plus, s_minus, y_plus, y_minus)


# --------------------------------------------------------------------------
# isotropic closed forms


def isotropic_wavenumber(eps: float, mu: float, xi, s) -> complex:
    """``sqrt(s^2 eps mu + |xi'|^2)`` on the principal branch (``Re > 0`` for ``Re s > 0``)."""
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(complex(s) ** 2 * eps * mu + np.sum(xi**2, axis=-1) + 0j)


def isotropic_split(eps: float, mu: float, xi, s):
    """Closed-form isotropic quantities.

    Returns
    -------
    dict with keys ``r`` (vertical wave number), ``z`` (impedance ``a12 / r``),
    ``b0`` (``[[0, z], [z^-1, 0]]``), ``s_plus``/``s_minus`` (``+-r I``).
    """
    from .symbols import symbol_blocks

    _, a12, a21, _ = symbol_blocks(eps * np.eye(3), mu * np.eye(3), xi, s)
    r = isotropic_wavenumber(eps, mu, xi, s)
    z = a12 / r
    zinv = a21 / r
    b0 = np.block([[np.zeros((2, 2)), z], [zinv, np.zeros((2, 2))]])
    return {"r": r, "z": z, "zinv": zinv, "b0": b0, "s_plus": r * np.eye(2), "s_minus": -r * np.eye(2)}
