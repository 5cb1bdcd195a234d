"""Principal symbol of the electromagnetic system's matrix and its algebra.

The transverse field matrix is ``F = (E1, -E2, H2, H1)`` and the two-way
system reads ``(I d/dx3 + A) F = N``.  With transverse derivatives replaced
by ``i xi'``, the leading-order symbol ``a1`` of ``A`` is a 4x4 matrix of four
2x2 blocks, each homogeneous of degree one in ``(xi', s)``.

Only principal symbols are assembled.  For heterogeneous media the tensors
are frozen at the evaluation point (the first-order derivative corrections
are dropped), which is exact for homogeneous media.

Most functions here accept stacked inputs: tensors ``(..., 3, 3)``, wave
vectors ``(..., 2)`` and scalar ``s``/``lam`` arrays broadcasting against the
leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericGuardError, SingularBlockError, WavesplitError
from .medium import MediumSpec, schur_reduce

#: |det a21| below this fraction of ||a21||^2 counts as singular
DET_A21_GUARD = 1e-12


def _check_s(s):
    if np.any(np.asarray(s) == 0):
        raise WavesplitError("symbol undefined at s = 0 (a12, a21 contain 1/s terms)")


def symbol_blocks(eps, mu, xi, s):
    """The four 2x2 blocks ``(a11, a12, a21, a22)`` of ``a1``.

    Parameters
    ----------
    eps, mu : array_like, shape (..., 3, 3)
        Relative tensors (already frozen at the point of interest).
    xi : array_like, shape (..., 2)
        Real transverse wave vector.
    s : complex or array_like, shape (...)
        Normalized Laplace parameter.
    """
    _check_s(s)
    e = np.asarray(eps, dtype=float)
    m = np.asarray(mu, dtype=float)
    xi = np.asarray(xi, dtype=float)
    s = np.asarray(s, dtype=complex)
    x1, x2 = xi[..., 0], xi[..., 1]
    eb, nu = schur_reduce(e), schur_reduce(m)
    e33, m33 = e[..., 2, 2], m[..., 2, 2]

    def mat(a, b, c, d):
        a, b, c, d = np.broadcast_arrays(a, b, c, d)
        return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)

    ie, im = 1j / e33, 1j / m33
    a11 = im[..., None, None] * mat(m[..., 1, 2] * x2, m[..., 1, 2] * x1, m[..., 0, 2] * x2, m[..., 0, 2] * x1)
    a11 = a11 + ie[..., None, None] * mat(e[..., 2, 0] * x1, -e[..., 2, 1] * x1, -e[..., 2, 0] * x2, e[..., 2, 1] * x2)
    a22 = im[..., None, None] * mat(m[..., 2, 1] * x2, m[..., 2, 0] * x2, m[..., 2, 1] * x1, m[..., 2, 0] * x1)
    a22 = a22 + ie[..., None, None] * mat(e[..., 0, 2] * x1, -e[..., 0, 2] * x2, -e[..., 1, 2] * x1, e[..., 1, 2] * x2)
    S = s[..., None, None]
    a12 = S * mat(nu[..., 1, 1], nu[..., 1, 0], nu[..., 0, 1], nu[..., 0, 0])
    a12 = a12 + mat(x1 * x1, -x1 * x2, -x1 * x2, x2 * x2) / (S * e33[..., None, None])
    a21 = S * mat(eb[..., 0, 0], -eb[..., 0, 1], -eb[..., 1, 0], eb[..., 1, 1])
    a21 = a21 + mat(x2 * x2, x1 * x2, x1 * x2, x1 * x1) / (S * m33[..., None, None])
    return a11, a12, a21, a22


def assemble(a11, a12, a21, a22):
    """Stack 2x2 blocks into 4x4 matrices."""
    top = np.concatenate([a11, a12], axis=-1)
    bot = np.concatenate([a21, a22], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def split_blocks(a):
    """Inverse of :func:`assemble`."""
    return a[..., :2, :2], a[..., :2, 2:], a[..., 2:, :2], a[..., 2:, 2:]


def system_matrix(eps, mu, xi, s):
    """Principal symbol ``a1`` as stacked 4x4 matrices."""
    return assemble(*symbol_blocks(eps, mu, xi, s))


@dataclass(frozen=True)
class SymbolPoint:
    """The principal symbol ``alpha1 = a1 - lam I`` at one point."""

    x: np.ndarray
    xi: np.ndarray
    s: complex
    lam: complex
    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray

    @property
    def a1(self) -> np.ndarray:
        return assemble(self.a11, self.a12, self.a21, self.a22)

    @property
    def total(self) -> np.ndarray:
        return self.a1 - self.lam * np.eye(4)


def principal_symbol(m: MediumSpec, x, xi, s, lam=0.0) -> SymbolPoint:
    """Evaluate the principal symbol blocks of the medium at ``(x, xi', s, lam)``."""
    x = np.asarray(x, dtype=float)
    eps, mu = m.tensors(x)
    blocks = symbol_blocks(eps, mu, xi, s)
    return SymbolPoint(x, np.asarray(xi, dtype=float), complex(s), complex(lam), *blocks)


# --------------------------------------------------------------------------
# determinant


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def det_closed_arrays(eps, mu, xi, s, lam):
    """Closed-form ``det(a1 - lam I)`` written in the material parameters.

    The determinant is the product of the two "uncoupled" quadratics in
    ``lam`` (one from each tensor) plus coupling terms proportional to
    ``s^2`` and ``s^4``.
    """
    e = np.asarray(eps, dtype=float)
    m = np.asarray(mu, dtype=float)
    xi = np.asarray(xi, dtype=float)
    s = np.asarray(s, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    eb, nu = schur_reduce(e), schur_reduce(m)
    e33, m33 = e[..., 2, 2], m[..., 2, 2]
    e3, m3 = e[..., 2, :2], m[..., 2, :2]

    def quad(t, t3, t33):
        lin = np.einsum("...a,...a->...", t3, xi) / t33
        qq = np.einsum("...a,...ab,...b->...", xi, t[..., :2, :2], xi) / t33
        return lam**2 - 2j * lin * lam - qq

    det2 = np.linalg.det
    c4 = det2(eb) * det2(nu)
    c2 = eb[..., 0, 1] * nu[..., 0, 1] - eb[..., 1, 1] * nu[..., 0, 0] - eb[..., 0, 0] * nu[..., 1, 1] + eb[..., 1, 0] * nu[..., 1, 0]
    c0 = np.einsum("...a,...ab,...b->...", xi, eb, xi) * det2(m[..., :2, :2]) / m33
    c0 = c0 + np.einsum("...a,...ab,...b->...", xi, nu, xi) * det2(e[..., :2, :2]) / e33
    cr = 0.0
    for a in range(2):
        for b in range(2):
            cr = cr + _cross(e3, eb[..., a, :]) * _cross(m3, nu[..., b, :]) * xi[..., a] * xi[..., b]
    c0 = c0 - 2.0 * cr / (e33 * m33)

    def trip(t, tb, o, a):
        return (t[..., 0, 2] * tb[..., 1, 0] * o[..., 1, a] - t[..., 1, 2] * tb[..., 0, 0] * o[..., 1, a]
                - t[..., 0, 2] * tb[..., 1, 1] * o[..., 0, a] + t[..., 1, 2] * tb[..., 0, 1] * o[..., 0, a])

    c1 = sum((trip(m, nu, eb, a) / m33 + trip(e, eb, nu, a) / e33) * xi[..., a] for a in range(2))
    return quad(e, e3, e33) * quad(m, m3, m33) + s**4 * c4 + s**2 * (lam**2 * c2 + c0 - 2j * lam * c1)


def det_alpha_closed(m: MediumSpec, x, xi, s, lam) -> complex:
    """Closed-form determinant of ``alpha1`` at one point (test oracle)."""
    _check_s(s)
    eps, mu = m.tensors(np.asarray(x, dtype=float))
    return complex(det_closed_arrays(eps, mu, xi, s, lam))


def det_alpha_direct(sp: SymbolPoint) -> complex:
    """Direct 4x4 determinant of ``alpha1`` (runtime default)."""
    return complex(np.linalg.det(sp.total))


@dataclass(frozen=True)
class DetCoefficients:
    """Ascending coefficients ``c[k]`` of ``det(a1 - lam I) = sum_k c[k] lam^k``."""

    c: np.ndarray

    def __call__(self, lam):
        return np.polynomial.polynomial.polyval(lam, self.c)


def lambda_nodes(scale, n: int):
    """``n``-th roots of unity times ``scale`` (stacked along the last axis)."""
    w = np.exp(2j * np.pi * np.arange(n) / n)
    return np.asarray(scale)[..., None] * w


def det_coefficients_arrays(a1, scale=None):
    """Quartic coefficients of ``det(a1 - lam I)`` for stacked ``a1``.

    The determinant is sampled at five scaled roots of unity and the
    Vandermonde system is solved; the result is divided by the leading
    coefficient (which equals one up to rounding).
    """
    a1 = np.asarray(a1, dtype=complex)
    if scale is None:
        scale = np.sqrt(np.sum(np.abs(a1) ** 2, axis=(-2, -1)) / 4.0)
    scale = np.where(np.asarray(scale) > 0, scale, 1.0)
    nodes = lambda_nodes(scale, 5)
    vals = np.linalg.det(a1[..., None, :, :] - nodes[..., None, None] * np.eye(4))
    # Vandermonde on roots of unity is a DFT: c_k rho^k = mean_j vals_j w^-jk
    ck = np.fft.fft(vals, axis=-1) / 5.0
    c = ck / np.asarray(scale)[..., None] ** np.arange(5)
    return c / c[..., 4:5]


def det_coefficients(m: MediumSpec, x, xi, s) -> DetCoefficients:
    """Coefficients of the characteristic quartic at ``(x, xi', s)``.

    The sampling radius is ``(|xi'|^2 + |s|^2)^(1/2)``.
    """
    sp = principal_symbol(m, x, xi, s)
    scale = np.sqrt(np.sum(np.asarray(xi, dtype=float) ** 2) + abs(s) ** 2)
    nodes = lambda_nodes(scale, 5)
    vals = np.array([np.linalg.det(sp.a1 - z * np.eye(4)) for z in nodes])
    V = np.vander(nodes, 5, increasing=True)
    try:
        c = np.linalg.solve(V, vals)
    except np.linalg.LinAlgError as exc:  # distinct nodes: cannot happen
        raise NumericGuardError("degenerate Vandermonde system") from exc
    return DetCoefficients(c / c[4])


# --------------------------------------------------------------------------
# 2x2 hat algebra and the characteristic symbol


def hat_adjugate(b):
    """``[[b22, -b12], [-b21, b11]]`` for a (stack of) 2x2 matrices.

    ``hat(b) @ b == det(b) I``, ``hat(hat(b)) == b``, ``hat(g h) == hat(h) hat(g)``.
    """
    b = np.asarray(b)
    out = np.empty_like(b)
    out[..., 0, 0] = b[..., 1, 1]
    out[..., 1, 1] = b[..., 0, 0]
    out[..., 0, 1] = -b[..., 0, 1]
    out[..., 1, 0] = -b[..., 1, 0]
    return out


def det2(b):
    b = np.asarray(b)
    return b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] * b[..., 1, 0]


def check_invertible_2x2(b, what: str = "a21", guard: float = DET_A21_GUARD):
    """Raise :class:`SingularBlockError` if ``|det b| < guard ||b||_F^2``."""
    d = det2(b)
    nrm2 = np.sum(np.abs(b) ** 2, axis=(-2, -1))
    bad = np.abs(d) < guard * nrm2
    if np.any(bad):
        cond = np.linalg.cond(np.asarray(b)[bad].reshape(-1, 2, 2)).max()
        raise SingularBlockError(f"{what} is numerically singular", cond)
    return d


#: relative tolerance on the factorization det(alpha1) = det(e1) det(a21)
FACTOR_RTOL = 1e-8


def char_symbol(sp: SymbolPoint) -> np.ndarray:
    """Characteristic 2x2 symbol ``e1 = a12 - (a11 - lam) hat(a21) (a22 - lam) / det(a21)``.

    Also verifies ``det(alpha1) == det(e1) det(a21)``.
    """
    d21 = check_invertible_2x2(sp.a21)
    lam = sp.lam * np.eye(2)
    e1 = sp.a12 - (sp.a11 - lam) @ hat_adjugate(sp.a21) @ (sp.a22 - lam) / d21
    lhs = det_alpha_direct(sp)
    rhs = det2(e1) * d21
    scale = max(abs(lhs), abs(rhs), np.linalg.norm(sp.total) ** 4 * 1e-16)
    if abs(lhs - rhs) > FACTOR_RTOL * scale:
        raise NumericGuardError(f"factorization check failed: |det alpha - det e1 det a21| = {abs(lhs - rhs):.3e}")
    return e1


# --------------------------------------------------------------------------
# resolvent numerator


def adjugate4(a):
    """Classical adjugate of stacked 4x4 matrices via 3x3 cofactors."""
    a = np.asarray(a, dtype=complex)
    out = np.empty_like(a)
    idx = np.arange(4)
    for i in range(4):
        for j in range(4):
            minor = a[..., idx != i, :][..., :, idx != j]
            out[..., j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return out


def resolvent_polynomial(a1, scale=None):
    """Coefficients ``C[n]`` (n = 0..3) of ``adj(a1 - lam I) = sum_n C[n] lam^n``.

    Obtained by interpolating the cofactor adjugate at four scaled roots of
    unity.  Returns an array of shape ``(..., 4, 4, 4)`` indexed
    ``[..., n, row, col]``.
    """
    a1 = np.asarray(a1, dtype=complex)
    if scale is None:
        scale = np.sqrt(np.sum(np.abs(a1) ** 2, axis=(-2, -1)) / 4.0)
    scale = np.where(np.asarray(scale) > 0, scale, 1.0)
    nodes = lambda_nodes(scale, 4)
    adj = adjugate4(a1[..., None, :, :] - nodes[..., None, None] * np.eye(4))
    ck = np.fft.fft(adj, axis=-3) / 4.0
    return ck / (np.asarray(scale)[..., None, None, None] ** np.arange(4)[:, None, None])


# --------------------------------------------------------------------------
# symbol dump

DUMP_COLUMNS = (
    ["x1", "x2", "xi1", "xi2", "re_s", "im_s", "re_lam", "im_lam"]
    + [f"{part}_a{b}_{i}{j}" for b in ("11", "12", "21", "22") for i in (1, 2) for j in (1, 2) for part in ("re", "im")]
    + ["re_det", "im_det"]
)


def dump_row(sp: SymbolPoint) -> list[float]:
    """One symbol-dump CSV row (see :data:`DUMP_COLUMNS`)."""
    row = [*sp.x, *sp.xi, sp.s.real, sp.s.imag, sp.lam.real, sp.lam.imag]
    for blk in (sp.a11, sp.a12, sp.a21, sp.a22):
        for v in blk.ravel():
            row += [v.real, v.imag]
    d = det_alpha_direct(sp)
    return [float(v) for v in row + [d.real, d.imag]]
