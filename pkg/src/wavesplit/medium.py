"""Anisotropic material tensors, normalization and Schur reduction.

All tensors handled here are *relative* (dimensionless) 3x3 real symmetric
positive-definite matrices.  A tensor is either constant or a callable of the
transverse position ``x' = (x1, x2)``; heterogeneous tensors are validated on
a declared lattice of sample points only.

The normalized Laplace parameter has units of inverse length,
``s_norm = s_SI / c0``, and normalized fields are ``E' = sqrt(eps0) E``,
``H' = sqrt(mu0) H`` (sources ``J' = sqrt(mu0) J``, ``K' = sqrt(eps0) K``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import constants

from .errors import ConfigError, MediumError

EPS0 = constants.epsilon_0
MU0 = constants.mu_0
C0 = constants.c

#: relative asymmetry below which input tensors are silently symmetrized
SYMMETRY_RTOL = 1e-12

TensorLike = Union[np.ndarray, Sequence, Callable[[np.ndarray], np.ndarray]]


def validate_spd(t, point=None) -> np.ndarray:
    """Return ``t`` as a symmetric 3x3 float array or raise :class:`MediumError`.

    Asymmetry up to ``SYMMETRY_RTOL`` (relative to the largest entry) is
    removed by averaging with the transpose; anything larger is rejected.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (3, 3):
        raise MediumError(f"material tensor must be 3x3, got shape {t.shape}", point)
    if not np.all(np.isfinite(t)):
        raise MediumError("material tensor has non-finite entries", point)
    scale = np.abs(t).max()
    if scale == 0.0:
        raise MediumError("material tensor is zero", point)
    asym = np.abs(t - t.T).max()
    if asym > SYMMETRY_RTOL * scale:
        raise MediumError(f"material tensor not symmetric (relative asymmetry {asym / scale:.2e})", point)
    t = 0.5 * (t + t.T)
    lmin = np.linalg.eigvalsh(t)[0]
    if not lmin > 0.0:
        raise MediumError(f"material tensor not positive definite (smallest eigenvalue {lmin:.3e})", point)
    return t


@dataclass(frozen=True)
class MaterialTensor:
    """Relative 3x3 material tensor, constant or a smooth function of x'.

    Parameters
    ----------
    value : array_like or callable
        Either a 3x3 array or a callable ``f(x) -> (3, 3)`` where ``x`` is a
        length-2 array.
    name : str, optional
        Label used in error messages and manifests.
    """

    value: TensorLike
    name: str = "tensor"

    def __post_init__(self):
        if not callable(self.value):
            object.__setattr__(self, "value", validate_spd(self.value))

    @property
    def is_constant(self) -> bool:
        return not callable(self.value)

    def __call__(self, x=(0.0, 0.0)) -> np.ndarray:
        if self.is_constant:
            return self.value
        x = np.asarray(x, dtype=float)
        return validate_spd(self.value(x), point=x)

    def sample(self, points) -> np.ndarray:
        """Evaluate at an ``(N, 2)`` array of points, returning ``(N, 3, 3)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_constant:
            return np.broadcast_to(self.value, (points.shape[0], 3, 3)).copy()
        return np.stack([self(p) for p in points])


def schur_reduce(t) -> np.ndarray:
    """Schur-reduced transverse tensor ``t_ab - t_a3 t_33^-1 t_3b``.

    Works on a single 3x3 array or any stack ``(..., 3, 3)``.

    Examples
    --------
    >>> schur_reduce([[2, 0, 1], [0, 2, 0], [1, 0, 2]])
    array([[1.5, 0. ],
           [0. , 2. ]])
    """
    t = np.asarray(t, dtype=float)
    t33 = t[..., 2, 2]
    if np.any(t33 <= 0):
        raise MediumError("t33 must be positive for a positive-definite tensor")
    red = t[..., :2, :2] - t[..., :2, 2, None] * t[..., None, 2, :2] / t33[..., None, None]
    return 0.5 * (red + np.swapaxes(red, -1, -2))


def _as_tensor(t, name) -> MaterialTensor:
    return t if isinstance(t, MaterialTensor) else MaterialTensor(t, name=name)


@dataclass(frozen=True)
class MediumSpec:
    """Permittivity/permeability pair with derived transverse data.

    Parameters
    ----------
    eps, mu : MaterialTensor or array_like or callable
        Relative permittivity and permeability.
    sample_points : array_like, optional
        ``(N, 2)`` lattice on which heterogeneous tensors are validated and
        lower bounds are taken.  Defaults to the single point ``(0, 0)``.

    Attributes
    ----------
    eps_hat1, mu_hat1 : float
        Lower bounds of the smallest eigenvalues of the Schur-reduced
        tensors over the sample lattice.
    """

    eps: MaterialTensor
    mu: MaterialTensor
    sample_points: np.ndarray = None
    eps_hat1: float = field(init=False)
    mu_hat1: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "eps", _as_tensor(self.eps, "eps"))
        object.__setattr__(self, "mu", _as_tensor(self.mu, "mu"))
        pts = np.zeros((1, 2)) if self.sample_points is None else self.sample_points
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise ConfigError("sample_points must be a nonempty (N, 2) array")
        object.__setattr__(self, "sample_points", pts)
        e1, m1 = lower_bounds(self, pts)
        object.__setattr__(self, "eps_hat1", e1)
        object.__setattr__(self, "mu_hat1", m1)

    @property
    def homogeneous(self) -> bool:
        return self.eps.is_constant and self.mu.is_constant

    def tensors(self, x=(0.0, 0.0)):
        """``(eps, mu)`` at a transverse position."""
        return self.eps(x), self.mu(x)

    def eps_schur(self, x=(0.0, 0.0)) -> np.ndarray:
        return schur_reduce(self.eps(x))

    def mu_schur(self, x=(0.0, 0.0)) -> np.ndarray:
        return schur_reduce(self.mu(x))

    def is_isotropic(self, rtol: float = 1e-14) -> bool:
        """True for constant scalar multiples of the identity."""
        if not self.homogeneous:
            return False
        for t in (self.eps.value, self.mu.value):
            if np.abs(t - t[0, 0] * np.eye(3)).max() > rtol * abs(t[0, 0]):
                return False
        return True

    def strip_tau(self, S_R: float) -> float:
        """Half-width ``tau = S_R sqrt(eps_hat1 mu_hat1)`` of the resolvent strip."""
        return float(S_R * np.sqrt(self.eps_hat1 * self.mu_hat1))


def lower_bounds(m: MediumSpec, sample_points) -> tuple[float, float]:
    """Smallest Schur-tensor eigenvalues over a sample set.

    Returns
    -------
    (eps_hat1, mu_hat1) : tuple of float
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.shape[0] == 0:
        raise ConfigError("lower_bounds needs at least one sample point")
    out = []
    for t in (m.eps, m.mu):
        lam = np.linalg.eigvalsh(schur_reduce(t.sample(pts)))[:, 0]
        k = int(np.argmin(lam))
        if not lam[k] > 0:
            raise MediumError(f"Schur-reduced {t.name} not positive definite", pts[k])
        out.append(float(lam[k]))
    return out[0], out[1]


@dataclass(frozen=True)
class LaplaceParameter:
    """Normalized Laplace parameter ``s`` with a floor ``S_R`` on ``Re s``."""

    s: complex
    S_R: float

    def __post_init__(self):
        s = complex(self.s)
        object.__setattr__(self, "s", s)
        if not self.S_R > 0:
            raise ConfigError(f"S_R must be positive, got {self.S_R}")
        if not s.real > self.S_R:
            raise ConfigError(f"need Re s > S_R (Re s = {s.real}, S_R = {self.S_R})")


def normalize(eps_SI, mu_SI, s_SI, S_R: float | None = None, sample_points=None):
    """Convert SI tensors and Laplace parameter to the normalized problem.

    Parameters
    ----------
    eps_SI, mu_SI : array_like or callable
        Absolute tensors ``eps(x) eps0`` and ``mu(x) mu0`` [F/m, H/m].
    s_SI : complex
        Laplace parameter [1/s].
    S_R : float, optional
        Floor for the normalized ``Re s``; defaults to half of it.

    Returns
    -------
    (MediumSpec, LaplaceParameter)
    """

    def rel(t, unit):
        if callable(t):
            return lambda x: np.asarray(t(x), dtype=float) / unit
        return np.asarray(t, dtype=float) / unit

    m = MediumSpec(rel(eps_SI, EPS0), rel(mu_SI, MU0), sample_points)
    s = complex(s_SI) / C0
    return m, LaplaceParameter(s, s.real / 2 if S_R is None else S_R)


def denormalize(m: MediumSpec, lp: LaplaceParameter):
    """Inverse of :func:`normalize` for constant media: ``(eps_SI, mu_SI, s_SI)``."""
    if not m.homogeneous:
        raise ConfigError("denormalize is defined for constant tensors only")
    return m.eps.value * EPS0, m.mu.value * MU0, lp.s * C0


def fields_to_normalized(E, H):
    """Scale SI fields: ``E' = sqrt(eps0) E``, ``H' = sqrt(mu0) H``."""
    return np.sqrt(EPS0) * np.asarray(E), np.sqrt(MU0) * np.asarray(H)


def fields_from_normalized(E, H):
    return np.asarray(E) / np.sqrt(EPS0), np.asarray(H) / np.sqrt(MU0)


def sources_to_normalized(J, K):
    """Scale SI sources: ``J' = sqrt(mu0) J``, ``K' = sqrt(eps0) K``."""
    return np.sqrt(MU0) * np.asarray(J), np.sqrt(EPS0) * np.asarray(K)


# --------------------------------------------------------------------------
# analytic profiles for heterogeneous media


def affine_profile(base, grad1=None, grad2=None):
    """``t(x) = base + x1 grad1 + x2 grad2`` (caller keeps it SPD on the lattice)."""
    base = np.asarray(base, dtype=float)
    g1 = np.zeros((3, 3)) if grad1 is None else np.asarray(grad1, dtype=float)
    g2 = np.zeros((3, 3)) if grad2 is None else np.asarray(grad2, dtype=float)

    def f(x):
        return base + x[0] * g1 + x[1] * g2

    return f


def gaussian_profile(base, amplitude, center=(0.0, 0.0), width=1.0):
    """``t(x) = base + amplitude * exp(-|x - center|^2 / (2 width^2))``."""
    base = np.asarray(base, dtype=float)
    amp = np.asarray(amplitude, dtype=float)
    c = np.asarray(center, dtype=float)

    def f(x):
        r2 = float(np.sum((np.asarray(x) - c) ** 2))
        return base + amp * np.exp(-r2 / (2.0 * width**2))

    return f


def random_spd(rng: np.random.Generator, size=None, floor: float = 0.2, scale: float = 1.0):
    """Random SPD 3x3 tensors ``scale * (G G^T / 3 + floor I)``.

    ``size`` is the number of tensors (``None`` for a single one).
    """
    shape = (3, 3) if size is None else (size, 3, 3)
    g = rng.normal(size=shape)
    return scale * (g @ np.swapaxes(g, -1, -2) / 3.0 + floor * np.eye(3))


def isotropic(eps: float, mu: float) -> MediumSpec:
    """Homogeneous isotropic medium."""
    return MediumSpec(eps * np.eye(3), mu * np.eye(3))
