"""Field grids, two-way assembly, up/down decomposition and propagation.

Fields live on a uniform periodic transverse grid of ``nx1 x nx2`` points
covering ``[0, L1) x [0, L2)``.  Transverse derivatives are spectral
(``d/dx_a -> i xi_a`` with numpy's FFT sign convention), so symbols act by
multiplication on each Fourier mode.

A :class:`FieldGrid` with ordering ``"F"`` holds ``F = (E1, -E2, H2, H1)``;
ordering ``"W"`` holds one-way constituents ``(W+_1, W+_2, W-_1, W-_2)``.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .errors import (
    ConfigError,
    GridMismatchError,
    MediumError,
    OverflowGuardError,
    SingularBlockError,
    WavesplitError,
)
from .medium import MediumSpec
from .splitting import B21_COND_GUARD, _default_tau, matrix_sign, splitting_from_residues
from .symbols import system_matrix

#: operator-norm bound on a one-way propagator before it is reported as overflow
OVERFLOW_GUARD = 1e12


class GrowingFamilyError(WavesplitError, ValueError):
    """The growing one-way family was propagated without ``allow_growing``."""


# --------------------------------------------------------------------------
# grids


def wavenumbers(nx1: int, nx2: int, L1: float, L2: float) -> np.ndarray:
    """FFT wave vectors ``xi'`` of shape ``(nx1, nx2, 2)``."""
    k1 = 2 * np.pi * np.fft.fftfreq(nx1, d=L1 / nx1)
    k2 = 2 * np.pi * np.fft.fftfreq(nx2, d=L2 / nx2)
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    return np.stack([K1, K2], axis=-1)


def grid_points(nx1: int, nx2: int, L1: float, L2: float) -> np.ndarray:
    """Transverse positions ``x'`` of shape ``(nx1, nx2, 2)``."""
    X1, X2 = np.meshgrid(np.arange(nx1) * L1 / nx1, np.arange(nx2) * L2 / nx2, indexing="ij")
    return np.stack([X1, X2], axis=-1)


def to_modes(u):
    """Unitary 2D FFT over the last two axes."""
    return np.fft.fft2(u, norm="ortho")


def from_modes(u):
    return np.fft.ifft2(u, norm="ortho")


def spectral_derivative(u, L1: float, L2: float, axis: int):
    """``d u / dx_{axis+1}`` of a periodic grid function (last two axes)."""
    u = np.asarray(u)
    xi = wavenumbers(u.shape[-2], u.shape[-1], L1, L2)[..., axis]
    return from_modes(1j * xi * to_modes(u))


@dataclass(frozen=True)
class FieldGrid:
    """Complex 4-component field on a periodic transverse grid.

    Parameters
    ----------
    data : ndarray, shape (4, nx1, nx2)
    L1, L2 : float
        Periods of the grid.
    s : complex
        Normalized Laplace parameter the field belongs to.
    x3 : float
        Depth of this snapshot.
    ordering : {"F", "W"}
    """

    data: np.ndarray
    L1: float
    L2: float
    s: complex
    x3: float = 0.0
    ordering: str = "F"

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.ndim != 3 or d.shape[0] != 4:
            raise GridMismatchError(f"field data must have shape (4, nx1, nx2), got {d.shape}")
        if self.ordering not in ("F", "W"):
            raise ConfigError(f"unknown ordering {self.ordering!r}")
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "s", complex(self.s))

    @property
    def shape(self):
        return self.data.shape[1:]

    @property
    def nx1(self) -> int:
        return self.data.shape[1]

    @property
    def nx2(self) -> int:
        return self.data.shape[2]

    def modes(self) -> np.ndarray:
        """Unitary Fourier coefficients, shape ``(4, nx1, nx2)``."""
        return to_modes(self.data)

    def wavenumbers(self) -> np.ndarray:
        return wavenumbers(self.nx1, self.nx2, self.L1, self.L2)

    def with_modes(self, modes, **changes) -> "FieldGrid":
        return replace(self, data=from_modes(modes), **changes)

    def same_geometry(self, other) -> bool:
        return self.shape == other.shape and np.isclose(self.L1, other.L1) and np.isclose(self.L2, other.L2)


@dataclass(frozen=True)
class SourceGrid:
    """Electric (``J``) and magnetic (``K``) current densities, each ``(3, nx1, nx2)``."""

    J: np.ndarray
    K: np.ndarray
    L1: float
    L2: float

    def __post_init__(self):
        J = np.asarray(self.J, dtype=complex)
        K = np.asarray(self.K, dtype=complex)
        if J.shape != K.shape or J.ndim != 3 or J.shape[0] != 3:
            raise GridMismatchError("J and K must both have shape (3, nx1, nx2)")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "K", K)

    @classmethod
    def zeros(cls, nx1, nx2, L1, L2):
        z = np.zeros((3, nx1, nx2), dtype=complex)
        return cls(z, z.copy(), L1, L2)

    @property
    def shape(self):
        return self.J.shape[1:]


def _check_geometry(F: FieldGrid, src: SourceGrid):
    if F.shape != src.shape or not (np.isclose(F.L1, src.L1) and np.isclose(F.L2, src.L2)):
        raise GridMismatchError(f"field grid {F.shape} and source grid {src.shape} differ")


# --------------------------------------------------------------------------
# two-way quantities


def to_field_matrix(E, H, L1: float, L2: float, s, x3: float = 0.0) -> FieldGrid:
    """``F = (E1, -E2, H2, H1)`` from 3-component (or transverse) E and H grids."""
    E = np.asarray(E)
    H = np.asarray(H)
    if E.shape[1:] != H.shape[1:]:
        raise GridMismatchError(f"E grid {E.shape[1:]} and H grid {H.shape[1:]} differ")
    return FieldGrid(np.stack([E[0], -E[1], H[1], H[0]]), L1, L2, s, x3)


def from_field_matrix(F: FieldGrid):
    """Transverse ``(E1, E2)`` and ``(H1, H2)`` from a field matrix."""
    d = F.data
    return np.stack([d[0], -d[1]]), np.stack([d[3], d[2]])


def poynting_flux(F: FieldGrid) -> np.ndarray:
    """Vertical Poynting component ``(E x conj H)_3 = F1 conj(F3) + F2 conj(F4)``."""
    d = F.data
    return d[0] * np.conj(d[2]) + d[1] * np.conj(d[3])


def curl3(v1, v2, L1, L2):
    """``d1 v2 - d2 v1`` spectrally."""
    return spectral_derivative(v2, L1, L2, 0) - spectral_derivative(v1, L1, L2, 1)


def _tensor_grids(m: MediumSpec, nx1, nx2, L1, L2):
    """Tensors over the grid, shape ``(nx1, nx2, 3, 3)`` each."""
    if m.homogeneous:
        return (np.broadcast_to(m.eps.value, (nx1, nx2, 3, 3)), np.broadcast_to(m.mu.value, (nx1, nx2, 3, 3)))
    pts = grid_points(nx1, nx2, L1, L2).reshape(-1, 2)
    return m.eps.sample(pts).reshape(nx1, nx2, 3, 3), m.mu.sample(pts).reshape(nx1, nx2, 3, 3)


def vertical_components(F: FieldGrid, m: MediumSpec, src: SourceGrid | None = None):
    """Vertical field components from the transverse ones and the sources.

    Solves pointwise

        s mu33 H3 = -s mu3b Hb - (curl E)_3 + K3
        s eps33 E3 = -s eps3b Eb + (curl H)_3 - J3

    Returns
    -------
    (E3, H3) : ndarray, each ``(nx1, nx2)``
    """
    src = SourceGrid.zeros(F.nx1, F.nx2, F.L1, F.L2) if src is None else src
    _check_geometry(F, src)
    eps, mu = _tensor_grids(m, F.nx1, F.nx2, F.L1, F.L2)
    if np.any(eps[..., 2, 2] <= 0) or np.any(mu[..., 2, 2] <= 0):
        raise MediumError("eps33 and mu33 must be positive")
    s = F.s
    (E1, E2), (H1, H2) = from_field_matrix(F)
    cE = curl3(E1, E2, F.L1, F.L2)
    cH = curl3(H1, H2, F.L1, F.L2)
    H3 = (-s * (mu[..., 2, 0] * H1 + mu[..., 2, 1] * H2) - cE + src.K[2]) / (s * mu[..., 2, 2])
    E3 = (-s * (eps[..., 2, 0] * E1 + eps[..., 2, 1] * E2) + cH - src.J[2]) / (s * eps[..., 2, 2])
    return E3, H3


def assemble_sources(src: SourceGrid, m: MediumSpec, s) -> FieldGrid:
    """Source vector ``N`` of the two-way system ``(I d3 + A) F = N``.

    ``N1 = K2 - mu23/mu33 K3 - s^-1 d1(J3/eps33)``,
    ``N2 = K1 - mu13/mu33 K3 + s^-1 d2(J3/eps33)``,
    ``N3 = -J1 + eps13/eps33 J3 + s^-1 d2(K3/mu33)``,
    ``N4 = J2 - eps23/eps33 J3 + s^-1 d1(K3/mu33)``.
    """
    s = complex(s)
    if s == 0:
        raise WavesplitError("s must be nonzero")
    nx1, nx2 = src.shape
    eps, mu = _tensor_grids(m, nx1, nx2, src.L1, src.L2)
    if np.any(eps[..., 2, 2] <= 0) or np.any(mu[..., 2, 2] <= 0):
        raise MediumError("eps33 and mu33 must be positive")
    J, K = src.J, src.K
    j3 = J[2] / eps[..., 2, 2]
    k3 = K[2] / mu[..., 2, 2]

    def d(u, ax):
        return spectral_derivative(u, src.L1, src.L2, ax)

    N = np.stack([
        K[1] - mu[..., 1, 2] / mu[..., 2, 2] * K[2] - d(j3, 0) / s,
        K[0] - mu[..., 0, 2] / mu[..., 2, 2] * K[2] + d(j3, 1) / s,
        -J[0] + eps[..., 0, 2] / eps[..., 2, 2] * J[2] + d(k3, 1) / s,
        J[1] - eps[..., 1, 2] / eps[..., 2, 2] * J[2] + d(k3, 0) / s,
    ])
    return FieldGrid(N, src.L1, src.L2, s)


# --------------------------------------------------------------------------
# per-mode split basis


@dataclass(frozen=True)
class ModeBasis:
    """Per-mode splitting data for a homogeneous layer.

    All arrays are indexed ``[i1, i2, ...]`` over the Fourier modes of the
    grid: ``a1`` and ``b0`` are 4x4, ``L`` is the composition matrix
    ``[l+ l-]``, ``s_plus``/``s_minus`` the 2x2 vertical wave numbers.
    """

    xi: np.ndarray
    s: complex
    a1: np.ndarray
    b0: np.ndarray
    L: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    norm: str
    method: str


def _guarded_inv_stack(b, what):
    cond = np.linalg.cond(b)
    bad = ~np.isfinite(cond) | (cond > B21_COND_GUARD)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SingularBlockError(f"{what} not safely invertible at mode {idx}", float(cond[idx]))
    return np.linalg.inv(b)


def mode_basis(m: MediumSpec, nx1: int, nx2: int, L1: float, L2: float, s, norm: str = "identity",
               method: str = "sign", S_R: float | None = None) -> ModeBasis:
    """Compute ``b0``, ``L = [l+ l-]`` and ``s+-`` for every Fourier mode."""
    if not m.homogeneous:
        raise ConfigError("per-mode decomposition requires a homogeneous layer")
    s = complex(s)
    xi = wavenumbers(nx1, nx2, L1, L2)
    tau = _default_tau(m, s, S_R)
    a1 = system_matrix(m.eps.value, m.mu.value, xi, s)
    if method == "sign":
        b0, _ = matrix_sign(a1)
    elif method == "residue":
        b0 = np.empty_like(a1)
        for idx in np.ndindex(nx1, nx2):
            b0[idx], _ = splitting_from_residues(a1[idx], tau)
    else:
        raise ConfigError(f"unknown method {method!r}")
    b11, b21 = b0[..., :2, :2], b0[..., 2:, :2]
    a21, a22 = a1[..., 2:, :2], a1[..., 2:, 2:]
    g = _guarded_inv_stack(b21, "b21")
    eye = np.eye(2)
    if norm == "identity":
        N = np.broadcast_to(eye, b21.shape)
        Ninv = N
    elif norm == "impedance":
        N, Ninv = g, b21
    else:
        raise ConfigError(f"unknown normalization {norm!r}")
    l_plus = np.concatenate([eye + b11, b21], axis=-2) @ N
    l_minus = np.concatenate([-eye + b11, b21], axis=-2) @ N
    s_plus = Ninv @ g @ (a21 @ (eye + b11) + a22 @ b21) @ N
    s_minus = Ninv @ g @ (a21 @ (-eye + b11) + a22 @ b21) @ N
    L = np.concatenate([l_plus, l_minus], axis=-1)
    return ModeBasis(xi, s, a1, b0, L, s_plus, s_minus, norm, method)


def _basis_for(field: FieldGrid, m, basis, norm, method):
    if basis is None:
        return mode_basis(m, field.nx1, field.nx2, field.L1, field.L2, field.s, norm, method)
    if basis.xi.shape[:2] != field.shape or not np.isclose(basis.s, field.s):
        raise GridMismatchError("mode basis does not match the field grid")
    return basis


def decompose(F: FieldGrid, m: MediumSpec, basis: ModeBasis | None = None, norm: str = "identity",
              method: str = "sign") -> FieldGrid:
    """One-way constituents ``W = L^{-1} F`` per Fourier mode."""
    if F.ordering != "F":
        raise ConfigError("decompose expects a field-matrix grid")
    basis = _basis_for(F, m, basis, norm, method)
    Linv = _guarded_inv_stack(basis.L, "L")
    Fh = np.moveaxis(F.modes(), 0, -1)
    Wh = np.einsum("...ij,...j->...i", Linv, Fh)
    return F.with_modes(np.moveaxis(Wh, -1, 0), ordering="W")


def recompose(W: FieldGrid, m: MediumSpec, basis: ModeBasis | None = None, norm: str = "identity",
              method: str = "sign") -> FieldGrid:
    """Two-way field ``F = L W`` per Fourier mode."""
    if W.ordering != "W":
        raise ConfigError("recompose expects a one-way grid")
    basis = _basis_for(W, m, basis, norm, method)
    Wh = np.moveaxis(W.modes(), 0, -1)
    Fh = np.einsum("...ij,...j->...i", basis.L, Wh)
    return W.with_modes(np.moveaxis(Fh, -1, 0), ordering="F")


def _expm_stack(a):
    flat = a.reshape(-1, *a.shape[-2:])
    return np.stack([expm(x) for x in flat]).reshape(a.shape)


def propagate_oneway(W: FieldGrid, m: MediumSpec, h: float, basis: ModeBasis | None = None,
                     allow_growing: bool = False, norm: str = "identity", method: str = "sign") -> FieldGrid:
    """Advance one-way constituents by ``h``: ``W+- <- exp(-s+- h) W+-`` per mode.

    The family that grows in the direction of ``h`` (``W-`` for ``h > 0``,
    ``W+`` for ``h < 0``) is only propagated when ``allow_growing`` is set or
    when it is identically zero.  Propagators whose norm exceeds
    :data:`OVERFLOW_GUARD` raise :class:`OverflowGuardError`.
    """
    if W.ordering != "W":
        raise ConfigError("propagate_oneway expects a one-way grid")
    basis = _basis_for(W, m, basis, norm, method)
    Wh = np.moveaxis(W.modes(), 0, -1)
    out = np.zeros_like(Wh)
    for sl, S, growing in ((slice(0, 2), basis.s_plus, h < 0), (slice(2, 4), basis.s_minus, h > 0)):
        part = Wh[..., sl]
        if not np.any(part):
            continue
        if growing and not allow_growing:
            raise GrowingFamilyError("propagating the growing one-way family needs allow_growing=True")
        # ||exp(M)|| >= exp(max Re eig M): reject before the exponential can overflow
        growth = np.linalg.eigvals(-S * h).real.max()
        if growth > np.log(OVERFLOW_GUARD):
            raise OverflowGuardError(f"one-way propagator norm >= exp({growth:.3g}) exceeds {OVERFLOW_GUARD:.0e}")
        P = _expm_stack(-S * h)
        if not np.all(np.isfinite(P)):
            raise OverflowGuardError("one-way propagator overflowed")
        nrm = np.linalg.norm(P, ord=2, axis=(-2, -1))
        if nrm.max() > OVERFLOW_GUARD:
            raise OverflowGuardError(f"one-way propagator norm {nrm.max():.3e} exceeds {OVERFLOW_GUARD:.0e}")
        out[..., sl] = np.einsum("...ij,...j->...i", P, part)
    return W.with_modes(np.moveaxis(out, -1, 0), x3=W.x3 + h)


def twoway_oracle(F: FieldGrid, m: MediumSpec, h: float) -> FieldGrid:
    """Reference two-way propagation ``F <- exp(-a1 h) F`` per mode (source free)."""
    if F.ordering != "F":
        raise ConfigError("twoway_oracle expects a field-matrix grid")
    if not m.homogeneous:
        raise ConfigError("the two-way oracle is defined for homogeneous layers only")
    a1 = system_matrix(m.eps.value, m.mu.value, F.wavenumbers(), F.s)
    with np.errstate(over="ignore", invalid="ignore"):
        P = _expm_stack(-a1 * h)
    if not np.all(np.isfinite(P)):
        raise OverflowGuardError("two-way propagator overflowed")
    Fh = np.moveaxis(F.modes(), 0, -1)
    out = np.einsum("...ij,...j->...i", P, Fh)
    return F.with_modes(np.moveaxis(out, -1, 0), x3=F.x3 + h)


# --------------------------------------------------------------------------
# I/O

MAGIC = b"WSFG1\n"


def grid_bytes(F: FieldGrid) -> bytes:
    """Binary dump: magic, 4-byte header length, JSON header, complex128 payload.

    Payload is little-endian interleaved (Re, Im) doubles in row-major
    ``(4, nx1, nx2)`` order.
    """
    header = {
        "nx1": F.nx1, "nx2": F.nx2, "L1": F.L1, "L2": F.L2,
        "s": [F.s.real, F.s.imag], "x3": F.x3, "ordering": F.ordering, "ncomp": 4,
    }
    hb = json.dumps(header, sort_keys=True).encode()
    return MAGIC + struct.pack("<I", len(hb)) + hb + np.ascontiguousarray(F.data, dtype="<c16").tobytes()


def write_grid(path, F: FieldGrid) -> None:
    Path(path).write_bytes(grid_bytes(F))


def read_grid(path) -> FieldGrid:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise ConfigError(f"{path}: not a field grid dump")
    off = len(MAGIC)
    (hlen,) = struct.unpack("<I", raw[off:off + 4])
    header = json.loads(raw[off + 4:off + 4 + hlen])
    shape = (header["ncomp"], header["nx1"], header["nx2"])
    data = np.frombuffer(raw[off + 4 + hlen:], dtype="<c16")
    if data.size != np.prod(shape):
        raise ConfigError(f"{path}: payload size does not match header")
    return FieldGrid(data.reshape(shape).copy(), header["L1"], header["L2"], complex(*header["s"]),
                     header["x3"], header["ordering"])


def grid_csv_text(F: FieldGrid) -> str:
    """Plot-friendly CSV: one row per grid point with Re/Im of each component."""
    pts = grid_points(F.nx1, F.nx2, F.L1, F.L2)
    names = ["E1", "mE2", "H2", "H1"] if F.ordering == "F" else ["Wp1", "Wp2", "Wm1", "Wm2"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i1", "i2", "x1", "x2"] + [f"{p}_{n}" for n in names for p in ("re", "im")])
    for i1, i2 in np.ndindex(F.nx1, F.nx2):
        vals = F.data[:, i1, i2]
        w.writerow([i1, i2, repr(float(pts[i1, i2, 0])), repr(float(pts[i1, i2, 1]))]
                   + [repr(float(x)) for v in vals for x in (v.real, v.imag)])
    return buf.getvalue()


def write_grid_csv(path, F: FieldGrid) -> None:
    Path(path).write_text(grid_csv_text(F))
