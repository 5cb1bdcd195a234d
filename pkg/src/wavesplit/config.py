"""YAML configuration for media and pipeline runs.

Medium file::

    units: normalized        # or "SI" (tensors then given in F/m and H/m)
    eps: [[2, 0, 0.3], [0, 2, 0], [0.3, 0, 3]]
    mu: 1.0                  # scalar -> isotropic
    lattice: {extent: [1.0, 1.0], n: [4, 4]}

A tensor entry may also be a profile::

    eps: {profile: gaussian, base: [[...]], amplitude: [[...]], center: [0, 0], width: 0.2}
    mu:  {profile: affine, base: [[...]], grad1: [[...]], grad2: [[...]]}

Run file: see :class:`RunConfig`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .medium import EPS0, MU0, MediumSpec, affine_profile, gaussian_profile

STAGES = ("analyze-strip", "symbol-dump", "split", "propagate")


def parse_complex(v) -> complex:
    """Accept numbers, ``"2+1j"``, ``"2+1i"`` or ``[re, im]``."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex pair must have two entries: {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", "").replace("i", "j"))
        except ValueError as exc:
            raise ConfigError(f"cannot parse complex number {v!r}") from exc
    try:
        return complex(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot parse complex number {v!r}") from exc


def _matrix(v, what):
    if isinstance(v, (int, float)):
        return float(v) * np.eye(3)
    a = np.asarray(v, dtype=float)
    if a.shape == (3,):
        return np.diag(a)
    if a.shape != (3, 3):
        raise ConfigError(f"{what}: expected scalar, 3-vector (diagonal) or 3x3 matrix")
    return a


def _tensor(v, what, unit):
    if isinstance(v, dict):
        kind = v.get("profile")
        try:
            if kind == "affine":
                f = affine_profile(_matrix(v["base"], what), _matrix(v.get("grad1", 0.0), what),
                                   _matrix(v.get("grad2", 0.0), what))
            elif kind == "gaussian":
                f = gaussian_profile(_matrix(v["base"], what), _matrix(v["amplitude"], what),
                                     v.get("center", (0.0, 0.0)), float(v.get("width", 1.0)))
            else:
                raise ConfigError(f"{what}: unknown profile {kind!r}")
        except KeyError as exc:
            raise ConfigError(f"{what}: missing profile parameter {exc}") from exc
        return lambda x: f(x) / unit
    return _matrix(v, what) / unit


def medium_from_dict(d: dict) -> MediumSpec:
    if not isinstance(d, dict) or "eps" not in d or "mu" not in d:
        raise ConfigError("medium needs 'eps' and 'mu' entries")
    units = str(d.get("units", "normalized")).lower()
    if units not in ("normalized", "si"):
        raise ConfigError(f"unknown units {units!r}")
    ue, um = (EPS0, MU0) if units == "si" else (1.0, 1.0)
    lat = d.get("lattice")
    pts = None
    if lat is not None:
        ext = lat.get("extent", [1.0, 1.0])
        n = lat.get("n", [1, 1])
        g1 = np.arange(n[0]) * ext[0] / n[0]
        g2 = np.arange(n[1]) * ext[1] / n[1]
        pts = np.stack(np.meshgrid(g1, g2, indexing="ij"), -1).reshape(-1, 2)
    return MediumSpec(_tensor(d["eps"], "eps", ue), _tensor(d["mu"], "mu", um), pts)


def load_yaml(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return d


def load_medium(path) -> MediumSpec:
    return medium_from_dict(load_yaml(path))


@dataclass(frozen=True)
class GridSpec:
    nx1: int
    nx2: int
    L1: float
    L2: float

    @classmethod
    def parse(cls, v) -> "GridSpec":
        """From ``"nx1,nx2,L1,L2"``, a 4-list or a mapping."""
        try:
            if isinstance(v, str):
                parts = v.split(",")
                if len(parts) != 4:
                    raise ValueError
                v = parts
            if isinstance(v, dict):
                g = cls(int(v["nx1"]), int(v["nx2"]), float(v["L1"]), float(v["L2"]))
            else:
                g = cls(int(v[0]), int(v[1]), float(v[2]), float(v[3]))
        except (ValueError, KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"bad grid spec {v!r}; expected nx1,nx2,L1,L2") from exc
        if g.nx1 < 0 or g.nx2 < 0 or g.L1 <= 0 or g.L2 <= 0:
            raise ConfigError(f"bad grid spec {v!r}")
        return g

    @property
    def power_of_two(self) -> bool:
        return all(n > 0 and n & (n - 1) == 0 for n in (self.nx1, self.nx2))

    def as_list(self):
        return [self.nx1, self.nx2, self.L1, self.L2]


@dataclass(frozen=True)
class RunConfig:
    """Pipeline configuration.

    ``stages`` run in the fixed order of :data:`STAGES`; ``seed`` drives the
    quasi-random ellipticity sampler and the synthetic input field.
    """

    medium: str
    grid: GridSpec
    s: tuple
    S_R: float
    stages: tuple = STAGES
    method: str = "sign"
    norm: str = "identity"
    samples: int = 4096
    seed: int = 0
    depth: float = 1.0
    field: str | None = None
    allow_growing: bool = False
    lam: tuple = (0j,)
    out: str = "out"

    def __post_init__(self):
        for s in self.s:
            if not s.real > self.S_R:
                raise ConfigError(f"Re s must exceed S_R for every s (s = {s}, S_R = {self.S_R})")
        if self.S_R <= 0:
            raise ConfigError("S_R must be positive")
        bad = [st for st in self.stages if st not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}")
        if self.method not in ("sign", "residue"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.norm not in ("identity", "impedance"):
            raise ConfigError(f"unknown normalization {self.norm!r}")

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | str = ".") -> "RunConfig":
        base = Path(base_dir)
        try:
            medium = str((base / d["medium"]).resolve())
            s = d["s"]
            s = tuple(parse_complex(v) for v in (s if isinstance(s, list) else [s]))
            S_R = float(d.get("S_R", min(v.real for v in s) / 2))
            stages = tuple(d.get("stages", STAGES))
            fieldp = d.get("field")
            lam = d.get("lam", [0])
            return cls(
                medium=medium, grid=GridSpec.parse(d["grid"]), s=s, S_R=S_R,
                stages=tuple(st for st in STAGES if st in stages) if set(stages) <= set(STAGES) else stages,
                method=d.get("method", "sign"), norm=d.get("norm", "identity"),
                samples=int(d.get("samples", 4096)), seed=int(d.get("seed", 0)),
                depth=float(d.get("depth", 1.0)),
                field=None if fieldp is None else str((base / fieldp).resolve()),
                allow_growing=bool(d.get("allow_growing", False)),
                lam=tuple(parse_complex(v) for v in (lam if isinstance(lam, list) else [lam])),
                out=str(base / d.get("out", "out")),
            )
        except KeyError as exc:
            raise ConfigError(f"run config missing key {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(load_yaml(path), Path(path).parent)
