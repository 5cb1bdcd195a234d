"""Batch stages behind the command line: strip analysis, symbol dumps, splitting,
propagation, the isotropic validation report and the cached pipeline runner."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import STAGES, GridSpec, RunConfig, load_medium
from .errors import ConfigError, DependencyError, WavesplitError
from .fields import (
    FieldGrid,
    ModeBasis,
    decompose,
    mode_basis,
    propagate_oneway,
    read_grid,
    recompose,
    twoway_oracle,
    wavenumbers,
    grid_bytes,
    grid_csv_text,
)
from .medium import MediumSpec
from .spectrum import ellipticity_estimate, quartic_roots, strip_bound_C0
from .splitting import isotropic_split, matrix_sign, splitting_from_residues
from .symbols import DUMP_COLUMNS, det_coefficients_arrays, dump_row, principal_symbol

log = logging.getLogger(__name__)


def _fmt(v: float) -> str:
    return repr(float(v))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _cplx_cols(prefix, mat):
    return [f"{p}_{prefix}_{i}{j}" for i in range(1, mat + 1) for j in range(1, mat + 1) for p in ("re", "im")]


def _cplx_vals(a):
    return [x for v in np.asarray(a).ravel() for x in (float(v.real), float(v.imag))]


# --------------------------------------------------------------------------
# single stages


def analyze_strip(m: MediumSpec, S_R: float, samples: int, seed: int = 0, s_list=()) -> dict:
    """Strip report plus ``C0`` at ``lam_R = tau/2`` for every requested ``s``."""
    rep = ellipticity_estimate(m, S_R, samples, seed=seed).to_dict()
    rep["eps_hat1"] = m.eps_hat1
    rep["mu_hat1"] = m.mu_hat1
    rep["per_s"] = [
        {"s": [s.real, s.imag], "C0_at_tau_half": strip_bound_C0(s, rep["tau"] / 2, m.eps_hat1, m.mu_hat1)}
        for s in s_list
    ]
    return rep


def symbol_dump_text(m: MediumSpec, grid: GridSpec, s, lams) -> str:
    xis = wavenumbers(grid.nx1, grid.nx2, grid.L1, grid.L2).reshape(-1, 2)
    rows = []
    for x in m.sample_points:
        for lam in lams:
            for xi in xis:
                rows.append(dump_row(principal_symbol(m, x, xi, s, lam)))
    return _csv_text(DUMP_COLUMNS, rows)


SPLIT_COLUMNS = (
    ["x1", "x2", "i1", "i2", "xi1", "xi2"]
    + _cplx_cols("b0", 4) + _cplx_cols("splus", 2) + _cplx_cols("sminus", 2)
    + _cplx_cols("yplus", 2) + _cplx_cols("yminus", 2)
    + ["involution", "riccati_plus", "riccati_minus"]
)


def _frozen(m: MediumSpec, x) -> MediumSpec:
    return m if m.homogeneous else MediumSpec(m.eps(x), m.mu(x))


def split_rows(m: MediumSpec, grid: GridSpec, s, method="sign", norm="identity", S_R=None):
    """Per-mode splitting data; returns ``(rows, bases)`` with one basis per lattice point."""
    rows, bases = [], []
    for x in m.sample_points:
        fm = _frozen(m, x)
        b = mode_basis(fm, grid.nx1, grid.nx2, grid.L1, grid.L2, s, norm, method, S_R)
        bases.append(b)
        eye = np.eye(2)
        b11, b21 = b.b0[..., :2, :2], b.b0[..., 2:, :2]
        g = np.linalg.inv(b21)
        a11, a12, a21, a22 = (b.a1[..., :2, :2], b.a1[..., :2, 2:], b.a1[..., 2:, :2], b.a1[..., 2:, 2:])
        for i1, i2 in np.ndindex(grid.nx1, grid.nx2):
            yp = (eye + b11[i1, i2]) @ g[i1, i2]
            ym = (-eye + b11[i1, i2]) @ g[i1, i2]
            res = []
            for Y in (yp, ym):
                r = Y @ a21[i1, i2] @ Y + Y @ a22[i1, i2] - a11[i1, i2] @ Y - a12[i1, i2]
                res.append(float(np.linalg.norm(r)))
            inv = float(np.linalg.norm(b.b0[i1, i2] @ b.b0[i1, i2] - np.eye(4)))
            rows.append([float(x[0]), float(x[1]), i1, i2, *map(float, b.xi[i1, i2])]
                        + _cplx_vals(b.b0[i1, i2]) + _cplx_vals(b.s_plus[i1, i2]) + _cplx_vals(b.s_minus[i1, i2])
                        + _cplx_vals(yp) + _cplx_vals(ym) + [inv, *res])
    return rows, bases


_BASIS_ARRAYS = ("xi", "a1", "b0", "L", "s_plus", "s_minus")


def basis_bytes(b: ModeBasis) -> bytes:
    """Deterministic serialization: JSON line then the arrays in ``.npy`` format."""
    buf = io.BytesIO()
    buf.write(json.dumps({"s": [b.s.real, b.s.imag], "norm": b.norm, "method": b.method}).encode() + b"\n")
    for name in _BASIS_ARRAYS:
        np.save(buf, getattr(b, name), allow_pickle=False)
    return buf.getvalue()


def load_basis(path) -> ModeBasis:
    with open(path, "rb") as fh:
        meta = json.loads(fh.readline())
        arrs = {name: np.load(fh, allow_pickle=False) for name in _BASIS_ARRAYS}
    return ModeBasis(arrs["xi"], complex(*meta["s"]), arrs["a1"], arrs["b0"], arrs["L"], arrs["s_plus"],
                     arrs["s_minus"], meta["norm"], meta["method"])


def synthetic_field(grid: GridSpec, s, seed: int) -> FieldGrid:
    """Smooth random field: Gaussian-tapered random Fourier coefficients."""
    rng = np.random.default_rng(seed)
    xi = wavenumbers(grid.nx1, grid.nx2, grid.L1, grid.L2)
    k2 = np.sum(xi**2, axis=-1)
    width = (2 * np.pi * min(grid.nx1 / grid.L1, grid.nx2 / grid.L2) / 8) ** 2
    taper = np.exp(-k2 / width)
    modes = (rng.normal(size=(4, grid.nx1, grid.nx2)) + 1j * rng.normal(size=(4, grid.nx1, grid.nx2))) * taper
    return FieldGrid(np.fft.ifft2(modes, norm="ortho"), grid.L1, grid.L2, s)


def propagate_field(F: FieldGrid, m: MediumSpec, h: float, basis: ModeBasis | None = None,
                    allow_growing: bool = False, norm="identity", method="sign"):
    """Decompose, propagate, recompose.

    Without ``allow_growing`` the family that grows along ``h`` is dropped
    (only the decaying constituent is carried).  Returns
    ``(F_out, W_in, info)``; ``info`` holds the two-way oracle mismatch when
    both families are propagated.
    """
    W = decompose(F, m, basis, norm, method)
    info = {"families": ["+", "-"] if allow_growing or h == 0 else (["+"] if h > 0 else ["-"])}
    Wp = W
    if len(info["families"]) == 1:
        data = W.data.copy()
        data[2:4] = 0.0 if h > 0 else data[2:4]
        data[0:2] = 0.0 if h < 0 else data[0:2]
        Wp = FieldGrid(data, W.L1, W.L2, W.s, W.x3, "W")
    Wh = propagate_oneway(Wp, m, h, basis, allow_growing=allow_growing, norm=norm, method=method)
    Fout = recompose(Wh, m, basis, norm, method)
    if len(info["families"]) == 2:
        ref = twoway_oracle(F, m, h)
        info["twoway_rel_error"] = float(np.linalg.norm(Fout.data - ref.data) / max(np.linalg.norm(ref.data), 1e-300))
    return Fout, W, info


# --------------------------------------------------------------------------
# isotropic validation


def run_validate_isotropic(m: MediumSpec, grid: GridSpec, s_list, S_R: float | None = None) -> dict:
    """Compare computed splitting quantities with the isotropic closed forms.

    Returns a report with the maximal relative errors of ``b0`` (both
    routes), ``s+-``, the roots and ``Y+-`` over the wave-vector grid.
    """
    if not m.is_isotropic():
        raise ConfigError("validate-isotropic needs a constant isotropic medium")
    eps, mu = float(m.eps.value[0, 0]), float(m.mu.value[0, 0])
    out = {"eps": eps, "mu": mu, "results": []}
    for s in s_list:
        s = complex(s)
        n = grid.nx1 * grid.nx2
        entry = {"s": [s.real, s.imag], "n_modes": n}
        if n == 0:
            entry["max_rel_error"] = {}
            out["results"].append(entry)
            continue
        tau = m.strip_tau(s.real / 2 if S_R is None else S_R)
        b = mode_basis(m, grid.nx1, grid.nx2, grid.L1, grid.L2, s)
        err = dict.fromkeys(["b0_sign", "b0_residue", "s_plus", "s_minus", "roots", "y_plus", "y_minus"], 0.0)
        eye = np.eye(2)
        for idx in np.ndindex(grid.nx1, grid.nx2):
            iso = isotropic_split(eps, mu, b.xi[idx], s)
            r, z = iso["r"], iso["z"]
            nb = np.abs(iso["b0"]).max()
            err["b0_sign"] = max(err["b0_sign"], np.abs(b.b0[idx] - iso["b0"]).max() / nb)
            b0r, roots = splitting_from_residues(b.a1[idx], tau)
            err["b0_residue"] = max(err["b0_residue"], np.abs(b0r - iso["b0"]).max() / nb)
            err["s_plus"] = max(err["s_plus"], np.abs(b.s_plus[idx] - r * eye).max() / abs(r))
            err["s_minus"] = max(err["s_minus"], np.abs(b.s_minus[idx] + r * eye).max() / abs(r))
            rr = max(np.abs(roots.plus - r).max(), np.abs(roots.minus + r).max()) / abs(r)
            err["roots"] = max(err["roots"], rr)
            g = np.linalg.inv(b.b0[idx][2:, :2])
            b11 = b.b0[idx][:2, :2]
            nz = np.abs(z).max()
            err["y_plus"] = max(err["y_plus"], np.abs((eye + b11) @ g - z).max() / nz)
            err["y_minus"] = max(err["y_minus"], np.abs((-eye + b11) @ g + z).max() / nz)
        entry["max_rel_error"] = {k: float(v) for k, v in err.items()}
        out["results"].append(entry)
    errs = [v for e in out["results"] for v in e["max_rel_error"].values()]
    out["max_rel_error"] = float(max(errs)) if errs else None
    return out


# --------------------------------------------------------------------------
# cached pipeline


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _file_sha(path: Path) -> str | None:
    try:
        return _sha(path.read_bytes())
    except OSError:
        return None


class Pipeline:
    """Runs :class:`RunConfig` stages with content-addressed caching.

    Every stage's cache key hashes the stage name, its parameters, the
    medium file, the package version and the keys of the stages it depends
    on.  A stage whose key and output hashes match the manifest is skipped
    without touching any file.
    """

    DEPENDS = {"analyze-strip": (), "symbol-dump": (), "split": (), "propagate": ("split",)}

    def __init__(self, cfg: RunConfig, out: str | Path | None = None, threads: int = 1):
        self.cfg = cfg
        self.out = Path(out or cfg.out)
        self.threads = max(1, int(threads))
        self.manifest_path = self.out / "manifest.json"
        self.manifest = self._load_manifest()
        self.medium_sha = _file_sha(Path(cfg.medium))
        if self.medium_sha is None:
            raise ConfigError(f"cannot read medium file {cfg.medium}")
        self.medium = load_medium(cfg.medium)
        self.keys: dict[str, str] = {}

    def _load_manifest(self) -> dict:
        try:
            return json.loads(self.manifest_path.read_text())
        except (OSError, ValueError):
            return {"stages": {}}

    def _params(self, stage):
        c = self.cfg
        base = {"s": [[v.real, v.imag] for v in c.s], "S_R": c.S_R}
        if stage == "analyze-strip":
            return {**base, "samples": c.samples, "seed": c.seed}
        if stage == "symbol-dump":
            return {**base, "grid": c.grid.as_list(), "lam": [[v.real, v.imag] for v in c.lam]}
        if stage == "split":
            return {**base, "grid": c.grid.as_list(), "method": c.method, "norm": c.norm}
        return {**base, "depth": c.depth, "allow_growing": c.allow_growing, "seed": c.seed,
                "field": None if c.field is None else _file_sha(Path(c.field))}

    def _key(self, stage) -> str:
        deps = self.DEPENDS[stage]
        for d in deps:
            if d not in self.keys:
                rec = self.manifest["stages"].get(d)
                if d in self.cfg.stages or rec is None or rec.get("status") != "ok":
                    raise DependencyError(f"stage {stage!r} needs stage {d!r} to have run")
                self.keys[d] = rec["key"]
        blob = json.dumps({"stage": stage, "params": self._params(stage), "medium": self.medium_sha,
                           "version": __version__, "deps": {d: self.keys[d] for d in deps}}, sort_keys=True)
        return _sha(blob.encode())

    def _cached(self, stage, key) -> bool:
        rec = self.manifest["stages"].get(stage)
        if not rec or rec.get("key") != key or rec.get("status") != "ok":
            return False
        return all(_file_sha(self.out / f) == h for f, h in rec["outputs"].items())

    def _write(self, name: str, data: bytes | str) -> tuple[str, str]:
        data = data.encode() if isinstance(data, str) else data
        (self.out / name).write_bytes(data)
        return name, _sha(data)

    def _map(self, fn, items):
        if self.threads == 1:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(self.threads) as ex:
            return list(ex.map(fn, items))

    # -- stage bodies -----------------------------------------------------

    def _stage_analyze_strip(self):
        rep = analyze_strip(self.medium, self.cfg.S_R, self.cfg.samples, self.cfg.seed, self.cfg.s)
        return dict([self._write("strip_report.json", json.dumps(rep, indent=2, sort_keys=True))]), {}

    def _stage_symbol_dump(self):
        texts = self._map(lambda s: symbol_dump_text(self.medium, self.cfg.grid, s, self.cfg.lam), self.cfg.s)
        return dict(self._write(f"symbols_s{i}.csv", t) for i, t in enumerate(texts)), {}

    def _stage_split(self):
        def work(s):
            return split_rows(self.medium, self.cfg.grid, s, self.cfg.method, self.cfg.norm, self.cfg.S_R)

        results = self._map(work, self.cfg.s)
        outputs, metrics = {}, {"rows": []}
        for i, (rows, bases) in enumerate(results):
            outputs.update([self._write(f"split_s{i}.csv", _csv_text(SPLIT_COLUMNS, rows))])
            metrics["rows"].append(len(rows))
            if self.medium.homogeneous:
                outputs.update([self._write(f"basis_s{i}.bin", basis_bytes(bases[0]))])
        return outputs, metrics

    def _stage_propagate(self):
        if not self.medium.homogeneous:
            raise ConfigError("propagate stage needs a homogeneous layer")
        outputs, metrics = {}, {"runs": []}
        for i, s in enumerate(self.cfg.s):
            path = self.out / f"basis_s{i}.bin"
            if not path.exists():
                raise DependencyError(f"missing split output {path.name}")
            basis = load_basis(path)
            F = read_grid(self.cfg.field) if self.cfg.field else synthetic_field(self.cfg.grid, s, self.cfg.seed + i)
            if not np.isclose(F.s, s):
                F = FieldGrid(F.data, F.L1, F.L2, s, F.x3, F.ordering)
            Fo, W, info = propagate_field(F, self.medium, self.cfg.depth, basis, self.cfg.allow_growing,
                                          basis.norm, basis.method)
            for name, G in ((f"field_s{i}_in", F), (f"field_s{i}_W", W), (f"field_s{i}_out", Fo)):
                outputs.update([self._write(name + ".dump", grid_bytes(G))])
            outputs.update([self._write(f"field_s{i}_out.csv", grid_csv_text(Fo))])
            metrics["runs"].append(info)
        return outputs, metrics

    # -- driver -----------------------------------------------------------

    def run(self) -> dict:
        self.out.mkdir(parents=True, exist_ok=True)
        before = json.dumps(self.manifest, indent=2, sort_keys=True)
        summary = {}
        order = [st for st in STAGES if st in self.cfg.stages]
        for k, stage in enumerate(order):
            try:
                key = self._key(stage)
                if self._cached(stage, key):
                    self.keys[stage] = key
                    summary[stage] = "cached"
                    continue
                body = getattr(self, "_stage_" + stage.replace("-", "_"))
                outputs, metrics = body()
            except WavesplitError as exc:
                for st in order[k:]:
                    if st in self.manifest["stages"]:
                        self.manifest["stages"][st]["status"] = "stale"
                self._save_manifest(before)
                exc.stage = stage
                raise
            self.keys[stage] = key
            self.manifest["stages"][stage] = {"key": key, "outputs": outputs, "metrics": metrics, "status": "ok"}
            summary[stage] = "ran"
        self._save_manifest(before)
        return summary

    def _save_manifest(self, before: str):
        text = json.dumps(self.manifest, indent=2, sort_keys=True)
        if text != before:
            self.manifest_path.write_text(text)


def run_pipeline(cfg: RunConfig, out=None, threads: int = 1) -> dict:
    """Execute the configured stages; returns ``{stage: "ran" | "cached"}``."""
    return Pipeline(cfg, out, threads).run()
