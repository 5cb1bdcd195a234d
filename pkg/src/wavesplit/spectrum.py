"""Roots of the characteristic quartic, the resolvent strip and ellipticity constants."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, stats

from .errors import ConfigError, MediumError, NumericGuardError, StripViolationError
from .medium import MediumSpec
from .symbols import DetCoefficients, system_matrix

#: relative separation below which two same-side roots are treated as one double root
COALESCE_RTOL = 1e-8
#: allowed relative mismatch between companion roots and symbol eigenvalues
_MATCH_RTOL = 1e-5


@dataclass(frozen=True)
class RootQuartet:
    """Four roots of ``det(a1 - lam I)`` split by the sign of their real part.

    ``plus`` and ``minus`` are each sorted by imaginary part.  When a pair is
    flagged as coalesced both entries still hold the (nearly equal) computed
    roots; consumers use their mean as the double root.
    """

    plus: np.ndarray
    minus: np.ndarray
    coalesced_plus: bool
    coalesced_minus: bool
    strip_tau: float

    @property
    def all(self) -> np.ndarray:
        return np.concatenate([self.plus, self.minus])

    @property
    def min_abs_real(self) -> float:
        return float(np.abs(self.all.real).min())


def companion_roots(c) -> np.ndarray:
    """Roots of ``sum_k c[k] lam^k`` (monic quartic) from the companion matrix."""
    c = np.asarray(c, dtype=complex)
    c = c / c[-1]
    n = len(c) - 1
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1]
    return np.linalg.eigvals(comp)


def _coalesced(pair) -> bool:
    return bool(abs(pair[0] - pair[1]) < COALESCE_RTOL * max(abs(pair[0]), abs(pair[1])))


def classify_roots(roots, tau: float) -> RootQuartet:
    """Split four roots into the right/left half-plane pairs and flag coalescence."""
    roots = np.asarray(roots, dtype=complex)
    if roots.shape != (4,):
        raise ValueError("expected four roots")
    if np.any(np.abs(roots.real) < tau / 4):
        bad = roots[np.argmin(np.abs(roots.real))]
        raise StripViolationError(f"root {bad:.6g} lies inside the strip |Re lam| < tau/4 = {tau / 4:.3g}")
    plus = roots[roots.real > 0]
    minus = roots[roots.real < 0]
    if len(plus) != 2:
        raise StripViolationError(f"expected two roots on each side of the imaginary axis, got {len(plus)} right / {len(minus)} left")
    plus = plus[np.argsort(plus.imag)]
    minus = minus[np.argsort(minus.imag)]
    return RootQuartet(plus, minus, _coalesced(plus), _coalesced(minus), float(tau))


def quartic_roots(dc: DetCoefficients | np.ndarray, tau: float, a1=None) -> RootQuartet:
    """Classify the roots of the characteristic quartic.

    Roots are the companion-matrix eigenvalues of the monic quartic.  When
    the 4x4 symbol ``a1`` is supplied, its eigenvalues replace the companion
    roots after a consistency check: polynomial roots of a double root are
    only accurate to the square root of machine precision, while the
    symbol's (semisimple) eigenvalues keep full accuracy.

    Parameters
    ----------
    dc : DetCoefficients or array_like
        Ascending coefficients, ``c[4] = 1``.
    tau : float
        Strip half-width; roots with ``|Re lam| < tau/4`` are rejected.
    a1 : array_like, shape (4, 4), optional
        The principal symbol the quartic was built from.
    """
    if tau <= 0:
        raise ConfigError("tau must be positive")
    c = dc.c if isinstance(dc, DetCoefficients) else np.asarray(dc)
    roots = companion_roots(c)
    if a1 is not None:
        ev = np.linalg.eigvals(np.asarray(a1, dtype=complex))
        cost = np.abs(roots[:, None] - ev[None, :])
        r, k = optimize.linear_sum_assignment(cost)
        scale = np.abs(ev).max()
        if cost[r, k].max() > _MATCH_RTOL * scale + np.sqrt(np.finfo(float).eps) * scale:
            raise NumericGuardError("companion roots and symbol eigenvalues disagree")
        roots = ev
    return classify_roots(roots, tau)


# --------------------------------------------------------------------------
# strip bound


def _c0_terms(eta, S, lr, eh, mh):
    return S * eh * (1.0 - eta), mh * S - lr**2 / (eta * eh * S)


def c0_objective(eta, s, lam, eps_hat1, mu_hat1):
    """``min(Re s eps(1-eta), mu Re s - lam_R^2 / (eta eps Re s))``."""
    t1, t2 = _c0_terms(np.asarray(eta, dtype=float), complex(s).real, complex(lam).real, eps_hat1, mu_hat1)
    return np.minimum(t1, t2)


def in_strip(s, lam, eps_hat1, mu_hat1) -> bool:
    S, lr = complex(s).real, complex(lam).real
    return S > 0 and lr**2 < S**2 * eps_hat1 * mu_hat1


def strip_bound_C0(s, lam, eps_hat1: float, mu_hat1: float) -> float:
    """Best lower-bound constant ``C0(s, lam)`` on the resolvent strip.

    The objective is the minimum of a decreasing and an increasing function
    of ``eta``; its maximum sits at their crossing, which is the positive
    root of ``S e eta^2 + (m - e) S eta - lam_R^2 / (e S) = 0``.
    """
    if not (eps_hat1 > 0 and mu_hat1 > 0):
        raise ConfigError("lower bounds must be positive")
    if not in_strip(s, lam, eps_hat1, mu_hat1):
        raise StripViolationError("(s, lam) outside strip")
    S, lr = complex(s).real, complex(lam).real
    e, m = eps_hat1, mu_hat1
    if lr == 0.0:
        return S * min(e, m)
    A, B, C = S * e, (m - e) * S, lr**2 / (e * S)
    disc = np.sqrt(B * B + 4 * A * C)
    eta = 2 * C / (B + disc) if B > 0 else (disc - B) / (2 * A)
    if np.isfinite(eta) and 0.0 < eta < 1.0:
        return float(S * e * (1.0 - eta))
    res = optimize.minimize_scalar(
        lambda t: -c0_objective(t, s, lam, e, m), bounds=(0.0, 1.0), method="bounded",
        options={"xatol": 1e-14},
    )
    return float(-res.fun)


# --------------------------------------------------------------------------
# ellipticity constants


@dataclass(frozen=True)
class StripReport:
    """Sampled strip/ellipticity constants.

    ``root_ratio_min`` is the measured ``min |Re lam_i| / Re s`` over the
    samples, to be compared with the guaranteed ``sqrt(eps_hat1 mu_hat1)``.
    """

    tau: float
    C0: float
    Ce: float
    C1: float
    R: float
    R_e: float
    C_tau: float
    samples_checked: int
    root_ratio_min: float
    strip_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _surface_samples(n, R_e, S_R, seed):
    """Quasi-random points ``(xi1, xi2, s, lam_I)`` with ``|xi|^2+|s|^2+lam_I^2 = R_e^2``, ``Re s >= S_R``."""
    sob = stats.qmc.Sobol(d=5, scramble=True, seed=seed)
    u = sob.random(n)
    sr = S_R + (R_e - S_R) * u[:, 0]
    g = stats.norm.ppf(np.clip(u[:, 1:], 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rho = np.sqrt(np.maximum(R_e**2 - sr**2, 0.0))
    xi = rho[:, None] * g[:, :2]
    s = sr + 1j * rho * g[:, 2]
    lam_i = rho * g[:, 3]
    return xi, s, lam_i


def ellipticity_estimate(m: MediumSpec, S_R: float, n_samples: int = 4096, R_e: float | None = None,
                         seed: int = 0) -> StripReport:
    """Sampled ellipticity constants of ``det alpha1`` on the imaginary axis.

    ``Ce`` is the minimum of ``|det alpha1|`` over quasi-random points of the
    surface ``|xi'|^2 + |s|^2 + lam_I^2 = R_e^2`` with ``Re s >= S_R`` and
    ``lam_R = 0`` (at every lattice point of a heterogeneous medium).

    Parameters
    ----------
    n_samples : int
        At least 1000; rounded up to a power of two for the Sobol sequence.
    R_e : float, optional
        Radius of the bottom surface, default ``max(1, 4 S_R)``.
    """
    if n_samples < 1000:
        raise ConfigError("ellipticity_estimate needs n_samples >= 1000")
    if S_R <= 0:
        raise ConfigError("S_R must be positive")
    R_e = max(1.0, 4.0 * S_R) if R_e is None else float(R_e)
    if R_e <= S_R:
        raise ConfigError("R_e must exceed S_R")
    n = 1 << int(np.ceil(np.log2(n_samples)))
    xi, s, lam_i = _surface_samples(n, R_e, S_R, seed)
    eps_all = m.eps.sample(m.sample_points)
    mu_all = m.mu.sample(m.sample_points)
    ce = np.inf
    ratio = np.inf
    tmax = 1.0
    for eps, mu in zip(eps_all, mu_all):
        a1 = system_matrix(eps, mu, xi, s)
        d = np.abs(np.linalg.det(a1 - (1j * lam_i)[:, None, None] * np.eye(4)))
        ce = min(ce, float(d.min()))
        ev = np.linalg.eigvals(a1)
        ratio = min(ratio, float((np.abs(ev.real).min(axis=1) / s.real).min()))
        tmax = max(tmax, np.abs(eps).max(), np.abs(mu).max(), 1 / eps[2, 2], 1 / mu[2, 2])
    if not ce > 0:
        raise MediumError("sampled det alpha1 vanishes: medium is not SPD or Re s too small")
    tau = m.strip_tau(S_R)
    lower = ce * R_e**-4
    C1 = lower / 8.0
    c_tau = max(4.0 * tmax**2, lower)
    R0 = R_e
    R = np.sqrt(max(R0**2, R_e**2 + tau**2, (c_tau * tau / (lower / 4.0 - C1)) ** 2))
    C0 = strip_bound_C0(S_R, tau / 2, m.eps_hat1, m.mu_hat1)
    return StripReport(
        tau=tau, C0=C0, Ce=ce, C1=C1, R=float(R), R_e=R_e, C_tau=float(c_tau),
        samples_checked=int(n * len(eps_all)), root_ratio_min=ratio,
        strip_ratio=float(np.sqrt(m.eps_hat1 * m.mu_hat1)),
    )
