import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavesplit.errors import ConfigError, StripViolationError
from wavesplit.medium import MediumSpec, isotropic
from wavesplit.spectrum import (
    c0_objective,
    classify_roots,
    companion_roots,
    ellipticity_estimate,
    quartic_roots,
    strip_bound_C0,
)
from wavesplit.symbols import det_coefficients, principal_symbol, system_matrix

from _support import random_point


def _roots(m, xi, s, tau=None):
    sp = principal_symbol(m, (0, 0), xi, s)
    tau = m.strip_tau(complex(s).real / 2) if tau is None else tau
    return quartic_roots(det_coefficients(m, (0, 0), xi, s), tau, sp.a1)


@pytest.mark.parametrize("xi, r", [((0.0, 0.0), 1.0), ((1.0, 0.0), np.sqrt(2.0))])
def test_isotropic_double_roots(xi, r):
    q = _roots(isotropic(1.0, 1.0), xi, 1.0)
    np.testing.assert_allclose(q.plus, [r, r], atol=1e-10)
    np.testing.assert_allclose(q.minus, [-r, -r], atol=1e-10)
    assert q.coalesced_plus and q.coalesced_minus


def test_companion_roots_simple():
    # (lam^2 - 1)(lam^2 - 4)
    r = np.sort(companion_roots([4, 0, -5, 0, 1]).real)
    np.testing.assert_allclose(r, [-2, -1, 1, 2], atol=1e-14)


def test_vieta_relations():
    rng = np.random.default_rng(0)
    for _ in range(100):
        e, mu, xi, s = random_point(rng)
        m = MediumSpec(e, mu)
        dc = det_coefficients(m, (0, 0), xi, s)
        q = _roots(m, xi, s)
        r = q.all
        scale = max(1.0, np.abs(r).max())
        assert abs(r.sum() + dc.c[3]) <= 1e-10 * scale
        assert abs(np.prod(r) - dc.c[0]) <= 1e-10 * scale**4
        assert not q.coalesced_plus and not q.coalesced_minus


def test_two_roots_each_side():
    rng = np.random.default_rng(1)
    for _ in range(200):
        e, mu, xi, s = random_point(rng)
        q = _roots(MediumSpec(e, mu), xi, s)
        assert np.all(q.plus.real > 0) and np.all(q.minus.real < 0)
        assert q.min_abs_real >= q.strip_tau / 4


def test_strip_violation():
    with pytest.raises(StripViolationError):
        classify_roots([1.0, 1.0 + 1j, -1.0, 0.01], tau=1.0)
    with pytest.raises(StripViolationError):
        classify_roots([1.0, 2.0, 3.0, -1.0], tau=0.1)
    with pytest.raises(ConfigError):
        quartic_roots([4, 0, -5, 0, 1], 0.0)


def test_roots_homogeneous():
    rng = np.random.default_rng(2)
    for eta in (0.5, 3.0):
        e, mu, xi, s = random_point(rng)
        a = np.sort_complex(np.linalg.eigvals(system_matrix(e, mu, xi, s)))
        b = np.sort_complex(np.linalg.eigvals(system_matrix(e, mu, eta * xi, eta * s)))
        np.testing.assert_allclose(b, eta * a, rtol=1e-11)


def test_conjugate_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        e, mu, xi, s = random_point(rng)
        a = np.linalg.eigvals(system_matrix(e, mu, xi, s))
        b = np.linalg.eigvals(system_matrix(e, mu, xi, np.conj(s)))
        c = np.linalg.eigvals(system_matrix(e, mu, -xi, np.conj(s)))
        np.testing.assert_allclose(np.sort_complex(-np.conj(b)), np.sort_complex(a), atol=1e-11)
        np.testing.assert_allclose(np.sort_complex(np.conj(c)), np.sort_complex(a), atol=1e-11)


def test_c0_zero_lam():
    assert strip_bound_C0(2.0, 0.0, 1.5, 0.7) == pytest.approx(2.0 * 0.7)
    assert strip_bound_C0(1.0 + 5j, 3j, 1.0, 2.0) == pytest.approx(1.0)


def test_c0_vanishes_at_strip_edge():
    S, e, m = 1.0, 2.0, 0.5
    edge = S * np.sqrt(e * m)
    vals = [strip_bound_C0(S, edge * (1 - d), e, m) for d in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-5
    with pytest.raises(StripViolationError):
        strip_bound_C0(S, edge, e, m)


@given(st.floats(0.1, 5), st.floats(0, 0.999), st.floats(0.1, 5), st.floats(0.1, 5))
@settings(max_examples=200, deadline=None)
def test_c0_matches_brute_force(S, frac, e, m):
    lam = frac * S * np.sqrt(e * m)
    eta = np.linspace(0, 1, 200001)[1:]
    brute = c0_objective(eta, S, lam, e, m).max()
    got = strip_bound_C0(S, lam, e, m)
    assert got >= brute - 1e-12 * S * max(e, m)
    assert got <= brute + 1e-4 * S * max(e, m)
    assert got > 0


def test_ellipticity_isotropic():
    rep = ellipticity_estimate(isotropic(1.0, 1.0), S_R=0.25, n_samples=2048)
    assert rep.Ce > 0
    assert rep.tau == pytest.approx(0.25)
    assert rep.root_ratio_min >= rep.strip_ratio * (1 - 1e-12)
    assert rep.samples_checked == 2048
    assert rep.C1 == pytest.approx(rep.Ce * rep.R_e**-4 / 8)
    assert rep.R >= rep.R_e
    d = rep.to_dict()
    assert set(d) >= {"tau", "C0", "Ce", "C1", "R", "C_tau"}


def test_ellipticity_stable_under_doubling():
    rng = np.random.default_rng(4)
    m = MediumSpec(*random_point(rng)[:2])
    a = ellipticity_estimate(m, 0.3, n_samples=4096, seed=1)
    b = ellipticity_estimate(m, 0.3, n_samples=8192, seed=1)
    assert a.Ce > 0 and b.Ce > 0
    assert abs(a.Ce - b.Ce) / b.Ce < 0.2


def test_ellipticity_heterogeneous_counts_lattice():
    from wavesplit.medium import affine_profile

    f = affine_profile(2 * np.eye(3), 0.5 * np.eye(3), np.zeros((3, 3)))
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
    rep = ellipticity_estimate(MediumSpec(f, np.eye(3), pts), 0.2, n_samples=1024)
    assert rep.samples_checked == 3 * 1024


def test_ellipticity_rejects_few_samples():
    with pytest.raises(ConfigError):
        ellipticity_estimate(isotropic(1, 1), 0.2, n_samples=999)
    with pytest.raises(ConfigError):
        ellipticity_estimate(isotropic(1, 1), 0.0)
