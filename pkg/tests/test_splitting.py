import numpy as np
import pytest
from scipy import integrate

from wavesplit.errors import ConvergenceError, DivergentIntegralError, NumericGuardError, SingularBlockError
from wavesplit.medium import MediumSpec, isotropic
from wavesplit.spectrum import classify_roots
from wavesplit.splitting import (
    SplitSymbol,
    admittance_residual,
    eigenvectors,
    impedance_and_riccati,
    integrate_Inm,
    isotropic_split,
    matrix_sign,
    split_basis,
    splitting_from_residues,
    splitting_symbol,
    vertical_wavenumber,
)
from wavesplit.symbols import principal_symbol

from _support import random_point


def quad_Inm(roots, n, m, lam_r=0.0):
    """Integral of lam^n / prod(lam - r)^m over lam = lam_r + i t, t real (principal value)."""
    roots = np.asarray(roots)

    def f(t):
        lam = lam_r + 1j * t
        return lam**n / np.prod(lam - roots) ** m

    def g(t, part):
        v = f(t) + f(-t)
        return v.real if part == 0 else v.imag

    scale = np.abs(roots).max()
    out = []
    for part in (0, 1):
        a = integrate.quad(g, 0, scale, args=(part,), epsabs=1e-14, epsrel=1e-11, limit=400)[0]
        b = integrate.quad(g, scale, np.inf, args=(part,), epsabs=1e-14, epsrel=1e-11, limit=400)[0]
        out.append(a + b)
    return complex(*out)


def random_quartet(rng, tau=0.2):
    plus = rng.uniform(0.5, 2, 2) + 1j * rng.normal(size=2)
    minus = -rng.uniform(0.5, 2, 2) + 1j * rng.normal(size=2)
    return classify_roots(np.concatenate([plus, minus]), tau)


@pytest.mark.parametrize("n, m", [(0, 1), (1, 1), (2, 1), (3, 1), (2, 2), (5, 2), (7, 2), (4, 3)])
def test_Inm_vs_quadrature(n, m):
    rng = np.random.default_rng(n + 10 * m)
    for _ in range(5):
        q = random_quartet(rng)
        ref = quad_Inm(q.all, n, m)
        assert abs(integrate_Inm(q, n, m) - ref) <= 1e-8 * max(abs(ref), 1e-3)


def test_Inm_path_invariance():
    rng = np.random.default_rng(1)
    for n, m in [(0, 1), (2, 1), (2, 2)]:
        q = random_quartet(rng)
        a, b = quad_Inm(q.all, n, m, 0.0), quad_Inm(q.all, n, m, q.strip_tau / 2)
        assert abs(a - b) <= 1e-8 * abs(a)


@pytest.mark.parametrize("r", [0.7, 1.0, 2.5 + 0.5j])
def test_Inm_isotropic(r):
    q = classify_roots([r, r, -r, -r], 0.1)
    assert q.coalesced_plus and q.coalesced_minus
    assert integrate_Inm(q, 0, 1) / np.pi == pytest.approx(1 / (2 * r**3), rel=1e-13)
    assert abs(integrate_Inm(q, 1, 1)) < 1e-14
    assert abs(integrate_Inm(q, 3, 1)) < 1e-14


def test_Inm_divergent():
    q = classify_roots([1, 1 + 1j, -1, -1 + 1j], 0.1)
    for n, m in [(4, 1), (5, 1), (8, 2), (0, 0), (-1, 1)]:
        with pytest.raises(DivergentIntegralError):
            integrate_Inm(q, n, m)


def test_pair_sum_closed_form_n3():
    rng = np.random.default_rng(2)
    for _ in range(20):
        q = random_quartet(rng)
        a, b = q.plus
        c, d = q.minus
        den = (a - c) * (a - d) * (b - c) * (b - d)
        right = (a**2 * b**2 - (c + d) * a * b * (a + b) + c * d * (a**2 + a * b + b**2)) / den
        den_l = (c - a) * (c - b) * (d - a) * (d - b)
        left = (c**2 * d**2 - (a + b) * c * d * (c + d) + a * b * (c**2 + c * d + d**2)) / den_l
        assert integrate_Inm(q, 3, 1) == pytest.approx(np.pi * (left - right), rel=1e-12)


def test_double_double_residues():
    a, c = 1.3 + 0.4j, -0.8 - 0.2j
    q = classify_roots([a, a, c, c], 0.1)
    dp = a**2 * (a - 3 * c) / (a - c) ** 3
    dm = c**2 * (3 * a - c) / (a - c) ** 3
    assert integrate_Inm(q, 3, 1) == pytest.approx(np.pi * (dm - dp), rel=1e-13)
    assert integrate_Inm(q, 3, 1) == pytest.approx(quad_Inm(q.all, 3, 1), rel=1e-8)


def test_coalescence_continuity():
    a, b = 1.1 + 0.3j, -0.9 - 0.1j
    d = -1.4 + 0.6j
    for n in range(4):
        near = classify_roots([a, a * (1 + 1e-9), b, d], 0.1)
        apart = classify_roots([a, a * (1 + 2e-8), b, d], 0.1)
        assert near.coalesced_plus and not apart.coalesced_plus
        x, y = integrate_Inm(near, n, 1), integrate_Inm(apart, n, 1)
        assert abs(x - y) <= 1e-6 * abs(y)


@pytest.mark.parametrize("method", ["sign", "residue"])
def test_b0_isotropic(method):
    rng = np.random.default_rng(3)
    for eps, mu in [(1, 1), (2, 0.5), (4, 3)]:
        for _ in range(5):
            xi = rng.normal(size=2) * 2
            s = complex(rng.uniform(0.2, 2), rng.normal())
            sp = splitting_symbol(isotropic(eps, mu), (0, 0), xi, s, method)
            ref = isotropic_split(eps, mu, xi, s)["b0"]
            np.testing.assert_allclose(sp.b0, ref, atol=1e-10 * np.abs(ref).max())
            if method == "sign":
                assert sp.iterations <= 10


@pytest.mark.parametrize("method", ["sign", "residue"])
def test_b0_vacuum_zero_wavevector_is_swap(method):
    K = np.block([[np.zeros((2, 2)), np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
    sp = splitting_symbol(isotropic(1, 1), (0, 0), (0, 0), 1.3 + 0.2j, method)
    np.testing.assert_allclose(sp.b0, K, atol=1e-12)


def test_routes_agree_and_invariants():
    rng = np.random.default_rng(4)
    for _ in range(200):
        e, mu, xi, s = random_point(rng)
        m = MediumSpec(e, mu)
        a1 = principal_symbol(m, (0, 0), xi, s).a1
        bs = splitting_symbol(m, (0, 0), xi, s, "sign")
        br = splitting_symbol(m, (0, 0), xi, s, "residue")
        assert np.abs(bs.b0 - br.b0).max() <= 1e-8
        for b in (bs, br):
            assert b.involution_residual() <= 1e-9
            assert np.linalg.norm(b.b0 @ a1 - a1 @ b.b0) <= 1e-9 * np.linalg.norm(a1)


def test_sign_vs_eigendecomposition():
    rng = np.random.default_rng(5)
    for _ in range(50):
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        w, V = np.linalg.eig(A)
        if np.abs(w.real).min() < 0.1:
            continue
        ref = V @ np.diag(np.sign(w.real)) @ np.linalg.inv(V)
        X, _ = matrix_sign(A)
        np.testing.assert_allclose(X, ref, atol=1e-9 * max(1, np.abs(ref).max()))
        X2, _ = matrix_sign(7.5 * A)
        np.testing.assert_allclose(X2, X, atol=1e-9 * max(1, np.abs(ref).max()))


def test_sign_batched():
    rng = np.random.default_rng(6)
    A = np.stack([np.diag([1.0, 2.0, -3.0, -0.5]) + 0.1 * rng.normal(size=(4, 4)) for _ in range(8)])
    X, _ = matrix_sign(A)
    for a, x in zip(A, X):
        np.testing.assert_allclose(x, matrix_sign(a)[0], atol=1e-11)


def test_sign_nonconvergence():
    with pytest.raises(ConvergenceError):
        matrix_sign(np.diag([1j, 2.0, -1.0, 3.0]), maxiter=30)


@pytest.mark.parametrize("eta", [2.0, 10.0])
def test_b0_order_zero(eta):
    rng = np.random.default_rng(7)
    for _ in range(20):
        e, mu, xi, s = random_point(rng)
        m = MediumSpec(e, mu)
        for method in ("sign", "residue"):
            a = splitting_symbol(m, (0, 0), xi, s, method, S_R=s.real / 2).b0
            b = splitting_symbol(m, (0, 0), eta * xi, eta * s, method, S_R=s.real / 2).b0
            assert np.abs(a - b).max() <= 1e-9 * max(1, np.abs(a).max())


def test_strip_guard_on_s():
    with pytest.raises(NumericGuardError):
        splitting_symbol(isotropic(1, 1), (0, 0), (1, 0), 0.5 + 1j, S_R=0.6)
    with pytest.raises(ValueError):
        splitting_symbol(isotropic(1, 1), (0, 0), (1, 0), 1.0, method="nope")


def test_isotropic_basis():
    eps, mu, xi, s = 2.0, 1.5, np.array([0.4, -1.2]), 0.9 + 0.7j
    m = isotropic(eps, mu)
    a = principal_symbol(m, (0, 0), xi, s)
    sp = splitting_symbol(m, (0, 0), xi, s)
    iso = isotropic_split(eps, mu, xi, s)
    basis = split_basis(sp, a)
    tol = 1e-11
    np.testing.assert_allclose(basis.l_plus, np.vstack([np.eye(2), iso["zinv"]]), atol=tol)
    np.testing.assert_allclose(basis.l_minus, np.vstack([-np.eye(2), iso["zinv"]]), atol=tol)
    np.testing.assert_allclose(basis.s_plus, iso["s_plus"], atol=tol)
    np.testing.assert_allclose(basis.s_minus, iso["s_minus"], atol=tol)
    np.testing.assert_allclose(basis.y_plus, iso["z"], atol=tol)
    np.testing.assert_allclose(basis.y_minus, -iso["z"], atol=tol)
    _, _, rp, rm = impedance_and_riccati(sp, a)
    assert np.abs(rp).max() <= 1e-12 * np.abs(a.a12).max() * 10 and np.abs(rm).max() <= 1e-11 * np.abs(a.a12).max()


def test_basis_relations_random():
    rng = np.random.default_rng(8)
    for _ in range(200):
        e, mu, xi, s = random_point(rng)
        m = MediumSpec(e, mu)
        a = principal_symbol(m, (0, 0), xi, s)
        sp = splitting_symbol(m, (0, 0), xi, s, "residue")
        for norm in ("identity", "impedance"):
            b = split_basis(sp, a, norm)
            assert np.abs(sp.b0 @ b.l_plus - b.l_plus).max() <= 1e-9
            assert np.abs(sp.b0 @ b.l_minus + b.l_minus).max() <= 1e-9
            assert np.abs(a.a1 @ b.l_plus - b.l_plus @ b.s_plus).max() <= 1e-9 * max(1, np.abs(a.a1).max())
            assert np.abs(a.a1 @ b.l_minus - b.l_minus @ b.s_minus).max() <= 1e-9 * max(1, np.abs(a.a1).max())
        ev = np.sort_complex(np.linalg.eigvals(b.s_plus))
        assert np.abs(ev - np.sort_complex(sp.roots.plus)).max() <= 1e-8 * max(1, np.abs(ev).max())
        ev = np.sort_complex(np.linalg.eigvals(b.s_minus))
        assert np.abs(ev - np.sort_complex(sp.roots.minus)).max() <= 1e-8 * max(1, np.abs(ev).max())
        yp, ym, rp, rm = impedance_and_riccati(sp, a)
        for Y, r in ((yp, rp), (ym, rm)):
            bound = 1e-9 * (np.linalg.norm(Y) ** 2 * np.linalg.norm(a.a21) + np.linalg.norm(a.a12))
            assert np.linalg.norm(r) <= bound
            G = np.linalg.inv(Y)
            assert np.linalg.norm(admittance_residual(G, a)) <= 1e-9 * (
                np.linalg.norm(G) ** 2 * np.linalg.norm(a.a12) + np.linalg.norm(a.a21))


def test_impedance_normalization_top_block():
    rng = np.random.default_rng(9)
    e, mu, xi, s = random_point(rng)
    m = MediumSpec(e, mu)
    a = principal_symbol(m, (0, 0), xi, s)
    sp = splitting_symbol(m, (0, 0), xi, s)
    b = split_basis(sp, a, "impedance")
    np.testing.assert_allclose(b.l_plus[:2], b.y_plus, atol=1e-12)
    np.testing.assert_allclose(b.l_minus[:2], b.y_minus, atol=1e-12)
    np.testing.assert_allclose(b.l_plus[2:], np.eye(2), atol=1e-12)
    # the two normalizations span the same subspaces
    bi = eigenvectors(sp, "identity")
    np.testing.assert_allclose(bi.l_plus @ b.n_plus, b.l_plus, atol=1e-12)


def test_singular_b21_rejected():
    b0 = np.eye(4, dtype=complex)
    sp = SplitSymbol(b0, "sign")
    a = principal_symbol(isotropic(1, 1), (0, 0), (1, 0), 1.0)
    with pytest.raises(SingularBlockError) as info:
        vertical_wavenumber(sp, a)
    assert not np.isfinite(info.value.cond) or info.value.cond > 1e12
    with pytest.raises(SingularBlockError):
        impedance_and_riccati(sp, a)
    with pytest.raises(SingularBlockError):
        eigenvectors(sp, "impedance")
    # identity normalization only needs the involution
    eigenvectors(sp, "identity")


def test_non_involution_rejected():
    with pytest.raises(NumericGuardError):
        eigenvectors(SplitSymbol(2 * np.eye(4, dtype=complex), "sign"))


def test_residue_route_near_coalescence():
    # uniaxial medium at normal incidence: exact double roots, flagged
    e, mu = np.diag([2.0, 2.0, 3.0]), np.diag([1.5, 1.5, 0.7])
    b0, roots = splitting_from_residues(principal_symbol(MediumSpec(e, mu), (0, 0), (0, 0), 1 + 0.5j).a1, 0.1)
    assert roots.coalesced_plus and roots.coalesced_minus
    X, _ = matrix_sign(principal_symbol(MediumSpec(e, mu), (0, 0), (0, 0), 1 + 0.5j).a1)
    np.testing.assert_allclose(b0, X, atol=1e-10)
