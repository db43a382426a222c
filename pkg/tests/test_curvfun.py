import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hyperflow.curvfun import (
    CurvatureFunctionSpec,
    DomainError,
    axi_F_and_grad,
    concavity_check,
    epsilon0_estimate,
    eval_F,
    exact_structure_constants,
    grad_F,
    p0_from_epsilon0,
    ratio_field,
)

GAUSS2 = CurvatureFunctionSpec.gauss(2)


def specs():
    return st.integers(2, 6).flatmap(
        lambda n: st.floats(0.02, 1.0).map(lambda f: CurvatureFunctionSpec(n, f / n)))


def kappas(n):
    return arrays(float, n, elements=st.floats(1e-3, 1e3))


def test_normalization_gauss_n2():
    assert eval_F(GAUSS2, [1.0, 1.0]) == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
@pytest.mark.parametrize("frac", [0.1, 0.5, 1.0])
def test_normalization_family(n, frac):
    spec = CurvatureFunctionSpec(n, frac / n)
    assert eval_F(spec, np.ones(n)) == pytest.approx(n, rel=1e-14)


def test_gauss_values():
    # 2 sqrt(k1 k2)
    assert eval_F(GAUSS2, [1.0, 4.0]) == pytest.approx(4.0, rel=1e-15)
    assert eval_F(GAUSS2, [2.0, 8.0]) == pytest.approx(8.0, rel=1e-15)


def test_gauss_gradient_matches_symbolic_and_fd():
    # symbolic derivatives of 2 sqrt(k1 k2) at (1, 4) are (2, 1/2)
    g = grad_F(GAUSS2, [1.0, 4.0])
    np.testing.assert_allclose(g, [2.0, 0.5], rtol=1e-14)
    h = 1e-6
    fd = [(eval_F(GAUSS2, [1 + h, 4]) - eval_F(GAUSS2, [1 - h, 4])) / (2 * h),
          (eval_F(GAUSS2, [1, 4 + h]) - eval_F(GAUSS2, [1, 4 - h])) / (2 * h)]
    np.testing.assert_allclose(g, fd, rtol=1e-8)
    assert np.dot(g, [1.0, 4.0]) == pytest.approx(4.0, rel=1e-15)


@pytest.mark.parametrize("a", [0.05, 0.25, 0.5])
def test_gradient_finite_differences(a):
    spec = CurvatureFunctionSpec(2, a)
    rng = np.random.default_rng(1)
    for k in np.exp(rng.uniform(-2, 2, size=(20, 2))):
        h = 1e-6 * k
        fd = [(eval_F(spec, k + h[i] * e) - eval_F(spec, k - h[i] * e)) / (2 * h[i])
              for i, e in enumerate(np.eye(2))]
        np.testing.assert_allclose(grad_F(spec, k), fd, rtol=1e-7)


@pytest.mark.parametrize("n", [2, 4, 7])
def test_gradient_at_umbilic_is_one(n):
    spec = CurvatureFunctionSpec(n, 0.6 / n)
    np.testing.assert_allclose(grad_F(spec, np.ones(n)), np.ones(n), rtol=1e-14)


def test_euler_relation_batch():
    rng = np.random.default_rng(7)
    for n in (2, 3, 6):
        spec = CurvatureFunctionSpec(n, 0.7 / n)
        k = np.exp(rng.uniform(-4, 4, size=(2000, n)))
        dev = np.abs(np.sum(grad_F(spec, k) * k, axis=1) - eval_F(spec, k)) / eval_F(spec, k)
        assert dev.max() <= 1e-12


@settings(max_examples=60, deadline=None)
@given(specs(), st.data(), st.sampled_from([0.5, 2.0, 10.0]))
def test_homogeneity(spec, data, lam):
    k = data.draw(kappas(spec.n))
    F = eval_F(spec, k)
    assert abs(eval_F(spec, lam * k) - lam * F) <= 1e-12 * lam * F


@settings(max_examples=60, deadline=None)
@given(specs(), st.data())
def test_symmetry_exact(spec, data):
    k = data.draw(kappas(spec.n))
    F = eval_F(spec, k)
    perm = data.draw(st.permutations(range(spec.n)))
    assert eval_F(spec, k[list(perm)]) == F
    np.testing.assert_array_equal(grad_F(spec, k[list(perm)]), grad_F(spec, k)[list(perm)])


@settings(max_examples=60, deadline=None)
@given(specs(), st.data())
def test_monotone_and_euler(spec, data):
    k = data.draw(kappas(spec.n))
    g = grad_F(spec, k)
    assert np.all(g > 0.0)
    F = eval_F(spec, k)
    assert abs(np.dot(g, k) - F) <= 1e-12 * F


@pytest.mark.parametrize("a", [0.1, 0.25, 0.5])
def test_boundary_vanishing_monotone(a):
    spec = CurvatureFunctionSpec(2, a)
    vals = [eval_F(spec, [2.0**-k, 1.0]) for k in range(0, 60, 3)]
    assert np.all(np.diff(vals) < 0.0)
    assert vals[-1] < 2.0 ** (-57 * a) * 2.0


def test_axisymmetric_fast_path_agrees():
    rng = np.random.default_rng(3)
    for n in (2, 3, 5):
        spec = CurvatureFunctionSpec(n, 0.8 / n)
        km, kp = np.exp(rng.uniform(-2, 2, size=(2, 50)))
        full = np.column_stack([km] + [kp] * (n - 1))
        F, Fm, Fp = axi_F_and_grad(spec, km, kp)
        np.testing.assert_allclose(F, eval_F(spec, full), rtol=1e-14)
        g = grad_F(spec, full)
        np.testing.assert_allclose(Fm, g[:, 0], rtol=1e-13)
        np.testing.assert_allclose(Fp, g[:, 1], rtol=1e-13)


@pytest.mark.parametrize("bad", [[0.0, 1.0], [-1.0, 2.0], [np.nan, 1.0], [1.0, np.inf]])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        eval_F(GAUSS2, bad)
    with pytest.raises(DomainError):
        grad_F(GAUSS2, bad)


def test_wrong_length_rejected():
    with pytest.raises(DomainError):
        eval_F(GAUSS2, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("n,a", [(1, 0.5), (2, 0.0), (2, 0.6), (3, 0.5), (2.5, 0.1)])
def test_invalid_specs(n, a):
    with pytest.raises(ValueError):
        CurvatureFunctionSpec(n, a)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 8])
def test_epsilon0_gauss_exact(n):
    est = epsilon0_estimate(CurvatureFunctionSpec.gauss(n))
    assert est.epsilon0 == pytest.approx(1.0 / n, abs=1e-10)
    assert est.p0 == pytest.approx(n / (n - 1), rel=1e-12)


def test_epsilon0_quarter():
    spec = CurvatureFunctionSpec(2, 0.25)
    # closed form: min_i (1 - 2a) k_i / H + a -> a as some k_i -> 0
    est = epsilon0_estimate(spec)
    assert 0.25 <= est.epsilon0 <= 0.25 + 1e-8
    assert est.p0 == pytest.approx(4.0 / 3.0, rel=1e-7)
    seq = [epsilon0_estimate(spec, refinement=r).epsilon0 for r in (1, 2, 4, 8, 12)]
    assert np.all(np.diff(seq) <= 0.0) and np.all(np.diff(seq[2:]) < 0.0)
    assert seq[-1] >= 0.25 and seq[-1] - 0.25 < 1e-11


@pytest.mark.parametrize("n", [2, 3, 6])
@pytest.mark.parametrize("frac", [0.05, 0.3, 0.9, 1.0])
def test_epsilon0_bounds(n, frac):
    spec = CurvatureFunctionSpec(n, frac / n)
    est = epsilon0_estimate(spec)
    assert spec.a <= est.epsilon0 <= 1.0 / n
    assert est.epsilon0 - spec.a < 1e-7


def test_ratio_field_sums_to_one():
    rng = np.random.default_rng(0)
    spec = CurvatureFunctionSpec(4, 0.15)
    k = np.exp(rng.uniform(-3, 3, size=(100, 4)))
    np.testing.assert_allclose(ratio_field(spec, k).sum(axis=1), 1.0, rtol=1e-14)
    np.testing.assert_allclose(ratio_field(spec, k), grad_F(spec, k) * k / eval_F(spec, k)[:, None], rtol=1e-12)


def test_p0_exact_values():
    assert p0_from_epsilon0(0.5) == 2.0
    assert p0_from_epsilon0(1.0 / 3.0) == 1.5
    assert exact_structure_constants(CurvatureFunctionSpec.gauss(3)).p0 == 1.5


def test_concavity_gauss_antidiagonal():
    rep = concavity_check(GAUSS2, [1.0, 1.0], directions=[[1.0, -1.0]])
    # 2 sqrt((1 + s)(1 - s)) < 2 for s != 0
    assert rep.worst < 0.0 and rep.passed


@pytest.mark.parametrize("spec", [GAUSS2, CurvatureFunctionSpec(2, 0.25), CurvatureFunctionSpec(4, 0.1)])
def test_concavity_radial_direction_flat(spec):
    k = np.linspace(0.5, 2.0, spec.n)
    rep = concavity_check(spec, k, directions=[k])
    assert abs(rep.worst) <= 1e-6 * eval_F(spec, k)


def test_concavity_random_directions_quarter():
    spec = CurvatureFunctionSpec(2, 0.25)
    rng = np.random.default_rng(11)
    for k in np.exp(rng.uniform(-1, 1, size=(20, 2))):
        assert concavity_check(spec, k, num_directions=64, seed=int(rng.integers(1000))).passed


def test_concavity_detects_violation(monkeypatch):
    import hyperflow.curvfun as cf

    monkeypatch.setattr(cf, "eval_F", lambda spec, k: np.sum(np.asarray(k) ** 2, axis=-1))
    rep = cf.concavity_check(GAUSS2, [1.0, 1.0], num_directions=8)
    assert not rep.passed
    assert rep.worst == pytest.approx(2.0, rel=1e-6)
    assert np.linalg.norm(rep.worst_direction) == pytest.approx(1.0)


def test_concavity_probe_outside_cone():
    with pytest.raises(DomainError):
        concavity_check(GAUSS2, [1e-4, 1.0], directions=[[-1.0, 0.0]])
