import numpy as np
import pytest

from conftest import ALL_FIXTURES, BUILTIN_FIXTURES
from oracles import DEGREE3_FORM_COEFF, DEGREE3_HESSIAN_Z
from origami_rigidity import (
    constraint_system,
    energy_report,
    extend_to_second_order,
    find_stabilizing_stress,
    is_prestress_stable,
    second_order_classify,
)
from origami_rigidity import stability
from origami_rigidity.kernels import refine_zero_set
from origami_rigidity.stability import (
    NotAFlexError,
    NotASelfStressError,
    StiffnessModel,
    geometric_stiffness,
    identity_stiffness,
    restricted_forms,
    restricted_quadratic_form,
)


@pytest.fixture(scope="module")
def systems(papers):
    return {n: constraint_system(p) for n, p in papers.items()}


def test_geometric_stiffness_degree3(systems):
    sysm = systems["degree3"]
    for sigma in (1.0, -0.4):
        G = geometric_stiffness([0, 0, sigma], sysm.hessian)
        np.testing.assert_allclose(G, sigma * DEGREE3_HESSIAN_Z, atol=1e-12)
    assert np.abs(geometric_stiffness(np.zeros(3), sysm.hessian)).max() == 0


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_geometric_stiffness_linear_and_symmetric(systems, name):
    sysm = systems[name]
    rows = sysm.shape[0]
    rng = np.random.default_rng(4)
    w1, w2 = rng.standard_normal(rows), rng.standard_normal(rows)
    a, b = 0.7, -2.1
    G = geometric_stiffness(a * w1 + b * w2, sysm.hessian)
    np.testing.assert_allclose(G, a * geometric_stiffness(w1, sysm.hessian) + b * geometric_stiffness(w2, sysm.hessian),
                               atol=1e-12)
    np.testing.assert_allclose(G, G.T, atol=1e-12)


def test_geometric_stiffness_matches_fd(papers, systems):
    """d/de [omega^T JA(rho + e d)] equals G(omega) d."""
    from origami_rigidity.consistency import residual_jacobian
    p, sysm = papers["fig3"], systems["fig3"]
    rng = np.random.default_rng(8)
    omega = rng.standard_normal(sysm.shape[0])
    d = rng.standard_normal(p.J)
    h = 1e-5
    fd = (omega @ residual_jacobian(p, p.rho + h * d) - omega @ residual_jacobian(p, p.rho - h * d)) / (2 * h)
    np.testing.assert_allclose(geometric_stiffness(omega, sysm.hessian) @ d, fd, atol=1e-7)


def test_geometric_stiffness_dimension_check(systems):
    with pytest.raises(ValueError):
        geometric_stiffness([1.0, 2.0], systems["degree3"].hessian)


def test_restricted_form_on_flex(systems):
    sysm = systems["degree3"]
    Q = restricted_quadratic_form(geometric_stiffness([0, 0, 1.0], sysm.hessian), sysm.flexes)
    # orthonormal basis: (1,1,1)/sqrt(3) gives one third of the unnormalised value
    assert Q.shape == (1, 1)
    assert abs(Q[0, 0] - DEGREE3_FORM_COEFF / 3) < 1e-12
    rigid = systems["tetrahedron"]
    assert restricted_quadratic_form(np.eye(6), rigid.flexes).shape == (0, 0)


@pytest.mark.parametrize("sigma, stable", [(1.0, True), (1e-6, True), (0.0, False), (-1.0, False)])
def test_degree3_prestress_sign(systems, sigma, stable):
    v = is_prestress_stable(systems["degree3"], [0, 0, sigma])
    assert v.stable == stable


def test_degree3_certificate(systems):
    sysm = systems["degree3"]
    v = is_prestress_stable(sysm, [0, 0, 1.0])
    assert v.certified_t is not None and v.certified_t > 0
    K = sysm.jacobian.T @ sysm.jacobian + v.certified_t * geometric_stiffness([0, 0, 1.0], sysm.hessian)
    assert np.linalg.eigvalsh(K).min() > 0
    assert abs(v.tangent_min_eigenvalue - np.linalg.eigvalsh(K).min()) < 1e-12


def test_scaling_law(systems):
    sysm = systems["degree3"]
    for c in (1e-3, 1.0, 1e3):
        assert is_prestress_stable(sysm, [0, 0, c]).stable
        assert not is_prestress_stable(sysm, [0, 0, -c]).stable


def test_first_order_rigid_zero_stress_is_stable(systems):
    v = is_prestress_stable(systems["tetrahedron"], np.zeros(systems["tetrahedron"].shape[0]))
    assert v.stable
    assert v.tangent_min_eigenvalue > 0


def test_not_a_self_stress(systems):
    with pytest.raises(NotASelfStressError):
        is_prestress_stable(systems["degree3"], [1.0, 0, 0])


def test_stiffness_model_validation(papers, systems):
    B = identity_stiffness(papers["fig3"])
    assert B.matrix.shape == (12, 12)
    assert np.array_equal(B.scaled(3.0).matrix, 3 * np.eye(12))
    with pytest.raises(ValueError, match="positive definite"):
        StiffnessModel((np.diag([1.0, -1.0, 1.0]),))
    with pytest.raises(ValueError, match="symmetric"):
        StiffnessModel((np.array([[1.0, 2.0], [0.0, 1.0]]),))
    with pytest.raises(ValueError):
        is_prestress_stable(systems["degree3"], [0, 0, 1.0], B=np.eye(4))


def test_verdict_independent_of_B(papers, systems):
    sysm = systems["triangulated-tetrahedron"]
    omega = find_stabilizing_stress(sysm)
    rng = np.random.default_rng(0)
    blocks = []
    for u in papers["triangulated-tetrahedron"].units:
        A = rng.standard_normal((u.rows, u.rows))
        blocks.append(A @ A.T + 0.1 * np.eye(u.rows))
    B = StiffnessModel(tuple(blocks))
    a, b = is_prestress_stable(sysm, omega), is_prestress_stable(sysm, omega, B=B)
    assert a.stable and b.stable
    assert abs(a.min_eigenvalue - b.min_eigenvalue) < 1e-14
    assert b.tangent_min_eigenvalue > 0


def test_find_stabilizing_stress_examples(systems):
    w = find_stabilizing_stress(systems["degree3"])
    assert w is not None and w[2] > 0 and np.abs(w[:2]).max() < 1e-12
    assert find_stabilizing_stress(systems["degree4-cone"]) is None
    assert find_stabilizing_stress(systems["degree5-hole"]) is None
    w = find_stabilizing_stress(systems["triangulated-tetrahedron"])
    assert w is not None and is_prestress_stable(systems["triangulated-tetrahedron"], w).min_eigenvalue > 1e-9


def test_stabilizing_search_matches_sdp(systems):
    """The fig3 fixture (m=4, s=5) exercises the iterative search; compare with a semidefinite program."""
    cp = pytest.importorskip("cvxpy")
    sysm = systems["fig3"]
    Q = restricted_forms(sysm)
    x = cp.Variable(Q.shape[0])
    lam = cp.Variable()
    S = sum(x[i] * Q[i] for i in range(Q.shape[0]))
    prob = cp.Problem(cp.Maximize(lam), [S - lam * np.eye(Q.shape[1]) >> 0, cp.norm(x, 2) <= 1])
    prob.solve()
    sdp = prob.value
    w = find_stabilizing_stress(sysm)
    assert w is not None
    got = is_prestress_stable(sysm, w).min_eigenvalue
    assert sdp > 0
    assert got >= 0.99 * sdp


def test_search_is_deterministic(systems):
    a = find_stabilizing_stress(systems["fig3"], seed=3)
    b = find_stabilizing_stress(systems["fig3"], seed=3)
    assert np.array_equal(a, b)


def test_extend_degree3_blocked(systems):
    sysm = systems["degree3"]
    r = extend_to_second_order(sysm, [1.0, 1.0, 1.0])
    assert not r.extendable and not r.forms_test
    assert r.omega[2] > 0 and abs(np.linalg.norm(r.omega) - 1) < 1e-12
    form = np.ones(3) @ geometric_stiffness(r.omega, sysm.hessian) @ np.ones(3)
    assert abs(form - DEGREE3_FORM_COEFF) < 1e-12


def test_extend_degree4_cone(systems):
    sysm = systems["degree4-cone"]
    v = sysm.flexes.vectors[:, 0]
    r = extend_to_second_order(sysm, v)
    assert r.extendable and r.paths_agree
    np.testing.assert_allclose(sysm.hessian.quadratic(v) + sysm.jacobian @ r.rho2, 0, atol=1e-10)


def test_extend_rejects_non_flex(systems):
    with pytest.raises(NotAFlexError):
        extend_to_second_order(systems["degree3"], [1.0, 0.0, 0.0])
    with pytest.raises(NotAFlexError):
        extend_to_second_order(systems["degree3"], [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        extend_to_second_order(systems["degree3"], [1.0, 1.0])


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_extension_paths_agree_on_random_flexes(systems, name):
    sysm = systems[name]
    if sysm.m == 0:
        return
    rng = np.random.default_rng(17)
    F = sysm.flexes.vectors
    for _ in range(100):
        v = F @ rng.standard_normal(sysm.m)
        r = extend_to_second_order(sysm, v)
        assert r.paths_agree
        if r.extendable:
            np.testing.assert_allclose(sysm.hessian.quadratic(v) + sysm.jacobian @ r.rho2, 0, atol=1e-8)
        else:
            np.testing.assert_allclose(sysm.jacobian.T @ r.omega, 0, atol=1e-10)
            assert v @ geometric_stiffness(r.omega, sysm.hessian) @ v > 0


EXPECTED_SECOND_ORDER = {
    "degree3": True,
    "degree5-hole": False,
    "fig3": True,
    "tetrahedron": True,
    "triangulated-tetrahedron": True,
    "degree4-cone": False,
    "concurrent-hole": False,
    "lone-panel": True,
}


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_second_order_classification(systems, name):
    sysm = systems[name]
    r = second_order_classify(sysm)
    assert r.rigid == EXPECTED_SECOND_ORDER[name]
    assert not r.sampled
    if not r.rigid:
        np.testing.assert_allclose(sysm.jacobian @ r.rho1, 0, atol=1e-10)
        np.testing.assert_allclose(sysm.hessian.quadratic(r.rho1) + sysm.jacobian @ r.rho2, 0, atol=1e-8)


@pytest.mark.parametrize("name", BUILTIN_FIXTURES)
def test_hierarchy(systems, name):
    sysm = systems[name]
    w = find_stabilizing_stress(sysm)
    pre = w is not None and is_prestress_stable(sysm, w).stable
    so = second_order_classify(sysm).rigid
    assert (sysm.m != 0) or pre
    assert (not pre) or so


def test_sampling_branch_reports_sampled(systems, monkeypatch):
    """Without the stress certificate the sphere search must find no zero on the fig3 fixture."""
    monkeypatch.setattr(stability, "find_stabilizing_stress", lambda *a, **k: None)
    r = second_order_classify(systems["fig3"], samples=500, seed=1)
    assert r.rigid and r.sampled and not r.exact
    assert r.samples_tried == 500
    again = second_order_classify(systems["fig3"], samples=500, seed=1)
    assert again.details == r.details


def test_zero_set_refinement_finds_common_zero():
    Q = np.array([np.diag([1.0, -1.0, 0.0]), np.diag([0.0, 1.0, -1.0])])
    starts = np.random.default_rng(0).standard_normal((20, 3))
    C, obj = refine_zero_set(Q, starts)
    assert obj.min() < 1e-12
    c = C[np.argmin(obj)]
    np.testing.assert_allclose(np.abs(c), np.full(3, 1 / np.sqrt(3)), atol=1e-6)


def test_energy_report(systems):
    sysm = systems["degree3"]
    rep = energy_report(sysm)
    np.testing.assert_allclose(rep.gradient, 0)
    np.testing.assert_allclose(rep.hessian, sysm.jacobian.T @ sysm.jacobian)
    rep = energy_report(sysm, omega=[0, 0, 1.0])
    assert rep.is_self_stress
    np.testing.assert_allclose(rep.hessian, sysm.jacobian.T @ sysm.jacobian + DEGREE3_HESSIAN_Z, atol=1e-12)
    # unit stress with B = I is too strong: K is indefinite; the certified scale is not
    assert rep.min_eigenvalue < 0
    t = is_prestress_stable(sysm, [0, 0, 1.0]).certified_t
    assert energy_report(sysm, omega=[0, 0, t]).min_eigenvalue > 0
    bad = energy_report(sysm, omega=[1.0, 0, 0])
    assert not bad.is_self_stress and np.abs(bad.gradient).max() > 0


def test_negative_stress_never_stiff(papers, systems):
    """With omega = (0,0,-1) the flex direction has negative energy for every B."""
    sysm = systems["degree3"]
    B = identity_stiffness(papers["degree3"]).scaled(1e6)
    rep = energy_report(sysm, B=B, omega=[0, 0, -1.0])
    v = np.ones(3)
    assert v @ rep.hessian @ v == pytest.approx(-DEGREE3_FORM_COEFF, abs=1e-9)
    assert rep.min_eigenvalue < 0
