import json

import numpy as np
import pytest

from conftest import ALL_FIXTURES
from origami_rigidity import (
    BarJointFramework,
    constraint_system,
    correspondence_check,
    counting_report,
    double_cone,
    framework_first_order_rigid,
    framework_resolve,
    framework_rigidity_matrix,
    general_load_resolve,
)
from origami_rigidity.barjoint import (
    DegenerateSpanError,
    affine_dimension,
    equivalent_joint_forces,
    framework_to_dict,
    trivial_flexes,
)

TET = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
TET_BARS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_rigidity_matrix_rows():
    fw = BarJointFramework(TET, TET_BARS)
    R = framework_rigidity_matrix(fw)
    assert R.shape == (6, 12)
    np.testing.assert_array_equal(R[0, 0:3], TET[0] - TET[1])
    np.testing.assert_array_equal(R[0, 3:6], TET[1] - TET[0])
    r = framework_first_order_rigid(fw)
    assert r.rigid and r.rank == 6 and r.self_stresses == 0


def test_square_is_flexible():
    P = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.5, 0.5, 1]])
    bars = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4), (2, 4), (3, 4)]
    r = framework_first_order_rigid(BarJointFramework(P, bars))
    assert not r.rigid and r.nontrivial_flexes == 1


def test_coincident_joints_rejected():
    fw = BarJointFramework(np.array([[0, 0, 0], [0, 0, 0.0]]), [(0, 1)])
    with pytest.raises(ValueError, match="coincident"):
        framework_rigidity_matrix(fw)


def test_degenerate_span_rejected():
    P = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]])
    fw = BarJointFramework(P, [(0, 1), (1, 3), (3, 2), (2, 0), (0, 3)])
    assert affine_dimension(P) == 2
    with pytest.raises(DegenerateSpanError):
        framework_first_order_rigid(fw)


def test_unknown_joint_rejected():
    with pytest.raises(ValueError):
        BarJointFramework(TET, [(0, 7)])


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_trivial_flexes_annihilated(papers, name):
    fw = double_cone(papers[name])
    R = framework_rigidity_matrix(fw)
    assert np.abs(R @ trivial_flexes(fw.joints)).max() <= 1e-10


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_double_cone_counts(papers, name):
    p = papers[name]
    fw = double_cone(p)
    cr = counting_report(p, 0)
    assert fw.v == cr.joints == p.V + 2 * p.K
    assert fw.e == cr.bars
    assert len(fw.crease_bars) == p.J
    if not p.is_closed:
        assert fw.v == cr.extra["joints_formula"]
        assert fw.e == cr.extra["bars_formula"]
    # apexes lie on opposite sides of their panel
    for k, (up, down) in enumerate(fw.panel_apexes):
        n = p.panel_normals[k]
        c = p.positions[list(p.panels[k].vertex_cycle)].mean(axis=0)
        assert (fw.joints[up] - c) @ n > 0 > (fw.joints[down] - c) @ n


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_correspondence(papers, name):
    p = papers[name]
    rep = correspondence_check(p)
    assert rep.agrees
    sysm = constraint_system(p)
    cr = counting_report(p, sysm.m)
    assert rep.framework_stresses == cr.s2


def test_framework_resolve_equilibrium():
    fw = BarJointFramework(TET, TET_BARS)
    rng = np.random.default_rng(0)
    for _ in range(20):
        F = rng.standard_normal((4, 3))
        F[-1] -= F.sum(axis=0)
        # remove the net moment with a couple on joints 0/1 and 0/2 and 0/3
        M = np.cross(TET, F).sum(axis=0)
        A = np.hstack([_skew(TET[k] - TET[0]) for k in (1, 2, 3)])
        f, *_ = np.linalg.lstsq(A, -M, rcond=None)
        for i, k in enumerate((1, 2, 3)):
            F[k] += f[3 * i:3 * i + 3]
            F[0] -= f[3 * i:3 * i + 3]
        res = framework_resolve(fw, F)
        assert res.resolvable and res.residual <= 1e-10


def test_framework_rejects_unbalanced():
    fw = BarJointFramework(TET, TET_BARS)
    F = np.zeros((4, 3))
    F[0, 0] = 1.0
    with pytest.raises(ValueError, match="equilibrium"):
        framework_resolve(fw, F)


def test_flexible_framework_reports_witness():
    P = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.5, 0.5, 1]])
    bars = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4), (2, 4), (3, 4)]
    fw = BarJointFramework(P, bars)
    R = framework_rigidity_matrix(fw)
    from origami_rigidity.statics import svd_split
    flex = svd_split(R).flexes.vectors
    triv = trivial_flexes(P)
    # pick the nontrivial flex and load along it (after removing net force/moment)
    q, _ = np.linalg.qr(triv)
    v = flex @ np.ones(flex.shape[1])
    v -= q @ (q.T @ v)
    F = v.reshape(-1, 3)
    res = framework_resolve(fw, F)
    assert not res.resolvable and res.witness is not None


def _skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def _balanced_wrenches(p, rng):
    W = rng.standard_normal((p.K, 6))
    cents = np.array([p.positions[list(q.vertex_cycle)].mean(axis=0) for q in p.panels])
    F = W[:, :3].sum(axis=0)
    W[-1, :3] -= F
    M = (W[:, 3:] + np.cross(cents, W[:, :3])).sum(axis=0)
    W[-1, 3:] -= M
    return W


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_equivalent_forces_preserve_wrench(papers, name):
    p = papers[name]
    fw = double_cone(p)
    rng = np.random.default_rng(5)
    W = rng.standard_normal((p.K, 6))
    F = equivalent_joint_forces(p, fw, W)
    # the total wrench of the joint forces equals the total applied wrench
    cents = np.array([p.positions[list(q.vertex_cycle)].mean(axis=0) for q in p.panels])
    np.testing.assert_allclose(F.sum(axis=0), W[:, :3].sum(axis=0), atol=1e-12)
    np.testing.assert_allclose(np.cross(fw.joints, F).sum(axis=0),
                               (W[:, 3:] + np.cross(cents, W[:, :3])).sum(axis=0), atol=1e-10)


def test_general_load_tetrahedron(papers):
    p = papers["tetrahedron"]
    rng = np.random.default_rng(9)
    for _ in range(100):
        g = general_load_resolve(p, _balanced_wrenches(p, rng))
        assert g.resolvable and g.residual <= 1e-8
        assert len(g.reactions) == sum(len(q.vertex_cycle) for q in p.panels)


def test_general_load_flexible(papers):
    p = papers["degree4-cone"]
    rng = np.random.default_rng(1)
    outcomes = {general_load_resolve(p, _balanced_wrenches(p, rng)).resolvable for _ in range(10)}
    assert outcomes == {False}


def test_general_load_rejects_unbalanced(papers):
    p = papers["tetrahedron"]
    W = np.zeros((p.K, 6))
    W[0, 0] = 1.0
    with pytest.raises(ValueError, match="equilibrium"):
        general_load_resolve(p, W)


def test_framework_export(papers):
    fw = double_cone(papers["fig3"])
    d = json.loads(json.dumps(framework_to_dict(fw)))
    assert set(d) == {"joints", "bars", "crease_bars"}
    assert len(d["joints"]) == fw.v and len(d["bars"]) == fw.e
    assert all(len(j) == 3 for j in d["joints"])
