import numpy as np
import pytest

from conftest import ALL_FIXTURES
from origami_rigidity import creased_paper_from_dict, creased_paper_to_dict, residual, residual_vector
from origami_rigidity.consistency import (
    closure_error,
    is_consistent,
    residual_jacobian,
    rotation_product,
    row_layout,
    transform_product,
    unit_constraints,
)
from origami_rigidity.derivatives import assemble_jacobian
from origami_rigidity.model import configuration_deviation
from origami_rigidity.statics import rank


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_stored_state_is_consistent(papers, name):
    p = papers[name]
    assert residual(p).max_abs() <= p.tol.res
    assert is_consistent(p, p.rho)
    assert max(closure_error(p, p.rho), default=0.0) <= 1e-9


@pytest.mark.parametrize("name", ["degree3", "fig3", "concurrent-hole", "lone-panel"])
def test_flat_development_folds_onto_geometry(papers, name):
    assert configuration_deviation(papers[name]) <= 1e-9


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_residual_shape_and_layout(papers, name):
    p = papers[name]
    r = residual(p)
    layout = row_layout(p)
    assert len(np.asarray(r)) == sum(size for _, _, size in layout)
    assert len(np.asarray(r)) == assemble_jacobian(p).shape[0]
    for k, (_, start, size) in enumerate(layout):
        np.testing.assert_array_equal(r.block(k), np.asarray(r)[start:start + size])


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_residual_is_pure(papers, name):
    p = papers[name]
    rng = np.random.default_rng(3)
    rho = p.rho + 0.1 * rng.standard_normal(p.J)
    a, b = residual_vector(p, rho), residual_vector(p, rho.copy())
    assert a.tobytes() == b.tobytes()


def test_spurious_solution_rejected(papers):
    p = papers["degree3"]
    rho = np.array([np.pi, 0.0, 0.0])
    # the selected entries all vanish ...
    assert residual(p, rho).max_abs() <= 1e-12
    # ... but the loop does not close
    assert closure_error(p, rho)[0] > 1.0
    assert not is_consistent(p, rho)


def test_perturbed_state_is_inconsistent(papers):
    p = papers["degree3"]
    assert not is_consistent(p, p.rho + np.array([0.1, 0.0, 0.0]))


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_unit_products_at_stored_state(papers, name):
    p = papers[name]
    for u, con in zip(p.units, unit_constraints(p)):
        rho_local = np.array([p.rho[p.column_of[c]] for c in u.crease_ids])
        np.testing.assert_allclose(rotation_product(con, rho_local), np.eye(3), atol=1e-9)
        np.testing.assert_allclose(transform_product(con, rho_local), np.eye(4), atol=1e-9)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_product_rule_jacobian_matches_closed_form(papers, name):
    p = papers[name]
    np.testing.assert_allclose(residual_jacobian(p, p.rho), assemble_jacobian(p), atol=1e-12)


def _relabel(paper, perm):
    """Renumber inner creases by a permutation, keeping geometry."""
    doc = creased_paper_to_dict(paper)
    ids = [c["id"] for c in doc["creases"]]
    new = {old: ids[perm[i]] for i, old in enumerate(ids)}
    for c in doc["creases"]:
        c["id"] = new[c["id"]]
    return creased_paper_from_dict(doc, check_configuration=False), new


@pytest.mark.parametrize("name", ["degree3", "degree4-cone", "fig3", "triangulated-tetrahedron"])
def test_cyclic_start_does_not_change_analysis(papers, name):
    p = papers[name]
    J = p.J
    for shift in range(1, min(J, 4)):
        perm = [(i + shift) % J for i in range(J)]
        q, new = _relabel(p, perm)
        # units start at a different crease, but the verdict and ranks are unchanged
        assert is_consistent(q, q.rho)
        assert rank(assemble_jacobian(q)) == rank(assemble_jacobian(p))
        rng = np.random.default_rng(shift)
        d = rng.standard_normal(J)
        d_q = np.zeros(J)
        for j, cid in enumerate(p.inner_crease_ids):
            d_q[q.column_of[new[cid]]] = d[j]
        assert is_consistent(p, p.rho + 0.2 * d) == is_consistent(q, q.rho + 0.2 * d_q)
