import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from openbook.catalog import loop_line_graph, square_book, star_graph
from openbook.discretization import discretize, lift_graph_field, transverse_profile
from openbook.functionals import (
    NehariError,
    Params,
    c_p,
    evaluate,
    nehari_factor,
    nehari_project,
    transverse_fraction,
)
from openbook.topology import rescaled_product_book

OPS = discretize(rescaled_product_book(star_graph(3, 2.0)), 0.25, transverse_h=0.2)
PLAIN = discretize(square_book(), 0.25)

seeds = st.integers(0, 2**32 - 1)
omegas = st.floats(0.1, 5.0)
powers = st.floats(1.5, 5.0)
widths = st.floats(0.2, 5.0)


def field(seed, ops=OPS):
    return np.random.default_rng(seed).standard_normal(ops.n)


def test_zero_field_reports_zero():
    rep = evaluate(np.zeros(OPS.n), OPS, Params(1.0, 3.0, 1.0))
    assert all(v == 0.0 for v in rep.to_dict().values())


def test_cp():
    assert c_p(3.0) == 0.25
    u = field(0)
    rep = evaluate(u, OPS, Params(1.0, 3.0, 1.0))
    assert rep.level == rep.np1 / 4


def test_params_validation():
    with pytest.raises(ValueError):
        Params(1.0, 1.0)
    with pytest.raises(ValueError):
        Params(1.0, 3.0, 0.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(np.ones(3), OPS, Params(1.0, 3.0))


def test_width_needs_split():
    with pytest.raises(ValueError):
        evaluate(np.ones(PLAIN.n), PLAIN, Params(1.0, 3.0, 1.0))
    with pytest.raises(ValueError):
        transverse_fraction(np.ones(PLAIN.n), PLAIN)


@given(seeds, omegas, powers, st.one_of(st.none(), widths))
def test_level_identity(seed, omega, p, L):
    rep = evaluate(field(seed), OPS, Params(omega, p, L))
    assert rep.action - rep.nehari / 2 == pytest.approx(rep.level, rel=1e-12)
    quad = rep.qx + rep.qy / (L**2 if L else 1.0) + omega * rep.mass2
    assert rep.action == pytest.approx(0.5 * quad - rep.np1 / (p + 1), rel=1e-12)


@given(seeds, omegas, powers, widths)
def test_projection_lands_on_nehari_manifold(seed, omega, p, L):
    params = Params(omega, p, L)
    v = nehari_project(field(seed), OPS, params)
    rep = evaluate(v, OPS, params)
    assert abs(rep.nehari) <= 1e-10 * rep.np1
    assert nehari_factor(v, OPS, params) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(nehari_project(v, OPS, params), v, rtol=1e-12, atol=0)


@given(seeds, omegas, powers, widths, st.sampled_from([0.5, 2.0, 10.0]))
def test_projection_is_scale_invariant(seed, omega, p, L, t):
    params = Params(omega, p, L)
    u = field(seed)
    a = nehari_project(u, OPS, params)
    b = nehari_project(t * u, OPS, params)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_factor_on_doubled_nehari_field_is_half():
    params = Params(1.0, 3.0, 1.3)
    v = nehari_project(field(3), OPS, params)
    assert nehari_factor(2 * v, OPS, params) == pytest.approx(0.5, rel=1e-13)


def test_projection_errors():
    with pytest.raises(NehariError, match="zero"):
        nehari_project(np.zeros(OPS.n), OPS, Params(1.0, 3.0, 1.0))
    # a constant has no gradient energy, so omega = -1 makes Q negative
    with pytest.raises(NehariError, match="spectral bottom"):
        nehari_project(np.ones(PLAIN.n), PLAIN, Params(-1.0, 3.0))


def test_transverse_fraction_examples():
    g = OPS.product.graph_ops
    lift = lift_graph_field(np.random.default_rng(2).standard_normal(g.n), OPS)
    ridge = transverse_profile(OPS, 1)
    assert transverse_fraction(lift, OPS) == 0.0
    assert transverse_fraction(ridge, OPS) == pytest.approx(1.0, abs=1e-12)
    mixed = transverse_fraction(lift + 0.1 * ridge * lift, OPS)
    assert 0.0 < mixed < 1.0
    assert transverse_fraction(np.zeros(OPS.n), OPS) == 0.0


@given(seeds, omegas, powers, widths, widths)
def test_nehari_comparison_in_width(seed, omega, p, J, K):
    assume(J < K)
    u = field(seed)
    iJ = evaluate(u, OPS, Params(omega, p, J)).nehari
    iK = evaluate(u, OPS, Params(omega, p, K)).nehari
    assert iJ > iK
    lift = lift_graph_field(np.random.default_rng(seed).standard_normal(OPS.product.graph_ops.n), OPS)
    a = evaluate(lift, OPS, Params(omega, p, J)).nehari
    b = evaluate(lift, OPS, Params(omega, p, K)).nehari
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@given(seeds, omegas, powers, widths, st.floats(1.01, 10.0))
def test_projection_lowers_level_inside_nehari_region(seed, omega, p, L, scale):
    params = Params(omega, p, L)
    # scaling a Nehari field up by > 1 puts it strictly inside {I < 0}
    u = scale * nehari_project(field(seed), OPS, params)
    assert evaluate(u, OPS, params).nehari <= 0
    assert evaluate(nehari_project(u, OPS, params), OPS, params).level <= evaluate(u, OPS, params).level


def test_report_serializes_flat():
    d = evaluate(field(5), OPS, Params(1.0, 3.0, 1.0)).to_dict()
    assert set(d) == {"qx", "qy", "mass2", "np1", "action", "nehari", "level"}
    assert all(isinstance(v, float) for v in d.values())


def test_physical_evaluation_uses_full_stiffness():
    ops = discretize(rescaled_product_book(loop_line_graph(2.0)), 0.25)
    u = field(7, ops)
    phys = evaluate(u, ops, Params(1.0, 3.0))
    unit = evaluate(u, ops, Params(1.0, 3.0, 1.0))
    assert phys.nehari == pytest.approx(unit.nehari, rel=1e-13)
