import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brinkmann import jets as J


def test_seed_examples():
    j = J.seed(0, 2.0, 2, 2)
    assert j.value() == 2.0
    assert j.coeff((1, 0)) == 1.0
    assert all(j.coeff(tuple(e)) == 0.0 for e in J.context(2, 2).exps[2:]
               if tuple(e) != (1, 0))
    k = J.seed(1, -1.0, 2, 1)
    assert k.value() == -1.0 and k.coeff((0, 1)) == 1.0
    z = J.seed(0, 0.0, 1, 0)
    assert z.value() == 0.0 and z.ctx.ncoeffs == 1


def test_seed_out_of_range():
    with pytest.raises(J.JetShapeError):
        J.seed(2, 0.0, 2, 3)


def test_mul_polynomial_derivative():
    u = J.seed(0, 3.0, 1, 2)
    assert (u * u).partial((2,)) == pytest.approx(2.0)
    assert (u * u).value() == 9.0


def test_div_geometric_series():
    u = J.seed(0, 1.0, 1, 4)
    r = 1.0 / u
    assert np.allclose(r.data, [1.0, -1.0, 1.0, -1.0, 1.0])


def test_div_by_zero_constant_term():
    u = J.seed(0, 0.0, 1, 3)
    with pytest.raises(J.JetDomainError):
        (1.0 / u)


def test_shape_mismatch():
    with pytest.raises(J.JetShapeError):
        J.seed(0, 1.0, 2, 3) + J.seed(0, 1.0, 3, 3)


def test_elementary_functions():
    s = J.sin(J.seed(0, 0.0, 1, 3))
    assert np.allclose(s.data, [0.0, 1.0, 0.0, -1.0 / 6.0])
    assert s.partial((3,)) == pytest.approx(-1.0)
    e = J.exp(J.const(0.0, 1, 3))
    assert np.allclose(e.data, [1.0, 0.0, 0.0, 0.0])
    p = J.pow_int(J.seed(0, 2.0, 1, 3), 3)
    assert p.value() == pytest.approx(8.0)
    assert p.partial((1,)) == pytest.approx(12.0)
    c = J.cos(J.seed(0, 0.3, 1, 4))
    assert c.value() == pytest.approx(math.cos(0.3))
    assert c.partial((1,)) == pytest.approx(-math.sin(0.3))
    q = J.sqrt(J.seed(0, 4.0, 1, 3))
    assert q.value() == pytest.approx(2.0)
    assert q.partial((1,)) == pytest.approx(0.25)


def test_sqrt_domain():
    with pytest.raises(J.JetDomainError):
        J.sqrt(J.seed(0, -1.0, 1, 2))
    with pytest.raises(J.JetDomainError):
        J.sqrt(J.const(0.0, 1, 2))


def test_partial_zero_index_and_bounds():
    f = J.sin(J.seed(0, 0.4, 2, 3)) * J.seed(1, 2.0, 2, 3)
    assert f.partial((0, 0)) == pytest.approx(f.value())
    with pytest.raises(J.JetShapeError):
        f.partial((4, 0))


def _random_jet(rng, nv, order):
    ctx = J.context(nv, order)
    return J.Jet(ctx, rng.normal(size=ctx.ncoeffs))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_ring_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_jet(rng, 3, 4) for _ in range(3))
    lhs = (a * b) * c
    rhs = a * (b * c)
    scale = np.max(np.abs(lhs.data)) + 1.0
    assert np.max(np.abs(lhs.data - rhs.data)) < 1e-13 * scale
    d = a * (b + c) - (a * b + a * c)
    assert np.max(np.abs(d.data)) < 1e-13 * scale
    assert np.max(np.abs((a * b).data - (b * a).data)) < 1e-13 * scale
    assert np.max(np.abs((a + (b - b)).data - a.data)) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_mul_div_roundtrip(seed):
    rng = np.random.default_rng(seed)
    a = _random_jet(rng, 2, 5)
    b = _random_jet(rng, 2, 5)
    b.data[0] = 1.0 + abs(b.data[0])  # constant term bounded away from 0
    back = (a * b) / b
    scale = 1.0 + np.max(np.abs(a.data))
    assert np.max(np.abs(back.data - a.data)) < 1e-10 * scale


def test_polynomial_partials_exact():
    # f = u^2 x + 3 u x^2 - x: all partials up to total degree 3 are exact
    u = J.seed(0, 1.5, 2, 3)
    x = J.seed(1, -0.5, 2, 3)
    f = u * u * x + 3.0 * u * x * x - x
    uu, xx = 1.5, -0.5
    assert f.partial((0, 0)) == uu**2 * xx + 3 * uu * xx**2 - xx
    assert f.partial((1, 0)) == 2 * uu * xx + 3 * xx**2
    assert f.partial((0, 1)) == uu**2 + 6 * uu * xx - 1.0
    assert f.partial((1, 1)) == 2 * uu + 6 * xx
    assert f.partial((2, 0)) == 2 * xx
    assert f.partial((2, 1)) == 2.0
    assert f.partial((0, 2)) == 6 * uu


def test_diff_and_truncate():
    f = J.exp(J.seed(0, 0.2, 2, 4)) * J.seed(1, 1.0, 2, 4)
    df = f.diff(0)
    assert df.order == 3
    assert df.value() == pytest.approx(f.partial((1, 0)))
    t = f.truncate(2)
    assert t.order == 2
    assert np.allclose(t.data, f.data[: t.ctx.ncoeffs])
    with pytest.raises(J.JetShapeError):
        f.truncate(9)


def test_jet_einsum_matches_numpy_at_order_zero():
    rng = np.random.default_rng(0)
    ctx = J.context(2, 0)
    A = J.Jet(ctx, rng.normal(size=(3, 4, 1)))
    B = J.Jet(ctx, rng.normal(size=(4, 3, 1)))
    C = J.jet_einsum("ij,jk->ik", A, B)
    assert np.allclose(C.data[..., 0], A.data[..., 0] @ B.data[..., 0])
    tr = J.jet_einsum("ij,ji->", A, B)
    assert tr.value() == pytest.approx(np.einsum("ij,ji->", A.data[..., 0], B.data[..., 0]))
    with pytest.raises(J.JetShapeError):
        J.jet_einsum("ij,jk->ik", A, J.Jet(ctx, rng.normal(size=(5, 2, 1))))


def test_jet_einsum_convolves_coefficients():
    u = J.seed(0, 0.5, 2, 3)
    x = J.seed(1, 2.0, 2, 3)
    A = J.Jet(u.ctx, np.stack([u.data, x.data]))
    B = J.Jet(u.ctx, np.stack([x.data, u.data]))
    out = J.jet_einsum("i,i->", A, B)   # u*x + x*u = 2ux
    direct = 2.0 * u * x
    assert np.allclose(out.data, direct.data)


def test_batched_arithmetic_broadcasts():
    vals = np.array([0.1, 0.7, -0.4])
    u = J.seed(0, vals, 2, 3)
    f = J.sin(u) * u
    for i, v in enumerate(vals):
        single = J.sin(J.seed(0, v, 2, 3)) * J.seed(0, v, 2, 3)
        assert np.allclose(f[i].data, single.data)
