import numpy as np
import pytest

from brinkmann.classify import (EngineDisagreement, algebra_lemma_probe,
                                check_theorem_redu, eisenhart_split, evaluate_samples,
                                extract_A_tilde, gbar_eigh, sample_points, symmetry_order)
from brinkmann.spaces import (CwParams, apply_chart_change, fixture, make_cw, make_product,
                              random_affine_change)


def test_sample_points_deterministic_and_inside_box():
    spec = fixture("cw4_r2_x_sphere")
    pts = sample_points(spec)
    again = sample_points(spec)
    assert len(pts) == 9
    assert [p.coords for p in pts] == [p.coords for p in again]
    for p in pts:
        vals = [p.u] + list(p.x)
        for v, (lo, hi) in zip(vals, spec.box):
            assert lo <= v <= hi


def test_verdicts():
    assert symmetry_order(fixture("flat")).verdict == "flat"
    assert symmetry_order(fixture("cw4_r1")).verdict == "locally_symmetric"
    assert symmetry_order(fixture("cw4_r2")).verdict == "proper_second_symmetric"
    rep = symmetry_order(fixture("cw4_r3"))
    assert rep.verdict == "undetermined"
    nonzero = {k for k, v in rep.second_block_norms.items() if v > rep.floor}
    assert nonzero == {"00_a"}


def test_product_with_symmetric_block_stays_second_symmetric():
    assert symmetry_order(fixture("cw4_r2_x_sphere")).verdict == "proper_second_symmetric"
    assert symmetry_order(fixture("cw4_r1_x_hyperbolic")).verdict == "locally_symmetric"


def test_depth_one_cannot_claim_second_symmetry():
    rep = symmetry_order(fixture("cw4_r2"), depth=1)
    assert rep.verdict == "undetermined"
    rep = symmetry_order(fixture("cw4_r1"), depth=1)
    assert rep.verdict == "locally_symmetric"


def test_gray_zone_refuses_verdict():
    # second derivative sits between tol and the detection floor
    tiny = make_cw(CwParams(4, (np.diag([0.0, 1.0]), np.diag([1.0, 0.0]),
                                np.diag([1e-6, 0.0]))))
    rep = symmetry_order(tiny)
    assert rep.verdict == "undetermined"
    assert rep.tol * rep.scale < rep.residuals["nabla2_R"] < rep.floor * rep.scale


def test_minimum_sample_count():
    spec = fixture("flat")
    with pytest.raises(ValueError):
        symmetry_order(spec, sample_points(spec)[:3])


def test_engine_disagreement_aborts():
    spec = fixture("cw4_r2")
    samples = sample_points(spec)
    evals = evaluate_samples(spec, samples, depth=2)
    evals[0].agreement["A"] = 1e-3
    with pytest.raises(EngineDisagreement):
        symmetry_order(spec, samples, evaluations=evals)


def test_theorem_redu_consequences():
    spec = fixture("cw4_r2_x_sphere")
    checks = check_theorem_redu(spec)
    assert checks.all_pass()
    assert checks.scalar_value == pytest.approx(2.0)  # sphere of radius 1

    checks_cw = check_theorem_redu(fixture("cw4_r2"))
    assert checks_cw.all_pass()
    assert checks_cw.scalar_value == pytest.approx(0.0, abs=1e-12)

    # cubic P: the structural checks hold, yet the space is not 2nd-symmetric;
    # the verdict (not the checks) flags it as outside the theorem's hypothesis
    r3 = fixture("cw4_r3")
    assert check_theorem_redu(r3).all_pass()
    assert symmetry_order(r3).verdict == "undetermined"


def test_extract_A_tilde_cw():
    rep = extract_A_tilde(fixture("cw4_r2"), check_affine=True)
    for val in rep.values:
        assert np.allclose(val, -2.0 * np.diag([1.0, 0.0]))
    assert rep.grad_parallel and rep.d0_parallel
    assert rep.affine_in_u is True

    rep1 = extract_A_tilde(fixture("cw4_r1"))
    for val in rep1.values:
        assert np.max(np.abs(val)) < 1e-12

    rep3 = extract_A_tilde(fixture("cw4_r3"), check_affine=True)
    assert rep3.affine_in_u is False


def test_A_tilde_eigenvalues_chart_invariant():
    spec = fixture("cw4_r2")
    base = extract_A_tilde(spec)
    base_eigs = np.sort(base.eigenvalues[-1])
    rng = np.random.default_rng(42)
    for _ in range(5):
        change = random_affine_change(spec, rng)
        moved = apply_chart_change(spec, change)
        rep = extract_A_tilde(moved)
        assert np.max(np.abs(np.sort(rep.eigenvalues[-1]) - base_eigs)) < 1e-8


def test_gbar_eigh_solves_generalized_problem():
    rng = np.random.default_rng(1)
    L = np.tril(rng.normal(size=(4, 4))) + 4.0 * np.eye(4)
    g = L @ L.T
    T = rng.normal(size=(4, 4))
    T = T + T.T
    mu, vecs = gbar_eigh(T, g)
    for k in range(4):
        assert np.max(np.abs(T @ vecs[:, k] - mu[k] * (g @ vecs[:, k]))) < 1e-10
    assert np.max(np.abs(vecs.T @ g @ vecs - np.eye(4))) < 1e-10


def test_eisenhart_split_product():
    split = eisenhart_split(fixture("cw4_r2_x_sphere"))
    assert split.eigenvalues == pytest.approx([0.0, 1.0], abs=1e-9)
    assert split.multiplicities == [2, 2]
    assert split.to_dict()["partition"] == [[2, 3], [4, 5]]
    assert split.zero_cluster == 0
    assert split.atil_on_flat_block is True
    assert split.spread < 1e-7
    assert not split.ambiguous


def test_eisenhart_split_pure_cw():
    split = eisenhart_split(fixture("cw4_r2"))
    assert split.multiplicities == [2]
    assert split.zero_cluster == 0
    assert split.eigenvalues == pytest.approx([0.0], abs=1e-12)


def test_eisenhart_ambiguous_clusters_flagged():
    # a huge sphere gives a tiny nonzero eigenvalue within 10x cluster_tol of 0
    spec = make_product(fixture("cw4_r2"), "sphere", radius=500.0)
    split = eisenhart_split(spec, cluster_tol=1e-6)
    assert split.ambiguous


def test_lemma_probe_three_and_four_index():
    for dim in (3, 4, 5):
        res = algebra_lemma_probe(dim, 2000, rng_seed=7, shape="three_index")
        assert res.ok()
        assert res.min_residual > 0.05
        res4 = algebra_lemma_probe(dim, 1000, rng_seed=8, shape="four_index")
        assert res4.ok()


def test_lemma_probe_zero_tensor_passes():
    res = algebra_lemma_probe(3, 10, rng_seed=0)
    assert res.zero_passes


def test_lemma_probe_b_construction():
    # T_ijk = b_ij v_k - b_ik v_j with b symmetric, b v = 0: the hypothesis
    # contraction reduces to b b, nonzero whenever b is
    rng = np.random.default_rng(3)
    dim = 4
    v = np.zeros(dim)
    v[0] = 1.0
    b = rng.normal(size=(dim, dim))
    b = 0.5 * (b + b.T)
    b[0, :] = b[:, 0] = 0.0
    T = np.einsum("ij,k->ijk", b, v) - np.einsum("ik,j->ijk", b, v)
    assert np.max(np.abs(T + np.swapaxes(T, 1, 2))) < 1e-14
    cyc = T + np.einsum("jki->ijk", T) + np.einsum("kij->ijk", T)
    assert np.max(np.abs(cyc)) < 1e-14
    sym = 0.5 * (T + np.swapaxes(T, 0, 1))
    hyp = np.einsum("ijr,rnm->ijnm", sym, T)
    contracted = np.einsum("i,m,ijnm->jn", v, v, hyp)
    assert np.max(np.abs(contracted + 0.5 * b @ b)) < 1e-12
    assert np.max(np.abs(contracted)) > 1e-3


def test_lemma_probe_validation():
    with pytest.raises(ValueError):
        algebra_lemma_probe(9, 10, 0)
    with pytest.raises(ValueError):
        algebra_lemma_probe(3, 10, 0, shape="nope")


def test_verdict_chart_invariance():
    spec = fixture("cw4_r2")
    rng = np.random.default_rng(11)
    samples = sample_points(spec, count=4)
    for _ in range(20):
        moved = apply_chart_change(spec, random_affine_change(spec, rng))
        assert symmetry_order(moved, samples).verdict == "proper_second_symmetric"
