"""Frame curvature of a Brinkmann chart via the specialized leaf formulas.

Everything is expressed through leaf tensors (indices over the spacelike
directions, stored 0-based) and four derivative operators:

* ``leaf_grad``   -- the intrinsic covariant derivative of the u-dependent
  leaf metric, appending its derivative slot LAST;
* ``d0_op``       -- the transverse derivative along E_0 of a v-invariant
  section: plain u-derivative of components plus t-corrections, one per
  slot;
* plain ``diff``/``du`` on jets for raw partials.

Tensor layout conventions (paper-style index order in brackets):

* ``A[i, j]``            symmetric,            A_ij = R^1_{i0j}
* ``B[i, j, k]``         skew in (j, k),       B_ijk = R^1_{ijk}
* ``Rbar_up[i, j, k, l]``                      Rbar^i_{jkl}
* ``Atil[i, j]``                               nabla_0 R^1_{i0j}
* ``Ahat[i, j, s]``      derivative slot last, nabla_s R^1_{i0j}
* ``Btil[i, j, k]``                            nabla_0 R^1_{ijk}
* ``Bhat[i, j, k, s]``                         nabla_s R^1_{ijk}
* ``Rtil_up[i, j, k, l]``                      nabla_0 Rbar^i_{jkl}
* ``gradRbar[i, j, k, l, s]``                  nabla_s Rbar^i_{jkl}

The twelve second-derivative blocks are keyed by (outer, inner) derivative
type -- 'l' for a leaf direction, '0' for E_0 -- plus the curvature slice
they refine, e.g. ``l0_a`` holds nabla_m nabla_0 R^1_{i0j} with the new
leaf slot appended last.  Correction terms are contracted exactly as the
second-symmetry system writes them; each block vanishes identically on a
2nd-symmetric space.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .chart import ChartJets, ChartPoint, MetricSpec, christoffel_bar, compute_h_t, eval_metric
from .jets import Jet, jet_einsum

__all__ = [
    "CurvaturePack",
    "DerivPack",
    "SecondDerivPack",
    "ChartCurvature",
    "curvature_at",
    "leaf_grad",
    "d0_op",
    "d0_apply",
    "SECOND_DERIV_BLOCKS",
]

_LETTERS = [c for c in string.ascii_lowercase if c not in "rs"]


def _slot_letters(k: int) -> str:
    return "".join(_LETTERS[:k])


def leaf_grad(T: Jet, nup: int, gamma: Jet) -> Jet:
    """Leaf covariant derivative; the new covariant slot is appended last.

    ``T`` has its ``nup`` contravariant axes first, then covariant axes.
    ``gamma[i, j, k]`` holds Gamma^i_{jk}.
    """
    rank = len(T.shape)
    letters = _slot_letters(rank)
    m = gamma.shape[0]
    parts = [T.diff(1 + s) for s in range(m)]
    out = Jet(parts[0].ctx, np.stack([p.data for p in parts], axis=-2))
    for a in range(rank):
        L = letters[a]
        src = letters[:a] + "r" + letters[a + 1:]
        if a < nup:
            term = jet_einsum(f"{L}rs,{src}->{letters}s", gamma, T)
            out = out + term
        else:
            term = jet_einsum(f"r{L}s,{src}->{letters}s", gamma, T)
            out = out - term
    return out


def d0_op(T: Jet, nup: int, tup: Jet) -> Jet:
    """Transverse derivative of a v-invariant leaf section.

    Implements dot(T) minus t^i_k contractions on contravariant slots plus
    t^k_j contractions on covariant slots; ``tup[i, j]`` holds t^i_j.
    """
    rank = len(T.shape)
    letters = _slot_letters(rank)
    out = T.du()
    for a in range(rank):
        L = letters[a]
        src = letters[:a] + "r" + letters[a + 1:]
        if a < nup:
            out = out - jet_einsum(f"{L}r,{src}->{letters}", tup, T)
        else:
            out = out + jet_einsum(f"r{L},{src}->{letters}", tup, T)
    return out


def d0_apply(T: np.ndarray, nup: int, tup: np.ndarray, Tdot: np.ndarray) -> np.ndarray:
    """Value-level transverse derivative, given the plain u-derivative of T."""
    rank = T.ndim
    letters = _slot_letters(rank)
    out = np.array(Tdot, dtype=float, copy=True)
    for a in range(rank):
        L = letters[a]
        src = letters[:a] + "r" + letters[a + 1:]
        if a < nup:
            out -= np.einsum(f"{L}r,{src}->{letters}", tup, T)
        else:
            out += np.einsum(f"r{L},{src}->{letters}", tup, T)
    return out


def _sym12(x: np.ndarray) -> np.ndarray:
    """Symmetrize the first two axes (the (i, j) pair of A/B-type slices)."""
    return 0.5 * (x + np.swapaxes(x, 0, 1))


def _jtrace(J: Jet, a: int, b: int) -> Jet:
    return Jet(J.ctx, np.trace(J.data, axis1=a, axis2=b))


@dataclass
class CurvaturePack:
    """Frame curvature components at a point."""

    Rbar: np.ndarray        # Rbar^i_{jkl}
    Rbar_low: np.ndarray    # Rbar_{ijkl}
    A: np.ndarray           # R^1_{i0j}
    B: np.ndarray           # R^1_{ijk}
    R_i0k: np.ndarray       # R^i_{j0k}
    Ric00: float
    Ric0i: np.ndarray
    Ricij: np.ndarray
    S: float

    def max_norm(self) -> float:
        vals = [self.Rbar, self.A, self.B, self.R_i0k, self.Ric0i, self.Ricij]
        norms = [np.max(np.abs(v)) for v in vals if v.size] + [abs(self.Ric00), abs(self.S)]
        return float(max(norms))


@dataclass
class DerivPack:
    """The five independent slices of nabla R, plus the leaf gradient of Rbar."""

    Atil: np.ndarray
    Ahat: np.ndarray
    Btil: np.ndarray
    Bhat: np.ndarray
    Rtil: np.ndarray
    gradRbar: np.ndarray

    def blocks(self) -> dict[str, np.ndarray]:
        return {
            "Atil": self.Atil, "Ahat": self.Ahat, "Btil": self.Btil,
            "Bhat": self.Bhat, "Rtil": self.Rtil, "gradRbar": self.gradRbar,
        }

    def max_norm(self) -> float:
        norms = [np.max(np.abs(v)) for v in self.blocks().values() if v.size]
        return float(max(norms)) if norms else 0.0


SECOND_DERIV_BLOCKS = (
    "ll_rbar", "0l_rbar", "l0_rbar", "00_rbar",
    "ll_b", "0l_b", "l0_b", "00_b",
    "ll_a", "0l_a", "l0_a", "00_a",
)


@dataclass
class SecondDerivPack:
    """The twelve frame blocks of nabla nabla R.

    Keys read <outer><inner>_<slice>: outer/inner derivative type 'l'
    (leaf) or '0' (along E_0), slice one of rbar, b (theta^1 of R on leaf
    arguments) or a (theta^1 of R(E_0, .)).  New derivative slots are
    appended after the slice's own slots, inner first.
    """

    blocks: dict[str, np.ndarray] = field(default_factory=dict)

    def max_norm(self) -> float:
        norms = [np.max(np.abs(v)) for v in self.blocks.values() if v.size]
        return float(max(norms)) if norms else 0.0

    def norms(self) -> dict[str, float]:
        return {
            k: (float(np.max(np.abs(v))) if v.size else 0.0)
            for k, v in self.blocks.items()
        }


@dataclass
class ChartCurvature:
    """All jets and value packs of one (spec, point) evaluation."""

    cj: ChartJets
    h: Jet
    t: Jet
    tup: Jet
    hup: Jet
    gamma: Jet
    Rbar_up: Jet
    A: Jet
    B: Jet
    curvature: CurvaturePack
    first: DerivPack
    second: SecondDerivPack | None = None
    Atil: Jet | None = None
    Ahat: Jet | None = None
    Btil: Jet | None = None
    Bhat: Jet | None = None
    Rtil: Jet | None = None
    gradRbar: Jet | None = None

    @property
    def spec(self) -> MetricSpec:
        return self.cj.spec

    @property
    def point(self) -> ChartPoint:
        return self.cj.point


def _zero_packs(m: int) -> tuple[CurvaturePack, DerivPack, SecondDerivPack]:
    z = np.zeros
    curv = CurvaturePack(z((m,) * 4), z((m,) * 4), z((m, m)), z((m,) * 3),
                         z((m,) * 3), 0.0, z(m), z((m, m)), 0.0)
    first = DerivPack(z((m, m)), z((m,) * 3), z((m,) * 3), z((m,) * 4),
                      z((m,) * 4), z((m,) * 5))
    shapes = {"rbar": 4, "b": 3, "a": 2}
    blocks = {}
    for name in SECOND_DERIV_BLOCKS:
        extra = (name[0] == "l") + (name[1] == "l")
        blocks[name] = z((m,) * (shapes[name.split("_")[1]] + extra))
    return curv, first, SecondDerivPack(blocks)


def curvature_at(spec: MetricSpec, p: ChartPoint, order: int = 5,
                 depth: int = 2) -> ChartCurvature:
    """Compute curvature, nabla R and (depth 2) nabla nabla R blocks at p."""
    if depth not in (0, 1, 2):
        raise ValueError("depth must be 0, 1 or 2")
    if order < depth + 2:
        raise ValueError(f"jet order {order} too small for depth {depth}")
    cj = eval_metric(spec, p, order)
    m = cj.m

    if m == 0:
        # Two-dimensional Brinkmann charts are flat planes: every pack is empty.
        curv, first, second = _zero_packs(0)
        zj = jets.zeros((0,), cj.num_vars, order - 1)
        return ChartCurvature(cj, zj, zj, zj, zj, zj, zj, zj, zj, curv, first,
                              second if depth == 2 else None)

    h, t = compute_h_t(cj)
    gamma = christoffel_bar(cj)
    ginv = cj.ginv
    tup = jet_einsum("ir,rj->ij", ginv, t)        # t^i_j
    hup = jet_einsum("ij,j->i", ginv, h)          # h^i

    # Leaf curvature from the connection coefficients:
    # Rbar^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{kr}G^r_{lj} - G^i_{lr}G^r_{kj}
    dgam = [gamma.diff(1 + k) for k in range(m)]
    dgam_j = Jet(dgam[0].ctx, np.stack([d.data for d in dgam], axis=-2))
    # dgam_j[i, a, b, k] = Gamma^i_{ab,k}
    dterm = Jet(dgam_j.ctx,
                np.einsum("iljkc->ijklc", dgam_j.data)
                - np.einsum("ikjlc->ijklc", dgam_j.data))
    gg = jet_einsum("ikr,rlj->ijkl", gamma, gamma)
    ggT = Jet(gg.ctx, np.swapaxes(gg.data, 2, 3))
    Rbar_up = dterm + gg - ggT
    Rbar_low = jet_einsum("ir,rjkl->ijkl", cj.g, Rbar_up)
    Ricbar = _jtrace(Rbar_up, 0, 2)
    Sbar = jet_einsum("ij,ij->", ginv, Ricbar)

    # Curvature slices: A_ij = -(grad_j h_i + tdot_ij + t^k_i t_kj), B = skew grad t.
    grad_h = leaf_grad(h, 0, gamma)
    tt = jet_einsum("ki,kj->ij", tup, t)
    A = -(grad_h + t.du() + tt)
    grad_t = leaf_grad(t, 0, gamma)
    B = Jet(grad_t.ctx, grad_t.data - np.swapaxes(grad_t.data, 1, 2))
    grad_tup = leaf_grad(tup, 1, gamma)
    R_i0k = grad_tup + gamma.du()

    # Ricci pieces; the full scalar curvature equals the leaf scalar.
    grad_hup = leaf_grad(hup, 1, gamma)
    Ric00 = _jtrace(grad_hup, 0, 1) + jet_einsum("ij,ji->", ginv, t.du()) \
        + jet_einsum("ki,ki->", jet_einsum("jr,ir->ij", ginv, tup), t)
    tr_tup = _jtrace(tup, 0, 1)
    Ric0i = leaf_grad(tr_tup, 0, gamma) - _jtrace(grad_tup, 0, 2)

    curvature = CurvaturePack(
        Rbar=Rbar_up.value().reshape((m,) * 4),
        Rbar_low=Rbar_low.value().reshape((m,) * 4),
        A=A.value().reshape((m, m)),
        B=B.value().reshape((m,) * 3),
        R_i0k=R_i0k.value().reshape((m,) * 3),
        Ric00=float(Ric00.value()),
        Ric0i=np.asarray(Ric0i.value()).reshape(m),
        Ricij=Ricbar.value().reshape((m, m)),
        S=float(Sbar.value()),
    )

    cc = ChartCurvature(cj, h, t, tup, hup, gamma, Rbar_up, A, B,
                        curvature, DerivPack(*(np.zeros(0),) * 6))
    if depth == 0:
        return cc

    # First derivatives of the curvature.
    Bsym = Jet(B.ctx, _sym12(B.data))  # B_(ij)k
    cc.Atil = d0_op(A, 0, tup) + 2.0 * jet_einsum("k,ijk->ij", hup, Bsym)
    cc.Ahat = leaf_grad(A, 0, gamma) - 2.0 * jet_einsum("ks,ijk->ijs", tup, Bsym)
    cc.Btil = d0_op(B, 0, tup) + jet_einsum("r,rijk->ijk", h, Rbar_up)
    cc.Bhat = leaf_grad(B, 0, gamma) - jet_einsum("rs,rijk->ijks", t, Rbar_up)
    cc.Rtil = d0_op(Rbar_up, 1, tup)
    cc.gradRbar = leaf_grad(Rbar_up, 1, gamma)

    cc.first = DerivPack(
        Atil=cc.Atil.value().reshape((m, m)),
        Ahat=cc.Ahat.value().reshape((m,) * 3),
        Btil=cc.Btil.value().reshape((m,) * 3),
        Bhat=cc.Bhat.value().reshape((m,) * 4),
        Rtil=cc.Rtil.value().reshape((m,) * 4),
        gradRbar=cc.gradRbar.value().reshape((m,) * 5),
    )

    if depth == 2:
        cc.second = _second_derivatives(cc)
    return cc


def _second_derivatives(cc: ChartCurvature) -> SecondDerivPack:
    """Assemble the twelve nabla nabla R blocks with their corrections."""
    m = cc.cj.m
    gamma, tup, hup = cc.gamma, cc.tup, cc.hup
    t_val = cc.t.value().reshape((m, m))
    tup_val = tup.value().reshape((m, m))
    h_val = cc.h.value().reshape(m)
    hup_val = hup.value().reshape(m)
    f = cc.first
    Bhat_sym = _sym12(f.Bhat)
    Btil_sym = _sym12(f.Btil)

    blocks: dict[str, np.ndarray] = {}
    blocks["ll_rbar"] = leaf_grad(cc.gradRbar, 1, gamma).value().reshape((m,) * 6)
    blocks["0l_rbar"] = d0_op(cc.gradRbar, 1, tup).value().reshape((m,) * 5)
    blocks["l0_rbar"] = leaf_grad(cc.Rtil, 1, gamma).value().reshape((m,) * 5) \
        + np.einsum("sm,ijkls->ijklm", tup_val, f.gradRbar)
    blocks["00_rbar"] = d0_op(cc.Rtil, 1, tup).value().reshape((m,) * 4) \
        - np.einsum("s,ijkls->ijkl", hup_val, f.gradRbar)

    blocks["ll_b"] = leaf_grad(cc.Bhat, 0, gamma).value().reshape((m,) * 5) \
        - np.einsum("rm,rijks->ijksm", t_val, f.gradRbar)
    blocks["0l_b"] = d0_op(cc.Bhat, 0, tup).value().reshape((m,) * 4) \
        + np.einsum("r,rijks->ijks", h_val, f.gradRbar)
    blocks["l0_b"] = leaf_grad(cc.Btil, 0, gamma).value().reshape((m,) * 4) \
        - np.einsum("rm,rijk->ijkm", t_val, f.Rtil) \
        + np.einsum("sm,ijks->ijkm", tup_val, f.Bhat)
    blocks["00_b"] = d0_op(cc.Btil, 0, tup).value().reshape((m,) * 3) \
        + np.einsum("r,rijk->ijk", h_val, f.Rtil) \
        - np.einsum("s,ijks->ijk", hup_val, f.Bhat)

    blocks["ll_a"] = leaf_grad(cc.Ahat, 0, gamma).value().reshape((m,) * 4) \
        - 2.0 * np.einsum("km,ijks->ijsm", tup_val, Bhat_sym)
    blocks["0l_a"] = d0_op(cc.Ahat, 0, tup).value().reshape((m,) * 3) \
        + 2.0 * np.einsum("k,ijks->ijs", hup_val, Bhat_sym)
    blocks["l0_a"] = leaf_grad(cc.Atil, 0, gamma).value().reshape((m,) * 3) \
        - 2.0 * np.einsum("km,ijk->ijm", tup_val, Btil_sym) \
        + np.einsum("sm,ijs->ijm", tup_val, f.Ahat)
    blocks["00_a"] = d0_op(cc.Atil, 0, tup).value().reshape((m, m)) \
        + 2.0 * np.einsum("k,ijk->ij", hup_val, Btil_sym) \
        - np.einsum("s,ijs->ij", hup_val, f.Ahat)

    return SecondDerivPack(blocks)
