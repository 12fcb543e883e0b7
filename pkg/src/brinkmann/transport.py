"""Geodesics, parallel transport, transverse transport and curvature growth.

All transport equations run on the full coordinate Christoffel symbols of
the assembled n-dimensional metric (one code path, convention-proof); only
the transverse transport along E_0 uses the leaf-level equation, since its
unknown lives on the leaves.

States are (coords, velocity) with coords = (u, v, x^2 .. x^{n-1}).
Conserved quantities along geodesics: g(gamma', gamma') and the pairing
g(K, gamma') with the parallel field K = -d_v, which equals du/dtau.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chart import ChartPoint, MetricSpec
from .oracle import assemble_coordinate_metric, coordinate_curvature

__all__ = [
    "Trajectory",
    "metric_values",
    "christoffel_values",
    "geodesic_integrate",
    "parallel_transport",
    "d0_transport",
    "null_sectional_growth",
    "second_symmetry_transport_check",
    "null_velocity",
]


def _chart_point(spec: MetricSpec, coords: np.ndarray) -> ChartPoint:
    return ChartPoint(float(coords[0]), tuple(float(c) for c in coords[2:]))


def metric_values(spec: MetricSpec, coords: np.ndarray) -> np.ndarray:
    cm = assemble_coordinate_metric(spec, _chart_point(spec, coords), order=0,
                                    with_jet_inverse=False)
    return cm.G.value()


def christoffel_values(spec: MetricSpec, coords: np.ndarray) -> np.ndarray:
    """Gamma^a_{bc} of the full metric at a coordinate point."""
    cm = assemble_coordinate_metric(spec, _chart_point(spec, coords), order=1,
                                    with_jet_inverse=False)
    n = spec.n
    dG = np.zeros((n, n, n))
    ctx = cm.G.ctx
    for mu in range(n):
        if mu == 1:
            continue
        e = [0] * ctx.nvars
        e[mu if mu == 0 else mu - 1] = 1
        dG[:, :, mu] = cm.G.data[:, :, ctx.index(e)]
    sym = np.einsum("rbc->rbc", dG) + np.einsum("rcb->rbc", dG) - np.einsum("bcr->rbc", dG)
    return 0.5 * np.einsum("ar,rbc->abc", cm.Ginv0, sym)


@dataclass
class Trajectory:
    """Sampled curve with velocities; geodesics carry their initial data."""

    tau: np.ndarray
    coords: np.ndarray       # (k+1, n)
    velocity: np.ndarray     # (k+1, n)
    spec: MetricSpec
    kind: str = "geodesic"
    curve: Callable[[float], tuple[np.ndarray, np.ndarray]] | None = None

    @property
    def steps(self) -> int:
        return len(self.tau) - 1

    def energy(self) -> np.ndarray:
        """g(gamma', gamma') at every node."""
        return np.array([
            float(v @ metric_values(self.spec, c) @ v)
            for c, v in zip(self.coords, self.velocity)
        ])

    def k_pairing(self) -> np.ndarray:
        """g(K, gamma') with K = -d_v; equals the u-velocity."""
        return self.velocity[:, 0].copy()


def _in_box(spec: MetricSpec, coords: np.ndarray, slack: float) -> bool:
    vals = [coords[0]] + list(coords[2:])
    for val, (lo, hi) in zip(vals, spec.box):
        pad = slack * (hi - lo)
        if not (lo - pad <= val <= hi + pad):
            return False
    return True


def geodesic_integrate(spec: MetricSpec, coords0: Sequence[float],
                       velocity0: Sequence[float], tau_span: float, steps: int,
                       enforce_box: bool = False, box_slack: float = 0.5) -> Trajectory:
    """Fixed-step RK4 for the geodesic equation; aborts on box exit if asked."""
    n = spec.n
    y = np.concatenate([np.asarray(coords0, dtype=float), np.asarray(velocity0, dtype=float)])
    if y.shape != (2 * n,):
        raise ValueError("initial state must supply n coordinates and n velocities")
    h = tau_span / steps
    taus = h * np.arange(steps + 1)
    out = np.empty((steps + 1, 2 * n))
    out[0] = y

    def f(_: float, state: np.ndarray) -> np.ndarray:
        gam = christoffel_values(spec, state[:n])
        v = state[n:]
        acc = -np.einsum("abc,b,c->a", gam, v, v)
        return np.concatenate([v, acc])

    for k in range(steps):
        k1 = f(0, y)
        k2 = f(0, y + 0.5 * h * k1)
        k3 = f(0, y + 0.5 * h * k2)
        k4 = f(0, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise RuntimeError(f"geodesic integration blew up at step {k + 1}")
        if enforce_box and not _in_box(spec, y[:n], box_slack):
            raise RuntimeError(
                f"geodesic left the admissible box at tau = {taus[k + 1]:.4g}")
        out[k + 1] = y
    return Trajectory(taus, out[:, :n], out[:, n:], spec)


def parallel_transport(spec: MetricSpec, traj: Trajectory,
                       vectors0: np.ndarray) -> np.ndarray:
    """Transport vectors along the trajectory; returns (k+1, nvec, n).

    Geodesic trajectories are re-integrated jointly from their stored
    initial data so the transport sees exact intermediate states; analytic
    curves use their callable.
    """
    n = spec.n
    V = np.atleast_2d(np.asarray(vectors0, dtype=float))
    nvec = V.shape[0]
    steps = traj.steps
    out = np.empty((steps + 1, nvec, n))
    out[0] = V
    h = float(traj.tau[1] - traj.tau[0]) if steps else 0.0

    if traj.kind == "geodesic":
        y = np.concatenate([traj.coords[0], traj.velocity[0], V.ravel()])

        def f(_: float, state: np.ndarray) -> np.ndarray:
            gam = christoffel_values(spec, state[:n])
            v = state[n:2 * n]
            acc = -np.einsum("abc,b,c->a", gam, v, v)
            W = state[2 * n:].reshape(nvec, n)
            Wdot = -np.einsum("abc,kb,c->ka", gam, W, v)
            return np.concatenate([v, acc, Wdot.ravel()])

        for k in range(steps):
            k1 = f(0, y)
            k2 = f(0, y + 0.5 * h * k1)
            k3 = f(0, y + 0.5 * h * k2)
            k4 = f(0, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            out[k + 1] = y[2 * n:].reshape(nvec, n)
        return out

    if traj.curve is None:
        raise ValueError("non-geodesic transport needs the trajectory's curve callable")

    W = V.copy()
    for k in range(steps):
        def f(tau: float, Wc: np.ndarray) -> np.ndarray:
            c, v = traj.curve(tau)
            gam = christoffel_values(spec, c)
            return -np.einsum("abc,kb,c->ka", gam, Wc, v)

        t0 = float(traj.tau[k])
        k1 = f(t0, W)
        k2 = f(t0 + 0.5 * h, W + 0.5 * h * k1)
        k3 = f(t0 + 0.5 * h, W + 0.5 * h * k2)
        k4 = f(t0 + h, W + h * k3)
        W = W + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = W
    return out


def d0_transport(spec: MetricSpec, p: ChartPoint, vectors0: np.ndarray,
                 u_span: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Transport leaf vectors along the E_0 integral curve through p.

    The integral curve keeps x fixed while u advances, so the transported
    components satisfy dX^i/du = t^i_k X^k.  Returns (u values, X values).
    """
    from .chart import compute_h_t, eval_metric

    m = spec.m
    V = np.atleast_2d(np.asarray(vectors0, dtype=float))
    h = u_span / steps
    us = p.u + h * np.arange(steps + 1)
    out = np.empty((steps + 1, V.shape[0], m))
    out[0] = V

    def tup_at(u: float) -> np.ndarray:
        cj = eval_metric(spec, ChartPoint(u, p.x), order=1)
        _, t = compute_h_t(cj)
        return (cj.ginv0 @ t.value().reshape(m, m)) if m else np.zeros((0, 0))

    X = V.copy()
    for k in range(steps):
        def f(u: float, Xc: np.ndarray) -> np.ndarray:
            return Xc @ tup_at(u).T

        u0 = float(us[k])
        k1 = f(u0, X)
        k2 = f(u0 + 0.5 * h, X + 0.5 * h * k1)
        k3 = f(u0 + 0.5 * h, X + 0.5 * h * k2)
        k4 = f(u0 + h, X + h * k3)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = X
    return us, out


def null_velocity(spec: MetricSpec, p: ChartPoint, leaf_part: np.ndarray | None = None) -> np.ndarray:
    """An exactly lightlike velocity E_0 + a^i E_i + c E_1 at p.

    The E_1 coefficient solves the null condition in closed form from the
    frame inner products: c = g_ij a^i a^j / 2.
    """
    from .chart import eval_metric, frame_components

    m = spec.m
    a = np.zeros(m) if leaf_part is None else np.asarray(leaf_part, dtype=float)
    cj = eval_metric(spec, p, order=0)
    fr = frame_components(cj)
    c = 0.5 * float(a @ fr.g_leaf @ a)
    vec = fr.e[0] + c * fr.e[1]
    for i in range(m):
        vec = vec + a[i] * fr.e[2 + i]
    return vec


def null_sectional_growth(spec: MetricSpec, traj: Trajectory,
                          x_vec: np.ndarray) -> dict[str, np.ndarray | float]:
    """Null sectional curvature R(V,X,V,X)/g(X,X) along a lightlike geodesic.

    X is parallel-transported from ``x_vec``; returns the sampled values,
    the first finite-difference derivative and its constancy residual (the
    maximum absolute second difference of the samples).
    """
    X = parallel_transport(spec, traj, np.asarray(x_vec, dtype=float)[None, :])[:, 0, :]
    vals = np.empty(len(traj.tau))
    for k, (c, v) in enumerate(zip(traj.coords, traj.velocity)):
        cm = assemble_coordinate_metric(spec, _chart_point(spec, c), order=2)
        cc = coordinate_curvature(cm, depth=0)
        G = cm.G.value()
        Rlow = np.einsum("ae,ebcd->abcd", G, cc.R)
        num = np.einsum("abcd,a,b,c,d->", Rlow, v, X[k], v, X[k])
        den = float(X[k] @ G @ X[k])
        if den <= 1e-10:
            raise ValueError("degenerate plane: g(X, X) is not positive")
        vals[k] = num / den
    h = float(traj.tau[1] - traj.tau[0])
    first = np.diff(vals) / h
    second = np.abs(np.diff(vals, n=2))
    return {
        "tau": traj.tau,
        "K": vals,
        "dK": first,
        "max_second_difference": float(second.max()) if second.size else 0.0,
        "dK_spread": float(first.max() - first.min()) if first.size else 0.0,
    }


def second_symmetry_transport_check(spec: MetricSpec, trials: int = 3,
                                    rng_seed: int = 0, tol: float = 1e-6,
                                    steps: int = 160, span: float = 1.0) -> tuple[bool, float]:
    """Transport-level test: (nabla_V R)(X,Y)Z has constant components in a
    parallelly transported basis along arbitrary curves iff nabla nabla R = 0.

    Uses random polynomial (non-geodesic) curves inside the box.  Returns
    (passed, worst residual).
    """
    rng = np.random.default_rng(rng_seed)
    n = spec.n
    worst = 0.0
    for _ in range(trials):
        mid = np.array([0.5 * (lo + hi) for lo, hi in spec.box])
        center = np.concatenate([[mid[0], 0.0], mid[1:]])
        amp = 0.25 * np.array([spec.box[0][1] - spec.box[0][0], 1.0]
                              + [hi - lo for lo, hi in spec.box[1:]])
        c1 = rng.normal(scale=0.5, size=n) * amp
        c2 = rng.normal(scale=0.25, size=n) * amp

        def curve(tau: float, c1=c1, c2=c2):
            s = tau / span
            return center + c1 * s + c2 * s * s, (c1 + 2.0 * c2 * s) / span

        taus = np.linspace(0.0, span, steps + 1)
        traj = Trajectory(taus, np.array([curve(t)[0] for t in taus]),
                          np.array([curve(t)[1] for t in taus]), spec,
                          kind="curve", curve=curve)
        basis0 = np.eye(n)
        extra0 = rng.normal(size=(4, n))
        moved = parallel_transport(spec, traj, np.vstack([basis0, extra0]))
        scale = 0.0
        comps = []
        for k in (0, steps // 2, steps):
            c = traj.coords[k]
            v = traj.velocity[k]
            cm = assemble_coordinate_metric(spec, _chart_point(spec, c), order=3)
            cc = coordinate_curvature(cm, depth=1)
            V, X, Y, Z = moved[k, n], moved[k, n + 1], moved[k, n + 2], moved[k, n + 3]
            W = np.einsum("abcdm,b,c,d,m->a", cc.dR, Z, X, Y, V)
            comp = np.linalg.solve(moved[k, :n].T, W)
            comps.append(comp)
            scale = max(scale, float(np.max(np.abs(cc.dR))))
        comps = np.array(comps)
        worst = max(worst, float(np.max(np.abs(comps - comps[0]))) / (1.0 + scale))
    return worst < tol, worst