"""Random zero sets: slab/layered randomness, the good-graph builder, the
separated-pair pipeline, duality, scale gluing, and the general-metric sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from ._rng import RandomnessSpec
from .compression import CompressionOutput, universal_compression
from .errors import (
    BadParams,
    BetaTooLarge,
    ConclusionViolated,
    EmptySupport,
    IterationCapExceeded,
    MinDistanceViolated,
    ModerationViolated,
    PairTooClose,
    QuasisymmetryViolated,
    RejectionCapExceeded,
    TauExceedsDiameter,
)
from .graphs import PairWeighting, ThresholdedGraph, extract_unsaturated_pair
from .metric import EuclideanMap, FiniteMetricSpace, PointMeasure, QuasiParams, quasisym_check

LAYER_ALPHA = math.log(2.0)  # layer-width constant used by the per-component sampler
_SLACK = 1e-9

# -------------------------------------------------------------------------
# slabs and the tent function
# -------------------------------------------------------------------------


@dataclass(frozen=True)
class SlabMembership:
    in_L: bool
    in_R: bool


def slab_membership(a: float, theta: float) -> SlabMembership:
    """Shifted quarter-period slabs: L collects fractional parts in [0, 1/4),
    R in [1/2, 3/4); a point of L and a point of R always differ by > 1/4."""
    s = (a - theta) % 1.0
    return SlabMembership(in_L=s < 0.25, in_R=0.5 <= s < 0.75)


def tent(s: float) -> float:
    """Joint shift probability of landing in (L, R) at separation s."""
    return max(0.25 - abs(0.5 - (s - math.floor(s))), 0.0)


# -------------------------------------------------------------------------
# level functions and layered pair sets
# -------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelFunction:
    """A positive (possibly +inf) level per point."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v <= 0):
            raise BadParams("level function must be strictly positive")
        object.__setattr__(self, "values", v)


def _layer_index(lam: float, r: float, alpha: float) -> Optional[int]:
    """The unique i with e^{3a(i+r)-2a} <= lam < e^{3a(i+r)}, if any."""
    u = math.log(lam) / (3.0 * alpha)
    i = math.floor(u - r + 2.0 / 3.0)
    return i if u - r < i else None


def layered_pair_sets(
    points: Sequence[int],
    fcoords: np.ndarray,
    lam: np.ndarray,
    alpha: float,
    C: float,
    v: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[set, set]:
    """One draw of the layered (E, F) pair for a supplied direction v.

    Points whose level lands in a layer fall into shifted slabs of the
    projection at the layer's scale; the infinite-level points join E or F
    wholesale according to a three-way branch with masses (2/3, 1/6, 1/6).
    """
    if alpha <= 0 or C <= 0:
        raise BadParams("alpha and C must be positive")
    r = float(rng.random())
    finite = [x for x in points if math.isfinite(lam[x])]
    infinite = [x for x in points if not math.isfinite(lam[x])]
    layer_of = {}
    for x in finite:
        i = _layer_index(float(lam[x]), r, alpha)
        if i is not None:
            layer_of[x] = i
    thetas = {}
    for i in sorted(set(layer_of.values())):
        thetas[i] = float(rng.random())
    u = float(rng.random())
    k = 1 if u < 2.0 / 3.0 else (2 if u < 5.0 / 6.0 else 3)

    proj = fcoords @ v
    E, F = set(), set()
    for x, i in sorted(layer_of.items()):
        scale = 4.0 * C * math.exp(3.0 * alpha * (i + r))
        mem = slab_membership(proj[x] / scale, thetas[i])
        if mem.in_L:
            E.add(x)
        elif mem.in_R:
            F.add(x)
    if k == 2:
        E.update(infinite)
    elif k == 3:
        F.update(infinite)
    return E, F


# -------------------------------------------------------------------------
# per-component separated sampler
# -------------------------------------------------------------------------


class ComponentSeparatedSampler:
    """Draws (A, B) with guaranteed projection separation along graph edges.

    The level function must vary moderately along edges, and weighted
    same-component pairs must be image-separated at the level scale; both are
    checked at construction.  Every draw deterministically satisfies
    |<v, f(x) - f(y)>| > C max(level(x), level(y)) on crossing edges.
    """

    def __init__(
        self,
        graph: ThresholdedGraph,
        f: EuclideanMap,
        level: LevelFunction,
        omega: Optional[PairWeighting],
        C: float,
        randomness: RandomnessSpec,
        alpha: float = LAYER_ALPHA,
    ):
        if f.n != graph.n:
            raise BadParams("map size does not match the graph")
        lam = level.values
        for i, j in graph.loopless_edges():
            if lam[j] > 2.0 * lam[i] * (1 + _SLACK) or lam[i] > 2.0 * lam[j] * (1 + _SLACK):
                raise ModerationViolated((i, j))
        comp = graph.component_of()
        if omega is not None:
            E = f.image_distances()
            support = np.argwhere(omega.omega > 0)
            for x, y in support:
                if comp[x] == comp[y]:
                    if E[x, y] < min(lam[x], lam[y]) * (1 - _SLACK):
                        raise MinDistanceViolated((int(x), int(y)))
        self.graph = graph
        self.f = f
        self.level = level
        self.C = float(C)
        self.alpha = float(alpha)
        self.randomness = randomness
        self._components = graph.components()

    def draw(self, index: int, v: Optional[np.ndarray] = None) -> Tuple[frozenset, frozenset]:
        if v is None:
            v = self.randomness.stream("direction", index).standard_normal(self.f.dim)
        A, B = set(), set()
        for ci, compi in enumerate(self._components):
            rng = self.randomness.stream("component", index, ci)
            E, F = layered_pair_sets(
                compi, self.f.coords, self.level.values, self.alpha, self.C, v, rng
            )
            A.update(E)
            B.update(F)
        self._assert_separation(v, A, B)
        return frozenset(A), frozenset(B)

    def _assert_separation(self, v, A, B):
        lam = self.level.values
        proj = self.f.coords @ v
        for i, j in self.graph.edges:
            cross = (i in A and j in B) or (i in B and j in A)
            if cross:
                gap = abs(proj[i] - proj[j])
                need = self.C * max(lam[i], lam[j])
                if not gap > need:
                    raise ConclusionViolated(
                        f"edge ({i},{j}) violates directional separation: {gap} <= {need}"
                    )


def component_separated_sampler(
    graph: ThresholdedGraph,
    f: EuclideanMap,
    level: LevelFunction,
    omega: Optional[PairWeighting],
    C: float,
    randomness: RandomnessSpec,
) -> ComponentSeparatedSampler:
    return ComponentSeparatedSampler(graph, f, level, omega, C, randomness)


# -------------------------------------------------------------------------
# good graphs
# -------------------------------------------------------------------------


@dataclass(frozen=True)
class GoodGraph:
    compression: CompressionOutput
    level: LevelFunction
    beta: float
    r: float
    C: float
    tau: float

    @property
    def graph(self) -> ThresholdedGraph:
        return self.compression.graph

    @property
    def f(self) -> EuclideanMap:
        return self.compression.f

    @property
    def rho(self) -> np.ndarray:
        return self.compression.rho


def beta_cap(params: QuasiParams, r: float) -> float:
    """Largest admissible beta for the stated comparison parameters."""
    return params.s ** (3.0 * math.log(8.0 * r) / params.eps)


def build_level_function(
    space: FiniteMetricSpace,
    graph: ThresholdedGraph,
    f: EuclideanMap,
    C: float,
    tau: float,
) -> LevelFunction:
    """Level(x) = C min over tau-separated same-component pairs (w, z) of
    max(|f(x)-f(w)|, |f(x)-f(z)|); +inf on components of diameter < tau."""
    lam = np.full(space.n, np.inf)
    E = f.image_distances()
    for comp in graph.components():
        comp = np.asarray(comp)
        sub = space.dist[np.ix_(comp, comp)]
        pairs = [
            (comp[a], comp[b])
            for a in range(len(comp))
            for b in range(a + 1, len(comp))
            if sub[a, b] >= tau
        ]
        if not pairs:
            continue
        for x in comp:
            lam[x] = C * min(max(E[x, w], E[x, z]) for w, z in pairs)
    return LevelFunction(lam)


def good_graph_builder(
    space: FiniteMetricSpace,
    measure: PointMeasure,
    phi: EuclideanMap,
    params: QuasiParams,
    tau: float,
    C: float,
    r: float,
    beta: float,
    zeta: float = 2.0,
    enforce_beta_bound: bool = True,
) -> GoodGraph:
    """Compression at scale (r*C, beta*tau) plus the level function, with the
    promised edge and same-component conclusions asserted.

    A failed assertion raises ConclusionViolated: the conclusions are
    guaranteed by construction, so a violation is an implementation bug.
    """
    if not (0 < params.s <= 0.5 and 0 < params.eps <= 0.5):
        raise BadParams("require 0 < s, eps <= 1/2")
    if r < 1:
        raise BadParams("r must be >= 1")
    ok, witness = quasisym_check(space, phi, params)
    if not ok:
        raise QuasisymmetryViolated(witness)
    if enforce_beta_bound and beta > beta_cap(params, r) * (1 + _SLACK):
        raise BetaTooLarge(
            f"beta {beta:g} exceeds the admissible cap {beta_cap(params, r):g}"
        )
    if beta <= 0:
        raise BadParams("beta must be positive")

    comp_out = universal_compression(space, measure, beta * tau, r * C, phi, zeta=zeta)
    level = build_level_function(space, comp_out.graph, comp_out.f, C, tau)
    lam = level.values
    f = comp_out.f
    E = f.image_distances()

    for i, j in comp_out.graph.loopless_edges():
        if lam[j] > 2.0 * lam[i] * (1 + _SLACK) or lam[i] > 2.0 * lam[j] * (1 + _SLACK):
            raise ConclusionViolated(f"level function more than doubles on edge ({i},{j})")
    for e in comp_out.graph.edges:
        if 4.0 * comp_out.graph.sigma[e] > min(lam[e[0]], lam[e[1]]) * (1 + _SLACK):
            raise ConclusionViolated(f"4 sigma exceeds the level function on edge {e}")
    comp = comp_out.component_of()
    for x in range(space.n):
        for y in range(x + 1, space.n):
            if comp[x] == comp[y] and space.dist[x, y] >= tau:
                if C * E[x, y] < max(lam[x], lam[y]) * (1 - _SLACK):
                    raise ConclusionViolated(
                        f"same-component pair ({x},{y}) under-separated in the image"
                    )
    return GoodGraph(
        compression=comp_out, level=level, beta=beta, r=r, C=C, tau=tau
    )


# -------------------------------------------------------------------------
# the separated-pair pipeline
# -------------------------------------------------------------------------


class SeparatedPairSampler:
    """Draws nonempty (A*, B*) with metric separation beta*tau/min(rho).

    Each draw samples a Gaussian direction, runs the per-component sampler on
    the C-rescaled realization, removes a fractional-matching-sized set via
    the unsaturated-pair extractor, and falls back to a fixed far pair when a
    side comes out empty.  The separation guarantee is asserted on every draw.
    """

    def __init__(
        self,
        good: GoodGraph,
        omega: PairWeighting,
        C: float,
        randomness: RandomnessSpec,
        alpha: float,
    ):
        self.good = good
        self.omega = omega
        self.C = float(C)
        self.alpha = float(alpha)
        self.randomness = randomness
        self.space = good.graph.space
        scaled = EuclideanMap(good.f.coords * C)
        self._inner = ComponentSeparatedSampler(
            good.graph, scaled, good.level, _rescaled_weighting_check(omega), C,
            randomness.child("inner"),
        )
        self._edge_set = set(good.graph.edges)
        self._fallback = self._fixed_far_pair(good.tau)

    def _fixed_far_pair(self, tau: float):
        D = self.space.dist
        for i in range(self.space.n):
            for j in range(i + 1, self.space.n):
                if D[i, j] >= tau:
                    return (i, j)
        raise TauExceedsDiameter("no pair at distance >= tau")

    @property
    def rho(self) -> np.ndarray:
        return self.good.rho

    @property
    def beta(self) -> float:
        return self.good.beta

    @property
    def tau(self) -> float:
        return self.good.tau

    @property
    def psi(self) -> np.ndarray:
        """Far-side guarantee radius per point: beta*tau/rho."""
        return self.beta * self.tau / self.rho

    def draw(self, index: int) -> Tuple[frozenset, frozenset]:
        v = self.randomness.stream("direction", index).standard_normal(self.good.f.dim)
        A, B = self._inner.draw(index, v=v)
        crossing = [
            (i, j)
            for (i, j) in self.good.graph.loopless_edges()
            if (i in A and j in B) or (i in B and j in A)
        ]
        if A and B:
            A0, B0 = extract_unsaturated_pair(A, B, crossing, self.omega)
        else:
            A0, B0 = tuple(A), tuple(B)
        if not A0 or not B0:
            A0, B0 = (self._fallback[0],), (self._fallback[1],)
        Astar, Bstar = frozenset(A0), frozenset(B0)
        self._assert_separation(Astar, Bstar)
        return Astar, Bstar

    def _assert_separation(self, A, B):
        D = self.space.dist
        rho = self.rho
        floor = self.beta * self.tau
        for x in A:
            for y in B:
                if not D[x, y] > floor / min(rho[x], rho[y]):
                    raise ConclusionViolated(
                        f"pair ({x},{y}) inside the separation radius"
                    )


def _rescaled_weighting_check(omega: PairWeighting) -> PairWeighting:
    # The inner sampler checks the image-separation precondition against the
    # C-rescaled map, which matches the level function built at parameter C.
    return omega


def separated_pipeline(
    space: FiniteMetricSpace,
    measure: PointMeasure,
    phi: EuclideanMap,
    params: QuasiParams,
    tau: float,
    C: float,
    alpha_cfg: float,
    omega: PairWeighting,
    randomness: RandomnessSpec,
    zeta: float = 2.0,
    good: Optional[GoodGraph] = None,
) -> SeparatedPairSampler:
    """Assemble the separated-pair sampler: r = zeta*alpha, beta = s^(alpha/eps).

    A precomputed GoodGraph may be supplied to amortize construction across
    many weightings (the graph does not depend on omega).
    """
    if C < 1:
        raise BadParams("C must be >= 1")
    if tau > space.diam:
        raise TauExceedsDiameter(f"tau {tau:g} exceeds the diameter {space.diam:g}")
    r = zeta * alpha_cfg
    beta = params.s ** (alpha_cfg / params.eps)
    if good is None:
        good = good_graph_builder(
            space, measure, phi, params, tau, C, r, beta,
            zeta=zeta, enforce_beta_bound=False,
        )
    return SeparatedPairSampler(good, omega, C, randomness, alpha_cfg)


# -------------------------------------------------------------------------
# zero-set distributions
# -------------------------------------------------------------------------


class ZeroSetDistribution:
    """A seeded sampler of nonempty point subsets."""

    def __init__(self, construction: str, params: dict, draw_fn: Callable[[int], frozenset]):
        self.construction = construction
        self.params = dict(params)
        self._draw_fn = draw_fn

    def draw(self, index: int) -> frozenset:
        Z = self._draw_fn(index)
        if not Z:
            raise ConclusionViolated("a zero-set draw came out empty")
        return Z

    def to_json(self) -> dict:
        return {"construction": self.construction, "params": self.params}


def duality_solve(
    space: FiniteMetricSpace,
    tau: float,
    pair_sampler_factory: Callable[[PairWeighting], SeparatedPairSampler],
    mode: str = "mw",
    rounds: int = 32,
    randomness: RandomnessSpec = RandomnessSpec(0),
    draws_per_round: int = 8,
) -> ZeroSetDistribution:
    """Turn per-weighting separated pairs into a single zero-set distribution.

    Each round adds ``draws_per_round`` seeded draws for the current
    weighting to a growing column pool and plays the pool column that best
    responds to the multiplicative-weights distribution over far pairs; the
    recorded best responses (with repetition) form the final mixture, and a
    fair coin turns a mixture column into the A-side or the B-side.
    ``exact_lp`` instead solves the zero-sum game over the pool by LP.
    """
    if mode not in ("mw", "exact_lp"):
        raise BadParams("mode must be 'mw' or 'exact_lp'")
    D = space.dist
    n = space.n
    support = (D >= tau) & ~np.eye(n, dtype=bool)
    pairs = [(int(i), int(j)) for i, j in np.argwhere(support)]
    if not pairs:
        raise EmptySupport(f"no pair at distance >= tau = {tau:g}")
    lr = math.sqrt(math.log(len(pairs)) / max(rounds, 1))

    weights = np.zeros((n, n))
    weights[support] = 1.0
    pool_columns = []
    pool_cov = []
    seen = set()
    counts = []
    psi = None
    for t in range(rounds):
        W = (weights + weights.T) / 2.0
        W = W / W.sum()
        omega = PairWeighting(W, tau, space)
        sampler = pair_sampler_factory(omega)
        if psi is None:
            psi = sampler.psi
        for d in range(draws_per_round):
            A, B = sampler.draw(t * draws_per_round + d)
            key = (A, B)
            if key not in seen:
                seen.add(key)
                pool_columns.append((A, B))
                pool_cov.append(_column_coverage(D, pairs, A, B, psi))
                counts.append(0)
        pair_w = np.array([weights[i, j] for i, j in pairs])
        pair_w = pair_w / pair_w.sum()
        scores = np.array([float(pair_w @ c) for c in pool_cov])
        best = int(np.argmax(scores))
        counts[best] += 1
        cov = pool_cov[best]
        for idx, (i, j) in enumerate(pairs):
            weights[i, j] *= math.exp(-lr * cov[idx])

    cov_matrix = np.array(pool_cov)  # pool x pairs
    columns = pool_columns
    if mode == "mw":
        mu = np.asarray(counts, dtype=float)
        mu = mu / mu.sum()
    else:
        mu = _solve_column_game(cov_matrix)
    value = float(np.min(mu @ cov_matrix))

    def draw_fn(index: int) -> frozenset:
        rng = randomness.stream("zeroset", index)
        c = int(rng.choice(len(columns), p=mu))
        A, B = columns[c]
        return A if rng.integers(2) == 0 else B

    dist = ZeroSetDistribution(
        "duality",
        {
            "tau": tau,
            "mode": mode,
            "rounds": rounds,
            "value": value,
            "n_columns": len(columns),
        },
        draw_fn,
    )
    dist.psi = psi
    dist.value = value
    dist.columns = columns
    dist.coverage = cov_matrix
    dist.mixture = mu
    return dist


def _column_coverage(D, pairs, A, B, psi):
    """Probability (over the fair coin) that the column covers each far pair."""
    cov = np.zeros(len(pairs))
    Aidx = np.asarray(sorted(A), dtype=int)
    Bidx = np.asarray(sorted(B), dtype=int)
    for idx, (x, y) in enumerate(pairs):
        c = 0.0
        if x in A and float(D[y, Aidx].min()) >= psi[y]:
            c += 0.5
        if x in B and float(D[y, Bidx].min()) >= psi[y]:
            c += 0.5
        cov[idx] = c
    return cov


def _solve_column_game(cov_matrix: np.ndarray) -> np.ndarray:
    """LP for the optimal mixture over recorded columns (maximin coverage)."""
    n_cols, n_pairs = cov_matrix.shape
    # variables: mu_1..mu_c, t;  maximize t  s.t.  cov^T mu >= t, sum mu = 1
    c = np.zeros(n_cols + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-cov_matrix.T, np.ones((n_pairs, 1))])
    b_ub = np.zeros(n_pairs)
    A_eq = np.zeros((1, n_cols + 1))
    A_eq[0, :n_cols] = 1.0
    b_eq = np.array([1.0])
    bounds = [(0, None)] * n_cols + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"column game LP failed: {res.message}")
    mu = np.clip(res.x[:n_cols], 0.0, None)
    return mu / mu.sum()


def glue_scales(dists: Sequence[ZeroSetDistribution], randomness: RandomnessSpec) -> ZeroSetDistribution:
    """Mixture with truncated geometric weights 2^-k over the inputs."""
    kmax = len(dists)
    if kmax < 1:
        raise BadParams("need at least one distribution")
    w = np.array([2.0 ** -(k + 1) for k in range(kmax)])
    w = w / w.sum()

    def draw_fn(index: int) -> frozenset:
        rng = randomness.stream("glue", index)
        k = int(rng.choice(kmax, p=w))
        return dists[k].draw(index)

    dist = ZeroSetDistribution(
        "glued", {"kmax": kmax, "weights": w.tolist()}, draw_fn
    )
    dist.weights = w
    return dist


class GeneralZeroSetDistribution(ZeroSetDistribution):
    """Stopping-time zero sets on an arbitrary finite metric space.

    Per draw: a radius uniform on (tau/4, tau/2), i.i.d. measure-distributed
    points until every point of the space has been hit, and independent fair
    bits; the set keeps the points whose first hit carries bit one.
    """

    def __init__(
        self,
        space: FiniteMetricSpace,
        measure: PointMeasure,
        tau: float,
        randomness: RandomnessSpec,
        iteration_cap: int = 10**6,
        rejection_cap: int = 10**3,
    ):
        if tau <= 0:
            raise BadParams("tau must be positive")
        if len(measure.weights) != space.n:
            raise BadParams("measure size does not match the space")
        self.space = space
        self.measure = measure
        self.tau = float(tau)
        self.randomness = randomness
        self.iteration_cap = iteration_cap
        self.rejection_cap = rejection_cap
        self._probs = measure.weights / measure.total
        super().__init__(
            "general", {"tau": tau}, self._draw_conditioned
        )

    def draw_raw(self, index: int, attempt: int = 0) -> frozenset:
        """One unconditioned draw (may be empty)."""
        rng = self.randomness.stream("general", index, attempt)
        R = self.tau / 4.0 + float(rng.random()) * self.tau / 4.0
        D = self.space.dist
        selected = np.zeros(self.space.n, dtype=bool)
        undecided = np.ones(self.space.n, dtype=bool)
        for _t in range(self.iteration_cap):
            z = int(rng.choice(self.space.n, p=self._probs))
            bit = int(rng.integers(2))
            hit = undecided & (D[z] <= R)
            if bit:
                selected |= hit
            undecided &= ~hit
            if not undecided.any():
                return frozenset(int(i) for i in np.flatnonzero(selected))
        raise IterationCapExceeded(
            f"stopping times undetermined after {self.iteration_cap} samples"
        )

    def _draw_conditioned(self, index: int) -> frozenset:
        for attempt in range(self.rejection_cap):
            Z = self.draw_raw(index, attempt)
            if Z:
                return Z
        raise RejectionCapExceeded(
            f"no nonempty zero set in {self.rejection_cap} attempts"
        )


def general_zeroset_sampler(
    space: FiniteMetricSpace,
    measure: PointMeasure,
    tau: float,
    randomness: RandomnessSpec,
    iteration_cap: int = 10**6,
    rejection_cap: int = 10**3,
) -> GeneralZeroSetDistribution:
    return GeneralZeroSetDistribution(
        space, measure, tau, randomness, iteration_cap, rejection_cap
    )


def spreading_estimate(
    dist: ZeroSetDistribution,
    zeta: float,
    tau: float,
    pairs: Iterable[Tuple[int, int]],
    n_samples: int,
    space: FiniteMetricSpace,
) -> list:
    """Per-pair empirical spreading probability with a 95% confidence interval."""
    pairs = [(int(x), int(y)) for x, y in pairs]
    for x, y in pairs:
        if space.dist[x, y] < tau:
            raise PairTooClose(f"pair ({x},{y}) is closer than tau")
    counts = np.zeros(len(pairs))
    for k in range(n_samples):
        Z = dist.draw(k)
        Zidx = np.asarray(sorted(Z), dtype=int)
        for idx, (x, y) in enumerate(pairs):
            if x in Z and float(space.dist[y, Zidx].min()) >= tau / zeta:
                counts[idx] += 1
    out = []
    for idx, (x, y) in enumerate(pairs):
        p = counts[idx] / n_samples
        half = 1.96 * math.sqrt(max(p * (1 - p), 1e-12) / n_samples)
        out.append({"pair": (x, y), "estimate": p, "ci95": (max(0.0, p - half), min(1.0, p + half))})
    return out
