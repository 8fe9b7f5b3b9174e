"""Monte Carlo designs with counterfactual oracles.

Four generators: a homogeneous three-subpopulation design, a heterogeneous
variant (subpopulation b doubles the effect, c is immune), an endogenous
variant appending consequence columns increasingly correlated with the
outcome, and a hypercube design sampling factorial edges directly. Every
population carries both potential outcomes per individual, so estimator
bias is computable exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import Column, Dataset, infer_kind

DGP_KINDS = ("basic", "heterogeneous", "endogenous", "factorial")
SUBPOP_SHARES = {"a": 0.6, "b": 0.3, "c": 0.1}
SUBPOP_INTERCEPTS = {"a": 0.0, "b": 0.25, "c": 0.5}
EFFECT_SD = 0.5
EFFECT_MEANS = {
    "basic": {"a": 0.5, "b": 0.5, "c": 0.5},
    "heterogeneous": {"a": 0.5, "b": 1.0, "c": 0.0},
}
CUBE_FACTORS = 10
CUBE_VERTICES = 1 << CUBE_FACTORS
CUBE_EDGES = CUBE_FACTORS * (CUBE_VERTICES // 2)  # 5120

# Fixed order of independent substreams, so dropping a downstream variable
# family leaves the rest of the draw bit-identical.
_STREAMS = ("propensity", "effect", "baseline", "treat", "consequence", "edges")


@dataclass(frozen=True)
class DgpConfig:
    """Design settings; t and gamma apply to the endogenous and factorial kinds."""

    kind: str
    n: int = 1000
    seed: int = 0
    noise_sd: float = 0.25
    t: int = 10
    gamma: int = 512
    common_propensity: Optional[float] = None

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ValueError(f"unknown DGP kind {self.kind!r}")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.kind == "endogenous" and self.t < 1:
            raise ValueError("t must be at least 1")
        if self.kind == "factorial" and not 1 <= self.gamma <= CUBE_EDGES:
            raise ValueError(f"gamma must be in [1, {CUBE_EDGES}], got {self.gamma}")
        if self.kind != "factorial" and self.n < 10:
            raise ValueError(f"population size must be at least 10, got {self.n}")


@dataclass(frozen=True)
class SimulatedPopulation:
    """A simulated dataset plus its counterfactual oracle."""

    dataset: Dataset
    subpop: np.ndarray
    propensity: dict[str, float]
    ite_true: np.ndarray
    y_plus: np.ndarray
    y_minus: np.ndarray
    effect_vectors: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.dataset.n


def _rngs(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.Generator(np.random.PCG64(c)) for name, c in zip(_STREAMS, children)}


def _subpop_sizes(n: int) -> dict[str, int]:
    nb = int(round(n * SUBPOP_SHARES["b"]))
    nc = int(round(n * SUBPOP_SHARES["c"]))
    return {"a": n - nb - nc, "b": nb, "c": nc}


def _simulate_abc(cfg: DgpConfig, effect_means: dict[str, float]) -> SimulatedPopulation:
    rngs = _rngs(cfg.seed)
    sizes = _subpop_sizes(cfg.n)
    labels = np.repeat(list(sizes), list(sizes.values()))

    if cfg.common_propensity is not None:
        propensity = {k: float(cfg.common_propensity) for k in sizes}
    else:
        draws = rngs["propensity"].uniform(0.2, 0.5, size=len(sizes))
        propensity = {k: float(p) for k, p in zip(sizes, draws)}

    means = np.array([effect_means[s] for s in labels])
    effects = means + EFFECT_SD * rngs["effect"].standard_normal(cfg.n)
    intercepts = np.array([SUBPOP_INTERCEPTS[s] for s in labels])
    y_minus = intercepts + cfg.noise_sd * rngs["baseline"].standard_normal(cfg.n)
    y_plus = y_minus + effects
    p = np.array([propensity[s] for s in labels])
    treat = (rngs["treat"].uniform(size=cfg.n) < p).astype(np.float64)
    y = np.where(treat > 0, y_plus, y_minus)

    X = np.column_stack(
        [
            (labels == "a").astype(np.float64),
            (labels == "b").astype(np.float64),
            (labels == "c").astype(np.float64),
            treat,
        ]
    )
    names = ("type_a", "type_b", "type_c", "treat")
    # Degenerate draws (e.g. treat all zero at tiny n) fall back to ordinal.
    columns = tuple(Column(nm, infer_kind(X[:, j])) for j, nm in enumerate(names))
    dataset = Dataset(columns=columns, X=X, y=y)
    return SimulatedPopulation(
        dataset=dataset,
        subpop=labels,
        propensity=propensity,
        ite_true=effects,
        y_plus=y_plus,
        y_minus=y_minus,
    )


def simulate_basic(cfg: DgpConfig) -> SimulatedPopulation:
    """Homogeneous effects N(0.5, 0.5^2); subpopulation propensities U[0.2, 0.5]."""
    return _simulate_abc(cfg, EFFECT_MEANS["basic"])


def simulate_heterogeneous(cfg: DgpConfig) -> SimulatedPopulation:
    """Effect means 1.0 for subpopulation b, 0.0 for c, 0.5 for a (sd 0.5)."""
    return _simulate_abc(cfg, EFFECT_MEANS["heterogeneous"])


def simulate_endogenous(cfg: DgpConfig) -> SimulatedPopulation:
    """Heterogeneous design plus t consequence columns correlated with y.

    Column u_t mixes the standardized observed outcome with fresh noise at
    weight rho_t = 1 - 1/t, so expected correlations rise toward 1.
    """
    pop = _simulate_abc(cfg, EFFECT_MEANS["heterogeneous"])
    rng = _rngs(cfg.seed)["consequence"]
    y = pop.dataset.y
    y_std = (y - y.mean()) / y.std()
    cols = []
    for t in range(1, cfg.t + 1):
        rho = 1.0 - 1.0 / t
        cols.append(rho * y_std + np.sqrt(1.0 - rho * rho) * rng.standard_normal(cfg.n))
    X = np.column_stack([pop.dataset.X] + cols)
    columns = pop.dataset.columns + tuple(
        Column(f"u_{t:02d}", "continuous") for t in range(1, cfg.t + 1)
    )
    dataset = Dataset(columns=columns, X=X, y=y)
    return SimulatedPopulation(
        dataset=dataset,
        subpop=pop.subpop,
        propensity=pop.propensity,
        ite_true=pop.ite_true,
        y_plus=pop.y_plus,
        y_minus=pop.y_minus,
    )


def simulate_factorial(cfg: DgpConfig) -> SimulatedPopulation:
    """Sample gamma edges of the 10-cube; individuals are the edge endpoints.

    Outcomes count the +1 factors (unit effect per factor) plus Gaussian
    noise. The counterfactual pair is anchored on the first factor, whose
    individual effect is exactly 1 for everyone.
    """
    rng = _rngs(cfg.seed)["edges"]
    picked = rng.choice(CUBE_EDGES, size=cfg.gamma, replace=False)
    base = picked // CUBE_FACTORS
    axis = picked % CUBE_FACTORS
    # Edge k of the cube joins the k-th vertex with a 0 at `axis` to its
    # partner across that axis; enumerate via the rank of v among vertices
    # with bit(axis) == 0.
    lows = _insert_zero_bit(base, axis)
    highs = lows | (1 << axis)
    vertices = np.unique(np.concatenate([lows, highs]))
    n = vertices.shape[0]
    bits = (vertices[:, None] >> np.arange(CUBE_FACTORS)[None, :]) & 1
    X = np.where(bits > 0, 1.0, -1.0)
    noise = cfg.noise_sd * rng.standard_normal(n)
    y = bits.sum(axis=1).astype(np.float64) + noise
    treated = X[:, 0] > 0
    y_plus = np.where(treated, y, y + 1.0)
    y_minus = y_plus - 1.0
    columns = tuple(
        Column(f"f{t:02d}", infer_kind(X[:, t - 1])) for t in range(1, CUBE_FACTORS + 1)
    )
    dataset = Dataset(columns=columns, X=X, y=y)
    labels = np.array(["all"] * n)
    return SimulatedPopulation(
        dataset=dataset,
        subpop=labels,
        propensity={"all": float(treated.mean())},
        ite_true=np.ones(n),
        y_plus=y_plus,
        y_minus=y_minus,
        effect_vectors=np.ones((n, CUBE_FACTORS)),
    )


def _insert_zero_bit(rank: np.ndarray, axis: np.ndarray) -> np.ndarray:
    low_mask = (1 << axis) - 1
    low = rank & low_mask
    high = (rank >> axis) << (axis + 1)
    return high | low


def simulate(cfg: DgpConfig) -> SimulatedPopulation:
    return {
        "basic": simulate_basic,
        "heterogeneous": simulate_heterogeneous,
        "endogenous": simulate_endogenous,
        "factorial": simulate_factorial,
    }[cfg.kind](cfg)


def oracle_ate(pop: SimulatedPopulation, mask: Optional[np.ndarray] = None) -> float:
    """Mean true individual effect over the mask (whole population if None)."""
    ite = pop.ite_true if mask is None else pop.ite_true[np.asarray(mask)]
    if ite.size == 0:
        raise ValueError("empty mask for oracle ATE")
    return float(ite.mean())


def bias_variance(
    f_i: np.ndarray,
    f_j: np.ndarray,
    x_i: np.ndarray,
    x_j: np.ndarray,
    y_ij: float,
    eps: float,
) -> tuple[float, float]:
    """Heterogeneity-bias and variance terms of the pairwise error split.

    heter = (1/4)|f_i - f_j|^2 cos^2(theta) - y_ij with theta the angle
    between (f_i - f_j) and (x_i - x_j); var = eps^2 / |x_i - x_j|^2.
    """
    d = np.asarray(x_i, dtype=np.float64) - np.asarray(x_j, dtype=np.float64)
    dn = float(np.linalg.norm(d))
    if dn == 0.0:
        raise ValueError("coincident positions: bias split undefined")
    df = np.asarray(f_i, dtype=np.float64) - np.asarray(f_j, dtype=np.float64)
    fn = float(np.linalg.norm(df))
    if fn == 0.0:
        heter = -float(y_ij)
    else:
        cos = float(df @ d) / (fn * dn)
        heter = 0.25 * fn * fn * cos * cos - float(y_ij)
    var = float(eps) ** 2 / (dn * dn)
    return heter, var
