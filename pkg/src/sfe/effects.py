"""Effect extraction from a fitted space: average and individual effects,
column angles, and greedy selection of effective non-redundant factors.

Treated/control splits use the sign of the normalized input value for the
factor (strictly positive is treated), so binary factors split on their
+1/-1 coding and continuous factors split at their midpoint unless a
different threshold is given.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import NormalizedData, denormalize_effect
from .optimizer import EffectSpace

ATE_MODES = ("sqrt", "linear")

# Fixed by the homogeneous-design calibration run (see README): the linear
# coordinate-difference reading recovers the oracle effect without
# systematic bias; the square-root form is kept as an explicit mode.
DEFAULT_ATE_MODE = "linear"

SELECT_POOL_SIZE = 20


@dataclass(frozen=True)
class AteResult:
    factor: str
    ate_normalized: float
    ate_raw: float
    n_treated: int
    n_control: int
    mask: str
    mode: str


def _check_compatible(es: EffectSpace, nd: NormalizedData) -> None:
    if es.positions.shape != nd.Xn.shape:
        raise ValueError(
            f"dimension mismatch: space is {es.positions.shape}, data is {nd.Xn.shape}"
        )


def _split(
    es: EffectSpace,
    nd: NormalizedData,
    factor: str,
    mask: Optional[np.ndarray],
    threshold: float,
) -> tuple[int, np.ndarray, np.ndarray]:
    _check_compatible(es, nd)
    a = es.column_index(factor)
    keep = np.ones(nd.n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if keep.shape[0] != nd.n:
        raise ValueError("mask length must match the number of individuals")
    treated = (nd.Xn[:, a] > threshold) & keep
    control = (nd.Xn[:, a] <= threshold) & keep
    if not treated.any() or not control.any():
        raise ValueError(f"degenerate split: factor {factor!r} has an empty group")
    return a, treated, control


def _transform(diff: float, mode: str) -> float:
    if mode == "sqrt":
        return float(np.sqrt(abs(diff)))
    if mode == "linear":
        return float(diff)
    raise ValueError(f"unknown mode {mode!r}, expected one of {ATE_MODES}")


def ate(
    es: EffectSpace,
    nd: NormalizedData,
    factor: str,
    mask: Optional[np.ndarray] = None,
    mode: str = DEFAULT_ATE_MODE,
    threshold: float = 0.0,
    mask_label: str = "all",
) -> AteResult:
    """Average effect of a factor: its coordinate gap between group means.

    mode="linear" keeps the signed coordinate difference (so group means
    aggregate exactly); mode="sqrt" returns the square root of its absolute
    value. Raw units rescale by the outcome range.
    """
    a, treated, control = _split(es, nd, factor, mask, threshold)
    diff = float(es.positions[treated, a].mean() - es.positions[control, a].mean())
    val = _transform(diff, mode)
    return AteResult(
        factor=factor,
        ate_normalized=val,
        ate_raw=denormalize_effect(val, nd),
        n_treated=int(treated.sum()),
        n_control=int(control.sum()),
        mask=mask_label,
        mode=mode,
    )


def ite(
    es: EffectSpace,
    nd: NormalizedData,
    individual: int,
    factor: str,
    mode: str = DEFAULT_ATE_MODE,
    threshold: float = 0.0,
) -> float:
    """Individual effect: the coordinate gap to the opposite group's mean.

    Oriented as treated-minus-control regardless of the individual's own
    status, so averaging over any group estimates that group's effect. Raw
    outcome units.
    """
    _check_compatible(es, nd)
    a = es.column_index(factor)
    n = nd.n
    if not 0 <= individual < n:
        raise IndexError(f"individual {individual} out of range for {n} rows")
    is_treated = nd.Xn[individual, a] > threshold
    opposite = (nd.Xn[:, a] <= threshold) if is_treated else (nd.Xn[:, a] > threshold)
    if not opposite.any():
        raise ValueError(f"degenerate split: factor {factor!r} has an empty group")
    gap = float(es.positions[individual, a] - es.positions[opposite, a].mean())
    if not is_treated:
        gap = -gap
    return denormalize_effect(_transform(gap, mode), nd)


def column_cosine(es: EffectSpace, a: str, b: str) -> float:
    """Cosine between mean-centered position columns a and b."""
    ia, ib = es.column_index(a), es.column_index(b)
    u = es.positions[:, ia] - es.positions[:, ia].mean()
    v = es.positions[:, ib] - es.positions[:, ib].mean()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError(f"undefined angle: column {a if nu == 0.0 else b!r} has zero norm")
    return float(np.clip((u @ v) / (nu * nv), -1.0, 1.0))


def select_variables(
    es: EffectSpace,
    nd: NormalizedData,
    k: int,
    threshold: float = 0.0,
) -> list[str]:
    """Greedy pick of k effective, mutually non-redundant columns.

    Candidates are the top columns by absolute effect (pool capped at 20);
    the first pick is the largest effect, each later pick minimizes the
    maximum squared cosine against the picks so far. Ties break by column
    order.
    """
    _check_compatible(es, nd)
    if k > es.m:
        raise ValueError(f"cannot select {k} of {es.m} columns")
    scored = []
    for idx, name in enumerate(es.column_names):
        col = es.positions[:, idx]
        if np.linalg.norm(col - col.mean()) == 0.0:
            continue  # zero-variance position column: angles undefined
        try:
            r = ate(es, nd, name, mode="linear", threshold=threshold)
        except ValueError:
            continue  # constant-sign input column: no treated/control split
        scored.append((abs(r.ate_normalized), -idx, name))
    scored.sort(reverse=True)
    pool = [name for _, _, name in scored[:SELECT_POOL_SIZE]]
    if k > len(pool):
        raise ValueError(f"cannot select {k} columns: only {len(pool)} are usable")
    selected = [pool[0]]
    candidates = pool[1:]
    while len(selected) < k:
        best = min(
            candidates,
            key=lambda name: (
                max(column_cosine(es, name, s) ** 2 for s in selected),
                es.column_index(name),
            ),
        )
        selected.append(best)
        candidates.remove(best)
    return selected
