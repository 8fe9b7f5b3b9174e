"""Minibatch stochastic gradient descent over individual positions.

Positions start at the normalized covariate rows and descend the pairwise
objective (see :mod:`sfe.pairwise`) with penalty coefficients frozen per
batch. Each iteration is one full pass over all individuals in a fresh
shuffled order; rows within a batch update synchronously from the
batch-start positions. The recorded objective trace holds, per iteration,
the total objective accumulated at batch evaluation time (for the default
full-sample batch this is exactly the pre-update total objective).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .dataset import NormalizedData, _frozen

PRNG_NAME = "numpy-pcg64"
SPACE_FORMAT_VERSION = 1
DIVERGENCE_LIMIT = 1e6
_STOP_WINDOW = 100


class DivergenceError(ArithmeticError):
    """Raised when positions blow up; carries the trace recorded so far."""

    def __init__(self, iteration: int, trace: np.ndarray):
        super().__init__(f"diverged at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


@dataclass(frozen=True)
class FitConfig:
    """Settings for the position fit.

    ``batch_size=None`` means the full sample. ``tolerance``, when set,
    stops early once the windowed-average objective over 100 iterations
    changes by less than ``tolerance`` in relative terms. The fit is
    bit-reproducible for a fixed seed either way; ``deterministic`` is kept
    for configuration compatibility (the reduction layout is race-free, so
    the fast path and the deterministic path coincide here).
    """

    eta: float = 0.025
    iterations: int = 10_000
    batch_size: Optional[int] = None
    seed: int = 0
    deterministic: bool = True
    tolerance: Optional[float] = None


@dataclass(frozen=True)
class EffectSpace:
    """Learned positions with the configuration and objective trace."""

    positions: np.ndarray
    config: FitConfig
    objective_trace: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions))
        object.__setattr__(self, "objective_trace", _frozen(self.objective_trace))
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if self.positions.shape[1] != len(self.column_names):
            raise ValueError("column names must match position columns")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def m(self) -> int:
        return self.positions.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise ValueError(f"unknown factor {name!r}") from None


def _threads() -> None:
    cap = os.environ.get("SFE_THREADS")
    if cap:
        import numba

        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


def fit(
    nd: NormalizedData,
    config: FitConfig = FitConfig(),
    columns: Optional[Sequence[str]] = None,
) -> EffectSpace:
    """Estimate the effect space for a normalized dataset.

    Column reductions run in a canonical name order internally, so permuting
    input columns (with their names) permutes the output bit-exactly.
    """
    n, m = nd.Xn.shape
    if n < 2:
        raise ValueError("need at least 2 individuals to fit")
    if config.eta <= 0:
        raise ValueError("eta must be positive")
    if config.iterations < 1:
        raise ValueError("iterations must be at least 1")
    batch = n if config.batch_size is None else int(config.batch_size)
    if not 1 <= batch <= n:
        raise ValueError(f"batch_size must be in [1, {n}], got {batch}")
    names = tuple(columns) if columns is not None else tuple(f"x{j}" for j in range(m))
    if len(names) != m:
        raise ValueError(f"{len(names)} column names for {m} columns")

    order = np.argsort(np.asarray(names))
    P = np.ascontiguousarray(nd.Xn[:, order])
    yn = np.ascontiguousarray(nd.yn)
    # Update scale: eta applies to the mean per-pair gradient, keeping the
    # published learning rate meaningful across sample sizes.
    eta_eff = config.eta / (n - 1)

    _threads()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    trace = np.empty(config.iterations, dtype=np.float64)
    grads = np.empty((batch, m), dtype=np.float64)
    obj = np.empty(batch, dtype=np.float64)
    ran = 0
    for it in range(config.iterations):
        perm = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, batch):
            rows = perm[lo : lo + batch]
            k = rows.shape[0]
            _kernels.batch_pass(P, yn, rows, grads[:k], obj[:k])
            P[rows] -= eta_eff * grads[:k]
            total += float(obj[:k].sum())
        trace[it] = total
        ran = it + 1
        if not np.isfinite(total) or not np.all(np.isfinite(P)) or np.max(np.abs(P)) > DIVERGENCE_LIMIT:
            raise DivergenceError(it, trace[:ran].copy())
        if config.tolerance is not None and ran >= 2 * _STOP_WINDOW and ran % _STOP_WINDOW == 0:
            prev = trace[ran - 2 * _STOP_WINDOW : ran - _STOP_WINDOW].mean()
            cur = trace[ran - _STOP_WINDOW : ran].mean()
            if abs(prev - cur) <= config.tolerance * max(abs(prev), 1e-300):
                break

    out = np.empty_like(P)
    out[:, order] = P
    return EffectSpace(
        positions=out,
        config=config,
        objective_trace=trace[:ran].copy(),
        column_names=names,
    )


def save_space(
    es: EffectSpace,
    path: str,
    scaling: Optional[dict] = None,
    manifest: Optional[str] = None,
) -> None:
    """Write positions as CSV plus a JSON metadata sidecar at <path>.meta.json."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + list(es.column_names))
        for i in range(es.n):
            writer.writerow([i] + [format(v, ".17g") for v in es.positions[i]])
    meta = {
        "format_version": SPACE_FORMAT_VERSION,
        "kind": "sfe-effect-space",
        "n": es.n,
        "columns": list(es.column_names),
        "config": asdict(es.config),
        "prng": PRNG_NAME,
        "objective_trace": [float(v) for v in es.objective_trace],
        "scaling": scaling,
        "manifest": manifest,
    }
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)


def load_space(path: str) -> EffectSpace:
    """Load an effect space saved by save_space; round trips bit-exactly."""
    meta_path = path + ".meta.json"
    if not os.path.exists(meta_path):
        raise ValueError(f"missing metadata sidecar {meta_path}")
    with open(meta_path, "r", encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"malformed metadata sidecar {meta_path}: {e}") from None
    version = meta.get("format_version")
    if version != SPACE_FORMAT_VERSION:
        raise ValueError(f"unsupported effect-space format version {version!r}")
    columns = [str(c) for c in meta["columns"]]
    n = int(meta["n"])
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty effect-space file") from None
        if header != ["id"] + columns:
            raise ValueError(f"{path}: header does not match sidecar columns")
        positions = np.empty((n, len(columns)), dtype=np.float64)
        count = 0
        for row in reader:
            if not row:
                continue
            if count >= n or len(row) != len(columns) + 1:
                raise ValueError(f"{path}: malformed row {count + 2}")
            try:
                positions[count] = [float(v) for v in row[1:]]
            except ValueError:
                raise ValueError(f"{path}: non-numeric value in row {count + 2}") from None
            count += 1
    if count != n:
        raise ValueError(f"{path}: truncated file, expected {n} rows, found {count}")
    cfg = meta["config"]
    config = FitConfig(
        eta=cfg["eta"],
        iterations=cfg["iterations"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
        deterministic=cfg["deterministic"],
        tolerance=cfg["tolerance"],
    )
    return EffectSpace(
        positions=positions,
        config=config,
        objective_trace=np.asarray(meta["objective_trace"], dtype=np.float64),
        column_names=tuple(columns),
    )
