"""Monte Carlo experiment driver.

Runs seeded independent trials of either coding scheme, aggregates the
realized total-variation distances and error-case counts, and sweeps over
blocklength / agent count / rates / fidelity grids.  Per-trial randomness is
counter-derived from (seed, trial index), so results are bit-identical under
any worker count and sweeps can resume cell by cell.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .coding import (BinnedSchemeConfig, DecoderBudgetExceeded, DecoderLimits,
                     DirectSchemeConfig, ErrorCase, binned_specs, direct_specs,
                     run_binned_trial, run_direct_trial)
from .probkit import JointPmf
from .source import SourceConfig

CASE_LABELS = tuple(case.value for case in ErrorCase)


class ExperimentAborted(RuntimeError):
    """Raised when decoder search budgets blow past the configured tolerance."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs; immutable and picklable."""

    source: SourceConfig
    scheme: DirectSchemeConfig | BinnedSchemeConfig
    trials: int
    seed: int
    delta: float
    target: JointPmf | None = None
    search_budget: int | None = None
    decoder_limits: DecoderLimits = field(default_factory=DecoderLimits)
    abort_fraction: float = 0.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        sx = self.source.p0.size
        tshape = self.scheme.triple.shape
        if tshape[0] != sx or tshape[1] != sx:
            raise ValueError("scheme triple must share the source alphabet")
        if isinstance(self.scheme, DirectSchemeConfig) \
                and self.scheme.num_agents != self.source.L:
            raise ValueError("direct scheme needs one rate per agent")
        if self.target is not None and self.target.shape != self.scheme.pair_src_out.shape:
            raise ValueError("coordination target shape must match the design pair")


@dataclass(frozen=True)
class ExperimentStats:
    """Aggregates over the completed trials of one experiment."""

    mean_tv: float
    q50: float
    q90: float
    q99: float
    error_case_counts: Mapping[str, int]
    trials: int
    wall_time: float
    budget_hits: int
    tv_stderr: float
    decoder_aborts: int = 0

    def __post_init__(self):
        object.__setattr__(self, "error_case_counts",
                           MappingProxyType(dict(self.error_case_counts)))
        if sum(self.error_case_counts.values()) != self.trials:
            raise ValueError("error-case counts must sum to the trial count")
        if not 0.0 <= self.mean_tv <= 1.0:
            raise ValueError("mean TV must lie in [0, 1]")

    def case_fraction(self, label: str) -> float:
        return self.error_case_counts.get(label, 0) / self.trials


def _run_block(cfg: ExperimentConfig, lo: int, hi: int) -> list[tuple]:
    if isinstance(cfg.scheme, DirectSchemeConfig):
        specs = direct_specs(cfg.scheme, cfg.source, cfg.seed)

        def runner(t):
            return run_direct_trial(cfg.source, cfg.scheme, specs, cfg.seed, t,
                                    budget=cfg.search_budget, report_target=cfg.target)
    else:
        specs = binned_specs(cfg.scheme, cfg.source, cfg.seed)

        def runner(t):
            return run_binned_trial(cfg.source, cfg.scheme, specs, cfg.seed, t,
                                    budget=cfg.search_budget, limits=cfg.decoder_limits,
                                    report_target=cfg.target)

    rows = []
    for t in range(lo, hi):
        try:
            outcome = runner(t)
            rows.append((outcome.tv_realized, outcome.error_case.value,
                         outcome.budget_hit, outcome.search_cost))
        except DecoderBudgetExceeded as exc:
            rows.append((math.nan, "__aborted__", False, 0, str(exc)))
    return rows


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentStats:
    """Execute cfg.trials independent trials and aggregate.

    Statistics are computed in trial order regardless of how blocks are
    scheduled, so any worker count yields identical results.
    """
    start = time.perf_counter()
    blocks = _split_blocks(cfg.trials, workers)
    if workers <= 1 or len(blocks) <= 1:
        results = [_run_block(cfg, lo, hi) for lo, hi in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, itertools.repeat(cfg),
                                    [b[0] for b in blocks], [b[1] for b in blocks]))
    rows = [row for block in results for row in block]

    aborted = [row for row in rows if row[1] == "__aborted__"]
    if aborted:
        if len(aborted) > cfg.abort_fraction * cfg.trials:
            raise ExperimentAborted(
                f"{len(aborted)}/{cfg.trials} trials exceeded the decoder search "
                f"budget (first: {aborted[0][-1]}); shrink n, L, or the codebook, "
                f"or raise the decoder limits")
        rows = [row for row in rows if row[1] != "__aborted__"]
    if not rows:
        raise ExperimentAborted("no trial completed within the decoder limits")

    tvs = np.array([row[0] for row in rows])
    counts = {label: 0 for label in CASE_LABELS}
    for row in rows:
        counts[row[1]] += 1
    quantiles = np.quantile(tvs, [0.5, 0.9, 0.99])
    stderr = float(tvs.std(ddof=1) / math.sqrt(tvs.size)) if tvs.size > 1 else 0.0
    return ExperimentStats(
        mean_tv=float(tvs.mean()),
        q50=float(quantiles[0]), q90=float(quantiles[1]), q99=float(quantiles[2]),
        error_case_counts=counts,
        trials=len(rows),
        wall_time=time.perf_counter() - start,
        budget_hits=sum(1 for row in rows if row[2]),
        tv_stderr=stderr,
        decoder_aborts=len(aborted))


def _split_blocks(trials: int, workers: int) -> list[tuple[int, int]]:
    pieces = max(1, min(trials, max(workers, 1) * 4))
    size = math.ceil(trials / pieces)
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def check_delta_coordination(stats: ExperimentStats, delta: float,
                             confidence_slack: float = 3.0) -> str:
    """Verdict on the fidelity criterion E[TV] <= delta.

    Conservative by construction: the sample mean plus `confidence_slack`
    standard errors must clear the radius, so a confidence band straddling
    delta fails.
    """
    return "pass" if stats.mean_tv + confidence_slack * stats.tv_stderr <= delta else "fail"


@dataclass(frozen=True)
class SweepCell:
    """One grid cell of a sweep with its aggregated statistics."""

    n: int
    L: int
    rates: tuple[float, ...]
    delta: float
    stats: ExperimentStats

    @property
    def key(self) -> tuple:
        return (self.n, self.L, self.rates, self.delta)


def default_scheme_builder(base_scheme):
    """Adapt the base scheme to a grid cell: direct rates/slacks broadcast to
    the cell's agent count; binned rates swapped in place."""

    def build(n: int, L: int, rates: tuple[float, ...], delta: float):
        if isinstance(base_scheme, DirectSchemeConfig):
            if len(rates) == 1:
                rates = rates * L
            if len(rates) != L:
                raise ValueError(f"need 1 or {L} rates, got {len(rates)}")
            slacks = base_scheme.slacks
            if len(slacks) != L:
                slacks = (slacks[0],) * L
            return dataclasses.replace(base_scheme, rates=rates, slacks=slacks)
        if len(rates) != 2:
            raise ValueError("binned scheme cells need (bin rate, word rate)")
        return dataclasses.replace(base_scheme, rate_bin=rates[0], rate_word=rates[1])

    return build


def sweep(base: ExperimentConfig, n_list, L_list, delta_list,
          rates_list=None, workers: int = 1,
          completed: dict | None = None,
          scheme_builder=None) -> list[SweepCell]:
    """Run the full (n, L, rates, delta) grid in a fixed order.

    `completed` maps cell keys to already-computed SweepCells (e.g. parsed
    from an interrupted run); those cells are reused verbatim, which is safe
    because every cell is deterministic in (base.seed, cell key).
    """
    if rates_list is None:
        if isinstance(base.scheme, DirectSchemeConfig):
            rates_list = [base.scheme.rates]
        else:
            rates_list = [(base.scheme.rate_bin, base.scheme.rate_word)]
    rates_list = [tuple(float(r) for r in rates) for rates in rates_list]
    builder = scheme_builder or default_scheme_builder(base.scheme)
    completed = completed or {}

    cells = []
    for n, L, rates, delta in itertools.product(n_list, L_list, rates_list, delta_list):
        key = (int(n), int(L), rates, float(delta))
        if key in completed:
            cells.append(completed[key])
            continue
        source = dataclasses.replace(base.source, n=int(n), L=int(L))
        scheme = builder(int(n), int(L), rates, float(delta))
        cfg = dataclasses.replace(base, source=source, scheme=scheme, delta=float(delta))
        stats = run_experiment(cfg, workers=workers)
        cells.append(SweepCell(n=int(n), L=int(L), rates=rates,
                               delta=float(delta), stats=stats))
    return cells
