"""Replication harness comparing selectors on known targets.

One replicate draws a single sample (iid or MH) and hands the identical
sample to every requested method, so comparisons are paired.  "Target" is
the aspirational ISE-minimizing bandwidth (knowable only in simulation);
"Thin" subsamples the chain and applies the standard solve-the-equation
selector to what remains.
"""

import math
from dataclasses import dataclass

import numpy as np

from .density import EvaluationGrid, build_grid, ise
from .dependence import AutocorrSpec, iat
from .samplers import MHConfig, TargetDistribution, iid_sample, mh_sample, thin, tune_proposal
from .selectors import (
    SelectorConfig,
    SelectorResult,
    _CountedObjective,
    default_config,
    minimize_objective,
    normal_scale_bandwidth,
    select,
)

ALL_METHODS = ("Target", "BCV", "SJse", "SJmin", "mBCV", "mSJse", "mSJmin", "Thin")


@dataclass(frozen=True)
class StudyConfig:
    """One sampling-method x target setting of the comparison study."""

    target: TargetDistribution
    sampler: str  # "iid" or "mh"
    n: int = 10_000
    replicates: int = 50
    methods: tuple = ALL_METHODS
    thin_k: int = 5
    base_seed: int = 0
    grid_points: int = 2048
    zeta_points: int = 256
    zeta_spec: AutocorrSpec = AutocorrSpec()
    proposal_sd: float | None = None  # tuned automatically when None

    def __post_init__(self):
        if self.sampler not in ("iid", "mh"):
            raise ValueError(f"sampler must be 'iid' or 'mh', got {self.sampler!r}")
        if self.replicates < 1 or self.n < 100:
            raise ValueError("need replicates >= 1 and n >= 100")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


@dataclass(frozen=True)
class MethodRecord:
    """One method's outcome on one replicate."""

    method: str
    replicate: int
    h: float
    ise: float
    zeta: float
    acceptance: float
    iat: float
    error: str | None = None


@dataclass(frozen=True)
class StudyResult:
    """Raw per-replicate records plus per-method aggregates."""

    config: StudyConfig
    records: list
    summary: dict
    proposal_sd: float | None


def target_bandwidth(values, truth: TargetDistribution, grid, cfg: SelectorConfig) -> SelectorResult:
    """Bandwidth minimizing the realized ISE against the known truth."""
    obj = _CountedObjective(lambda h: ise(values, h, truth, grid))
    return minimize_objective(obj, cfg)


def _study_grid(values, target: TargetDistribution, n_points: int) -> EvaluationGrid:
    """Shared ISE grid: default data-driven padding, widened when needed so
    the truth's tail mass outside the grid stays well under the coverage
    guard."""
    base = build_grid(values, normal_scale_bandwidth(values), n_points)
    lo, hi = float(base.points[0]), float(base.points[-1])
    step = target.sd
    while target.cdf(lo) > 5e-7:
        lo -= step
    while target.cdf(hi) < 1 - 5e-7:
        hi += step
    if lo == base.points[0] and hi == base.points[-1]:
        return base
    return EvaluationGrid(np.linspace(lo, hi, n_points))


def _draw_sample(cfg: StudyConfig, r: int, proposal_sd: float | None):
    seed = (cfg.base_seed, r)
    if cfg.sampler == "iid":
        return iid_sample(cfg.target, cfg.n, seed), float("nan")
    sd = proposal_sd if proposal_sd is not None else cfg.proposal_sd
    if sd is None:
        raise ValueError("mh sampling needs a proposal_sd (tune first)")
    res = mh_sample(cfg.target, MHConfig(proposal_sd=sd, n_draws=cfg.n, seed=seed))
    return res.values, res.acceptance_rate


def run_replicate(cfg: StudyConfig, r: int, proposal_sd: float | None = None) -> list:
    """All requested methods on one shared sample; failures are recorded
    per-method and do not abort the replicate."""
    values, acceptance = _draw_sample(cfg, r, proposal_sd)
    chain_iat = iat(values, cfg.zeta_spec)
    grid = _study_grid(values, cfg.target, cfg.grid_points)
    zeta_cache: dict = {}

    def sel_cfg(method_values, method) -> SelectorConfig:
        return default_config(
            method_values, method,
            zeta_spec=cfg.zeta_spec, zeta_cache_points=cfg.zeta_points,
            grid_points=cfg.grid_points,
        )

    records = []
    for method in cfg.methods:
        try:
            if method == "Target":
                result = target_bandwidth(values, cfg.target, grid, sel_cfg(values, "BCV"))
                h, zeta = result.h, float("nan")
                sample_used = values
            elif method == "Thin":
                thinned = thin(values, cfg.thin_k)
                result = select(thinned, sel_cfg(thinned, "SJse"))
                h, zeta = result.h, float("nan")
                sample_used = thinned
            else:
                result = select(values, sel_cfg(values, method), zeta_cache=zeta_cache)
                h, zeta = result.h, result.zeta_at_h
                sample_used = values
            err = ise(sample_used, h, cfg.target, grid)
            records.append(MethodRecord(
                method=method, replicate=r, h=h, ise=err, zeta=zeta,
                acceptance=acceptance, iat=chain_iat,
            ))
        except Exception as exc:  # failure policy: record, continue
            records.append(MethodRecord(
                method=method, replicate=r, h=float("nan"), ise=float("nan"),
                zeta=float("nan"), acceptance=acceptance, iat=chain_iat,
                error=f"{type(exc).__name__}: {exc}",
            ))
    return records


def summarize(records) -> dict:
    """Per-method mean/se of h and ISE; se is None with a single record."""
    out: dict = {}
    for method in dict.fromkeys(rec.method for rec in records):
        ok = [rec for rec in records if rec.method == method and rec.error is None]
        failures = sum(1 for rec in records if rec.method == method and rec.error is not None)
        if not ok:
            out[method] = {"mean_h": None, "se_h": None, "mean_ise": None,
                           "se_ise": None, "count": 0, "failures": failures}
            continue
        hs = np.array([rec.h for rec in ok])
        errs = np.array([rec.ise for rec in ok])
        m = hs.size
        out[method] = {
            "mean_h": float(hs.mean()),
            "se_h": float(hs.std(ddof=1) / math.sqrt(m)) if m > 1 else None,
            "mean_ise": float(errs.mean()),
            "se_ise": float(errs.std(ddof=1) / math.sqrt(m)) if m > 1 else None,
            "count": m,
            "failures": failures,
        }
    return out


def run_study(cfg: StudyConfig) -> StudyResult:
    """Run all replicates of one setting and aggregate Table-style summaries."""
    proposal_sd = cfg.proposal_sd
    if cfg.sampler == "mh" and proposal_sd is None:
        probe = MHConfig(
            proposal_sd=2.4 * cfg.target.sd, n_draws=cfg.n,
            seed=(cfg.base_seed, 999_983),
        )
        proposal_sd = tune_proposal(cfg.target, probe)
    records = []
    for r in range(cfg.replicates):
        records.extend(run_replicate(cfg, r, proposal_sd))
    return StudyResult(
        config=cfg, records=records, summary=summarize(records),
        proposal_sd=proposal_sd,
    )
