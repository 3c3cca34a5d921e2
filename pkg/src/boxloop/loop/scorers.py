"""Backend scorer adapters with a shared failure taxonomy.

A scorer turns (source text, seed) into a ScoreOutcome. Failures are
typed so the loop can record why a proposal died without aborting the
round: ProposalParseError covers anything rejected before fitting,
InferenceError covers fit-time breakdowns, DiagnosticsFailed covers fits
whose posterior failed the convergence gate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..datasets import Table, TimeSeries
from ..gp.fit import GPFitError, fit_gp, predict
from ..gp.parser import KernelParseError, parse_kernel
from ..gp.kernels import n_params
from ..infer.hmc import SamplerConfig, SamplingError
from ..infer.score import score_model
from ..ppl.compile import compile_model
from ..ppl.model import ModelError
from ..ppl.parser import ModelParseError, parse_model
from ..ppl.sampling import posterior_predictive

__all__ = [
    "DiagnosticsFailed",
    "GPScorer",
    "InferenceError",
    "ODEScorer",
    "PPLScorer",
    "ProposalParseError",
    "ScoreOutcome",
    "make_scorer",
]


class ProposalParseError(ValueError):
    pass


class InferenceError(RuntimeError):
    pass


class DiagnosticsFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class ScoreOutcome:
    score: float
    predictive: dict | None = None  # {"mean": [...], "var": [...], "residual": [...]}
    summary: dict = field(default_factory=dict)


def _residual_summary(resid: np.ndarray) -> list[float]:
    return [float(resid.mean()), float(resid.std()), float(np.abs(resid).max())]


class GPScorer:
    """Scores kernel expressions by log marginal likelihood on the
    standardized train split."""

    backend = "gp"

    def __init__(self, series: TimeSeries, restarts: int = 2, steps: int = 500):
        self.series = series
        sc = series.scaler()
        self._x = sc.x_fwd(series.train_x)
        self._y = sc.y_fwd(series.train_y)
        self._x_all = sc.x_fwd(series.x)
        self.restarts = restarts
        self.steps = steps

    def score(self, source: str, seed: int) -> ScoreOutcome:
        try:
            expr = parse_kernel(source)
        except KernelParseError as exc:
            raise ProposalParseError(str(exc)) from exc
        try:
            res = fit_gp(
                expr, self._x, self._y,
                restarts=self.restarts, seed=seed, steps=self.steps,
            )
            mean, var = predict(res.model, self._x_all)
        except GPFitError as exc:
            raise InferenceError(str(exc)) from exc
        resid = self._y - mean[: len(self._y)]
        return ScoreOutcome(
            score=res.lml,
            predictive={
                "mean": [float(v) for v in mean],
                "var": [float(v) for v in var],
                "residual": _residual_summary(resid),
            },
            summary={"n_params": n_params(expr), "converged": bool(res.converged)},
        )


class PPLScorer:
    """Scores model programs by PSIS-LOO elpd, gated on convergence."""

    backend = "ppl"

    def __init__(self, table: Table, sampler: SamplerConfig | None = None):
        self.table = table
        self.sampler = sampler or SamplerConfig()

    def score(self, source: str, seed: int) -> ScoreOutcome:
        from dataclasses import replace

        try:
            program = parse_model(source)
            model = compile_model(program, self.table)
        except (ModelParseError, ModelError) as exc:
            raise ProposalParseError(str(exc)) from exc
        try:
            report, post = score_model(model, replace(self.sampler, master_seed=seed))
        except SamplingError as exc:
            raise InferenceError(str(exc)) from exc

        summary = {
            "rhat_max": round(report.rhat_max, 4),
            "ess_mean": round(report.ess_mean, 1),
            "diverged": report.diverged,
            "se": round(report.se, 3),
            "n_bad_k": int(sum(k > 0.7 for k in report.pareto_k)),
        }
        if not report.passed:
            raise DiagnosticsFailed(
                f"convergence gate failed: rhat_max={report.rhat_max:.3f} "
                f"ess_mean={report.ess_mean:.0f}"
            )

        pooled = post.pooled()  # [S, dim] unconstrained
        draws_flat = np.stack([model.constrain_flat(u) for u in pooled])
        draws = {}
        for slot in model.slots:
            if slot.size is None:
                draws[slot.name] = draws_flat[:, slot.start]
            else:
                draws[slot.name] = draws_flat[:, slot.start : slot.start + slot.size]
        mean, var = posterior_predictive(
            program, self.table, draws, np.random.default_rng(seed), n_rep=1
        )
        observed = np.concatenate(
            [self.table.column(l.observed) for l in program.lik_stmts]
        )
        return ScoreOutcome(
            score=report.elpd_loo,
            predictive={
                "mean": [float(v) for v in mean],
                "var": [float(v) for v in var],
                "residual": _residual_summary(observed - mean),
            },
            summary=summary,
        )


class ODEScorer:
    """Scores dynamics programs by negative training MSE; two-stage fit
    whenever the program has both mechanistic params and network terms."""

    backend = "ode"

    def __init__(self, dataset, iterations: int = 1500, h: float = 0.01):
        self.dataset = dataset
        self.iterations = iterations
        self.h = h

    def score(self, source: str, seed: int) -> ScoreOutcome:
        from ..ode import (
            FitFailure,
            ODESpecError,
            fit_ode,
            full_plan,
            parse_ode_spec,
            test_mae,
            two_stage_plan,
        )

        try:
            spec = parse_ode_spec(source)
        except ODESpecError as exc:
            raise ProposalParseError(str(exc)) from exc
        if spec.n_states != len(self.dataset.state_names) or tuple(
            spec.state_names
        ) != tuple(self.dataset.state_names):
            raise ProposalParseError(
                f"program states {spec.state_names} do not match observed "
                f"states {self.dataset.state_names}"
            )
        plan = (
            two_stage_plan(spec, self.iterations)
            if spec.mlp_slots and spec.params
            else full_plan(spec, self.iterations)
        )
        try:
            fitted = fit_ode(spec, self.dataset, plan, seed, h=self.h)
        except FitFailure as exc:
            raise InferenceError(str(exc)) from exc

        idx = np.round(
            (self.dataset.train_times - self.dataset.train_times[0]) / self.h
        ).astype(int)
        traj = fitted.trajectory(
            float(self.dataset.train_times[-1]), t0=float(self.dataset.train_times[0])
        )
        pred = traj.states[idx]
        resid = self.dataset.train_states - pred
        summary: dict = {
            "params": {k: round(v, 6) for k, v in fitted.params.items()},
            "train_mse": fitted.train_mse,
            "n_skipped": fitted.n_skipped,
        }
        if len(self.dataset.test_times):
            mae, flags = test_mae(fitted, self.dataset)
            summary["test_mae"] = mae
            if flags:
                summary["test_flags"] = list(flags)
        return ScoreOutcome(
            score=-fitted.train_mse,
            predictive={
                "mean": [float(v) for v in pred.T.ravel()],
                "var": [],
                "residual": _residual_summary(resid),
            },
            summary=summary,
        )


def make_scorer(backend: str, dataset, **kwargs):
    if backend == "gp":
        return GPScorer(dataset, **kwargs)
    if backend == "ppl":
        # allow a plain dict (JSON round-trip of a stored run config)
        sampler = kwargs.get("sampler")
        if isinstance(sampler, dict):
            kwargs["sampler"] = SamplerConfig(**sampler)
        return PPLScorer(dataset, **kwargs)
    if backend == "ode":
        return ODEScorer(dataset, **kwargs)
    raise ValueError(f"unknown backend {backend!r}")
