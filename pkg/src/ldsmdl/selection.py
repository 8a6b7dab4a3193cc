"""Order-selection drivers: top-down annihilation and a full grid sweep."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .criteria import (CRITERION_NAMES, CriterionValue, aic, bic,
                       count_params, empirical_fisher_log_det, fia,
                       mdl_description_length, mme, normalize_values)
from .datagen import delay_embed
from .em import EmConfig, FitResult, multi_restart_fit
from .errors import DegeneracyError, DimensionError, LdsError
from .inference import kalman_filter, rts_smooth
from .model import LdsParams, ModelOrderBounds, SequenceData


@dataclass(frozen=True)
class OrderResult:
    """Fit outcome and criterion scores at one latent dimension."""

    order: int
    fit: Optional[FitResult]
    dl: float
    criteria: list = field(default_factory=list)
    error: Optional[str] = None

    def criterion(self, name: str) -> Optional[CriterionValue]:
        for cv in self.criteria:
            if cv.name == name:
                return cv
        return None


@dataclass(frozen=True)
class SelectionTrace:
    """Per-order results of a selection run plus the chosen model."""

    per_order: list
    chosen_order: int
    chosen_params: LdsParams
    stopped_early: bool

    def to_dict(self) -> dict:
        rows = []
        for r in self.per_order:
            rows.append({
                "order": r.order,
                "dl": r.dl,
                "loglik": r.fit.loglik if r.fit is not None else None,
                "converged": r.fit.converged if r.fit is not None else None,
                "iterations": r.fit.iterations if r.fit is not None else None,
                "criteria": {cv.name: {"value": cv.value, "components": cv.components}
                             for cv in r.criteria},
                "error": r.error,
            })
        return {
            "per_order": rows,
            "chosen_order": self.chosen_order,
            "chosen_params": self.chosen_params.to_dict(),
            "stopped_early": self.stopped_early,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _order_config(config: EmConfig, order: int) -> EmConfig:
    seed = int(np.random.SeedSequence([config.seed & 0x7FFFFFFF, order]
                                      ).generate_state(1)[0])
    return EmConfig(eps=config.eps, max_iters=config.max_iters,
                    n_restarts=config.n_restarts, seed=seed)


def _evaluate_order(data_d: SequenceData, fit: FitResult, order: int,
                    observable_mode: bool, all_criteria: bool) -> tuple[float, list]:
    """Compute the description length (always) and, optionally, the full
    five-criterion set for one fitted order."""
    posterior = rts_smooth(fit.params, kalman_filter(fit.params, data_d))
    dl_value = mdl_description_length(fit, posterior, data_d, N=data_d.T, order=order)
    if not all_criteria:
        return dl_value.value, [dl_value]
    n = data_d.T
    n_theta = count_params(order, data_d.d_out, fix_observation=observable_mode).n_theta
    fisher = empirical_fisher_log_det(fit.params, data_d,
                                      fix_observation=observable_mode)
    values = [
        aic(fit.loglik, n_theta, order=order),
        bic(fit.loglik, n_theta, n, order=order),
        fia(fit.loglik, n_theta, n, fisher, order=order),
        mme(fit.loglik, n_theta, n, order=order),
        dl_value,
    ]
    return dl_value.value, values


def _fit_order(data: SequenceData, order: int, config: EmConfig,
               observable_mode: bool) -> tuple[SequenceData, OrderResult]:
    data_d = delay_embed(data, order) if observable_mode else data
    cfg = _order_config(config, order)
    fit = multi_restart_fit(data_d, order, cfg, fix_observation=observable_mode)
    return data_d, fit


def grid_search(data: SequenceData, bounds: ModelOrderBounds, config: EmConfig,
                criterion: str = "mdl", observable_mode: bool = False) -> SelectionTrace:
    """Fit every order in [d_min, d_max], score all five criteria, and pick
    the minimizer of the requested one."""
    if criterion not in CRITERION_NAMES:
        raise DimensionError(f"unknown criterion {criterion!r}")
    per_order = []
    for order in range(bounds.d_min, bounds.d_max + 1):
        try:
            data_d, fit = _fit_order(data, order, config, observable_mode)
            dl, values = _evaluate_order(data_d, fit, order, observable_mode,
                                         all_criteria=True)
            per_order.append(OrderResult(order=order, fit=fit, dl=dl, criteria=values))
        except LdsError as exc:
            per_order.append(OrderResult(order=order, fit=None, dl=math.inf,
                                         error=str(exc)))
    return _finish(per_order, criterion, stopped_early=False)


def annihilation_search(data: SequenceData, bounds: ModelOrderBounds,
                        config: EmConfig, observable_mode: bool = False,
                        early_stop: bool = True) -> SelectionTrace:
    """Top-down order reduction: refit at successively smaller orders and
    keep the description-length minimizer.

    With ``early_stop`` the walk stops once the description length rises
    relative to the previously evaluated (next-higher) order.
    """
    per_order = []
    prev_dl = math.inf
    stopped = False
    for order in range(bounds.d_max, bounds.d_min - 1, -1):
        try:
            data_d, fit = _fit_order(data, order, config, observable_mode)
            dl, values = _evaluate_order(data_d, fit, order, observable_mode,
                                         all_criteria=False)
            per_order.append(OrderResult(order=order, fit=fit, dl=dl, criteria=values))
        except LdsError as exc:
            per_order.append(OrderResult(order=order, fit=None, dl=math.inf,
                                         error=str(exc)))
            continue
        if early_stop and dl > prev_dl:
            stopped = True
            break
        prev_dl = dl
    return _finish(per_order, "mdl", stopped_early=stopped)


def _finish(per_order: list, criterion: str, stopped_early: bool) -> SelectionTrace:
    scored = [r for r in per_order if r.fit is not None]
    if not scored:
        raise DegeneracyError("every candidate order failed to fit")
    if criterion == "mdl":
        best = min(scored, key=lambda r: r.dl)
    else:
        best = min(scored, key=lambda r: r.criterion(criterion).value)
    return SelectionTrace(per_order=per_order, chosen_order=best.order,
                          chosen_params=best.fit.params, stopped_early=stopped_early)


def write_sweep_csv(trace: SelectionTrace, path) -> None:
    """Write the per-order criterion table with raw and min-max normalized columns."""
    rows = sorted((r for r in trace.per_order if r.fit is not None),
                  key=lambda r: r.order)
    names = [n for n in CRITERION_NAMES if rows and rows[0].criterion(n) is not None]
    norms = {}
    for name in names:
        vals = [r.criterion(name).value for r in rows]
        norms[name] = normalize_values(vals) if len(vals) >= 2 else [0.0] * len(vals)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["order", "loglik"] + names + [f"{n}_norm" for n in names])
        for i, r in enumerate(rows):
            w.writerow([r.order, repr(float(r.fit.loglik))]
                       + [repr(float(r.criterion(n).value)) for n in names]
                       + [repr(float(norms[n][i])) for n in names])
