"""Rate, converse and capacity commands."""
import dataclasses
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

from commands.inputs import (
    budget_for,
    extended,
    input_distribution,
    load_inputs,
    optimizer_config,
    require_access,
)
from commands.reporting import CommandOutput
from commands.run_config import SWEEP_AXES, RunConfig, parse_sweep
from model import AccessStructure, InputDistribution
from rates import (
    RateReport,
    all_user_one_shot_rate,
    asymptotic_rate,
    classical_capacity,
    converse_grid_search,
    hypothesis_testing_rate,
    maximize_rate,
    one_shot_achievable_rate,
    second_order_rate,
)

logger = logging.getLogger(__name__)


def _finish(cfg: RunConfig, evaluate: Callable[[InputDistribution], RateReport], w, p) -> RateReport:
    if cfg.optimize:
        return maximize_rate(evaluate, w, optimizer_config(cfg))
    return evaluate(p)


def _report_result(report: RateReport, w, a: Optional[AccessStructure]) -> Dict[str, Any]:
    return {
        "channel": w.describe(),
        "access": a.as_dict() if a is not None else None,
        "report": report.as_dict(),
    }


def _one_shot_report(cfg: RunConfig):
    w, a = load_inputs(cfg)
    if cfg.path == "all-user":
        a = a or AccessStructure.all_users(w.num_users)
    a = require_access(a, cfg.command)
    w, p = extended(cfg, w, input_distribution(cfg, w))
    budget = budget_for(cfg, a, w.num_users)
    if cfg.path == "all-user":
        evaluate = lambda q: all_user_one_shot_rate(w, q, budget, a)
    elif cfg.path == "hypothesis-testing":
        evaluate = lambda q: hypothesis_testing_rate(w, a, q, budget)
    else:
        evaluate = lambda q: one_shot_achievable_rate(w, a, q, budget)
    return _finish(cfg, evaluate, w, p), w, a


def rate_oneshot(cfg: RunConfig) -> CommandOutput:
    report, w, a = _one_shot_report(cfg)
    return CommandOutput(_report_result(report, w, a))


def _second_order_report(cfg: RunConfig):
    w, a = load_inputs(cfg)
    a = require_access(a, cfg.command)
    p = input_distribution(cfg, w)
    evaluate = lambda q: second_order_rate(w, a, q, cfg.n, cfg.eps1, cfg.delta)
    return _finish(cfg, evaluate, w, p), w, a


def rate_second_order(cfg: RunConfig) -> CommandOutput:
    report, w, a = _second_order_report(cfg)
    return CommandOutput(_report_result(report, w, a))


def rate_asymptotic(cfg: RunConfig) -> CommandOutput:
    w, a = load_inputs(cfg)
    a = require_access(a, cfg.command)
    p = input_distribution(cfg, w)
    report = _finish(cfg, lambda q: asymptotic_rate(w, a, q), w, p)
    return CommandOutput(_report_result(report, w, a))


def rate_converse(cfg: RunConfig) -> CommandOutput:
    w, a = load_inputs(cfg)
    a = require_access(a, cfg.command)
    eps = cfg.eps if cfg.eps is not None else cfg.eps1
    if cfg.n > 1:
        w, _ = extended(cfg, w, input_distribution(cfg, w))
    report = converse_grid_search(w, a, cfg.secret_size, eps, cfg.grid_step)
    return CommandOutput(_report_result(report, w, a))


def capacity(cfg: RunConfig) -> CommandOutput:
    w, a = load_inputs(cfg)
    report = classical_capacity(w, a, optimizer_config(cfg))
    return CommandOutput(_report_result(report, w, a or AccessStructure.all_users(w.num_users)))


_SWEEP_SOURCES = {
    "rate-second-order": _second_order_report,
    "rate-oneshot": _one_shot_report,
}


def _sweep_header(axis: str, first: RateReport) -> List[str]:
    return (
        [axis, "rate", "band", "term_b", "term_a", "penalties"]
        + [f"B {label}" for label in first.per_set_b]
        + [f"A {label}" for label in first.per_set_a]
    )


def _sweep_row(value, report: RateReport, b_labels: Sequence[str], a_labels: Sequence[str]) -> List[Any]:
    return (
        [value, report.rate, report.band, report.term_b, report.term_a, sum(report.penalties.values())]
        + [report.per_set_b[k] for k in b_labels]
        + [report.per_set_a[k] for k in a_labels]
    )


def sweep(cfg: RunConfig) -> CommandOutput:
    """One evaluation per axis point; the rows become the CSV."""
    axis, points = parse_sweep(cfg.sweep, SWEEP_AXES[cfg.command])
    source = _SWEEP_SOURCES[cfg.command]
    reports = []
    w = a = None
    for value in points:
        point_cfg = dataclasses.replace(cfg, sweep=None, **{axis: value})
        report, w, a = source(point_cfg)
        reports.append(report)
        logger.info(f"Sweep {axis}={value}: rate {report.rate:.6g}")
    first = reports[0]
    b_labels, a_labels = list(first.per_set_b), list(first.per_set_a)
    rows = [_sweep_row(v, r, b_labels, a_labels) for v, r in zip(points, reports)]
    result = {
        "channel": w.describe(),
        "access": a.as_dict(),
        "axis": axis,
        "points": points,
        "reports": [r.as_dict() for r in reports],
    }
    return CommandOutput(result, _sweep_header(axis, first), rows)
