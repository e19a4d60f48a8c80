"""End-to-end code construction and evaluation."""
import logging

from commands.reporting import CommandOutput
from commands.inputs import extended, input_distribution, load_inputs, require_access
from commands.run_config import RunConfig
from protocol.channel_code import run_protocol
from protocol.hashing import HashKind
from rates import EpsilonBudget

logger = logging.getLogger(__name__)


def simulate(cfg: RunConfig) -> CommandOutput:
    w, a = load_inputs(cfg)
    a = require_access(a, cfg.command)
    w, p = extended(cfg, w, input_distribution(cfg, w))
    budget = EpsilonBudget.for_general(cfg.eps1, cfg.eps2, cfg.delta, a)
    report = run_protocol(
        w, a, p, budget,
        seed=cfg.seed,
        u_bits=cfg.u_bits,
        m=cfg.m,
        kind=HashKind(cfg.hash_kind),
        trials=cfg.trials,
    )
    summary = {
        "max_error": report.max_error,
        "max_error_upper": max(e.upper for e in report.reliability.values()),
        "max_distance": report.max_distance,
        "budget_eps": budget.eps,
        "within_budget": bool(
            max(e.upper for e in report.reliability.values()) <= budget.eps and report.max_distance <= budget.eps
        ),
    }
    if not summary["within_budget"]:
        logger.warning(f"Selected code misses the budget eps={budget.eps:.4g}")
    return CommandOutput({
        "channel": w.describe(),
        "access": a.as_dict(),
        "simulation": report.as_dict(),
        "summary": summary,
    })
