"""Entropy and leftover-hash diagnostics for one subset of users."""
import logging
from typing import Any, Dict

import config
from commands.reporting import CommandOutput
from commands.inputs import input_distribution, load_inputs
from commands.run_config import RunConfig
from entropies import (
    conditional_entropy,
    conditional_info_variance,
    hypothesis_testing_entropy_classical,
    max_entropy_zero,
    min_entropy_zero,
    smooth_max_entropy_classical,
    smooth_min_entropy_classical,
)
from exceptions import ValidationError
from model import build_cq_state, subset_label
from protocol.hashing import HashKind
from protocol.shaper import leftover_hash_check

logger = logging.getLogger(__name__)


def _subset(cfg: RunConfig, num_users: int):
    return tuple(range(1, num_users + 1)) if cfg.subset is None else cfg.subset


def entropy(cfg: RunConfig) -> CommandOutput:
    """H, V, H_min, H_max of X given Y_D; smoothed values (trace radius --eps) on classical channels."""
    w, _ = load_inputs(cfg)
    p = input_distribution(cfg, w)
    subset = _subset(cfg, w.num_users)
    state = build_cq_state(p, w, subset)
    values: Dict[str, Any] = {
        "H": conditional_entropy(state),
        "V": conditional_info_variance(state),
        "H_min": min_entropy_zero(state).as_dict(),
        "H_max": max_entropy_zero(state).as_dict(),
    }
    if cfg.eps:
        if not state.is_classical:
            raise ValidationError("Smoothed entropies are evaluated on classical channels only")
        joint = state.joint_table()
        if joint.size > config.SMOOTHING_ATOM_LIMIT:
            raise ValidationError(f"Joint of {joint.size} atoms exceeds the smoothing limit {config.SMOOTHING_ATOM_LIMIT}")
        values["H_min_smooth"] = smooth_min_entropy_classical(joint, cfg.eps).as_dict()
        values["H_max_smooth"] = smooth_max_entropy_classical(joint, cfg.eps).as_dict()
        values["H_h"] = hypothesis_testing_entropy_classical(joint, joint.sum(axis=0), cfg.eps).as_dict()
    return CommandOutput({
        "channel": w.describe(),
        "subset": subset_label(subset),
        "input_distribution": p.probs.tolist(),
        "eps": cfg.eps,
        "entropies": values,
    })


def lhl_check(cfg: RunConfig) -> CommandOutput:
    """Leftover hash check with side information Z = Y_D."""
    if cfg.r is None:
        raise ValidationError("lhl-check needs --r")
    w, _ = load_inputs(cfg)
    p = input_distribution(cfg, w)
    subset = _subset(cfg, w.num_users)
    check = leftover_hash_check(
        p, w.marginal_transition(subset), cfg.r, cfg.eps or 0.0, HashKind(cfg.hash_kind), cfg.rng_seed
    )
    if not check.holds:
        logger.warning(f"Leftover hash check failed: {check.lhs:.6g} > {check.rhs:.6g}")
    return CommandOutput({
        "channel": w.describe(),
        "subset": subset_label(subset),
        "r": cfg.r,
        "hash_kind": cfg.hash_kind,
        "check": check.as_dict(),
    })
