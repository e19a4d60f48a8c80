"""Loading channels, access structures and per-run parameters for the handlers."""
import logging
from functools import reduce
from typing import Optional, Tuple

import numpy as np

import config
from channel_loader import load_access_file, load_channel_file
from commands.run_config import RunConfig
from exceptions import AccessStructureError, ValidationError
from model import AccessStructure, CqBroadcastChannel, InputDistribution, product_extension
from optimizer import OptimizerConfig
from rates import EpsilonBudget

logger = logging.getLogger(__name__)


def load_inputs(cfg: RunConfig) -> Tuple[CqBroadcastChannel, Optional[AccessStructure]]:
    """Channel from --channel; access structure from --access, else from the channel file."""
    w, embedded = load_channel_file(cfg.channel)
    if cfg.access:
        return w, load_access_file(cfg.access, w.num_users)
    return w, embedded


def require_access(a: Optional[AccessStructure], command: str) -> AccessStructure:
    if a is None:
        raise AccessStructureError(f"{command} needs an access structure: pass --access or add minimal_authorized")
    return a


def input_distribution(cfg: RunConfig, w: CqBroadcastChannel) -> InputDistribution:
    """--input-dist over the single-letter alphabet, uniform when absent."""
    if cfg.input_dist is None:
        return InputDistribution.uniform(w.input_alphabet_size)
    if len(cfg.input_dist) != w.input_alphabet_size:
        raise ValidationError(f"--input-dist has {len(cfg.input_dist)} entries for |X|={w.input_alphabet_size}")
    return InputDistribution(np.asarray(cfg.input_dist, dtype=float))


def extended(cfg: RunConfig, w: CqBroadcastChannel, p: InputDistribution) -> Tuple[CqBroadcastChannel, InputDistribution]:
    """The n-fold product channel with the i.i.d. input distribution."""
    if cfg.n == 1:
        return w, p
    w_n = product_extension(w, cfg.n)
    p_n = reduce(np.kron, [p.probs] * cfg.n)
    logger.info(f"Evaluating on {cfg.n} channel uses: |X|={w_n.input_alphabet_size}")
    return w_n, InputDistribution(p_n)


def budget_for(cfg: RunConfig, a: AccessStructure, num_users: int) -> EpsilonBudget:
    if cfg.path == "all-user":
        return EpsilonBudget.for_all_users(cfg.eps1, cfg.eps2, cfg.delta, num_users)
    if cfg.path == "hypothesis-testing":
        eta = cfg.eps1 / 2 if cfg.eta is None else cfg.eta
        return EpsilonBudget.for_hypothesis_testing(cfg.eps1, eta, cfg.delta, a)
    return EpsilonBudget.for_general(cfg.eps1, cfg.eps2, cfg.delta, a)


def optimizer_config(cfg: RunConfig) -> OptimizerConfig:
    return OptimizerConfig(starts=config.OPTIMIZER_STARTS, workers=config.OPTIMIZER_WORKERS, seed=cfg.rng_seed)
