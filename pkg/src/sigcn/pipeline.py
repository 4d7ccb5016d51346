"""End-to-end composition: matching -> two SiGR branches -> IA -> decoder."""

import numpy as np

from .config import Config
from .episodes import Episode
from .head import bce_loss, decode, decode_features, decoder_input, init_decoder, sgd_step
from .ia import associate, fused_support_instance
from .matching import MAP_ORDER, episode_maps
from .numerics import Tape, grad
from .sigr import run_branch


def instance_features(ep: Episode, cfg: Config, xq_mid=None, xq_high=None):
    """Updated query instances ``(v0~, v1~)`` and the four activation maps.

    ``xq_mid``/``xq_high`` default to the episode's query features; pass tracked
    Tensors to differentiate through graph reasoning and association.
    """
    maps = episode_maps(ep, cfg.region_grid)
    xq_mid = ep.query.feat_mid if xq_mid is None else xq_mid
    xq_high = ep.query.feat_high if xq_high is None else xq_high
    masks = [s.mask for s in ep.support]
    v0 = run_branch(xq_mid, maps["mid_region"].values, [s.feat_mid for s in ep.support], masks, cfg.t, cfg.k)
    v1 = run_branch(xq_high, maps["high_region"].values, [s.feat_high for s in ep.support], masks, cfg.t, cfg.k)
    # the support instance is pooled from high-level support foreground
    vs = fused_support_instance([s.feat_high for s in ep.support], masks, cfg.s)
    v0, v1 = associate(v0, v1, vs, cfg.alpha, cfg.beta)
    return v0, v1, [maps[name] for name in MAP_ORDER]


def prepare_input(ep: Episode, cfg: Config, ablate: bool = False) -> np.ndarray:
    """Decoder input for an episode; ``ablate`` skips graph reasoning and association
    and feeds the raw query features instead."""
    if ablate:
        maps = episode_maps(ep, cfg.region_grid)
        x = decoder_input(ep.query.feat_mid, ep.query.feat_high, [maps[n] for n in MAP_ORDER])
    else:
        x = decoder_input(*instance_features(ep, cfg))
    return x.data


def infer(ep: Episode, params, cfg: Config, ablate: bool = False):
    out_size = ep.query.feat_mid.shape[1:]
    if ablate:
        return decode_features(prepare_input(ep, cfg, ablate=True), params, out_size)
    v0, v1, maps = instance_features(ep, cfg)
    return decode(v0, v1, maps, params, out_size)


def episode_loss(ep: Episode, params, cfg: Config):
    return bce_loss(infer(ep, params, cfg), ep.query.mask)


def fit_decoder(x: np.ndarray, gt: np.ndarray, params, steps: int, lr: float, callback=None):
    """Full-batch SGD on BCE for a fixed decoder input; returns (params, losses).

    ``losses[i]`` is the loss before update ``i``; the final entry is the loss
    after the last update.
    """
    losses = []
    for step in range(steps + 1):
        tape = Tape()
        leaves = {name: tape.leaf(p) for name, p in params.items()}
        loss = bce_loss(decode_features(x, leaves), gt)
        losses.append(loss.item())
        if callback is not None:
            callback(step, losses[-1])
        if step == steps:
            break
        names = list(leaves)
        grads = grad(loss, [leaves[n] for n in names])
        params = sgd_step(params, {n: g.data for n, g in zip(names, grads)}, lr)
    return params, losses


def overfit_episode(ep: Episode, cfg: Config, steps=None, lr=None, ablate=False, callback=None):
    """Fit a fresh decoder (zero output conv, so the initial loss is ln 2) to the query mask."""
    steps = cfg.steps if steps is None else steps
    lr = cfg.lr if lr is None else lr
    params = init_decoder(cfg.channels, cfg.seed, cfg.aspp_rates, zero_output=True)
    x = prepare_input(ep, cfg, ablate)
    return fit_decoder(x, ep.query.mask, params, steps, lr, callback)


