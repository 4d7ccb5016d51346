"""Decoder, BCE loss, SGD and segmentation metrics."""

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .errors import ConfigError, InputError, ShapeError
from .numerics import Tensor
from .rng import SplitMix64

DEFAULT_RATES = (1, 2, 4)
NUM_RESIDUAL = 3
PROB_CLAMP = 1e-7
RMS_EPS = 1e-12

DecoderParams = dict  # name -> ndarray (or Tensor leaf while training)


def decoder_shapes(channels: int, in_channels: int | None = None, rates=DEFAULT_RATES) -> dict:
    c = channels
    cin = 2 * c + 4 if in_channels is None else in_channels
    shapes = {"reduce.w": (c, cin, 1, 1), "reduce.b": (c,),
              "aspp.point.w": (c, c, 1, 1), "aspp.point.b": (c,)}
    for r in rates:
        shapes[f"aspp.rate{r}.w"] = (c, c, 3, 3)
        shapes[f"aspp.rate{r}.b"] = (c,)
    shapes["aspp.fuse.w"] = (c, (len(rates) + 1) * c, 1, 1)
    shapes["aspp.fuse.b"] = (c,)
    for i in range(NUM_RESIDUAL):
        shapes[f"res{i}.w"] = (c, c, 3, 3)
        shapes[f"res{i}.b"] = (c,)
    shapes["out.w"] = (1, c, 1, 1)
    shapes["out.b"] = (1,)
    return shapes


def init_decoder(channels: int, seed: int = 0, rates=DEFAULT_RATES, zero_output: bool = False) -> DecoderParams:
    """Weights ~ U[-a, a] with a = sqrt(6 / fan_in); biases start at zero."""
    if channels < 1 or not rates or min(rates) < 1:
        raise ConfigError("decoder needs channels >= 1 and positive ASPP rates")
    rng = SplitMix64(seed)
    params = {}
    for name, shape in decoder_shapes(channels, rates=rates).items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
        else:
            a = np.sqrt(6.0 / int(np.prod(shape[1:])))
            params[name] = rng.uniform(shape, -a, a)
    if zero_output:
        params["out.w"] = np.zeros_like(params["out.w"])
    return params


def _rates(params) -> tuple[int, ...]:
    return tuple(sorted(int(k[len("aspp.rate"):-2]) for k in params if k.startswith("aspp.rate") and k.endswith(".w")))


def rms_normalize(x):
    """Scale a tensor to unit root-mean-square (parameter free)."""
    return nx.div(x, nx.sqrt(nx.add(nx.mean(nx.mul(x, x)), RMS_EPS)))


@dataclass
class Prediction:
    logits: Tensor
    probs: Tensor

    @property
    def mask(self) -> np.ndarray:
        return (self.probs.data > 0.5).astype(np.float64)


def decoder_input(v0, v1, maps):
    """Channel concatenation of two instance features (RMS-scaled) and four maps."""
    h, w = np.shape(v0)[1:]
    planes = [nx.reshape(np.asarray(m, dtype=np.float64), (1, h, w)) for m in maps]
    for m in maps:
        if np.shape(m) != (h, w):
            raise ShapeError(f"activation map {np.shape(m)} does not match features {(h, w)}")
    if np.shape(v1) != np.shape(v0):
        raise ShapeError("instance features disagree in shape")
    return nx.concat([rms_normalize(v0), rms_normalize(v1), *planes], axis=0)


def decode_features(x, params: DecoderParams, out_size=None) -> Prediction:
    """Decoder body on a prepared (2C+4)×H×W input."""
    h, w = np.shape(x)[1:]
    if params["reduce.w"].shape[1] != np.shape(x)[0]:
        raise ShapeError(f"decoder expects {params['reduce.w'].shape[1]} input channels, got {np.shape(x)[0]}")
    out_size = (h, w) if out_size is None else tuple(out_size)
    if out_size[0] < h or out_size[1] < w:
        raise ShapeError(f"output size {out_size} smaller than feature size {(h, w)}")
    p = params
    x = nx.relu(nx.conv2d(x, p["reduce.w"], p["reduce.b"]))
    branches = [nx.relu(nx.conv2d(x, p["aspp.point.w"], p["aspp.point.b"]))]
    for r in _rates(p):
        branches.append(nx.relu(nx.conv2d(x, p[f"aspp.rate{r}.w"], p[f"aspp.rate{r}.b"], dilation=r)))
    x = nx.relu(nx.conv2d(nx.concat(branches, axis=0), p["aspp.fuse.w"], p["aspp.fuse.b"]))
    for i in range(NUM_RESIDUAL):
        x = nx.add(x, nx.relu(nx.conv2d(x, p[f"res{i}.w"], p[f"res{i}.b"])))
    logits = nx.reshape(nx.conv2d(x, p["out.w"], p["out.b"]), (h, w))
    if out_size != (h, w):
        logits = nx.bilinear_resize(logits, out_size)
    return Prediction(logits, nx.sigmoid(logits))


def decode(v0, v1, maps, params: DecoderParams, out_size=None) -> Prediction:
    """Concatenate, then reduce -> ASPP -> residual stack -> 1×1 output -> resize -> sigmoid."""
    return decode_features(decoder_input(v0, v1, maps), params, out_size)


def bce_loss(pred, gt):
    """Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    probs = pred.probs if isinstance(pred, Prediction) else pred
    gt = np.asarray(gt, dtype=np.float64)
    if np.shape(probs) != gt.shape:
        raise ShapeError(f"prediction {np.shape(probs)} and mask {gt.shape} disagree")
    p = nx.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    ll = nx.add(nx.mul(gt, nx.log(p)), nx.mul(1.0 - gt, nx.log(nx.sub(1.0, p))))
    return nx.scale(nx.mean(ll), -1.0)


def sgd_step(params: DecoderParams, grads: DecoderParams, lr: float) -> DecoderParams:
    """Plain SGD update ``p - lr * g``; returns a new dict."""
    if lr <= 0:
        raise ConfigError("learning rate must be > 0")
    if set(params) != set(grads):
        raise ShapeError("parameter and gradient names differ")
    out = {}
    for name, p in params.items():
        p, g = np.asarray(p, dtype=np.float64), np.asarray(grads[name], dtype=np.float64)
        if p.shape != g.shape:
            raise ShapeError(f"{name}: param {p.shape} vs grad {g.shape}")
        out[name] = p - lr * g
    return out


# metrics ---------------------------------------------------------------------

def _pairs(preds, gts):
    if len(preds) != len(gts):
        raise InputError(f"{len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise InputError("no episodes to score")
    out = []
    for p, g in zip(preds, gts):
        p, g = np.asarray(p).astype(bool), np.asarray(g).astype(bool)
        if p.shape != g.shape:
            raise InputError(f"prediction {p.shape} and mask {g.shape} disagree")
        out.append((p, g))
    return out


def _ratio(inter, union):
    return 1.0 if union == 0 else inter / union


def iou(pred, gt) -> float:
    p, g = np.asarray(pred).astype(bool), np.asarray(gt).astype(bool)
    return _ratio(int(np.sum(p & g)), int(np.sum(p | g)))


def miou(preds, gts, class_ids):
    """Foreground IoU per class (intersections and unions summed over that
    class's episodes), and the mean over classes."""
    pairs = _pairs(preds, gts)
    if len(class_ids) != len(pairs):
        raise InputError("class_ids length differs from predictions")
    inter, union = {}, {}
    for (p, g), c in zip(pairs, class_ids):
        c = int(c)
        inter[c] = inter.get(c, 0) + int(np.sum(p & g))
        union[c] = union.get(c, 0) + int(np.sum(p | g))
    per_class = {c: _ratio(inter[c], union[c]) for c in sorted(inter)}
    return per_class, float(np.mean(list(per_class.values())))


def fb_iou(preds, gts) -> float:
    """Mean of foreground and background IoU, each accumulated over all episodes."""
    pairs = _pairs(preds, gts)
    fi = sum(int(np.sum(p & g)) for p, g in pairs)
    fu = sum(int(np.sum(p | g)) for p, g in pairs)
    bi = sum(int(np.sum(~p & ~g)) for p, g in pairs)
    bu = sum(int(np.sum(~p | ~g)) for p, g in pairs)
    return 0.5 * (_ratio(fi, fu) + _ratio(bi, bu))


def metrics_report(preds, gts, class_ids) -> dict:
    per_class, mean = miou(preds, gts, class_ids)
    return {
        "miou_per_class": {str(c): v for c, v in per_class.items()},
        "miou_mean": mean,
        "fb_iou": fb_iou(preds, gts),
    }
