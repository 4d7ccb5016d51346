"""1-way K-shot episodes at feature level: data model, pooling, fixture I/O, generator.

A synthetic generator stands in for the CNN backbone. Each image gets two
feature levels ("mid" and "high"); foreground pixels scatter around a class
mean and background pixels around a separate mean. The query's foreground mean
is displaced by an appearance-variation offset of length ``sigma``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError, DimMismatchError, ForegroundEmptyError, InputError, MissingFileError,
    TensorIOError,
)
from .numerics.io import load_tensor, save_tensor
from .rng import SplitMix64

LEVELS = ("mid", "high")


@dataclass
class Shot:
    """One image at feature level: two C×H×W maps and an optional H×W binary mask."""

    feat_mid: np.ndarray
    feat_high: np.ndarray
    mask: np.ndarray | None = None

    def feat(self, level: str) -> np.ndarray:
        return self.feat_mid if level == "mid" else self.feat_high


@dataclass
class Episode:
    support: list[Shot]
    query: Shot
    class_id: int = 0
    info: dict = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return len(self.support)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.query.feat_mid.shape)

    def validate(self) -> "Episode":
        if not self.support:
            raise InputError("episode needs at least one support shot")
        ref = self.query.feat_mid.shape
        if len(ref) != 3:
            raise DimMismatchError(f"feature maps must be C×H×W, got {ref}")
        for i, shot in enumerate([*self.support, self.query]):
            for level in LEVELS:
                if shot.feat(level).shape != ref:
                    raise DimMismatchError(f"shot {i} {level} dims {shot.feat(level).shape} != {ref}")
            if shot.mask is not None:
                check_mask(shot.mask, ref[1:])
        for i, shot in enumerate(self.support):
            if shot.mask is None:
                raise InputError(f"support shot {i} has no mask")
            if not shot.mask.any():
                raise ForegroundEmptyError(f"support shot {i} mask has no foreground")
        return self


def check_mask(mask: np.ndarray, hw) -> None:
    if mask.shape != tuple(hw):
        raise DimMismatchError(f"mask dims {mask.shape} != {tuple(hw)}")
    if not np.all((mask == 0) | (mask == 1)):
        raise InputError("mask values must be exactly 0 or 1")


def check_feature_mask(f: np.ndarray, m: np.ndarray) -> None:
    if f.ndim != 3 or m.shape != f.shape[1:]:
        raise DimMismatchError(f"feature {f.shape} and mask {m.shape} disagree")
    if not np.any(m):
        raise ForegroundEmptyError("mask has no foreground pixel")


def masked_average_pool(f, m) -> np.ndarray:
    """Per-channel mean of ``f`` (C×H×W) over pixels where ``m`` is 1."""
    f, m = np.asarray(f, dtype=np.float64), np.asarray(m)
    check_feature_mask(f, m)
    sel = m.astype(bool)
    return f[:, sel].sum(axis=1) / sel.sum()


def foreground_sequence(f, m) -> np.ndarray:
    """Foreground feature vectors as rows (N_fg×C), in row-major pixel order."""
    f, m = np.asarray(f, dtype=np.float64), np.asarray(m)
    check_feature_mask(f, m)
    return f.reshape(f.shape[0], -1).T[m.reshape(-1).astype(bool)]


def contiguous_bins(n: int, bins: int) -> list[tuple[int, int]]:
    """Split ``range(n)`` into ``bins`` contiguous near-equal pieces (some may be empty)."""
    return [(b * n // bins, (b + 1) * n // bins) for b in range(bins)]


def adaptive_pool_rows(seq: np.ndarray, bins: int) -> np.ndarray:
    """Average ``seq`` (N×C) into ``bins`` rows; an empty bin takes the global mean."""
    seq = np.asarray(seq, dtype=np.float64)
    if len(seq) == 0:
        raise ForegroundEmptyError("cannot pool an empty sequence")
    if bins < 1:
        raise ConfigError("bin count must be >= 1")
    glob = seq.mean(axis=0)
    return np.stack([seq[a:b].mean(axis=0) if b > a else glob for a, b in contiguous_bins(len(seq), bins)])


# generator -------------------------------------------------------------------

@dataclass
class GeneratorConfig:
    channels: int = 8
    height: int = 16
    width: int = 16
    shots: int = 1
    sigma: float = 0.0
    noise_mid: float = 0.6
    noise_high: float = 0.4
    num_classes: int = 20

    def validate(self) -> "GeneratorConfig":
        if min(self.channels, self.height, self.width) < 2:
            raise ConfigError("channels, height and width must be >= 2")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.sigma < 0 or self.noise_mid < 0 or self.noise_high < 0:
            raise ConfigError("sigma and noise levels must be >= 0")
        if self.num_classes < 1:
            raise ConfigError("num_classes must be >= 1")
        return self


def _f32(x: np.ndarray) -> np.ndarray:
    # keep generated values exactly representable in the float32 file payload
    return x.astype(np.float32).astype(np.float64)


def random_ellipse_mask(rng: SplitMix64, h: int, w: int) -> np.ndarray:
    cy = rng.uniform(low=0.25 * h, high=0.75 * h)
    cx = rng.uniform(low=0.25 * w, high=0.75 * w)
    ry = rng.uniform(low=h / 6, high=h / 3)
    rx = rng.uniform(low=w / 6, high=w / 3)
    yy, xx = np.mgrid[0:h, 0:w]
    mask = (((yy + 0.5 - cy) / ry) ** 2 + ((xx + 0.5 - cx) / rx) ** 2 <= 1.0).astype(np.float64)
    mask[min(int(cy), h - 1), min(int(cx), w - 1)] = 1.0
    return mask


def _unit(rng: SplitMix64, c: int) -> np.ndarray:
    v = rng.normal(c)
    return v / np.linalg.norm(v)


def _render(rng, mask, fg_mean, bg_mean, noise):
    c = len(fg_mean)
    h, w = mask.shape
    mean = np.where(mask[None].astype(bool), fg_mean[:, None, None], bg_mean[:, None, None])
    return _f32(mean + noise * rng.normal((c, h, w)))


def generate_episode(seed: int, cfg: GeneratorConfig | None = None) -> Episode:
    """Synthetic episode; a pure function of ``(seed, cfg)``."""
    cfg = (cfg or GeneratorConfig()).validate()
    rng = SplitMix64(seed)
    c, h, w = cfg.channels, cfg.height, cfg.width
    class_id = rng.integers(0, cfg.num_classes)
    noise = {"mid": cfg.noise_mid, "high": cfg.noise_high}
    means = {}
    for level in LEVELS:
        fg = rng.normal(c)
        bg = rng.normal(c)
        shift = cfg.sigma * _unit(rng, c)
        means[level] = (fg, bg, fg + shift)

    shots = []
    for _ in range(cfg.shots):
        mask = random_ellipse_mask(rng, h, w)
        feats = {lv: _render(rng, mask, means[lv][0], means[lv][1], noise[lv]) for lv in LEVELS}
        shots.append(Shot(feats["mid"], feats["high"], mask))
    qmask = random_ellipse_mask(rng, h, w)
    qfeats = {lv: _render(rng, qmask, means[lv][2], means[lv][1], noise[lv]) for lv in LEVELS}
    info = {
        "seed": int(seed),
        "sigma": float(cfg.sigma),
        "support_fg_mean": {lv: means[lv][0].tolist() for lv in LEVELS},
        "query_fg_mean": {lv: means[lv][2].tolist() for lv in LEVELS},
        "bg_mean": {lv: means[lv][1].tolist() for lv in LEVELS},
    }
    return Episode(shots, Shot(qfeats["mid"], qfeats["high"], qmask), class_id, info).validate()


# fixture I/O -----------------------------------------------------------------

MANIFEST = "manifest.json"


def save_episode(ep: Episode, out_dir) -> Path:
    """Write tensors (STNSR1) plus ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def put(name, arr):
        save_tensor(out / name, arr)
        return name

    shots = []
    for i, s in enumerate(ep.support):
        shots.append({
            "feat_mid": put(f"shot{i}_mid.stnsr", s.feat_mid),
            "feat_high": put(f"shot{i}_high.stnsr", s.feat_high),
            "mask": put(f"shot{i}_mask.stnsr", s.mask),
        })
    query = {
        "feat_mid": put("query_mid.stnsr", ep.query.feat_mid),
        "feat_high": put("query_high.stnsr", ep.query.feat_high),
    }
    if ep.query.mask is not None:
        query["mask"] = put("query_mask.stnsr", ep.query.mask)
    manifest = {"class_id": int(ep.class_id), "shots": shots, "query": query}
    if ep.info:
        manifest["info"] = ep.info
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _resolve_manifest(path) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST
    if not p.is_file():
        raise MissingFileError(f"no episode manifest at {p}")
    return p


def load_episode(manifest_path) -> Episode:
    """Load an episode from a manifest file or a directory containing ``manifest.json``."""
    path = _resolve_manifest(manifest_path)
    try:
        manifest = json.loads(path.read_text())
        shots_spec = manifest["shots"]
        query_spec = manifest["query"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise TensorIOError(f"{path}: malformed manifest ({exc})") from exc
    root = path.parent

    def shot(spec, need_mask):
        mask = spec.get("mask")
        if need_mask and mask is None:
            raise TensorIOError(f"{path}: support shot without mask")
        return Shot(
            load_tensor(root / spec["feat_mid"]),
            load_tensor(root / spec["feat_high"]),
            None if mask is None else load_tensor(root / mask),
        )

    support = [shot(s, True) for s in shots_spec]
    ep = Episode(support, shot(query_spec, False), int(manifest.get("class_id", 0)), manifest.get("info", {}))
    return ep.validate()
