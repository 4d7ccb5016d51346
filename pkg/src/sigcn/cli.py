"""Command-line entry point: ``sigcn {gen,infer,gradcheck,overfit,eval,viz}``.

Errors go to stderr as ``error[<category>]: <message>`` with exit status 1.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .checks import DEFAULT_TOLERANCE, gradient_suite
from .config import load_config
from .episodes import MANIFEST, generate_episode, load_episode, save_episode
from .errors import InputError, MissingFileError, SigcnError, TensorIOError
from .head import init_decoder, metrics_report
from .matching import MAP_ORDER, episode_maps, min_max_normalize
from .numerics.io import load_tensor
from .pipeline import infer, overfit_episode
from .viz import write_pgm


def _config(args, **extra):
    overrides = {k: getattr(args, k, None) for k in ("seed", "shots", "sigma", "channels", "height", "width")}
    overrides.update(extra)
    return load_config(getattr(args, "config", None), **overrides)


def _load_params(path, cfg):
    if path is None:
        return init_decoder(cfg.channels, cfg.seed, cfg.aspp_rates)
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(f"no parameter file at {p}")
    with np.load(p) as data:
        return {k: data[k].astype(np.float64) for k in data.files}


def _dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_gen(args):
    cfg = _config(args)
    manifest = save_episode(generate_episode(cfg.seed, cfg.generator()), args.out)
    print(manifest)
    return 0


def _match_episode(cfg, ep):
    c, h, w = ep.dims
    return cfg.replace(channels=c, height=h, width=w, shots=ep.shots)


def run_inference(episode_dir, cfg, params_path, out_dir):
    """Write mask/map PGMs (and metrics when the query has a mask); returns (episode, prediction)."""
    ep = load_episode(episode_dir)
    cfg = _match_episode(cfg, ep)
    params = _load_params(params_path, cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pred = infer(ep, params, cfg)
    write_pgm(out / "pred_mask.pgm", pred.mask)
    maps = episode_maps(ep, cfg.region_grid)
    for name in MAP_ORDER:
        write_pgm(out / f"act_{name}.pgm", maps[name].values)
    if ep.query.mask is not None:
        _dump_json(out / "metrics.json", metrics_report([pred.mask], [ep.query.mask], [ep.class_id]))
    return ep, pred


def cmd_infer(args):
    cfg = _config(args)
    run_inference(args.episode, cfg, args.params, args.out)
    print(args.out)
    return 0


def cmd_gradcheck(args):
    report = gradient_suite(args.seed, args.instances)
    ok = True
    print(f"{'op':<20} {'max_rel_err':>12}  status")
    for name, err in report.items():
        passed = err <= args.tolerance
        ok &= passed
        print(f"{name:<20} {err:>12.3e}  {'ok' if passed else 'FAIL'}")
    print(f"tolerance {args.tolerance:g}: {'passed' if ok else 'FAILED'}")
    return 0 if ok else 1


def cmd_overfit(args):
    ep = load_episode(args.episode)
    cfg = _match_episode(_config(args, steps=args.steps, lr=args.lr), ep)
    if ep.query.mask is None:
        raise InputError("overfitting needs a query mask")
    print("step,loss")
    params, _ = overfit_episode(ep, cfg, callback=lambda i, loss: print(f"{i},{loss:.10g}"))
    if args.save_params:
        np.savez(args.save_params, **params)
    return 0


def _episode_paths(args):
    paths = list(args.episodes)
    if args.list:
        lst = Path(args.list)
        if not lst.is_file():
            raise MissingFileError(f"no episode list at {lst}")
        paths += [ln.strip() for ln in lst.read_text().splitlines() if ln.strip()]
    if not paths:
        raise InputError("no episodes given")
    return paths


def cmd_eval(args):
    base = _config(args)
    preds, gts, classes = [], [], []
    for path in _episode_paths(args):
        ep = load_episode(path)
        cfg = _match_episode(base, ep)
        if ep.query.mask is None:
            raise InputError(f"{path}: query has no ground-truth mask")
        if args.predictor == "oracle":
            mask = ep.query.mask
        elif args.predictor == "overfit":
            fitted, _ = overfit_episode(ep, cfg)
            mask = infer(ep, fitted, cfg).mask
        else:
            mask = infer(ep, _load_params(args.params, cfg), cfg).mask
        preds.append(mask)
        gts.append(ep.query.mask)
        classes.append(ep.class_id)
    report = metrics_report(preds, gts, classes)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_viz(args):
    src = Path(args.input)
    values = load_tensor(src)
    if values.ndim == 3 and values.shape[0] == 1:
        values = values[0]
    if values.ndim != 2:
        raise TensorIOError(f"{src}: viz needs an H×W tensor, got dims {list(values.shape)}")
    if args.normalize:
        values = min_max_normalize(values)
    write_pgm(args.out, values)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigcn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=None):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=seed_default)

    p = sub.add_parser("gen", help="write a synthetic episode")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--shots", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--channels", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("infer", help="run the full pipeline on an episode")
    common(p)
    p.add_argument("episode", help=f"episode directory or {MANIFEST}")
    p.add_argument("--params", help="decoder parameters (.npz); default: seeded init")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("gradcheck", help="finite-difference check of every differentiable op")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--instances", type=int, default=20)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("overfit", help="fit a fresh decoder to one episode; prints a loss CSV")
    common(p)
    p.add_argument("episode")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--save-params")
    p.set_defaults(func=cmd_overfit)

    p = sub.add_parser("eval", help="batch inference and mIoU / FB-IoU")
    common(p)
    p.add_argument("episodes", nargs="*")
    p.add_argument("--list", help="text file with one episode path per line")
    p.add_argument("--predictor", choices=("params", "overfit", "oracle"), default="params")
    p.add_argument("--params")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("viz", help="export an H×W STNSR1 tensor as an 8-bit PGM")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--normalize", action="store_true", help="min-max normalize first")
    p.set_defaults(func=cmd_viz)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SigcnError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
    except ArithmeticError as exc:
        print(f"error[numeric]: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
