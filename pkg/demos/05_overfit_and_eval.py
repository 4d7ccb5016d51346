"""Fit a fresh decoder to one episode, then score full and ablated pipelines on a
handful of episodes. The ablation feeds raw query features to the decoder,
skipping graph reasoning and association."""

import numpy as np

from sigcn import Config, generate_episode
from sigcn.head import iou, metrics_report
from sigcn.pipeline import infer, overfit_episode

cfg = Config()
ep = generate_episode(42, cfg.generator())
params, losses = overfit_episode(ep, cfg, steps=200)
for step in (0, 25, 50, 100, 200):
    print(f"step {step:3d}  BCE {losses[step]:.4f}")
print(f"query IoU after fit: {iou(infer(ep, params, cfg).mask, ep.query.mask):.3f}")

cfg = cfg.replace(sigma=1.5, steps=150)
rows = {False: [], True: []}
for seed in range(6):
    ep = generate_episode(seed, cfg.generator())
    for ablate in rows:
        fitted, _ = overfit_episode(ep, cfg, ablate=ablate)
        rows[ablate].append((infer(ep, fitted, cfg, ablate=ablate).mask, ep.query.mask, ep.class_id))

for ablate, items in rows.items():
    report = metrics_report(*zip(*items))
    label = "ablated" if ablate else "full   "
    print(f"{label} mIoU {report['miou_mean']:.3f}  FB-IoU {report['fb_iou']:.3f}  "
          f"mean IoU {np.mean([iou(p, g) for p, g, _ in items]):.3f}")
