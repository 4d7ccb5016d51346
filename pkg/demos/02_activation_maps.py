"""The four activation maps for one episode, rendered as ASCII.

Pixel matching scores each query pixel by its best cosine match among support
foreground pixels. Region matching does the same on an r×r grid of pooled
cells, which is coarser but less noisy.
"""

import numpy as np

from sigcn import GeneratorConfig, generate_episode
from sigcn.head import iou
from sigcn.matching import MAP_ORDER, episode_maps

SHADES = " .:-=+*#%@"


def ascii_map(a):
    return "\n".join("".join(SHADES[min(int(v * len(SHADES)), len(SHADES) - 1)] * 2 for v in row) for row in a)


ep = generate_episode(42, GeneratorConfig(sigma=1.0))
maps = episode_maps(ep, region_grid=4)

print("query ground truth")
print(ascii_map(ep.query.mask))
for name in MAP_ORDER:
    values = maps[name].values
    print(f"\n{name}: IoU of (map >= 0.7) with the query mask = {iou(values >= 0.7, ep.query.mask):.3f}")
    print(ascii_map(values))
