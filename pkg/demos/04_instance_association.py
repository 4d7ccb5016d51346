"""Instance association: each query instance receives Gram-matrix messages from
the pooled support instance and from the other query instance."""

import numpy as np

from sigcn import Config, GeneratorConfig, generate_episode
from sigcn.ia import associate, fused_support_instance, gram_message

# the scalar example: vs=1, v0=2, v1=3 gives m0=2, m10=18 and v0~ = (2 + 1 + 9) / 2
one = lambda x: np.full((1, 1, 1), float(x))  # noqa: E731
print("m0 =", gram_message(one(1), one(2)).data.item(), " m10 =", gram_message(one(3), one(2)).data.item())
print("v0~ =", associate(one(2), one(3), one(1))[0].data.item())

cfg = Config()
ep = generate_episode(3, GeneratorConfig())
vs = fused_support_instance([s.feat_high for s in ep.support], [s.mask for s in ep.support], cfg.s)
v0, v1 = ep.query.feat_mid, ep.query.feat_high
print(f"\nsupport instance {vs.shape}")
for a, b in ((0.0, 0.0), (0.5, 0.0), (0.5, 0.5)):
    t0, _ = associate(v0, v1, vs, a, b)
    print(f"alpha={a} beta={b}: rms(v0~) = {np.sqrt(np.mean(t0.data ** 2)):8.2f}  (rms v0 = {np.sqrt(np.mean(v0 ** 2)):.2f})")
print("messages are unnormalized, so the decoder rescales its inputs to unit RMS")
