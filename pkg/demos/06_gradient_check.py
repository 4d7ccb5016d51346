"""Finite-difference check of the tape on a few ops, including a ReLU whose
input sits exactly on the kink, where central differences are meaningless."""

import numpy as np

from sigcn import numerics as nx
from sigcn.checks import gradient_suite
from sigcn.numerics.gradcheck import finite_difference, tape_gradient

x = np.array([[-1.0, 0.0, 0.5]])
fn = lambda a: nx.sum(nx.relu(a))  # noqa: E731
print("tape gradient    ", tape_gradient(fn, [x], 0))
print("central diff     ", finite_difference(fn, [x], 0))
print("kink entries NaN ", finite_difference(fn, [x], 0, skip_kinks=True))

report = gradient_suite(seed=0, instances=2, names=["matmul", "conv2d_dilated", "sigcn_layer", "associate", "decode"])
for name, err in report.items():
    print(f"{name:<16} max rel err {err:.2e}")
