"""Writes data/heart_surrogate: 270 samples, 13 features in [-1, 1], LIBSVM format."""
import numpy as np

rng = np.random.default_rng(20240613)
n, d = 270, 13
# 0 continuous, 1 binary, 2 ordinal with that many levels
kinds = [0, 1, 4, 0, 0, 1, 3, 0, 1, 0, 3, 4, 3]
latent = rng.normal(size=(n, 3))
mix = rng.normal(scale=0.8, size=(3, d))
raw = latent @ mix + rng.normal(scale=0.9, size=(n, d))
cols = []
for j, k in enumerate(kinds):
    z = raw[:, j]
    if k == 0:
        lo, hi = np.quantile(z, [0.01, 0.99])
        v = np.clip(2 * (z - lo) / (hi - lo) - 1, -1, 1)
    elif k == 1:
        v = np.where(z > np.quantile(z, 0.55), 1.0, -1.0)
    else:
        edges = np.quantile(z, np.linspace(0, 1, k + 1)[1:-1])
        v = np.searchsorted(edges, z) * (2.0 / (k - 1)) - 1
    cols.append(v)
x = np.column_stack(cols)
w = rng.normal(size=d)
score = x @ w + 0.3 + rng.normal(scale=1.6, size=n)
thr = np.quantile(score, 150 / 270)
y = np.where(score > thr, 1, -1)
with open("data/heart_surrogate", "w") as f:
    for i in range(n):
        feats = " ".join(f"{j + 1}:{x[i, j]:.6g}" for j in range(d) if x[i, j] != 0)
        f.write(f"{'+1' if y[i] > 0 else '-1'} {feats}\n")
