# # How many bits does the predictor need?
#
# The predictor is a quantized copy of W1 used only to guess which neurons
# left their range. Its errors show up as missed fixes (recall) or wasted
# fixes (precision).

# %%
import numpy as np

from ffnfold import fold_model, folded_params, gen_synthetic
from ffnfold.predictor import build_predictor, flag_stats, predict_flags
from ffnfold.runtime import oracle_flags

model = gen_synthetic(d=32, layers=1, seed=5, bias_scale=0.1)
rng = np.random.default_rng(1)
calib, x = rng.standard_normal((3000, 32)), rng.standard_normal((3000, 32))
layer = fold_model(model, calib, 0.85, bits=0).layers[0]
truth = oracle_flags(layer, x)

# %%
for bits in (2, 3, 4, 8, 32):
    pred = build_predictor(layer.original.w1, bits)
    flags = predict_flags(pred, layer.original.b1, x, layer.l1, layer.l2)
    stats = flag_stats(flags, truth)
    ratio = folded_params(layer.d, layer.h, bits)["compression_ratio"]
    print(f"{bits:>2} bits: recall {stats['recall']:.4f}  precision {stats['precision']:.4f}  "
          f"compression {ratio:.3f}")

# %% [markdown]
# 32 bits is the exact-weight bypass: it reproduces the oracle flags but
# eats most of the parameter savings.
