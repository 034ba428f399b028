# # Folding a two-neuron FFN by hand
#
# A feed-forward block computes act(x W1 + b1) W2 + b2. If each neuron's
# activation is replaced by a line a*z + b, the whole block collapses into
# one d x d matrix C plus a bias vector B.

# %%
import numpy as np

from ffnfold import FfnLayer, NeuronApprox, fold_layer, infer_speculative
from ffnfold.activations import evaluate
from ffnfold.runtime import fix_results, oracle_flags

# %% [markdown]
# Two inputs and two neurons. Neuron one reads (3, -1) and writes (-1, 0);
# neuron two reads (1, 2) and writes (1, 1).

# %%
w1 = np.array([[3.0, 1.0], [-1.0, 2.0]])
w2 = np.array([[-1.0, 0.0], [1.0, 1.0]])
layer = FfnLayer(w1, np.zeros(2), "gelu", w2, np.zeros(2))

approx = [NeuronApprox(-1.5, 0.12, 0.25, 0.1), NeuronApprox(-3.5, -0.1, 0.1, 0.2)]
folded = fold_layer(layer, approx)
print("C =\n", folded.c)
print("B =", folded.bfold)

# %% [markdown]
# The speculative pass is a single matrix product.

# %%
x = np.array([[-1.0, -1.0]])
y_spec = infer_speculative(folded, x)
print("xC + B =", y_spec[0])

# %% [markdown]
# For x = (-1, -1) neuron one sees z = -2, which lies outside its range
# [-1.5, 0.12). Fixing removes the baked-in line value (0.25 * -2 + 0.1 = -0.4)
# times its W2 row and adds the true GELU value instead.

# %%
flags = oracle_flags(folded, x)
print("flags:", flags[0])
z = x @ w1
line_term = (0.25 * z[0, 0] + 0.1) * w2[0]
print("subtracted term:", -line_term)
y_fixed = fix_results(folded, x, y_spec, flags)
print("fixed output:  ", y_fixed[0])
print("exact output:  ", (evaluate("gelu", z) @ w2)[0])
