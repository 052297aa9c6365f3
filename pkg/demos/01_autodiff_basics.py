"""A tour of the reverse-mode kernel: records, tensors, and gradients.

Every differentiable value is a float64 array tracked on a Record. Running
an operation appends a node; Record.backward walks the node list in reverse
and accumulates gradients. There is no graph caching and no dtype zoo, which
keeps the rules small enough to check by hand.
"""

import numpy as np

import darter.autodiff as ad
from darter.autodiff import ParamStore, Record, constant
from darter.gradcheck import max_relative_error, numeric_gradients

# A ParamStore owns named parameter arrays with seeded initialization.
# Binding the store to a Record produces tracked leaf tensors.
store = ParamStore(seed=0)
store.add_uniform("w", (3, 2), fan_in=3)
store.add_zeros("b", (2,))

record = Record()
bound = store.bind(record)
x = constant(np.array([[0.5, -1.0, 2.0]]))

# y = tanh(x @ w + b), summed to a scalar loss.
y = ad.tanh(ad.broadcast_add(ad.matmul(x, bound["w"]), bound["b"]))
loss = ad.sum_all(y)
print("forward value:", loss.item())

# backward() fills per-node gradients; grad() reads them back by tensor.
record.backward(loss)
print("d loss / d w:\n", record.grad(bound["w"]))
print("d loss / d b:", record.grad(bound["b"]))

# The analytic gradients agree with central finite differences. The checker
# perturbs the store in place and re-runs a forward-only closure, so it never
# touches the backward rules it is auditing.


def loss_value():
    rec = Record(recording=False)
    leaves = store.bind(rec)
    out = ad.tanh(ad.broadcast_add(ad.matmul(x, leaves["w"]), leaves["b"]))
    return ad.sum_all(out).item()


analytic = {name: record.grad(bound[name]) for name in store.names()}
numeric = numeric_gradients(loss_value, store)
print("max relative error vs finite differences:",
      f"{max_relative_error(analytic, numeric):.2e}")

# Gradients accumulate when a tensor is used twice.
record2 = Record()
bound2 = store.bind(record2)
w = bound2["w"]
twice = ad.sum_all(ad.add(w, w))
record2.backward(twice)
print("\nreusing a tensor doubles its gradient:",
      np.unique(record2.grad(w)))

# take() gathers rows and scatter-adds on the way back, so duplicate
# indices sum their contributions; this is how the embedding table learns.
record3 = Record()
bound3 = store.bind(record3)
gathered = ad.take(bound3["w"], [0, 0, 2], axis=0)
record3.backward(ad.sum_all(gathered))
print("row gradients after gathering rows [0, 0, 2]:\n",
      record3.grad(bound3["w"]))
