"""Minimal dense networks with explicit backprop, plus Adam.

Kept dependency-free (numpy only) so forward/backward stay deterministic and
directly checkable against finite differences.
"""
from __future__ import annotations

import numpy as np


def relu(x):
    return np.maximum(x, 0.0)


class Mlp:
    """Fully-connected net: ReLU on hidden layers, linear output.

    Parameters live in ``weights`` (in x out) and ``biases`` lists. Hidden
    layers are initialized U(-1/sqrt(fan_in), +1/sqrt(fan_in)); the output
    layer U(-out_scale, +out_scale) so initial outputs start near zero.
    """

    def __init__(self, widths, rng: np.random.Generator | None = None, out_scale: float = 3e-3):
        self.widths = list(widths)
        self.weights = []
        self.biases = []
        for i in range(len(widths) - 1):
            fan_in, fan_out = widths[i], widths[i + 1]
            if rng is None:
                w = np.zeros((fan_in, fan_out))
                b = np.zeros(fan_out)
            else:
                last = i == len(widths) - 2
                bound = out_scale if last else 1.0 / np.sqrt(fan_in)
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
                b = rng.uniform(-bound, bound, size=fan_out)
            self.weights.append(w)
            self.biases.append(b)

    @property
    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def set_params(self, params):
        n = len(self.weights)
        self.weights = [np.array(p) for p in params[:n]]
        self.biases = [np.array(p) for p in params[n:]]

    def copy(self) -> "Mlp":
        out = Mlp(self.widths)
        out.set_params([p.copy() for p in self.params])
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_full(x)
        return y

    def forward_full(self, x: np.ndarray):
        """Forward pass keeping per-layer inputs and pre-activations."""
        inputs = []
        pre = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(a)
            z = a @ w + b
            pre.append(z)
            a = z if i == last else relu(z)
        return a, (inputs, pre)

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (param_grads ordered like .params, d(loss)/d(input)).
        """
        inputs, pre = cache
        gw = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        g = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                g = g * (pre[i] > 0.0)
            gw[i] = inputs[i].T @ g
            gb[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return gw + gb, g


class Adam:
    """Standard Adam over a flat list of parameter arrays."""

    def __init__(self, shapes, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self, params, grads, lr: float):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def soft_update(target_params, online_params, tau: float):
    """In-place convex blend: target <- tau*online + (1-tau)*target."""
    for t, o in zip(target_params, online_params):
        t *= 1.0 - tau
        t += tau * o
