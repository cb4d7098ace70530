"""Named parameter collections, the Adam optimizer and JSON checkpoints."""

from __future__ import annotations

import json

import numpy as np

from .autodiff import Tensor, parameter

CHECKPOINT_VERSION = 1


class ParameterSet:
    """An ordered mapping of names to trainable tensors."""

    def __init__(self, params: dict[str, Tensor] | None = None):
        self._params: dict[str, Tensor] = dict(params or {})

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor = parameter(np.asarray(value, dtype=np.float64), name=name)
        self._params[name] = tensor
        return tensor

    def merge(self, other: "ParameterSet", prefix: str = "") -> None:
        for name, tensor in other.items():
            if prefix + name in self._params:
                raise ValueError(f"duplicate parameter name {prefix + name!r}")
            self._params[prefix + name] = tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def tensors(self):
        return list(self._params.values())

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.zero_grad()

    # -- serialization -----------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "params": {name: t.data.tolist() for name, t in self._params.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        if "version" not in state:
            raise ValueError("checkpoint missing mandatory version field")
        if state["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {state['version']!r}")
        for name, value in state["params"].items():
            arr = np.asarray(value, dtype=np.float64)
            if name not in self._params:
                raise ValueError(f"unknown parameter {name!r} in checkpoint")
            if arr.shape != self._params[name].data.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: checkpoint {arr.shape} vs "
                    f"model {self._params[name].data.shape}"
                )
            self._params[name].data = arr
            self._params[name].zero_grad()

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.state_dict(), fh)

    def load(self, path) -> None:
        with open(path) as fh:
            self.load_state_dict(json.load(fh))


class Adam:
    """Standard Adam with bias correction; zeroes gradients after each step."""

    def __init__(self, params: ParameterSet, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self._v = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self):
        self.t += 1
        for name, tensor in self.params.items():
            grad = tensor.grad
            if not np.all(np.isfinite(grad)):
                raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            tensor.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.params.zero_grad()

    def state_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "t": self.t,
            "m": {k: v.tolist() for k, v in self._m.items()},
            "v": {k: v.tolist() for k, v in self._v.items()},
        }


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    """Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)
