"""Named weight generators used by scenario files and ``mfrac gen-weight``.

A generator spec is a small JSON object with a ``kind`` key:

* ``constant``: ``{"value": c}``
* ``step``: ``{"values": [...]}``, a coarse array refined to the target level
* ``log_uniform``: ``{"seed": s, "range": R, "block_level": b}``, values
  ``exp(U)`` with ``U`` uniform on ``[-log R / 2, log R / 2]``, constant on
  blocks of level ``b``
* ``power``: ``{"x0": [...], "gamma": g}``, cell averages of ``|x - x0|^g``
* ``tensor``: ``{"factors": [spec, spec, ...]}``, each factor on ``n`` axes
* ``file``: ``{"path": "..."}``, a saved GridFunction
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ParameterError, ShapeError
from .grid import GridFunction

KINDS = ("constant", "step", "log_uniform", "power", "tensor", "file")
_POWER_SUBSAMPLES = 16


def _power_1d(level, x0, gamma):
    size = 1 << level
    edges = np.arange(size + 1) / size

    def anti(t):
        return np.sign(t) * np.abs(t) ** (gamma + 1.0) / (gamma + 1.0)

    return (anti(edges[1:] - x0) - anti(edges[:-1] - x0)) * size


def _power_nd(dimension, level, x0, gamma):
    size = 1 << level
    sub = _POWER_SUBSAMPLES
    fine = (np.arange(size * sub) + 0.5) / (size * sub)
    grids = np.meshgrid(*([fine] * dimension), indexing="ij")
    r2 = sum((g - c) ** 2 for g, c in zip(grids, x0))
    vals = r2 ** (gamma / 2.0)
    shape = []
    for _ in range(dimension):
        shape += [size, sub]
    vals = vals.reshape(shape)
    return vals.mean(axis=tuple(range(1, 2 * dimension, 2)))


def generate(spec, dimension, level, base_dir=None):
    """Build a GridFunction from a generator spec on the ``dimension``-torus at ``level``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParameterError("generator spec must be an object with a 'kind'")
    kind = spec["kind"]
    size = 1 << level
    if kind == "constant":
        return GridFunction.constant(dimension, level, float(spec.get("value", 1.0)))
    if kind == "step":
        coarse = GridFunction.from_array(np.asarray(spec["values"], dtype=float))
        if coarse.dimension != dimension:
            raise ShapeError("step values do not match the requested dimension")
        return coarse.refine(level)
    if kind == "log_uniform":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        half = math.log(float(spec.get("range", 10.0))) / 2.0
        block = int(spec.get("block_level", level))
        if not 0 <= block <= level:
            raise ParameterError("block_level must lie in [0, level]")
        coarse = np.exp(rng.uniform(-half, half, size=(1 << block,) * dimension))
        return GridFunction(dimension, block, coarse, True).refine(level)
    if kind == "power":
        gamma = float(spec["gamma"])
        x0 = np.broadcast_to(np.asarray(spec.get("x0", 0.5), dtype=float), (dimension,))
        if gamma <= -dimension:
            raise ParameterError(f"|x - x0|^{gamma} is not locally integrable in dimension {dimension}")
        if dimension == 1:
            vals = _power_1d(level, float(x0[0]), gamma)
        else:
            vals = _power_nd(dimension, level, x0, gamma)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ParameterError("power weight produced nonpositive cell averages")
        return GridFunction(dimension, level, vals.reshape((size,) * dimension), True)
    if kind == "tensor":
        factors = spec["factors"]
        if dimension % len(factors):
            raise ShapeError("tensor factors must split the dimension evenly")
        sub = dimension // len(factors)
        return GridFunction.tensor(*(generate(f, sub, level, base_dir) for f in factors))
    if kind == "file":
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        g = GridFunction.load(path)
        if g.dimension != dimension:
            raise ShapeError(f"{path} has dimension {g.dimension}, expected {dimension}")
        return g if g.level == level else g.refine(level)
    raise ParameterError(f"unknown generator kind {kind!r}; expected one of {KINDS}")


def factor_specs(spec, k=2):
    """Per-factor specs of a product-type spec, or ``None`` when it is not of product type.

    Constants count as products ``c (x) 1 (x) ... (x) 1``.
    """
    if isinstance(spec, dict) and spec.get("kind") == "tensor":
        return list(spec["factors"])
    if isinstance(spec, dict) and spec.get("kind") == "constant":
        return [dict(spec)] + [{"kind": "constant", "value": 1.0}] * (k - 1)
    return None
