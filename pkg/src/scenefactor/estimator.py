"""Lightweight sklearn-style estimator base and input validation helpers."""
from __future__ import annotations

import inspect

import numpy as np

from .geometry import Plane2D


class BaseEstimator:
    """get_params/set_params over __init__ keyword arguments, sklearn style."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p.name for p in sig.parameters.values()
                if p.name != "self" and p.kind != p.VAR_KEYWORD]

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in sorted(self.get_params().items()))
        return f"{type(self).__name__}({args})"


class NotFittedError(RuntimeError):
    pass


def check_is_fitted(est, attr: str):
    if getattr(est, attr, None) is None:
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


def check_planes(planes, min_planes: int = 1):
    """Validate a plane collection; returns it as a dict id -> Plane2D."""
    if not isinstance(planes, dict):
        planes = dict(enumerate(planes))
    if len(planes) < min_planes:
        raise ValueError(f"need at least {min_planes} planes, got {len(planes)}")
    for i, p in planes.items():
        if not isinstance(p, Plane2D):
            raise TypeError(f"plane {i} is {type(p).__name__}, expected Plane2D")
    return planes


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
