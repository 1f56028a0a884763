"""Shared fixtures: the reference two-user instance and small source stubs."""
from fractions import Fraction as F

import numpy as np

from nomasched.core import TIE_STOCHASTIC, TieBreakRule, enumerate_virtual_users
from nomasched.oracle import FiniteSupportInstance


def two_user_instance(**kw):
    """Two-user full family with quarter-probability marginals; thresholds
    (1/10, 0) with the reference tie table reach shares (1/2, 3/4)."""
    family = enumerate_virtual_users(2, 2)
    marginals = (
        ((F(1, 10), F(1, 2)), (F(1, 5), F(1, 2))),
        ((F(1, 5), F(1, 2)), (F(3, 10), F(1, 2))),
        ((F(1, 10), F(3, 4)), (F(2, 5), F(1, 4))),
    )
    return FiniteSupportInstance(family, marginals, **kw)


def reference_ties():
    return TieBreakRule(
        TIE_STOCHASTIC,
        table={(0, 1, 2): (F(1, 3), F(2, 3), F(0)), (0, 1): (F(0), F(1), F(0))},
    )


class FloatOnlyView:
    """Finite-support source with the exact-support hook hidden, to force
    float decision paths."""

    def __init__(self, instance):
        self._instance = instance
        self.family = instance.family
        self.bound = instance.bound

    def sample_values(self, rng, count):
        return self._instance.sample_values(rng, count)


class GaussianSource:
    """Continuous source; ties have probability zero."""

    bound = None

    def __init__(self, family, means, scale=1.0):
        self.family = family
        self.means = np.asarray(means, dtype=float)
        self.scale = scale

    def sample_values(self, rng, count):
        return rng.normal(self.means, self.scale, size=(count, len(self.means)))


class ConstantSource:
    def __init__(self, family, values):
        self.family = family
        self.values = np.asarray(values, dtype=float)
        self.bound = float(np.abs(self.values).max())

    def sample_values(self, rng, count):
        return np.tile(self.values, (count, 1))
