"""Scikit-learn style transformer wrappers around the scaling operations.

The transformers take a :class:`~torsynth.model.Consensus` as ``X`` and
return the scaled consensus from ``transform``, so scaling stages compose
with ``sklearn.pipeline.Pipeline`` and support ``get_params`` /
``set_params`` / ``clone``.
"""

from __future__ import annotations

from typing import Optional

from sklearn.base import BaseEstimator, TransformerMixin

from .consensus_io import AsnTable
from .errors import ParameterError
from .horizontal import HorizontalConfig, scale_horizontal
from .model import Consensus, FamilyPartition
from .vertical import (
    RoleFactors,
    resolve_role_factors,
    scale_by_quantile,
    scale_by_role,
    scale_uniform,
)


def _check_consensus(X) -> Consensus:
    if not isinstance(X, Consensus):
        raise TypeError(f"expected a Consensus, got {type(X).__name__}")
    if len(X) == 0:
        raise ParameterError("consensus must contain at least one relay")
    return X


class UniformWeightScaler(BaseEstimator, TransformerMixin):
    """Multiply every relay weight by a constant factor."""

    def __init__(self, factor: float = 1.0):
        self.factor = factor

    def fit(self, X: Consensus, y=None) -> "UniformWeightScaler":
        _check_consensus(X)
        return self

    def transform(self, X: Consensus) -> Consensus:
        return scale_uniform(_check_consensus(X), self.factor)


class QuantileWeightScaler(BaseEstimator, TransformerMixin):
    """Scale relays by weight rank with one factor per quantile bucket."""

    def __init__(self, factors: tuple[float, ...] = (1.0,)):
        self.factors = factors

    def fit(self, X: Consensus, y=None) -> "QuantileWeightScaler":
        _check_consensus(X)
        return self

    def transform(self, X: Consensus) -> Consensus:
        return scale_by_quantile(_check_consensus(X), list(self.factors))


class RoleWeightScaler(BaseEstimator, TransformerMixin):
    """Scale relays per role group with guard/exit balancing.

    ``fit`` resolves the balanced per-group factors for inspection
    (``resolved_factors_``); ``transform`` re-balances against the given
    consensus so that the group totals of the transformed input hit their
    requested multiples.
    """

    def __init__(self, f_middle: float = 1.0, f_guard: float = 1.0, f_exit: float = 1.0):
        self.f_middle = f_middle
        self.f_guard = f_guard
        self.f_exit = f_exit

    def _role_factors(self) -> RoleFactors:
        return RoleFactors(self.f_middle, self.f_guard, self.f_exit)

    def fit(self, X: Consensus, y=None) -> "RoleWeightScaler":
        self.resolved_factors_ = resolve_role_factors(
            _check_consensus(X), self._role_factors()
        )
        return self

    def transform(self, X: Consensus) -> Consensus:
        return scale_by_role(_check_consensus(X), self._role_factors())


class HorizontalScaler(BaseEstimator, TransformerMixin):
    """Grow a consensus to ``factor`` times its relay count.

    The family partition and ASN table accompany the consensus as
    constructor parameters; the extended partition of the last transform
    is exposed as ``family_partition_``.
    """

    def __init__(
        self,
        factor: float = 2.0,
        seed: int = 0,
        p_new: float = 0.5,
        role_weights: Optional[RoleFactors] = None,
        partition: Optional[FamilyPartition] = None,
        asn_table: Optional[AsnTable] = None,
    ):
        self.factor = factor
        self.seed = seed
        self.p_new = p_new
        self.role_weights = role_weights
        self.partition = partition
        self.asn_table = asn_table

    def fit(self, X: Consensus, y=None) -> "HorizontalScaler":
        _check_consensus(X)
        return self

    def transform(self, X: Consensus) -> Consensus:
        config = HorizontalConfig(
            f=self.factor,
            seed=self.seed,
            p_new=self.p_new,
            role_weights=self.role_weights,
        )
        partition = self.partition if self.partition is not None else FamilyPartition()
        table = self.asn_table if self.asn_table is not None else AsnTable(())
        scaled, extended = scale_horizontal(
            _check_consensus(X), partition, table, config
        )
        self.family_partition_ = extended
        return scaled
