"""Binomial opinion algebra.

Opinions are immutable ``(b, d, u, a)`` tuples over a binary proposition.
They are built from evidence counts, mapped to Beta distributions, and
combined with negation, cumulative fusion and the refuting challenger.

Every operation is a pure function returning a new :class:`Opinion`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    BaseRateMismatch,
    DogmaticOpinion,
    InvalidEvidence,
    InvalidOpinion,
    InvalidTarget,
)

# Mass sums further than this from 1 are rejected.
MASS_TOLERANCE = 1e-9
# Mass sums closer than this to 1 are left exactly as given.
_RENORM_THRESHOLD = 1e-12
BASE_RATE_TOLERANCE = 1e-9

DEFAULT_PRIOR_WEIGHT = 2.0
DEFAULT_BASE_RATE = 0.5


def _unit(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or value < -MASS_TOLERANCE or value > 1.0 + MASS_TOLERANCE:
        raise InvalidOpinion(f"{name}={value!r} outside [0, 1]")
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class Opinion:
    """Binomial opinion with belief, disbelief, uncertainty and base rate.

    Construction clamps components that stray from [0, 1] by at most
    ``MASS_TOLERANCE`` and renormalises small mass-sum drift by rescaling
    ``b`` and ``d`` (``u`` is kept exactly). Larger violations raise
    :class:`InvalidOpinion`.
    """

    b: float
    d: float
    u: float
    a: float = DEFAULT_BASE_RATE

    def __post_init__(self):
        b = _unit("b", self.b)
        d = _unit("d", self.d)
        u = _unit("u", self.u)
        a = _unit("a", self.a)
        total = b + d + u
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise InvalidOpinion(f"b+d+u={total!r}, expected 1")
        if abs(total - 1.0) > _RENORM_THRESHOLD:
            committed = b + d
            if committed > 0.0:
                scale = (1.0 - u) / committed
                b, d = b * scale, d * scale
            else:
                u = 1.0
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "a", a)

    @classmethod
    def vacuous(cls, a: float = DEFAULT_BASE_RATE) -> "Opinion":
        return cls(0.0, 0.0, 1.0, a)

    @property
    def is_dogmatic(self) -> bool:
        return self.u == 0.0

    def as_dict(self) -> dict[str, float]:
        return {"b": self.b, "d": self.d, "u": self.u, "a": self.a}

    def __iter__(self):
        # allows ``b, d, u, a = op``
        return iter((self.b, self.d, self.u, self.a))


@dataclass(frozen=True)
class EvidenceCounts:
    """Positive (``r``) and negative (``s``) observation tallies.

    Counts may be fractional to allow discounted evidence.
    """

    r: float
    s: float
    W: float = DEFAULT_PRIOR_WEIGHT

    def __post_init__(self):
        for name in ("r", "s", "W"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
                raise InvalidEvidence(f"{name}={value!r} is not a number")
        if self.r < 0 or self.s < 0:
            raise InvalidEvidence(f"negative evidence r={self.r}, s={self.s}")
        if not (self.W > 0 and math.isfinite(self.W)):
            raise InvalidEvidence(f"prior weight W={self.W} must be positive")
        if not (math.isfinite(self.r) and math.isfinite(self.s)):
            raise InvalidEvidence("evidence counts must be finite")

    def as_dict(self) -> dict[str, float]:
        return {"r": self.r, "s": self.s, "W": self.W}


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        total = self.alpha + self.beta
        return self.alpha * self.beta / (total * total * (total + 1.0))


@dataclass(frozen=True)
class ConfidenceMetrics:
    first_order: float
    projected_probability: float
    beta_variance: float


def vacuous(a: float = DEFAULT_BASE_RATE) -> Opinion:
    return Opinion.vacuous(a)


def opinion_from_evidence(counts: EvidenceCounts, a: float = DEFAULT_BASE_RATE) -> Opinion:
    """Map evidence counts to an opinion: ``b = r/n``, ``d = s/n``, ``u = W/n``
    with ``n = r + s + W``."""
    n = counts.r + counts.s + counts.W
    return Opinion(counts.r / n, counts.s / n, counts.W / n, a)


def evidence_of(op: Opinion, W: float = DEFAULT_PRIOR_WEIGHT) -> EvidenceCounts:
    """Inverse of :func:`opinion_from_evidence` for non-dogmatic opinions."""
    if op.u <= 0.0:
        raise DogmaticOpinion("opinion with u=0 corresponds to infinite evidence")
    return EvidenceCounts(W * op.b / op.u, W * op.d / op.u, W)


def opinion_to_beta(op: Opinion, W: float = DEFAULT_PRIOR_WEIGHT) -> BetaParams:
    counts = evidence_of(op, W)
    return BetaParams(counts.r + op.a * W, counts.s + (1.0 - op.a) * W)


def projected_probability(op: Opinion) -> float:
    return op.b + op.a * op.u


def negate(op: Opinion) -> Opinion:
    return Opinion(op.d, op.b, op.u, 1.0 - op.a)


def cbf_fuse(op_a: Opinion, op_b: Opinion) -> Opinion:
    """Cumulative belief fusion of two independent opinions on the same claim.

    Both opinions must share a base rate. Two dogmatic inputs are averaged
    (the equal-weight limit of the general formula).
    """
    if abs(op_a.a - op_b.a) > BASE_RATE_TOLERANCE:
        raise BaseRateMismatch(f"base rates differ: {op_a.a} vs {op_b.a}")
    kappa = op_a.u + op_b.u - op_a.u * op_b.u
    if kappa <= 0.0:
        return Opinion((op_a.b + op_b.b) / 2.0, (op_a.d + op_b.d) / 2.0, 0.0, op_a.a)
    return Opinion(
        (op_a.b * op_b.u + op_b.b * op_a.u) / kappa,
        (op_a.d * op_b.u + op_b.d * op_a.u) / kappa,
        (op_a.u * op_b.u) / kappa,
        op_a.a,
    )


def refuting_challenge(challenger: Opinion, target: Opinion) -> Opinion:
    """Move a share of the target's belief, equal to the challenger's
    belief, into disbelief. Uncertainty and base rate of the target are
    untouched; the challenger's base rate plays no role.
    """
    moved = target.b * challenger.b
    return Opinion(target.b - moved, target.d + moved, target.u, target.a)


def inject_uncertainty(op: Opinion, target_u: float) -> Opinion:
    """Raise uncertainty to ``target_u`` by scaling ``b`` and ``d`` down in
    proportion, which keeps their ratio."""
    target_u = float(target_u)
    if target_u > 1.0 + MASS_TOLERANCE:
        raise InvalidTarget(f"target uncertainty {target_u} exceeds 1")
    if target_u < op.u - MASS_TOLERANCE:
        raise InvalidTarget(f"target uncertainty {target_u} below current {op.u}")
    target_u = min(max(target_u, op.u), 1.0)
    if target_u == op.u:
        return op
    scale = 0.0 if op.u >= 1.0 else (1.0 - target_u) / (1.0 - op.u)
    return Opinion(op.b * scale, op.d * scale, target_u, op.a)


def confidence_metrics(op: Opinion, W: float = DEFAULT_PRIOR_WEIGHT) -> ConfidenceMetrics:
    if op.is_dogmatic:
        variance = 0.0
    else:
        counts = evidence_of(op, W)
        alpha = counts.r + op.a * W
        beta = counts.s + (1.0 - op.a) * W
        total = alpha + beta
        # alpha or beta is 0 only for a in {0, 1}: a point mass, variance 0
        variance = alpha * beta / (total * total * (total + 1.0))
    return ConfidenceMetrics(
        first_order=1.0 - op.u,
        projected_probability=projected_probability(op),
        beta_variance=variance,
    )


def beta_pdf(x: float, params: BetaParams) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    a, b = params.alpha, params.beta
    log_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    return math.exp(log_norm + (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x))


def beta_pdf_samples(
    params: BetaParams, n_points: int = 201, *, offset: float = 1e-6
) -> list[tuple[float, float]]:
    """Evaluate the Beta density on ``n_points`` evenly spaced points of
    ``[offset, 1 - offset]``; the offset keeps the grid inside (0, 1)."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    if not 0.0 < offset < 0.5:
        raise ValueError("offset must lie in (0, 0.5)")
    step = (1.0 - 2.0 * offset) / (n_points - 1)
    xs = [offset + i * step for i in range(n_points)]
    return [(x, beta_pdf(x, params)) for x in xs]
