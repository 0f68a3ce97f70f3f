"""Analytic probability bounds and the exact privacy auditor."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import Dataset, change_one_distance
from .errors import BetaOutOfRange, InvalidK, InvalidParams, SizeMismatch
from .mechanism import MechanismSpec, build_output_density

Family = Literal["ctm", "spm"]

# advisory threshold standing in for the unspecified constant in the side condition
ADVISORY_FACTOR = 10.0


@dataclass(frozen=True)
class BoundReport:
    kind: str
    parameters: dict
    value: float
    capped: bool = False
    advisory: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            **self.parameters,
            "value": self.value,
            "capped": self.capped,
            "advisory": self.advisory,
        }


def geometric_ratio(n: int, epsilon: float) -> float:
    """R = (1 - e^{-eps*h/2}) / (1 - e^{-eps/2}) with h = floor(n/2); stable for tiny eps."""
    h = n // 2
    return math.expm1(-0.5 * epsilon * h) / math.expm1(-0.5 * epsilon)


def _check_common(n: int, epsilon: float, alpha: float) -> None:
    if n < 3 or n % 2 == 0:
        raise InvalidParams(f"n must be an odd integer >= 3, got {n}")
    if not epsilon > 0:
        raise InvalidParams(f"epsilon must be positive, got {epsilon}")
    if not alpha > 0:
        raise InvalidParams(f"alpha must be positive, got {alpha}")


def _family_factor(n: int, family: str, lam: float | None) -> float:
    """Multiplier on the geometric tail: 1 for CTM, 2*n*lambda for SPM_lambda."""
    if family == "ctm":
        return 1.0
    if family == "spm":
        if lam is None or not lam > 0:
            raise InvalidParams("the spm family needs lambda > 0")
        return 2.0 * n * lam
    raise InvalidParams(f"unknown family {family!r}; expected 'ctm' or 'spm'")


def p_tail_upper(n: int, epsilon: float, alpha: float, k: int, family: Family = "ctm",
                 lam: float | None = None) -> float:
    """Upper bound on Pr[p_alpha(D, M(D)) > k] over the family.

    For SPM_lambda the tail mass picks up the factor 2*n*lambda that appears
    when the sparser worst case is summed.
    """
    return p_tail_report(n, epsilon, alpha, k, family, lam).value


def p_tail_report(n: int, epsilon: float, alpha: float, k: int, family: Family = "ctm",
                  lam: float | None = None) -> BoundReport:
    _check_common(n, epsilon, alpha)
    h = n // 2
    if not (isinstance(k, (int, np.integer)) and 0 <= k < h):
        raise InvalidK(f"k must be an integer in [0, {h - 1}], got {k!r}")
    factor = _family_factor(n, family, lam)
    log_raw = (math.log(factor * geometric_ratio(n, epsilon)) - 0.5 * epsilon * (k + 1)
               - math.log(alpha * (h - k)))
    capped = log_raw >= 0.0
    value = 1.0 if capped else math.exp(log_raw)
    params = {"n": n, "epsilon": epsilon, "alpha": alpha, "k": int(k), "family": family, "lambda": lam}
    return BoundReport("p_tail_upper", params, value, capped)


def k_star(n: int, epsilon: float, alpha: float, beta: float, family: Family = "ctm",
           lam: float | None = None) -> int:
    return k_star_report(n, epsilon, alpha, beta, family, lam).value


def k_star_report(n: int, epsilon: float, alpha: float, beta: float, family: Family = "ctm",
                  lam: float | None = None) -> BoundReport:
    """Level k* with Pr[p_alpha > k*] <= beta when n*epsilon is large enough.

    ``advisory`` is set when n*epsilon < 10*ln(1/(alpha*beta)), where the
    analytic guarantee may not apply.
    """
    if not 0.0 < beta < 1.0 / 3.0:
        raise BetaOutOfRange(f"beta must lie in (0, 1/3), got {beta!r}")
    if not 0.0 < alpha < 1.0:
        raise InvalidParams(f"alpha must lie in (0, 1), got {alpha!r}")
    _check_common(n, epsilon, alpha)
    h = n // 2
    numer = 2.0 if family == "ctm" else 2.0 * _family_factor(n, family, lam)
    arg = numer * geometric_ratio(n, epsilon) / (alpha * beta * h)
    raw = -1.0 + (2.0 / epsilon) * math.log(arg)
    value = max(0, math.ceil(raw))
    advisory = n * epsilon < ADVISORY_FACTOR * math.log(1.0 / (alpha * beta))
    params = {"n": n, "epsilon": epsilon, "alpha": alpha, "beta": beta, "family": family, "lambda": lam}
    return BoundReport("k_star", params, value, capped=raw < 0, advisory=advisory)


def direct_lower_bound(d_co: int, epsilon: float) -> float:
    """Largest success probability any epsilon-DP mechanism can guarantee on two
    datasets at change-one distance d_co with disjoint sets of good outputs."""
    if d_co < 1:
        raise InvalidParams(f"d_co must be >= 1, got {d_co}")
    if not epsilon > 0:
        raise InvalidParams(f"epsilon must be positive, got {epsilon}")
    # e^x / (1 + e^x) = 1 / (1 + e^-x)
    return 1.0 / (1.0 + math.exp(-d_co * epsilon))


def impossibility_floor(epsilon: float) -> float:
    """Failure probability 1/(1+e^eps) that no mechanism can avoid on the impossibility pair."""
    return 1.0 - direct_lower_bound(1, epsilon)


def audit_dp(a: Dataset, b: Dataset, spec: MechanismSpec) -> float:
    """sup over ell of |log f(ell | a) - log f(ell | b)|.

    Both densities are constant between their breakpoints, so the supremum is
    attained on a cell of the merged partition or at one of the breakpoints.
    """
    if a.n != b.n:
        raise SizeMismatch(f"datasets differ in size ({a.n} vs {b.n})")
    if a.m != b.m:
        raise SizeMismatch(f"datasets live on different domains (m={a.m} vs m={b.m})")
    fa = build_output_density(a, spec)
    fb = build_output_density(b, spec)
    edges = np.union1d(np.asarray(fa.score.edges), np.asarray(fb.score.edges))
    mids = 0.5 * (edges[:-1] + edges[1:])
    pts = np.concatenate((edges, mids[edges[1:] > edges[:-1]]))
    from .score import p_alpha_many

    pa = p_alpha_many(a, pts, spec.alpha)
    pb = p_alpha_many(b, pts, spec.alpha)
    diff = -0.5 * spec.epsilon * (pa - pb) - (fa.log_total_mass - fb.log_total_mass)
    return float(np.max(np.abs(diff)))


def group_budget(a: Dataset, b: Dataset, epsilon: float) -> float:
    return change_one_distance(a, b) * epsilon
