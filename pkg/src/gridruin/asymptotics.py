"""Large-capital approximation formulas and ratio validation tables.

Each grid ruin probability behaves like (constant prefactor) * exp(-2cu) as
the initial capital grows; the prefactor depends on the variant and couples
the grid step to the premium rate.  The approximations here plug Monte Carlo
estimates of those prefactors into the closed exponential form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import psi_inf
from .cache import ConstantCache
from .constants import ConstantValue, constant_for_model
from .estimators import Estimate, estimate
from .model import Grid, ModelParams, VariantParams

__all__ = ["Approximation", "RatioRow", "approx", "validate_ratio"]


@dataclass(frozen=True)
class Approximation:
    value: float
    std_error: float
    constant_used: ConstantValue
    formula: str


@dataclass(frozen=True)
class RatioRow:
    u: float
    mc: float
    mc_se: float
    approx: float
    approx_se: float
    ratio: float
    ratio_se: float


def approx(
    variant: str,
    params: ModelParams,
    grid: Grid,
    variant_params: VariantParams | None = None,
    *,
    constant: ConstantValue | None = None,
    n: int = 200_000,
    seed: int = 0,
    cache: ConstantCache | None = None,
) -> Approximation:
    """Variant prefactor times exp(-2cu), with first-order error propagation.

    ``constant`` may be supplied directly (e.g. a stub, or a cached value);
    otherwise the required constants are estimated via
    :func:`gridruin.constants.constant_for_model`.
    """
    if constant is None:
        constant = constant_for_model(
            variant, params, grid, variant_params, n=n, seed=seed, cache=cache
        )
    base = psi_inf(params)
    return Approximation(
        value=constant.estimate * base,
        std_error=constant.std_error * base,
        constant_used=constant,
        formula=variant,
    )


def validate_ratio(
    variant: str,
    u_values,
    c: float,
    grid: Grid,
    variant_params: VariantParams | None = None,
    *,
    method: str = "tilted",
    n: int = 200_000,
    seed: int = 0,
    constant_n: int = 200_000,
    window_mult: float = 2.0,
    cache: ConstantCache | None = None,
    mc_estimates: list[Estimate] | None = None,
) -> list[RatioRow]:
    """MC estimate vs asymptotic approximation over increasing u.

    No pass/fail decision is made here; ratios are reported with a combined
    first-order standard error so callers can apply their own thresholds.
    ``mc_estimates`` allows injecting precomputed (or stubbed) estimates.
    The horizon multiplier defaults to 2 (not the estimator's 1): at the
    default the truncation bias can reach a few percent of exp(-2cu), which
    would contaminate the asymptotic comparison; doubling the window makes
    it negligible against the ratio tolerances.
    """
    u_values = list(u_values)
    if any(b <= a for a, b in zip(u_values, u_values[1:])):
        raise ValueError("u values must be strictly increasing")
    constant = constant_for_model(
        variant,
        ModelParams(c=c, u=u_values[0]),
        grid,
        variant_params,
        n=constant_n,
        seed=seed,
        cache=cache,
    )
    rows = []
    for i, u in enumerate(u_values):
        params = ModelParams(c=c, u=u)
        if mc_estimates is not None:
            mc = mc_estimates[i]
        else:
            mc = estimate(
                variant,
                params,
                grid,
                variant_params,
                method=method,
                n=n,
                seed=seed,
                window_mult=window_mult,
            )
        ap = approx(variant, params, grid, variant_params, constant=constant)
        ratio = mc.value / ap.value
        if mc.value > 0:
            rel = math.hypot(mc.std_error / mc.value, ap.std_error / ap.value)
            ratio_se = ratio * rel
        else:
            ratio_se = float("inf")  # a zero-hit MC run carries no information
        rows.append(
            RatioRow(
                u=u,
                mc=mc.value,
                mc_se=mc.std_error,
                approx=ap.value,
                approx_se=ap.std_error,
                ratio=ratio,
                ratio_se=ratio_se,
            )
        )
    return rows
