"""Moments of the triangle count X and perfect-matching count Y in G(n, d),
the linear projection Y* = aX + b, and the concentration experiments.

Monte Carlo runs are split into blocks of DEFAULTS.block_size trials, each
with its own stream; standard errors are delete-one-block jackknife.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .config import CAPS, DEFAULTS
from .counting import count_perfect_matchings, count_triangles
from .errors import CapExceeded, DegenerateX, PreconditionError
from .graph import Graph
from .oracle import regular_classes
from .report import ExperimentReport
from .samplers import batch_regular_pairs, run_blocks
from .stats import jackknife, wilson_interval

PM, TRIANGLES, JOINT = "PM", "TRIANGLES", "JOINT"

# Stream indices of the pilot pass used for Y-bar in tail experiments.
PILOT_OFFSET = 1_000_000


# ---------------------------------------------------------------------------
# Sampling (X, Y)
# ---------------------------------------------------------------------------

def _triangles_batch(pairs: np.ndarray, n: int) -> np.ndarray:
    count = len(pairs)
    adj = np.zeros((count, n, n), dtype=np.float64)
    idx = np.arange(count)[:, None]
    adj[idx, pairs[..., 0], pairs[..., 1]] = 1
    adj[idx, pairs[..., 1], pairs[..., 0]] = 1
    a2 = adj @ adj
    return np.rint(np.einsum("kij,kji->k", a2, adj) / 6).astype(np.int64)


def _pm_batch(pairs: np.ndarray, n: int) -> np.ndarray:
    out = np.empty(len(pairs), dtype=np.float64)
    for t, p in enumerate(pairs):
        rows = [0] * n
        for a, b in p.tolist():
            rows[a] |= 1 << b
            rows[b] |= 1 << a
        out[t] = count_perfect_matchings(Graph(n, tuple(rows)))
    return out


def _stat_block(gen: np.random.Generator, count: int, n: int, d: int, which: str) -> np.ndarray:
    pairs = batch_regular_pairs(n, d, count, gen)
    xs = _triangles_batch(pairs, n).astype(np.float64) if which in (TRIANGLES, JOINT) else np.full(count, np.nan)
    ys = _pm_batch(pairs, n) if which in (PM, JOINT) else np.full(count, np.nan)
    return np.stack([xs, ys], axis=1)


def sample_statistics(n: int, d: int, statistic: str, trials: int, seed: int, *,
                      stream_offset: int = 0, workers: int = 1) -> list[np.ndarray]:
    """Per-block arrays of shape (count, 2) holding (X, Y); the column not
    requested is NaN."""
    if statistic not in (PM, TRIANGLES, JOINT):
        raise PreconditionError(f"unknown statistic {statistic!r}")
    if statistic != TRIANGLES and n > CAPS.pm_exact_n:
        raise CapExceeded(f"PM counting capped at n={CAPS.pm_exact_n}")
    return run_blocks(_stat_block, seed, trials, stream_offset=stream_offset,
                      workers=workers, args=(n, d, statistic))


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimates:
    mean: float
    variance: float
    third_central: float
    fourth_central: float
    trials: int
    standard_errors: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _central(k: int):
    def f(blocks: Sequence[np.ndarray]) -> float:
        v = np.concatenate(blocks)
        return float(((v - v.mean()) ** k).mean())
    return f


def _mean(blocks):
    return float(np.concatenate(blocks).mean())


def _var(blocks):
    return float(np.concatenate(blocks).var(ddof=1))


def moments_from_blocks(blocks: Sequence[np.ndarray]) -> MomentEstimates:
    blocks = list(blocks)
    trials = sum(len(b) for b in blocks)
    m, se_m = jackknife(blocks, _mean)
    v, se_v = jackknife(blocks, _var)
    c3, se3 = jackknife(blocks, _central(3))
    c4, se4 = jackknife(blocks, _central(4))
    return MomentEstimates(m, v, c3, c4, trials,
                           {"mean": se_m, "variance": se_v, "third_central": se3, "fourth_central": se4})


@dataclass(frozen=True)
class JointMoments:
    x: MomentEstimates
    y: MomentEstimates
    covariance: float
    covariance_se: float

    def to_dict(self) -> dict:
        return {"x": self.x.to_dict(), "y": self.y.to_dict(),
                "covariance": self.covariance, "covariance_se": self.covariance_se}


def _cov(blocks):
    v = np.concatenate(blocks)
    return float(np.cov(v[:, 0], v[:, 1], ddof=1)[0, 1])


def estimate_moments(n: int, d: int, statistic: str, trials: int, seed: int, *,
                     workers: int = 1) -> MomentEstimates | JointMoments:
    """Sample moments of X (TRIANGLES), Y (PM), or both (JOINT) over G(n, d)."""
    blocks = sample_statistics(n, d, statistic, trials, seed, workers=workers)
    if statistic == TRIANGLES:
        return moments_from_blocks([b[:, 0] for b in blocks])
    if statistic == PM:
        return moments_from_blocks([b[:, 1] for b in blocks])
    cov, cov_se = jackknife(blocks, _cov)
    return JointMoments(moments_from_blocks([b[:, 0] for b in blocks]),
                        moments_from_blocks([b[:, 1] for b in blocks]), cov, cov_se)


def triangle_reference(d: int) -> float:
    """(d-1)^3 / 6, the limiting mean and variance of X."""
    return (d - 1) ** 3 / 6


def claim_error_scale(n: int, d: int) -> float:
    """Size of the O(d^-4 + d^-3/n + sqrt(d/n) (log n)^3) remainder, constant 1."""
    return d ** -4 + d ** -3 / n + math.sqrt(d / n) * math.log(n) ** 3


# ---------------------------------------------------------------------------
# Projection Y* = aX + b
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionCoefficients:
    a: float
    b: float
    residual_correlation: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def janson_projection(x: Sequence[float], y: Sequence[float]) -> ProjectionCoefficients:
    """a = Cov(X,Y)/Var(X), b = mean(Y) - a mean(X), from paired samples."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise PreconditionError("need at least two paired samples")
    xc = x - x.mean()
    vx = float(xc @ xc)
    if vx == 0:
        raise DegenerateX("sample variance of X is zero")
    a = float(xc @ (y - y.mean())) / vx
    b = float(y.mean() - a * x.mean())
    r = y - (a * x + b)
    rc = r - r.mean()
    yc = y - y.mean()
    rr = float(rc @ rc)
    # a residual at rounding level has no meaningful correlation
    corr = float(xc @ rc) / math.sqrt(vx * rr) if rr > 1e-20 * max(1.0, float(yc @ yc)) else 0.0
    return ProjectionCoefficients(a, b, corr)


@dataclass(frozen=True)
class ExactJoint:
    """Exact law of (X, Y) over G_d(n) as a map (x, y) -> probability."""

    n: int
    d: int
    law: dict

    def moment(self, fx) -> Fraction:
        return sum((p * fx(x, y) for (x, y), p in self.law.items()), Fraction(0))

    @property
    def mean_x(self) -> Fraction:
        return self.moment(lambda x, y: x)

    @property
    def mean_y(self) -> Fraction:
        return self.moment(lambda x, y: y)

    @property
    def var_x(self) -> Fraction:
        return self.moment(lambda x, y: x * x) - self.mean_x ** 2

    @property
    def var_y(self) -> Fraction:
        return self.moment(lambda x, y: y * y) - self.mean_y ** 2

    @property
    def cov(self) -> Fraction:
        return self.moment(lambda x, y: x * y) - self.mean_x * self.mean_y

    def projection(self) -> tuple[Fraction, Fraction]:
        if self.var_x == 0:
            raise DegenerateX("X is constant")
        a = self.cov / self.var_x
        return a, self.mean_y - a * self.mean_x

    def residual_variance(self) -> Fraction:
        """Var[Y - Y*] computed directly from the law."""
        a, b = self.projection()
        m = self.moment(lambda x, y: y - a * x - b)
        return self.moment(lambda x, y: (y - a * x - b) ** 2) - m ** 2


def exact_joint_law(n: int, d: int) -> ExactJoint:
    """(X, Y) law of a uniform d-regular graph, from class representatives
    weighted by class size."""
    classes = regular_classes(n, d)
    total = sum(c.size for c in classes)
    law: dict = {}
    for c in classes:
        key = (count_triangles(c.rep), count_perfect_matchings(c.rep))
        law[key] = law.get(key, Fraction(0)) + Fraction(c.size, total)
    return ExactJoint(n, d, law)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _raw_moment(k: int):
    def f(blocks):
        return float((np.concatenate(blocks) ** k).mean())
    return f


def factorial_moment_check(n: int, d: int, k: int, trials: int, seed: int, *,
                           workers: int = 1) -> ExperimentReport:
    """Sample E[X^k] against E[X]^k + C(k,2) E[X]^(k-1) with E[X] = (d-1)^3/6;
    the discrepancy is expressed in units of E[X]^(k-2)."""
    if k not in (2, 3, 4):
        raise PreconditionError(f"k must be 2, 3 or 4, got {k}")
    blocks = [b[:, 0] for b in sample_statistics(n, d, TRIANGLES, trials, seed, workers=workers)]
    est, se = jackknife(blocks, _raw_moment(k))
    ex = triangle_reference(d)
    pred = ex ** k + math.comb(k, 2) * ex ** (k - 1)
    unit = ex ** (k - 2)
    disc = (est - pred) / unit
    return ExperimentReport(
        "factorial_moments", {"n": n, "d": d, "k": k}, seed, trials,
        estimates={"moment": est, "discrepancy_units": disc},
        stderr={"moment": se},
        references={"prediction": pred, "unit": unit, "mean_reference": ex,
                    "claim_error_scale": claim_error_scale(n, d)},
        checks={"within_3se_plus_unit": abs(est - pred) <= 3 * se + unit})


def factorial_moment_exact(n: int, d: int, k: int) -> dict:
    joint = exact_joint_law(n, d)
    exact = joint.moment(lambda x, y: Fraction(x) ** k)
    ex = Fraction((d - 1) ** 3, 6)
    pred = ex ** k + math.comb(k, 2) * ex ** (k - 1)
    return {"exact": exact, "prediction": pred, "discrepancy_units": (exact - pred) / ex ** (k - 2)}


def _relvar(blocks):
    y = np.concatenate(blocks)
    return float(y.var(ddof=1) / y.mean() ** 2)


def cycle_conditioning_reference(d: int, kmax: int = 200) -> float:
    """Limiting Var[Y]/E[Y]^2 for simple d-regular graphs from the cycle
    expansion exp(sum_{k>=3} 1/(2k(d-1)^k)) - 1; its leading term is
    1/(6(d-1)^3).  Reported next to the 1/(6d^3) prediction."""
    if d < 3:
        return math.nan
    s = sum(1 / (2 * k * (d - 1) ** k) for k in range(3, kmax))
    return math.expm1(s)


def concentration_experiment(n: int, d: int, trials: int, seed: int, exponent: float = 1.1, *,
                             workers: int = 1) -> ExperimentReport:
    """Tail frequency of |Y - Ybar| >= d^-exponent Ybar with Ybar from an
    independent pilot pass, and the relative variance of Y."""
    pilot = sample_statistics(n, d, PM, trials, seed, stream_offset=PILOT_OFFSET, workers=workers)
    ybar = float(np.concatenate([b[:, 1] for b in pilot]).mean())
    blocks = [b[:, 1] for b in sample_statistics(n, d, PM, trials, seed, workers=workers)]
    y = np.concatenate(blocks)
    threshold = d ** -exponent * ybar
    hits = int((np.abs(y - ybar) >= threshold).sum())
    lo, hi = wilson_interval(hits, len(y))
    rv, rv_se = jackknife(blocks, _relvar)
    pred = 1 / (6 * d ** 3)
    ratio = rv / pred
    return ExperimentReport(
        "concentration", {"n": n, "d": d, "exponent": exponent}, seed, trials,
        estimates={"ybar_pilot": ybar, "tail_frequency": hits / len(y), "tail_wilson_3sigma": [lo, hi],
                   "relative_variance": rv, "ratio_to_prediction": ratio},
        stderr={"relative_variance": rv_se},
        references={"prediction_1_over_6d3": pred,
                    "cycle_conditioning_limit": cycle_conditioning_reference(d),
                    "claim_error_scale": claim_error_scale(n, d)},
        checks={"ratio_within_factor_4": 0.25 <= ratio <= 4})


def residual_variance_experiment(n: int, d: int, trials: int, seed: int, *,
                                 workers: int = 1) -> ExperimentReport:
    """Var[Y - Y*]/E[Y]^2 next to Var[Y]/E[Y]^2, with Y* fitted on the same sample."""
    blocks = sample_statistics(n, d, JOINT, trials, seed, workers=workers)

    def resid(bs):
        v = np.concatenate(bs)
        p = janson_projection(v[:, 0], v[:, 1])
        r = v[:, 1] - (p.a * v[:, 0] + p.b)
        return float(r.var(ddof=1) / v[:, 1].mean() ** 2)

    def total(bs):
        return _relvar([b[:, 1] for b in bs])

    def ratio(bs):
        return resid(bs) / total(bs)

    v = np.concatenate(blocks)
    proj = janson_projection(v[:, 0], v[:, 1])
    r_val, r_se = jackknife(blocks, resid)
    t_val, t_se = jackknife(blocks, total)
    q_val, q_se = jackknife(blocks, ratio)
    ystar = proj.a * v[:, 0] + proj.b
    orth = float(np.cov(ystar, ystar - v[:, 1], ddof=1)[0, 1])
    return ExperimentReport(
        "projection", {"n": n, "d": d}, seed, trials,
        estimates={"a": proj.a, "b": proj.b, "residual_relative_variance": r_val,
                   "total_relative_variance": t_val, "residual_fraction": q_val,
                   "cov_ystar_residual": orth, "residual_correlation": proj.residual_correlation},
        stderr={"residual_relative_variance": r_se, "total_relative_variance": t_se,
                "residual_fraction": q_se},
        references={"d_minus_4": d ** -4, "claim_error_scale": claim_error_scale(n, d)},
        checks={"projection_optimal": r_val <= t_val + 3 * t_se})
