"""Limit-law machinery: mixture sampling, distribution tests, exact moments.

The weighted-variation statistics converge (after regime-specific
renormalization) to *mixed* Gaussian laws sigma * sqrt(int_0^1 f(B_s)^2 ds) * N
with N independent of B, possibly plus an independent deterministic-integral
shift at the lower critical point.  This module provides:

- a sampler for those limit laws (fine-grid fBm + fresh Gaussians),
- a two-sample Kolmogorov–Smirnov test (weak convergence),
- a conditional characteristic-function test (stable convergence: compares
  E[e^{i lam F} Z] with E[e^{i lam shift - lam^2 S^2/2} Z] over a fixed family
  of bounded functionals Z of the conditional variance),
- exact second/fourth moments of the unweighted second-chaos variation from
  Toeplitz trace identities, the associated Berry–Esseen-type bound, and a
  Monte Carlo check that the observed CDF distance respects it,
- the classical Brownian example F_n = sqrt(n) int t^n W_t dW_t, whose limit
  (1/sqrt(2)) W_1 N exercises the whole stable-convergence pipeline at H=1/2.

Everything is streamed in fixed-size path chunks with counter-based
per-replica randomness, so results are independent of chunk size and
reproducible bit-for-bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.fft
from scipy.linalg import matmul_toeplitz, toeplitz
from scipy.special import ndtr

from .fbm import FbmGrid, rho, sample_paths
from .report import TestReport
from .rng import derive_seed, normal_rows, worker_count
from .variations import sigma_hq
from .weights import WeightFunction

__all__ = [
    "Chaos2Moments",
    "MixtureSample",
    "MixtureSpec",
    "berry_esseen_check",
    "brownian_example_run",
    "chaos2_fourth_moment_exact",
    "conditional_cf_test",
    "default_cf_functionals",
    "ks_two_sample",
    "kolmogorov_pvalue",
    "ks_critical_value",
    "sample_mixture_limit",
]

PATH_CHUNK = 2048
CHAOS2_DENSE_MAX_N = 4096
CHAOS2_MAX_N = 1 << 16
KS_ALPHA = 0.01
CF_THRESHOLD = 4.0


# ---------------------------------------------------------------------------
# mixture limit laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixtureSpec:
    """The law sigma * sqrt(int_0^1 f(B_s)^2 ds) * N (+ optional shift).

    ``sigma`` defaults to sigma_{H,q}.  When ``shift_coefficient`` is nonzero
    the sampler adds shift = shift_coefficient * int_0^1 f^(shift_order)(B_s) ds
    computed from the same path, which is the combined limit arising at the
    lower critical H = 1/(2q).
    """

    q: int
    H: float
    weight: WeightFunction
    n_fine: int = 4096
    sigma: float | None = None
    shift_coefficient: float = 0.0
    shift_order: int = 0

    def resolved_sigma(self) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        return sigma_hq(self.H, self.q).sigma


class MixtureSample(NamedTuple):
    values: np.ndarray
    conditional_variances: np.ndarray
    shifts: np.ndarray


def sample_mixture_limit(spec: MixtureSpec, m: int, seed: int) -> MixtureSample:
    """Draw m replicas of the limit law; replica i depends only on (seed, i).

    Per replica: a fine fBm path B gives S^2 = sigma^2 * (1/n_fine) sum_k
    f(B_{k/n_fine})^2 (left-endpoint Riemann sum) and, if configured, the
    shift integral; the value is shift + S * Z with a fresh standard normal Z.
    """
    if spec.n_fine < 1024:
        raise ValueError("n_fine must be at least 1024")
    if m < 0:
        raise ValueError("m must be non-negative")
    sigma = spec.resolved_sigma()
    grid = FbmGrid(spec.H, spec.n_fine)
    z_stream = derive_seed(seed, "mixture-z")

    values = np.empty(m)
    variances = np.empty(m)
    shifts = np.zeros(m)
    for start in range(0, m, PATH_CHUNK):
        count = min(PATH_CHUNK, m - start)
        batch = sample_paths(grid, count, seed, first_path=start)
        levels = batch.levels_at_increment_start()
        s2 = sigma**2 * np.mean(np.asarray(spec.weight(levels)) ** 2, axis=1)
        z = normal_rows(z_stream, start, count, 1)[:, 0]
        chunk_shift = 0.0
        if spec.shift_coefficient != 0.0:
            chunk_shift = spec.shift_coefficient * np.mean(
                np.asarray(spec.weight(levels, spec.shift_order)), axis=1
            )
            shifts[start : start + count] = chunk_shift
        variances[start : start + count] = s2
        values[start : start + count] = chunk_shift + np.sqrt(s2) * z
    return MixtureSample(values=values, conditional_variances=variances, shifts=shifts)


# ---------------------------------------------------------------------------
# distribution tests
# ---------------------------------------------------------------------------


def ks_critical_value(n1: int, n2: int, alpha: float = KS_ALPHA) -> float:
    """Two-sample KS critical value c(alpha) sqrt((n1+n2)/(n1 n2))."""
    c = math.sqrt(-math.log(alpha / 2.0) / 2.0)
    return c * math.sqrt((n1 + n2) / (n1 * n2))


def kolmogorov_pvalue(lam: float, terms: int = 100) -> float:
    """Asymptotic Kolmogorov tail Q(lam) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 lam^2}."""
    if lam <= 0:
        return 1.0
    j = np.arange(1, terms + 1)
    series = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * j**2 * lam**2))
    return float(min(1.0, max(0.0, series)))


def ks_two_sample(a: Sequence[float], b: Sequence[float], alpha: float = KS_ALPHA) -> TestReport:
    """Two-sample Kolmogorov–Smirnov test at level ``alpha`` (default 1%)."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample needs non-empty samples")
    pooled = np.concatenate([a, b])
    pooled.sort(kind="stable")
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    statistic = float(np.max(np.abs(cdf_a - cdf_b)))
    effective = a.size * b.size / (a.size + b.size)
    p_value = kolmogorov_pvalue(math.sqrt(effective) * statistic)
    return TestReport(
        name="ks-two-sample",
        statistic=statistic,
        threshold=ks_critical_value(a.size, b.size, alpha),
        sample_sizes=(int(a.size), int(b.size)),
        extras={"p_value": p_value, "alpha": alpha},
    )


def default_cf_functionals(predicted_S2: np.ndarray) -> Mapping[str, np.ndarray]:
    """The fixed family of bounded conditioning functionals Z = g(S^2)."""
    s2 = np.asarray(predicted_S2, dtype=float)
    return {
        "one": np.ones_like(s2),
        "s2": s2,
        "min_s2_1": np.minimum(s2, 1.0),
        "exp_neg_s2": np.exp(-s2),
    }


def conditional_cf_test(
    statistic_values: Sequence[float],
    functionals_of_B: Mapping[str, np.ndarray] | None,
    predicted_S2: Sequence[float],
    lambda_grid: Sequence[float] = (0.5, 1.0, 2.0),
    shifts: Sequence[float] | None = None,
) -> TestReport:
    """Test of *stable* convergence via conditional characteristic functions.

    For each lambda and each bounded functional Z, compares the Monte Carlo
    averages of e^{i lam F_n} Z and e^{i lam shift - lam^2 S^2 / 2} Z on
    paired replicas.  The statistic is the worst discrepancy measured in MC
    standard errors of the paired difference; threshold 4.
    """
    values = np.asarray(statistic_values, dtype=float)
    s2 = np.asarray(predicted_S2, dtype=float)
    if values.shape != s2.shape:
        raise ValueError("statistic values and predicted variances must be paired")
    if np.any(s2 < 0):
        raise ValueError("conditional variances must be non-negative")
    shift = np.zeros_like(values) if shifts is None else np.asarray(shifts, dtype=float)
    if shift.shape != values.shape:
        raise ValueError("shifts must pair with statistic values")
    family = default_cf_functionals(s2) if functionals_of_B is None else functionals_of_B
    m = values.size
    if m == 0:
        raise ValueError("need at least one replica")

    worst = 0.0
    cells = {}
    for lam in lambda_grid:
        empirical = np.exp(1j * lam * values)
        predicted = np.exp(1j * lam * shift - 0.5 * lam**2 * s2)
        for name, z in family.items():
            z = np.asarray(z, dtype=float)
            if z.shape != values.shape:
                raise ValueError(f"functional {name!r} must pair with statistic values")
            diff = (empirical - predicted) * z
            mean = complex(diff.mean())
            # standard error of the complex mean of the paired differences
            var = float(np.var(diff.real) + np.var(diff.imag))
            se = math.sqrt(var / m)
            discrepancy = abs(mean)
            ratio = 0.0 if discrepancy == 0.0 else discrepancy / max(se, 1e-300)
            cells[f"lam{lam}-{name}"] = {"discrepancy": discrepancy, "se": se, "ratio": ratio}
            worst = max(worst, ratio)
    return TestReport(
        name="conditional-cf-test",
        statistic=worst,
        threshold=CF_THRESHOLD,
        sample_sizes=(int(m),),
        extras={"cells": cells, "lambda_grid": list(lambda_grid)},
    )


# ---------------------------------------------------------------------------
# exact second-chaos moments and the fourth-moment bound
# ---------------------------------------------------------------------------


class Chaos2Moments(NamedTuple):
    variance: float
    fourth_moment: float
    normalized_m4: float


def chaos2_fourth_moment_exact(H: float, n: int) -> Chaos2Moments:
    """Exact moments of G = n^{-1/2} sum_k He_2(n^H dB_k) from Toeplitz traces.

    With M the n x n matrix rho_H(k - j):  E[G^2] = 2 tr(M^2)/n and
    E[G^4] = (12 tr(M^2)^2 + 48 tr(M^4))/n^2, so the kurtosis of the
    variance-normalized statistic is normalized_m4 = 3 + 12 tr(M^4)/tr(M^2)^2.
    tr(M^2) is a lag sum; tr(M^4) = ||M^2||_F^2 is computed densely for
    n <= 4096 and by blocked Toeplitz multiplication beyond.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > CHAOS2_MAX_N:
        raise ValueError(f"n capped at {CHAOS2_MAX_N}")
    lags = np.arange(n)
    r = np.asarray(rho(H, lags), dtype=float)
    weights = np.concatenate([[float(n)], 2.0 * (n - lags[1:])])
    tr_m2 = float(weights @ (r**2))

    if n <= CHAOS2_DENSE_MAX_N:
        dense = toeplitz(r)
        square = dense @ dense
        tr_m4 = float(np.sum(square**2))
    else:
        tr_m4 = 0.0
        block = 256
        for lo in range(0, n, block):
            hi = min(lo + block, n)
            cols = np.zeros((n, hi - lo))
            for offset in range(hi - lo):
                cols[:, offset] = r[np.abs(lags - (lo + offset))]
            product = matmul_toeplitz((r, r), cols, workers=worker_count())
            tr_m4 += float(np.sum(product**2))

    variance = 2.0 * tr_m2 / n
    fourth = (12.0 * tr_m2**2 + 48.0 * tr_m4) / n**2
    normalized = 3.0 + 12.0 * tr_m4 / tr_m2**2
    return Chaos2Moments(variance=variance, fourth_moment=fourth, normalized_m4=normalized)


def berry_esseen_coefficient(q: int) -> float:
    """sqrt((q-1)/(3q)); sqrt(1/6) ~ 0.408248 at q = 2."""
    if q < 2:
        raise ValueError("q must be >= 2")
    return math.sqrt((q - 1) / (3.0 * q))


def berry_esseen_check(H: float, n: int, m: int, seed: int) -> TestReport:
    """Fourth-moment Berry–Esseen-type bound vs the observed CDF distance.

    The variance-normalized second-chaos statistic F_n satisfies
    sup_z |P(F_n <= z) - Phi(z)| <= sqrt((q-1)/(3q)) sqrt(|E F_n^4 - 3|); the
    right side is exact (Toeplitz traces), the left side is estimated from m
    Monte Carlo replicas, and the verdict allows 3 x the DKW-scale MC error
    0.5/sqrt(m).
    """
    if not 0.0 < H < 0.75:
        raise ValueError("the fourth-moment bound needs H in (0, 3/4)")
    if m < 1:
        raise ValueError("m must be >= 1")
    started = time.perf_counter()
    moments = chaos2_fourth_moment_exact(H, n)
    bound = berry_esseen_coefficient(2) * math.sqrt(abs(moments.normalized_m4 - 3.0))

    grid = FbmGrid(H, n)
    scale = 1.0 / math.sqrt(moments.variance * n)  # = 1/(sigma_n sqrt(n)) variance-normalizer
    values = np.empty(m)
    for start in range(0, m, PATH_CHUNK):
        count = min(PATH_CHUNK, m - start)
        batch = sample_paths(grid, count, seed, first_path=start)
        x = float(n) ** H * batch.increments
        values[start : start + count] = scale * (x * x - 1.0).sum(axis=1)
    values.sort(kind="stable")
    gauss = ndtr(values)
    steps = np.arange(1, m + 1) / m
    observed = float(np.max(np.maximum(np.abs(steps - gauss), np.abs(gauss - (steps - 1.0 / m)))))

    mc_error = 0.5 / math.sqrt(m)
    return TestReport(
        name=f"berry-esseen-H{H}-n{n}",
        statistic=observed,
        threshold=bound + 3.0 * mc_error,
        sample_sizes=(int(m),),
        seeds=(int(seed),),
        extras={
            "bound": bound,
            "mc_error": mc_error,
            "normalized_m4": moments.normalized_m4,
            "variance": moments.variance,
            "coefficient_q2": berry_esseen_coefficient(2),
        },
        meta={"runtime_seconds": time.perf_counter() - started},
    )


# ---------------------------------------------------------------------------
# the Brownian weighted example (H = 1/2 pipeline check)
# ---------------------------------------------------------------------------


def _brownian_grid(power: int, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid resolving t^power near t = 1: uniform in u = t^(power+1)."""
    u = np.arange(resolution + 1) / resolution
    t = u ** (1.0 / (power + 1))
    return t, np.diff(t)


def brownian_example_run(
    n: int,
    m: int,
    seed: int,
    resolution: int = 8192,
    alpha: float = KS_ALPHA,
    sample_sink: dict | None = None,
) -> TestReport:
    """Monte Carlo verification of F_n = sqrt(n) int_0^1 t^n W_t dW_t.

    As n grows this second-chaos sequence converges stably to
    (1/sqrt(2)) W_1 N with N independent of W, i.e. a Gaussian mixture with
    conditional variance S^2 = W_1^2/2.  Checks, on m replicas:

    - E<u_n, DF_n> = 1/2 within 3 MC standard errors (the conditional
      variance quantity; exactly E[S^2] in the limit),
    - E[F_n^2] = 1/2 within 3 MC standard errors,
    - two-sample KS between F_n and the limit law at level ``alpha``,
    - the conditional CF test against S^2 = W_1^2/2.

    The time grid is uniform in t^(n+1) so the boundary layer of width ~1/n
    at t = 1, where all the variance of the integrand lives, is fully
    resolved; Brownian increments are exact on any grid, so the only
    discretization error is the O(1/resolution) Riemann bias of the
    integrals.  Also reports the exact orthogonality quantity
    <g_n x_1 g_n, 1^{(x2)}> = 2n/((n+2)(2n+3)) -> 0 that drives the
    asymptotic independence of the limit N from W.
    """
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    started = time.perf_counter()
    t, dt = _brownian_grid(n, resolution)
    t_left = t[:-1]
    integrand = t_left**n  # t_k^n at the left endpoints
    sqrt_dt = np.sqrt(dt)
    root_n = math.sqrt(n)

    stream = derive_seed(seed, "brownian-example")
    f_values = np.empty(m)
    inner_values = np.empty(m)
    ref_values = np.empty(m)
    s2_values = np.empty(m)

    for start in range(0, m, 1024):
        count = min(1024, m - start)
        raw = normal_rows(stream, start, count, resolution + 2)
        dw = raw[:, :resolution] * sqrt_dt[None, :]
        w_left = np.zeros((count, resolution))
        np.cumsum(dw[:, :-1], axis=1, out=w_left[:, 1:])
        w1 = w_left[:, -1] + dw[:, -1]

        weighted_w = integrand[None, :] * w_left
        f_values[start : start + count] = root_n * (weighted_w * dw).sum(axis=1)

        # <u_n, DF_n> = n int t^{2n} W_t^2 dt + n int t^n W_t (int_t^1 s^n dW_s) dt
        term1 = n * (t_left ** (2 * n) * w_left**2 * dt[None, :]).sum(axis=1)
        partial = (weighted_w * dt[None, :]).cumsum(axis=1)  # int_0^{t_j} s^n W_s ds
        before = np.concatenate([np.zeros((count, 1)), partial[:, :-1]], axis=1)
        term2 = n * ((integrand[None, :] * dw) * before).sum(axis=1)
        inner_values[start : start + count] = term1 + term2

        s2_values[start : start + count] = 0.5 * w1**2
        ref_values[start : start + count] = raw[:, resolution] * raw[:, resolution + 1] / math.sqrt(2.0)

    z_inner = abs(inner_values.mean() - 0.5) / (inner_values.std(ddof=1) / math.sqrt(m))
    second = f_values**2
    z_var = abs(second.mean() - 0.5) / (second.std(ddof=1) / math.sqrt(m))
    ks = ks_two_sample(f_values, ref_values, alpha)
    cf = conditional_cf_test(f_values, None, s2_values)
    condition_a = 2.0 * n / ((n + 2.0) * (2.0 * n + 3.0))

    if sample_sink is not None:
        sample_sink.update(
            f=f_values, inner=inner_values, s2=s2_values, reference=ref_values
        )

    statistic = max(z_inner / 3.0, z_var / 3.0, ks.statistic / ks.threshold, cf.statistic / cf.threshold)
    return TestReport(
        name=f"brownian-example-n{n}",
        statistic=statistic,
        threshold=1.0,
        sample_sizes=(int(m),),
        seeds=(int(seed),),
        extras={
            "mean_inner": float(inner_values.mean()),
            "inner_z_score": float(z_inner),
            "mean_f_squared": float(second.mean()),
            "f_squared_z_score": float(z_var),
            "ks_statistic": ks.statistic,
            "ks_threshold": ks.threshold,
            "ks_p_value": ks.extras["p_value"],
            "cf_ratio": cf.statistic,
            "cf_threshold": cf.threshold,
            "condition_a_exact": condition_a,
            "resolution": resolution,
        },
        meta={"runtime_seconds": time.perf_counter() - started},
    )
