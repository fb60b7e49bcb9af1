"""Empirical validators for the initialization error bounds.

Each ``check_*`` routine draws Monte-Carlo trials from the stated random
model, evaluates the bound threshold, and reports how often the statistic
exceeds it. Bounds with fully explicit constants (check_lemma2, check_lemma4,
check_theorem3, chi2_tail_check) are compared against their stated tail
probabilities plus a 3-sigma binomial margin. Bounds involving an unknown
absolute constant (check_lemma1, check_theorem1, check_theorem2) are validated
qualitatively: the exceedance frequency must decay along an increasing t-grid
and satisfy a smallness or band criterion that does not depend on the unknown
constant. All checks are noiseless and trials share one sample per check, so
reported frequencies are deterministic in the generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collapse import build_collapsed, init_rlocal
from .errors import InvalidRange, InvalidSpec, ShapeMismatch, SingularMatrix
from .linalg import as_matrix, extreme_singular_values, pinv_solve, row_space_projector
from .permutation import BlockPartition, apply, sample_ksparse


# ------------------------------------------------------------- derived constants

def const_c1(d: int, s: int, K: float = 1.0) -> float:
    """K^2 (d - s + sqrt(d - s)/2), the centering of the squared projection error."""
    _require_underdetermined(d, s)
    gap = d - s
    return K * K * (gap + 0.5 * math.sqrt(gap))

def const_k1(d: int, s: int, K: float = 1.0) -> float:
    """2 K^2 (sqrt(d - s) + 1), the sub-exponential scale of the error tail."""
    _require_underdetermined(d, s)
    return 2.0 * K * K * (math.sqrt(d - s) + 1.0)

def const_c2(d: int, s: int, K: float = 1.0) -> float:
    """K (d - s + (5/2) sqrt(d - s) + 2)^(1/2), bounding the expected error norm."""
    _require_underdetermined(d, s)
    gap = d - s
    return K * math.sqrt(gap + 2.5 * math.sqrt(gap) + 2.0)

def const_c3(n: int, k: int) -> float:
    """2 sqrt(n - k) + 2 sqrt(3 k), the sqrt(t) coefficient of the forward-error tail."""
    if not 0 <= k <= n:
        raise InvalidRange(f"need 0 <= k <= n, got k={k}, n={n}")
    return 2.0 * math.sqrt(n - k) + 2.0 * math.sqrt(3.0 * k)

def _require_underdetermined(d: int, s: int) -> None:
    if not 0 <= s < d:
        raise InvalidRange(f"need 0 <= s < d, got s={s}, d={d}")


@dataclass(frozen=True)
class BoundParams:
    """Dimension/parameter bag with the derived bound constants."""

    n: int = 0
    d: int = 0
    s: int = 0
    m: int = 1
    k: int = 0
    t: float = 0.0
    K: float = 1.0

    @property
    def c1(self) -> float:
        return const_c1(self.d, self.s, self.K)

    @property
    def K1(self) -> float:
        return const_k1(self.d, self.s, self.K)

    @property
    def c2(self) -> float:
        return const_c2(self.d, self.s, self.K)

    @property
    def c3(self) -> float:
        return const_c3(self.n, self.k)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one Monte-Carlo bound check.

    ``bound`` is the stated tail probability, or None when the bound involves
    an unknown absolute constant and only qualitative criteria apply.
    """

    check: str
    params: dict
    threshold: float
    bound: float | None
    empirical: float
    trials: int
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "params": self.params,
            "threshold": self.threshold,
            "bound": self.bound,
            "empirical": self.empirical,
            "trials": self.trials,
            "passed": self.passed,
            "details": self.details,
        }


def binomial_margin(p: float, trials: int) -> float:
    """Three-sigma binomial margin at success rate p over the given trial count."""
    p = min(max(p, 0.0), 1.0)
    return 3.0 * math.sqrt(p * (1.0 - p) / trials)


def _require_trials(trials: int) -> None:
    if trials < 1:
        raise InvalidSpec(f"trials must be >= 1, got {trials}")


def _nonincreasing(values, tol: float = 1e-12) -> bool:
    return all(b <= a + tol for a, b in zip(values, values[1:]))


def _grid_around(t: float, factors=(0.0, 0.5, 1.0, 2.0, 4.0)) -> list[float]:
    grid = sorted({round(f * t, 12) for f in factors} | {round(t, 12)})
    return [float(g) for g in grid]


def _fixed_collapsed_matrix(d: int, s: int, rng: np.random.Generator,
                            B=None, partition: BlockPartition | None = None,
                            rows_per_block: int = 2) -> np.ndarray:
    """Resolve a fixed collapsed matrix with s rows from B (drawn if absent)."""
    if B is None:
        B = rng.standard_normal((s * rows_per_block, d))
        partition = BlockPartition.equal_blocks(s * rows_per_block, rows_per_block)
    else:
        B = as_matrix(B, "B")
        if B.shape[1] != d:
            raise ShapeMismatch(f"B has {B.shape[1]} columns, expected d={d}")
        if partition is None:
            rows = B.shape[0]
            if rows == s:
                partition = BlockPartition((1,) * s)
            elif rows % s == 0:
                partition = BlockPartition.equal_blocks(rows, rows // s)
            else:
                raise InvalidRange(f"cannot infer an s={s}-block partition for {rows} rows")
        if partition.block_count != s:
            raise InvalidRange(f"partition has {partition.block_count} blocks, expected s={s}")
    return build_collapsed(B, np.zeros((B.shape[0], 1)), partition).B_tilde


# ------------------------------------------------------------- r-local checks

def jl_threshold(d: int, s: int, t: float) -> float:
    """Relative-error pivot (1 + t) sqrt((d - s) / d) of the random-projection bound."""
    _require_underdetermined(d, s)
    if s == 0 or t < 0:
        raise InvalidRange(f"need 0 < s < d and t >= 0, got s={s}, d={d}, t={t}")
    return (1.0 + t) * math.sqrt((d - s) / d)


def check_lemma1(d: int, s: int, t: float, trials: int, rng: np.random.Generator,
                 rows_per_block: int = 2, t_grid=None,
                 band_margin: float = 0.1) -> BoundReport:
    """Relative error of the collapsed initialization under Gaussian measurements.

    For a fixed unit signal and a fresh Gaussian measurement matrix per trial,
    the relative error concentrates at sqrt((d - s)/d): the frequency of
    exceeding (1 + t) sqrt((d - s)/d) must decay along the t-grid, and the
    two-sided band (1 +- t) sqrt((d - s)/d) must capture at least
    1 - band_margin of the trials at the headline t.
    """
    _require_trials(trials)
    base = jl_threshold(d, s, 0.0)
    n = s * rows_per_block
    partition = BlockPartition.equal_blocks(n, rows_per_block)
    x_star = rng.standard_normal(d)
    x_star /= np.linalg.norm(x_star)

    ratios = np.empty(trials)
    for i in range(trials):
        B = rng.standard_normal((n, d))
        cs = build_collapsed(B, (B @ x_star)[:, None], partition)
        x_hat = init_rlocal(cs).ravel()
        ratios[i] = np.linalg.norm(x_star - x_hat)

    grid = sorted(set(t_grid) | {t}) if t_grid is not None else sorted({0.1, 0.25, 0.5, 1.0, 2.0} | {t})
    exceed = [float(np.mean(ratios >= (1.0 + g) * base)) for g in grid]
    band = float(np.mean(((1.0 - t) * base <= ratios) & (ratios <= (1.0 + t) * base)))
    passed = _nonincreasing(exceed) and band >= 1.0 - band_margin
    return BoundReport(
        check="lemma1",
        params={"d": d, "s": s, "t": t, "rows_per_block": rows_per_block},
        threshold=jl_threshold(d, s, t),
        bound=None,
        empirical=exceed[grid.index(t)],
        trials=trials,
        passed=passed,
        details={"t_grid": list(grid), "exceedance": exceed,
                 "band_frequency": band, "median_ratio": float(np.median(ratios))},
    )


def check_theorem1(d: int, s: int, m: int, t: float, trials: int,
                   rng: np.random.Generator, rows_per_block: int = 2,
                   t_grid=None, band_margin: float = 0.1) -> BoundReport:
    """Multi-column version of check_lemma1 on Frobenius-norm ratios.

    The threshold (1 + t) sqrt((d - s)/d) does not depend on the number of
    columns m; with m = 1 this reduces to the single-vector check.
    """
    _require_trials(trials)
    if m < 1:
        raise InvalidRange(f"m must be >= 1, got {m}")
    base = jl_threshold(d, s, 0.0)
    n = s * rows_per_block
    partition = BlockPartition.equal_blocks(n, rows_per_block)
    x_star = rng.standard_normal((d, m))
    x_norm = np.linalg.norm(x_star)

    ratios = np.empty(trials)
    for i in range(trials):
        B = rng.standard_normal((n, d))
        cs = build_collapsed(B, B @ x_star, partition)
        ratios[i] = np.linalg.norm(x_star - init_rlocal(cs)) / x_norm

    grid = sorted(set(t_grid) | {t}) if t_grid is not None else sorted({0.1, 0.25, 0.5, 1.0, 2.0} | {t})
    exceed = [float(np.mean(ratios >= (1.0 + g) * base)) for g in grid]
    band = float(np.mean(((1.0 - t) * base <= ratios) & (ratios <= (1.0 + t) * base)))
    passed = _nonincreasing(exceed) and band >= 1.0 - band_margin
    return BoundReport(
        check="theorem1",
        params={"d": d, "s": s, "m": m, "t": t, "rows_per_block": rows_per_block},
        threshold=jl_threshold(d, s, t),
        bound=None,
        empirical=exceed[grid.index(t)],
        trials=trials,
        passed=passed,
        details={"t_grid": list(grid), "exceedance": exceed,
                 "band_frequency": band, "median_ratio": float(np.median(ratios))},
    )


def check_lemma2(d: int, s: int, t: float, trials: int, rng: np.random.Generator,
                 B=None, partition: BlockPartition | None = None,
                 K: float = 1.0) -> BoundReport:
    """Squared initialization error for a fixed matrix and sub-Gaussian signal.

    Draws x ~ K * N(0, I) against one fixed collapsed system and checks
    Pr[error^2 >= c1 + K1 t] <= exp(-t), whose constants are fully explicit, at
    a 3-sigma binomial margin.
    """
    _require_trials(trials)
    if t < 0:
        raise InvalidRange(f"t must be >= 0, got {t}")
    b_tilde = _fixed_collapsed_matrix(d, s, rng, B, partition)
    complement = np.eye(d) - row_space_projector(b_tilde)
    X = K * rng.standard_normal((d, trials))
    E = complement @ X
    err_sq = np.sum(E * E, axis=0)

    c1 = const_c1(d, s, K)
    k1 = const_k1(d, s, K)
    grid = _grid_around(t) if t > 0 else [0.0, 0.5, 1.0, 2.0, 4.0]
    exceed = [float(np.mean(err_sq >= c1 + k1 * g)) for g in grid]
    bound = math.exp(-t)
    empirical = float(np.mean(err_sq >= c1 + k1 * t))
    passed = _nonincreasing(exceed) and empirical <= bound + binomial_margin(bound, trials)
    return BoundReport(
        check="lemma2",
        params={"d": d, "s": s, "t": t, "K": K},
        threshold=c1 + k1 * t,
        bound=bound,
        empirical=empirical,
        trials=trials,
        passed=passed,
        details={"c1": c1, "K1": k1, "t_grid": grid, "exceedance": exceed},
    )


def tilde_e(err_sq: float, c1: float) -> float:
    """Clipped error variable max(c1, err_sq).

    Dominates the squared error, never falls below the centering constant, and
    coincides with the squared error exactly on the upper tail, which makes
    its shifted version a nonnegative sub-exponential variable.
    """
    return max(float(c1), float(err_sq))


def check_theorem2(d: int, s: int, m: int, trials: int, rng: np.random.Generator,
                   t: float | None = None, B=None,
                   partition: BlockPartition | None = None,
                   K: float = 1.0, smallness: float = 0.1) -> BoundReport:
    """Summed error norms for a fixed matrix and i.i.d. sub-Gaussian columns.

    The statistic sum_i ||x_i - xhat_i|| - m c2 has a sub-Gaussian upper tail
    with an unknown absolute constant, so the check asserts decay along the
    t-grid plus smallness at t* = sqrt(m K1 ln 20), the point where the stated
    tail with unit constant equals 0.1.
    """
    _require_trials(trials)
    if m < 1:
        raise InvalidRange(f"m must be >= 1, got {m}")
    k1 = const_k1(d, s, K)
    c2 = const_c2(d, s, K)
    t_star = math.sqrt(m * k1 * math.log(20.0))
    if t is None:
        t = t_star
    if t < 0:
        raise InvalidRange(f"t must be >= 0, got {t}")

    b_tilde = _fixed_collapsed_matrix(d, s, rng, B, partition)
    complement = np.eye(d) - row_space_projector(b_tilde)
    X = K * rng.standard_normal((d, trials * m))
    E = complement @ X
    norms = np.sqrt(np.sum(E * E, axis=0)).reshape(trials, m)
    stat = norms.sum(axis=1) - m * c2

    grid = sorted({0.0, t / 4.0, t / 2.0, t, t_star, 2.0 * max(t, t_star)})
    exceed = [float(np.mean(stat >= g)) for g in grid]
    empirical = float(np.mean(stat >= t))
    at_star = float(np.mean(stat >= t_star))
    passed = _nonincreasing(exceed) and at_star <= smallness
    return BoundReport(
        check="theorem2",
        params={"d": d, "s": s, "m": m, "t": t, "K": K},
        threshold=t,
        bound=None,
        empirical=empirical,
        trials=trials,
        passed=passed,
        details={"c2": c2, "K1": k1, "t_star": t_star, "exceedance_at_t_star": at_star,
                 "t_grid": list(grid), "exceedance": exceed},
    )


# ------------------------------------------------------------- k-sparse checks

def _validate_k(n: int, k: int) -> None:
    if k == 1 or not 0 <= k <= n - 1:
        raise InvalidRange(f"need 0 <= k <= n-1 and k != 1, got k={k}, n={n}")


def check_lemma4(n: int, d: int, k: int, t: float, trials: int,
                 rng: np.random.Generator) -> BoundReport:
    """Forward error of the identity initialization under a k-row shuffle.

    For fixed x, Gaussian B per trial, and a uniform exactly-k shuffle, checks
    Pr[||y - yhat0||^2 >= 2||y||^2 - 2||x||^2 (n - k - c3 sqrt(t) - 3t)]
    <= 7 exp(-t) with fully explicit constants at a 3-sigma margin.
    """
    _require_trials(trials)
    _validate_k(n, k)
    if t < 0:
        raise InvalidRange(f"t must be >= 0, got {t}")
    x_star = rng.standard_normal(d)
    xsq = float(x_star @ x_star)
    c3 = const_c3(n, k)

    err_sq = np.empty(trials)
    ystar_sq = np.empty(trials)
    for i in range(trials):
        B = rng.standard_normal((n, d))
        y_star = B @ x_star
        y0 = apply(sample_ksparse(n, k, rng), y_star)
        err_sq[i] = float(np.sum((y_star - y0) ** 2))
        ystar_sq[i] = float(y_star @ y_star)

    def exceed_at(tt: float) -> float:
        thr = 2.0 * ystar_sq - 2.0 * xsq * (n - k - c3 * math.sqrt(tt) - 3.0 * tt)
        return float(np.mean(err_sq >= thr))

    grid = _grid_around(t) if t > 0 else [0.0, 0.5, 1.0, 2.0, 4.0]
    exceed = [exceed_at(g) for g in grid]
    bound = min(1.0, 7.0 * math.exp(-t))
    empirical = exceed_at(t)
    passed = _nonincreasing(exceed) and empirical <= bound + binomial_margin(bound, trials)
    return BoundReport(
        check="lemma4",
        params={"n": n, "d": d, "k": k, "t": t},
        threshold=n - k - c3 * math.sqrt(t) - 3.0 * t,
        bound=bound,
        empirical=empirical,
        trials=trials,
        passed=passed,
        details={"c3": c3, "t_grid": grid, "exceedance": exceed,
                 "threshold_form": "inner-product pivot n - k - c3 sqrt(t) - 3 t"},
    )


def check_theorem3(n: int, d: int, k: int, m: int, t: float, trials: int,
                   rng: np.random.Generator, slack: float = 1e-8) -> BoundReport:
    """One-step signal error of the identity initialization, multi-column.

    Per trial computes Xhat1 = pinv(B) @ Yhat0 and F1 = ||Y - B Xhat1||_F^2 and
    checks the probabilistic threshold
    2||Ystar||_F^2 - 2||Xstar||_F^2 (n - k - c3 sqrt(t) - 3t) - F1 against
    7 exp(-t) for t >= log(m^2), and additionally asserts the unconditional
    bound sigma_min^2 ||Xstar - Xhat1||_F^2 <= 4||Ystar||_F^2 - F1 on every
    single draw (up to relative slack).
    """
    _require_trials(trials)
    _validate_k(n, k)
    if m < 1:
        raise InvalidRange(f"m must be >= 1, got {m}")
    if t < math.log(m * m):
        raise InvalidRange(f"need t >= log(m^2) = {math.log(m * m):.4f}, got {t}")
    x_star = rng.standard_normal((d, m))
    xsq = float(np.sum(x_star * x_star))
    c3 = const_c3(n, k)

    lhs = np.empty(trials)
    f1 = np.empty(trials)
    ysq = np.empty(trials)
    uncond_violations = 0
    for i in range(trials):
        B = rng.standard_normal((n, d))
        y_star = B @ x_star
        y0 = apply(sample_ksparse(n, k, rng), y_star)
        x_hat1 = pinv_solve(B, y0)
        resid = y0 - B @ x_hat1
        f1[i] = float(np.sum(resid * resid))
        ysq[i] = float(np.sum(y_star * y_star))
        # sigma_min over the signal domain: zero when B is wide (rank < d)
        smin = extreme_singular_values(B)[0] if n >= d else 0.0
        lhs[i] = smin * smin * float(np.sum((x_star - x_hat1) ** 2))
        if lhs[i] > 4.0 * ysq[i] - f1[i] + slack * 4.0 * ysq[i]:
            uncond_violations += 1

    def exceed_at(tt: float) -> float:
        thr = 2.0 * ysq - 2.0 * xsq * (n - k - c3 * math.sqrt(tt) - 3.0 * tt) - f1
        return float(np.mean(lhs >= thr))

    t_lo = math.log(m * m)
    grid = sorted({max(t_lo, f * t) for f in (1.0, 1.5, 2.0, 3.0, 4.0)} | {t})
    exceed = [exceed_at(g) for g in grid]
    bound = min(1.0, 7.0 * math.exp(-t))
    empirical = exceed_at(t)
    passed = (_nonincreasing(exceed) and uncond_violations == 0
              and empirical <= bound + binomial_margin(bound, trials))
    return BoundReport(
        check="theorem3",
        params={"n": n, "d": d, "k": k, "m": m, "t": t},
        threshold=n - k - c3 * math.sqrt(t) - 3.0 * t,
        bound=bound,
        empirical=empirical,
        trials=trials,
        passed=passed,
        details={"c3": c3, "t_grid": grid, "exceedance": exceed,
                 "unconditional_violations": uncond_violations},
    )


# ------------------------------------------------------------- generic tails

def chi2_tail_check(D: int, t: float, trials: int, rng: np.random.Generator) -> BoundReport:
    """Two-sided chi-square tail frequencies against exp(-t).

    Upper tail Pr[Z >= D + 2 sqrt(D t) + 2 t] and lower tail
    Pr[Z <= D - 2 sqrt(D t)] for Z chi-square with D degrees of freedom.
    """
    _require_trials(trials)
    if D < 1 or t < 0:
        raise InvalidRange(f"need D >= 1 and t >= 0, got D={D}, t={t}")
    Z = rng.chisquare(D, size=trials)
    upper_thr = D + 2.0 * math.sqrt(D * t) + 2.0 * t
    lower_thr = D - 2.0 * math.sqrt(D * t)
    upper = float(np.mean(Z >= upper_thr))
    lower = float(np.mean(Z <= lower_thr))
    bound = math.exp(-t)
    margin = binomial_margin(bound, trials)
    grid = _grid_around(t) if t > 0 else [0.0, 0.5, 1.0, 2.0, 4.0]
    exceed = [float(np.mean(Z >= D + 2.0 * math.sqrt(D * g) + 2.0 * g)) for g in grid]
    passed = _nonincreasing(exceed) and upper <= bound + margin and lower <= bound + margin
    return BoundReport(
        check="chi2",
        params={"D": D, "t": t},
        threshold=upper_thr,
        bound=bound,
        empirical=upper,
        trials=trials,
        passed=passed,
        details={"lower_threshold": lower_thr, "lower_frequency": lower,
                 "t_grid": grid, "exceedance": exceed},
    )


def worst_case_init_bound(B, x_hat, y) -> float:
    """Assumption-free error cap (||y||^2 - sigma_min^2 ||x_hat||^2) / sigma_min^2.

    The cap is attained when the signal aligns with the singular direction of
    the smallest singular value. Raises SingularMatrix when sigma_min is
    numerically zero.
    """
    B = as_matrix(B, "B")
    smin, smax = extreme_singular_values(B)
    # the cap needs ||B v|| >= sigma_min ||v|| on the whole signal domain,
    # which fails for wide or rank-deficient matrices
    if (B.shape[0] < B.shape[1] or smin == 0.0
            or smin <= max(B.shape) * np.finfo(float).eps * smax):
        raise SingularMatrix(f"sigma_min of {B.shape[0]}x{B.shape[1]} matrix is numerically zero")
    y = np.asarray(y, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    ysq = float(np.sum(y * y))
    xsq = float(np.sum(x_hat * x_hat))
    return (ysq - smin * smin * xsq) / (smin * smin)


def check_worst_case(n: int, d: int, trials: int, rng: np.random.Generator,
                     slack: float = 1e-8) -> BoundReport:
    """Companion sampler for worst_case_init_bound on full-column-rank systems.

    Verifies ||x - xhat||^2 <= cap on every noiseless draw with pinv recovery.
    """
    _require_trials(trials)
    if n < d:
        raise InvalidRange(f"need n >= d for full column rank, got n={n}, d={d}")
    violations = 0
    caps = np.empty(trials)
    for i in range(trials):
        B = rng.standard_normal((n, d))
        x_star = rng.standard_normal(d)
        y = B @ x_star
        x_hat = pinv_solve(B, y)
        caps[i] = worst_case_init_bound(B, x_hat, y)
        err = float(np.sum((x_star - x_hat) ** 2))
        if err > caps[i] + slack * max(1.0, caps[i]):
            violations += 1
    return BoundReport(
        check="worst_case",
        params={"n": n, "d": d},
        threshold=float(np.mean(caps)),
        bound=None,
        empirical=violations / trials,
        trials=trials,
        passed=violations == 0,
        details={"violations": violations, "mean_cap": float(np.mean(caps))},
    )
