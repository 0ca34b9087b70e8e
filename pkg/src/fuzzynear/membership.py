"""Membership function families and linguistic term banks.

The Beta family is the workhorse: a finite-support grade function with two
shape parameters that peaks at 1 on its center and vanishes outside the open
interval (x_min, x_max). It admits an equivalent centered parameterization
(center, width, alpha, beta) used by the term banks. Interval-valued terms
pair two shifted-center Beta envelopes; the pointwise min/max of the pair
bound the footprint of uncertainty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FitNotFound


def _as_float_array(x):
    return np.asarray(x, dtype=np.float64)


def _finish(values, scalar):
    values = np.clip(values, 0.0, 1.0)
    return float(values) if scalar else values


@dataclass(frozen=True)
class BetaMF:
    """Beta grade function on the open support (x_min, x_max).

    grade(x) = ((x - x_min)/(x_center - x_min))**alpha
             * ((x_max - x)/(x_max - x_center))**beta

    with x_center = (alpha*x_max + beta*x_min)/(alpha + beta). The grade is 1
    exactly at x_center and 0 on and outside the support boundary.
    """

    alpha: float
    beta: float
    x_min: float
    x_max: float

    family = "beta"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(
                f"beta MF needs alpha > 0 and beta > 0, got {self.alpha}, {self.beta}"
            )
        if not self.x_max > self.x_min:
            raise ValueError(
                f"beta MF needs x_max > x_min, got [{self.x_min}, {self.x_max}]"
            )

    @property
    def x_center(self) -> float:
        return (self.alpha * self.x_max + self.beta * self.x_min) / (self.alpha + self.beta)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @classmethod
    def from_center(cls, center: float, width: float, alpha: float, beta: float) -> "BetaMF":
        """Build from the centered parameterization (center, width, alpha, beta)."""
        if not width > 0:
            raise ValueError(f"width must be positive, got {width}")
        if not (alpha > 0 and beta > 0):
            raise ValueError(f"alpha and beta must be positive, got {alpha}, {beta}")
        half_left = width * alpha / (alpha + beta)
        half_right = width * beta / (alpha + beta)
        return cls(alpha, beta, center - half_left, center + half_right)

    def support(self) -> tuple[float, float]:
        return (self.x_min, self.x_max)

    def grade(self, x):
        xs = _as_float_array(x)
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        c = self.x_center
        inside = (xs > self.x_min) & (xs < self.x_max)
        safe = np.where(inside, xs, c)
        left = ((safe - self.x_min) / (c - self.x_min)) ** self.alpha
        right = ((self.x_max - safe) / (self.x_max - c)) ** self.beta
        out = np.where(inside, left * right, 0.0)
        return _finish(out[0] if scalar else out, scalar)


def eval_beta_centered(center: float, sigma_width: float, alpha: float, beta: float, x):
    """Evaluate the centered Beta form directly.

    grade(x) = (1 + (a+b)(x-c)/(w a))**a * (1 - (a+b)(x-c)/(w b))**b on the
    open support (c - w a/(a+b), c + w b/(a+b)). Algebraically identical to
    BetaMF.grade on the equivalent (x_min, x_max); kept as a separate
    arithmetic path so the two parameterizations can be checked against each
    other.
    """
    if not sigma_width > 0:
        raise ValueError(f"sigma_width must be positive, got {sigma_width}")
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"alpha and beta must be positive, got {alpha}, {beta}")
    xs = _as_float_array(x)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    s = alpha + beta
    lo = center - sigma_width * alpha / s
    hi = center + sigma_width * beta / s
    inside = (xs > lo) & (xs < hi)
    t = np.where(inside, xs - center, 0.0)
    left = (1.0 + s * t / (sigma_width * alpha)) ** alpha
    right = (1.0 - s * t / (sigma_width * beta)) ** beta
    out = np.where(inside, left * right, 0.0)
    return _finish(out[0] if scalar else out, scalar)


@dataclass(frozen=True)
class TriangularMF:
    """Symmetric triangle on [a, b]: 0 at a, 1 at the midpoint, 0 at b."""

    a: float
    b: float

    family = "triangular"

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"triangular MF needs b > a, got [{self.a}, {self.b}]")

    @property
    def peak(self) -> float:
        return 0.5 * (self.a + self.b)

    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    def grade(self, x):
        xs = _as_float_array(x)
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        p = self.peak
        up = (xs - self.a) / (p - self.a)
        down = (self.b - xs) / (self.b - p)
        out = np.where(xs < p, up, down)
        out = np.where((xs <= self.a) | (xs >= self.b), 0.0, out)
        return _finish(out[0] if scalar else out, scalar)


@dataclass(frozen=True)
class TrapezoidalMF:
    """Trapezoid with feet a, d and plateau [b, c]."""

    a: float
    b: float
    c: float
    d: float

    family = "trapezoidal"

    def __post_init__(self):
        if not (self.a < self.b <= self.c < self.d):
            raise ValueError(
                f"trapezoidal MF needs a < b <= c < d, got "
                f"({self.a}, {self.b}, {self.c}, {self.d})"
            )

    def support(self) -> tuple[float, float]:
        return (self.a, self.d)

    def grade(self, x):
        xs = _as_float_array(x)
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        up = (xs - self.a) / (self.b - self.a)
        down = (self.d - xs) / (self.d - self.c)
        out = np.ones_like(xs)
        out = np.where(xs < self.b, up, out)
        out = np.where(xs > self.c, down, out)
        out = np.where((xs <= self.a) | (xs >= self.d), 0.0, out)
        return _finish(out[0] if scalar else out, scalar)


@dataclass(frozen=True)
class GaussianMF:
    mu: float
    sigma: float

    family = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"gaussian MF needs sigma > 0, got {self.sigma}")

    def support(self) -> tuple[float, float]:
        # effectively zero beyond four standard deviations
        return (self.mu - 4.0 * self.sigma, self.mu + 4.0 * self.sigma)

    def grade(self, x):
        xs = _as_float_array(x)
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        z = (xs - self.mu) / self.sigma
        out = np.exp(-0.5 * z * z)
        return _finish(out[0] if scalar else out, scalar)


def eval_mf(mf, x):
    """Evaluate any membership function at x (scalar or array)."""
    return mf.grade(x)


@dataclass(frozen=True)
class IT2BetaMF:
    """Interval-valued Beta term: two envelopes from two candidate centers.

    Both envelopes share the base width and shape parameters; at every x the
    lower grade is the pointwise minimum of the two shifted-center Betas and
    the upper grade the pointwise maximum, so lower <= upper by construction.
    """

    base: BetaMF
    center_lower: float
    center_upper: float

    family = "it2beta"

    @classmethod
    def from_spread(cls, center: float, width: float, alpha: float, beta: float,
                    spread: float) -> "IT2BetaMF":
        """Candidate centers center*(1 +/- spread), clipped to [0, 1]."""
        if spread < 0:
            raise ValueError(f"spread must be nonnegative, got {spread}")
        base = BetaMF.from_center(center, width, alpha, beta)
        c_lo = min(max(center * (1.0 - spread), 0.0), 1.0)
        c_hi = min(max(center * (1.0 + spread), 0.0), 1.0)
        return cls(base, c_lo, c_hi)

    @classmethod
    def literal(cls, center: float, width: float, alpha: float, beta: float) -> "IT2BetaMF":
        """Candidate centers center*alpha and center*beta (no clipping)."""
        base = BetaMF.from_center(center, width, alpha, beta)
        return cls(base, center * alpha, center * beta)

    def _envelopes(self) -> tuple[BetaMF, BetaMF]:
        a, b, w = self.base.alpha, self.base.beta, self.base.width
        return (BetaMF.from_center(self.center_lower, w, a, b),
                BetaMF.from_center(self.center_upper, w, a, b))

    def support(self) -> tuple[float, float]:
        ea, eb = self._envelopes()
        return (min(ea.x_min, eb.x_min), max(ea.x_max, eb.x_max))

    def grade_interval(self, x):
        ea, eb = self._envelopes()
        ga = ea.grade(x)
        gb = eb.grade(x)
        return (np.minimum(ga, gb) if not np.isscalar(ga) else min(ga, gb),
                np.maximum(ga, gb) if not np.isscalar(ga) else max(ga, gb))

    def grade(self, x):
        # midpoint of the interval, for places needing one number
        lo, up = self.grade_interval(x)
        return (lo + up) / 2.0


def eval_it2(mf: IT2BetaMF, x):
    """Evaluate an interval term, returning (lower, upper)."""
    return mf.grade_interval(x)


@dataclass(frozen=True)
class LinguisticBank:
    """Ordered terms covering [0, 1], used to fuzzify feature values."""

    terms: tuple
    it2: bool

    def __post_init__(self):
        if not self.terms:
            raise ValueError("bank needs at least one term")
        centers = self.centers
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise ValueError("term centers must be strictly increasing")
        for t in self.terms:
            # interval terms are anchored by their base support; envelopes may
            # shift outside [0, 1] (notably in literal-centers mode)
            lo, hi = t.base.support() if isinstance(t, IT2BetaMF) else t.support()
            if hi <= 0.0 or lo >= 1.0:
                raise ValueError("every term support must intersect [0, 1]")

    @property
    def centers(self) -> tuple[float, ...]:
        out = []
        for t in self.terms:
            if isinstance(t, IT2BetaMF):
                out.append(t.base.x_center)
            elif isinstance(t, BetaMF):
                out.append(t.x_center)
            elif isinstance(t, TriangularMF):
                out.append(t.peak)
            elif isinstance(t, TrapezoidalMF):
                out.append(0.5 * (t.b + t.c))
            else:
                out.append(t.mu)
        return tuple(out)

    @property
    def term_count(self) -> int:
        return len(self.terms)

    def fuzzify(self, values) -> tuple[np.ndarray, np.ndarray]:
        """Grade every value against every term, feature-major.

        Returns (lower, upper) vectors of length len(values)*term_count; for
        type-1 banks the two are equal.
        """
        vals = np.atleast_1d(_as_float_array(values))
        m = self.term_count
        lower = np.empty((vals.size, m))
        upper = np.empty((vals.size, m))
        for j, term in enumerate(self.terms):
            if self.it2:
                lo, up = term.grade_interval(vals)
            else:
                lo = up = term.grade(vals)
            lower[:, j] = lo
            upper[:, j] = up
        return lower.ravel(), upper.ravel()


def build_bank(m: int, family: str = "beta", it2_spread: float | None = None,
               alpha: float = 2.0, beta: float = 2.0,
               literal_centers: bool = False) -> LinguisticBank:
    """Uniform bank of m terms with centers (j+0.5)/m and width 2/m.

    it2_spread=None gives a type-1 bank; any nonnegative spread (including 0)
    gives an interval bank. Interval banks require the beta family.
    """
    if m < 1:
        raise ValueError(f"term count must be >= 1, got {m}")
    if it2_spread is not None and family != "beta":
        raise ValueError("interval banks are only defined for the beta family")
    width = 2.0 / m
    terms = []
    for j in range(m):
        c = (j + 0.5) / m
        if it2_spread is not None:
            if literal_centers:
                terms.append(IT2BetaMF.literal(c, width, alpha, beta))
            else:
                terms.append(IT2BetaMF.from_spread(c, width, alpha, beta, it2_spread))
        elif family == "beta":
            terms.append(BetaMF.from_center(c, width, alpha, beta))
        elif family == "triangular":
            terms.append(TriangularMF(c - 1.0 / m, c + 1.0 / m))
        elif family == "trapezoidal":
            terms.append(TrapezoidalMF(c - 1.0 / m, c - 0.5 / m, c + 0.5 / m, c + 1.0 / m))
        elif family == "gaussian":
            terms.append(GaussianMF(c, 0.5 / m))
        else:
            raise ValueError(f"unknown membership family {family!r}")
    return LinguisticBank(tuple(terms), it2=it2_spread is not None)


@dataclass(frozen=True)
class FitResult:
    mf: BetaMF
    achieved_error: float
    evaluations: int


_DEFAULT_ALPHAS = tuple(1.0 + 0.5 * i for i in range(11))  # 1, 1.5, ..., 6
_DEFAULT_HALFWIDTHS = (2.0, 3.0, 4.0, 5.0)  # in units of target_sigma


def _sup_error(mf: BetaMF, xs: np.ndarray, target: np.ndarray) -> float:
    return float(np.max(np.abs(mf.grade(xs) - target)))


def gaussian_approximation_fit(target_mu: float, target_sigma: float, precision: float,
                               alphas: Sequence[float] = _DEFAULT_ALPHAS,
                               halfwidth_factors: Sequence[float] = _DEFAULT_HALFWIDTHS,
                               refine: bool = True,
                               samples: int = 1601) -> FitResult:
    """Search Beta parameters approximating a Gaussian within sup-norm precision.

    Coarse grid over (alpha, beta) pairs and symmetric supports around
    target_mu; the first candidate under the precision wins. If the coarse
    grid fails, one refinement pass runs around the best cell; if that also
    fails, FitNotFound reports the best error seen (the grids are the search
    budget).
    """
    if not target_sigma > 0:
        raise ValueError(f"target_sigma must be positive, got {target_sigma}")
    if not precision > 0:
        raise ValueError(f"precision must be positive, got {precision}")
    xs = np.linspace(target_mu - 4.0 * target_sigma, target_mu + 4.0 * target_sigma, samples)
    target = np.exp(-0.5 * ((xs - target_mu) / target_sigma) ** 2)

    evals = 0
    best: tuple[float, BetaMF] | None = None

    def try_one(a: float, b: float, hw: float):
        nonlocal evals, best
        mf = BetaMF(a, b, target_mu - hw, target_mu + hw)
        err = _sup_error(mf, xs, target)
        evals += 1
        if best is None or err < best[0]:
            best = (err, mf)
        return err, mf

    for hf in halfwidth_factors:
        for a in alphas:
            for b in alphas:
                err, mf = try_one(a, b, hf * target_sigma)
                if err < precision:
                    return FitResult(mf, err, evals)

    if refine and best is not None:
        _, seed = best
        a0, b0 = seed.alpha, seed.beta
        h0 = (seed.x_max - seed.x_min) / 2.0
        deltas = (-0.25, -0.125, 0.0, 0.125, 0.25)
        hw_deltas = (-0.5, -0.25, 0.0, 0.25, 0.5)
        for da in deltas:
            for db in deltas:
                for dh in hw_deltas:
                    a = a0 + da
                    b = b0 + db
                    hw = h0 + dh * target_sigma
                    if a <= 0 or b <= 0 or hw <= 0:
                        continue
                    try_one(a, b, hw)
        if best[0] < precision:
            return FitResult(best[1], best[0], evals)

    assert best is not None
    raise FitNotFound(
        f"no Beta within precision {precision:g} after {evals} candidates "
        f"(best error {best[0]:g})",
        best_params=best[1], best_error=best[0],
    )


def mf_samples(mf, n: int, pad: float = 0.05) -> np.ndarray:
    """Sample locations covering the support, widened by a small margin."""
    lo, hi = mf.support()
    span = hi - lo
    return np.linspace(lo - pad * span, hi + pad * span, n)
