"""Rate functions: presets, the derived rate F(x) = x*G(x)^2, monotone
inverses by guarded bisection, and the structural checks the decay and
nonlinear pipelines gate on.

A RateFunction is defined on (0, x_max]; evaluating outside the domain is
a range error, never an extrapolation.  Monotonicity and positivity are
sample-verified on a log grid at construction (underflow to exact zero at
the small end is tolerated for steep tails and excluded from the checks).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, RangeError

_X_FLOOR = 1e-300  # bracket expansion floor; below this the domain is numerically empty
_VERIFY_POINTS = 256


@dataclass(frozen=True)
class RateFunction:
    """Strictly monotone positive function on (0, x_max]."""

    fn: Callable[[float], float]
    x_max: float
    increasing: bool
    description: str = ""

    def __post_init__(self):
        if self.x_max <= 0:
            raise InvalidArgumentError("x_max must be positive")

    def __call__(self, x: float) -> float:
        if not 0.0 < x <= self.x_max * (1.0 + 1e-12):
            raise RangeError(
                f"{self.description or 'rate function'} evaluated at {x} "
                f"outside its domain (0, {self.x_max}]", lo=0.0, hi=self.x_max)
        return float(self.fn(min(x, self.x_max)))


def _verify_monotone(rate: RateFunction):
    """Sample check of strict monotonicity/positivity on a log grid.

    Exact zeros are treated as underflow of a steep positive tail; they must
    sit at the small-x end of an increasing function.
    """
    grid = np.geomspace(rate.x_max * 1e-8, rate.x_max, _VERIFY_POINTS)
    vals = np.array([rate.fn(x) for x in grid], dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals < 0):
        raise InvalidArgumentError(
            f"{rate.description}: values must be finite and nonnegative on the domain")
    pos = vals > 0.0
    if pos.sum() < 2:
        raise InvalidArgumentError(f"{rate.description}: underflows on the whole grid")
    if np.any(~pos):
        if not rate.increasing or np.any(~pos[np.argmax(pos):]):
            raise InvalidArgumentError(
                f"{rate.description}: vanishes inside the domain")
    diffs = np.diff(vals[pos])
    ok = np.all(diffs > 0) if rate.increasing else np.all(diffs < 0)
    if not ok:
        raise InvalidArgumentError(
            f"{rate.description}: not strictly "
            f"{'increasing' if rate.increasing else 'decreasing'} on its domain")


def make_rate(fn, x_max, increasing, description="", validate=True) -> RateFunction:
    rate = RateFunction(fn, float(x_max), bool(increasing), description)
    if validate:
        _verify_monotone(rate)
    return rate


def preset_power(p: float, r0: float = 1.0) -> RateFunction:
    """Power rate x^p on (0, r0]; exponents in [-1/2, 0] are excluded."""
    if -0.5 <= p <= 0.0:
        raise InvalidArgumentError(
            f"power exponent {p} lies in the excluded band [-1/2, 0]")
    if r0 <= 0:
        raise InvalidArgumentError("r0 must be positive")
    return make_rate(lambda x: x ** p, r0, increasing=p > 0,
                     description=f"power(p={p}, r0={r0})")


def preset_exp(p: float, r0: float = 1.0) -> RateFunction:
    """Flat-at-zero rate exp(-x^-p)/sqrt(x) on (0, r0]."""
    if p <= 0:
        raise InvalidArgumentError(f"exponent p must be positive, got {p}")
    if r0 <= 0:
        raise InvalidArgumentError("r0 must be positive")

    def fn(x):
        return math.exp(-x ** (-p)) / math.sqrt(x)

    return make_rate(fn, r0, increasing=True, description=f"exp(p={p}, r0={r0})")


def from_table(xs, ys, description="table") -> RateFunction:
    """Tabulated rate, interpolated linearly in log-log coordinates."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise InvalidArgumentError("table needs matching 1d columns, >= 2 rows")
    if np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise InvalidArgumentError("table abscissae must be positive increasing")
    if np.any(ys <= 0):
        raise InvalidArgumentError("table values must be positive")
    d = np.diff(ys)
    if np.all(d > 0):
        increasing = True
    elif np.all(d < 0):
        increasing = False
    else:
        raise InvalidArgumentError("table values must be strictly monotone")
    lx, ly = np.log(xs), np.log(ys)
    slope0 = (ly[1] - ly[0]) / (lx[1] - lx[0])

    def fn(x):
        u = math.log(x)
        if u < lx[0]:  # extend the first segment so monotonicity reaches x -> 0
            return math.exp(ly[0] + slope0 * (u - lx[0]))
        return math.exp(np.interp(u, lx, ly))

    return make_rate(fn, xs[-1], increasing, description)


def load_table_csv(path) -> RateFunction:
    xs, ys = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#") or not _is_number(row[0]):
                continue
            xs.append(float(row[0]))
            ys.append(float(row[1]))
    return from_table(xs, ys, description=f"table({path})")


def _is_number(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def make_F(g: RateFunction) -> RateFunction:
    """Derived rate F(x) = x * G(x)^2 for an increasing positive G."""
    if not g.increasing:
        raise InvalidArgumentError("F is defined for increasing rate functions only")
    return make_rate(lambda x: x * g.fn(x) ** 2, g.x_max, increasing=True,
                     description=f"F[{g.description}]")


def inverse(f: RateFunction, y: float) -> float:
    """Invert a monotone rate by bracketing from the domain edges plus
    geometric bisection; converges to ~1e-13 relative in x."""
    f_edge = f.fn(f.x_max)
    if f.increasing:
        if y <= 0.0:
            raise RangeError(f"{y} below attainable range of {f.description}",
                             lo=0.0, hi=f_edge)
        if y > f_edge * (1.0 + 1e-12):
            raise RangeError(f"{y} above attainable range of {f.description}",
                             lo=0.0, hi=f_edge)
        if y == f_edge:
            return f.x_max
    else:
        if y < f_edge * (1.0 - 1e-12):
            raise RangeError(f"{y} below attainable range of {f.description}",
                             lo=f_edge, hi=math.inf)
        if y == f_edge:
            return f.x_max
    # expand the small-x bracket edge geometrically until it straddles y
    hi = f.x_max
    lo = f.x_max
    want_small = (lambda v: v <= y) if f.increasing else (lambda v: v >= y)
    while True:
        lo *= 0.5
        if lo < _X_FLOOR:
            raise RangeError(
                f"{y} outside attainable range of {f.description}",
                lo=min(f.fn(2 * lo), f_edge), hi=max(f_edge, f.fn(2 * lo)))
        if want_small(f.fn(lo)):
            break
    # geometric bisection keeps relative accuracy uniform across decades
    while hi / lo > 1.0 + 1e-13:
        mid = math.sqrt(lo * hi)
        v = f.fn(mid)
        if v == y:
            return mid
        if (v < y) == f.increasing:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def check_xFinv_increasing(g: RateFunction, grid=None) -> bool:
    """Sample check that x -> x * F^-1(1/x) is nondecreasing (1e-12 slack).

    Grid points where 1/x is not attainable by F are skipped; a grid with
    fewer than two valid points passes vacuously.  A G whose derived F fails
    its own monotonicity validation counts as a failed check.
    """
    try:
        f = make_F(g)
    except InvalidArgumentError:
        return False
    if grid is None:
        grid = np.geomspace(1e-2, 1e6, 128)
    vals = []
    for x in np.asarray(grid, dtype=float):
        try:
            vals.append(x * inverse(f, 1.0 / x))
        except RangeError:
            continue
    for a, b in zip(vals[:-1], vals[1:]):
        if b - a < -1e-12 * max(1.0, abs(a)):
            return False
    return True


def nonlinear_G(h: float, C: float, r: float, g_base: RateFunction) -> float:
    """Composite damping rate C * h^(2r+1) * F(h)^(4(r+1)) with F = x*G^2."""
    if h <= 0:
        raise InvalidArgumentError("h must be positive")
    f = make_F(g_base)
    return C * h ** (2 * r + 1) * f(h) ** (4 * (r + 1))


def make_nonlinear_rate(C: float, r: float, g_base: RateFunction) -> RateFunction:
    """The composite rate of nonlinear_G wrapped as a RateFunction."""
    f = make_F(g_base)
    return make_rate(lambda h: C * h ** (2 * r + 1) * f.fn(h) ** (4 * (r + 1)),
                     g_base.x_max, increasing=True,
                     description=f"composite(C={C}, r={r}; {g_base.description})")


def check_G_dilation_condition(g: RateFunction, c0: float, c: float,
                               grid=None) -> bool:
    """Pointwise check of G^-1(x) >= c/(c+1) * G^-1(x*(c0+1)) on the grid.

    Points where either inverse is out of range are skipped; c0 = 0 holds
    with equality.
    """
    if c0 == 0:
        return True
    if grid is None:
        hi = g.fn(g.x_max) / (1.0 + c0)
        grid = np.geomspace(hi * 1e-8, hi * (1 - 1e-9), 64)
    factor = c / (c + 1.0)
    for x in np.asarray(grid, dtype=float):
        try:
            lhs = inverse(g, x)
            rhs = factor * inverse(g, x * (c0 + 1.0))
        except RangeError:
            continue
        if lhs < rhs * (1.0 - 1e-10):
            return False
    return True


def remark_exponents(p: float, r: float) -> dict:
    """Both candidate decay exponents for power-law base rates.

    The closed-form remark states (4p+3)(2r+1)-1 while composing the
    intermediate rate with F = x^(2p+1) gives (2r+1)+4(r+1)(2p+1); they
    disagree for generic (p, r), so both are reported.
    """
    return {
        "remark_exponent": (4 * p + 3) * (2 * r + 1) - 1,
        "composed_exponent": (2 * r + 1) + 4 * (r + 1) * (2 * p + 1),
    }
