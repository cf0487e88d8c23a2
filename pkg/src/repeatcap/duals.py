"""Candidate dual output distributions and their KL-gap structure.

Each channel family gets a one-parameter family of candidate output
distributions Y^(q) on the integers whose KL radius D_KL(Y_x || Y^(q)) is
affine in E[Y_x] up to a gap Delta(x) >= 0:

    sticky:       Y(y) propto q^y exp(g(y) - y h(p)),        y >= 1,
                  g(y) = log (y-1)! - Lambda1(y) - Lambda2(y), zero gap
    duplication:  Y(y) propto q^y exp(g(y) - y h(p)/(1+p)),  y >= 1,
                  g(y) = Lambda1 - Lambda2 - Lambda3, zero gap
    deletion, convexity:  Y(y) propto C(y/p - 1, y) q^y exp(-y h(p)/p),
                  y >= 0 with weight 1 at 0; gap -> 1/2
    deletion, truncated:  weights from Lambda integrals truncated to
                  t in [0, 2p/(1+2p)]; gap identically R_p(x)
    inverse binomial:     C(y/p, y) q^y exp(-y h(p)/p); equals the
                  convexity family with the y = 0 mass set to delta = 1-p

The Lambda functions are integrals of the form int_0^1 f(y, t) dt whose
integrands have removable singularities at t = 0 and a 1/log(1-t) factor
at t = 1.  They are evaluated after the substitution v = -log(1-t) (see
numerics), with numerators regrouped through expm1/log1p so the t -> 0
cancellation stays benign, and with analytic Taylor limits taking over
where even that form runs out of mantissa.

A dual may have its mass at y = 0 rescaled to alpha*delta (delta in (0,1]);
the normalizers then satisfy 1/alpha = delta + 1/y0 - 1 and the KL-gap
transforms as Delta_delta(x) = Delta(x) - d log delta + d^x log delta with
d = 1 - p.

Everything q-independent (the Lambda values, hence the shifted log-weights
S(y) = g(y) - y * rate) is cached per (variant, p) in lazily grown tables,
because the bound optimization evaluates many q against the same table.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from repeatcap.channels import (
    ConditionalOutputLaw,
    Family,
    RepeatChannel,
    output_mean,
)
from repeatcap.numerics import (
    SeriesSpec,
    binary_entropy,
    integrate_exp_tail,
    integrate_mapped,
    log_integral_li,
    sum_series,
)


class DualVariant(enum.Enum):
    STICKY_ZERO_GAP = "sticky-zero-gap"
    DUPLICATION_ZERO_GAP = "duplication-zero-gap"
    GEOMDEL_CONVEXITY = "geomdel-convexity"
    GEOMDEL_TRUNCATED = "geomdel-truncated"
    INVERSE_BINOMIAL = "inverse-binomial"


_VARIANT_FAMILY = {
    DualVariant.STICKY_ZERO_GAP: Family.GEOMETRIC_STICKY,
    DualVariant.DUPLICATION_ZERO_GAP: Family.ELEMENTARY_DUPLICATION,
    DualVariant.GEOMDEL_CONVEXITY: Family.GEOMETRIC_DELETION,
    DualVariant.GEOMDEL_TRUNCATED: Family.GEOMETRIC_DELETION,
    DualVariant.INVERSE_BINOMIAL: Family.GEOMETRIC_DELETION,
}

_DELETION_VARIANTS = (
    DualVariant.GEOMDEL_CONVEXITY,
    DualVariant.GEOMDEL_TRUNCATED,
    DualVariant.INVERSE_BINOMIAL,
)

# The numerators all have the shape 1 (+ t) - t*y*c - exp(A); evaluated
# literally they cancel to O(v^2) out of O(1) terms and lose half the
# mantissa by v ~ 1e-8.  Regrouped as -expm1(A) + t*(1 - y*c) with A built
# from log1p, the rounding noise in f is ~eps*(1 + y*c)/v, so the quadratic
# Taylor limit (relative error ~(1 + y*c)*v) takes over per element once
# v*(1 + y*c) drops below the crossover scale, where both errors are ~1e-8
# relative and shrinking on either side.
_LIMIT_VC = 2e-8


def _blend(ys: np.ndarray, v, coeff, computed: np.ndarray, lim: np.ndarray) -> np.ndarray:
    mask = float(v) * (1.0 + np.asarray(ys, dtype=float) * float(coeff)) < _LIMIT_VC
    return np.where(mask, lim, computed)


def _sticky_f1_limit(ys: np.ndarray, p: float) -> np.ndarray:
    return 1.0 + ys * (1.0 - p) * (ys * (1.0 - p) - 3.0 - p) / 2.0


def _sticky_f2_limit(ys: np.ndarray, p: float) -> np.ndarray:
    return ys * (ys + 1.0) * p * p / 2.0


def _sticky_f(ys: np.ndarray, v: float, p: float, which: int) -> np.ndarray:
    """f_which(y, t(v)) * e^-v for the sticky Lambda integrals, vector over y."""
    t = -math.expm1(-v)
    if which == 1:
        log_ratio = -v - math.log1p(p * math.expm1(-v))  # log((1-t)/(1-pt))
        num = -np.expm1(ys * log_ratio + v) + t * (1.0 - ys * (1.0 - p))
        coeff = 1.0 - p
    else:
        num = -np.expm1(-ys * math.log1p(p * t)) - t * ys * p
        coeff = p
    f = (num / (-t * v)) * math.exp(-v)
    if v >= _LIMIT_VC:
        return f
    lim = _sticky_f1_limit(ys, p) if which == 1 else _sticky_f2_limit(ys, p)
    return _blend(ys, v, coeff, f, lim)


def _dup_f_limit(ys: np.ndarray, p: float, k: float) -> np.ndarray:
    return k * k * (ys * (ys - 1.0) / (2.0 * (1.0 + p) ** 2) - ys * p / (1.0 + p) ** 3)


def _dup_f(ys: np.ndarray, v: float, p: float, k: float) -> np.ndarray:
    """Duplication Lambda integrand in v coordinates; k in {1, p, 1-p}."""
    t = -math.expm1(-v)
    # w is the root in (0, 1] of the quadratic in the integrand.  For small
    # t it is computed through w - 1 = -4kt(1-kt)/((B + sqrt(disc)) *
    # (sqrt(disc) + 1 - p)), B = 1 + p - 2kt, which is cancellation-free;
    # for t near 1 the direct rationalized form is used instead (the w - 1
    # route degenerates to 0/0 at k = 1, t = 1).
    disc = (1.0 + p) ** 2 - 4.0 * p * k * t
    sq = math.sqrt(disc)
    if t < 0.5:
        u = -4.0 * k * t * (1.0 - k * t) / ((1.0 + p - 2.0 * k * t + sq) * (sq + 1.0 - p))
        log_w = math.log1p(u)
    else:
        w = 2.0 * (1.0 - k * t) / (sq + 1.0 - p)
        log_w = math.log(w) if w > 0.0 else -math.inf
    num = -np.expm1(ys * log_w) - t * ys * k / (1.0 + p)
    f = (num / (-t * v)) * math.exp(-v)
    if v >= _LIMIT_VC:
        return f
    return _blend(ys, v, k, f, _dup_f_limit(ys, p, k))


def _trunc_f_limit(ys: np.ndarray, p: float, which: int) -> np.ndarray:
    c = (1.0 - p) / p if which == 1 else 1.0 / p
    return 1.0 - 2.0 * ys * c + c * c * ys * (ys - 1.0) / 2.0


def _trunc_f(ys: np.ndarray, v: float, p: float, which: int) -> np.ndarray:
    """Truncated-deletion Lambda integrand on v in [0, log(1+2p)].

    The base w of the inner power is (1 - d e^v)/p (which=1) or
    ((1+p) - e^v)/p (which=2); both equal 1 - c*(e^v - 1) with c the same
    constant that multiplies y, both live in [-1, 1] on the domain (w2 hits
    -1 exactly at the right endpoint), and w1 crosses zero inside it when
    p < 1/2.  While w > 0 the numerator is regrouped through expm1/log1p;
    once w <= 0 integer powers are taken as signed powers of |w| (no small-v
    cancellation is possible there).
    """
    t = -math.expm1(-v)
    tev = math.expm1(v)  # t * e^v
    c = (1.0 - p) / p if which == 1 else 1.0 / p
    w = 1.0 - c * tev
    if w > 0.0:
        num = -np.expm1(ys * math.log1p(-c * tev) + v) + t * (1.0 - ys * c)
    else:
        aw = -w
        log_aw = math.log(aw) if aw > 0.0 else -math.inf
        sgn = np.where(ys % 2 == 1, -1.0, 1.0)
        with np.errstate(invalid="ignore"):
            pw = sgn * np.exp(ys * log_aw)
        pw = np.where(ys == 0, 1.0, pw)
        num = 1.0 + t - t * ys * c - pw * math.exp(v)
    f = (num / (-t * v)) * math.exp(-v)
    if v >= _LIMIT_VC:
        return f
    return _blend(ys, v, c, f, _trunc_f_limit(ys, p, which))


def _as_y_array(y) -> tuple[np.ndarray, bool]:
    arr = np.asarray(y, dtype=float)
    scalar = arr.ndim == 0
    return np.atleast_1d(arr), scalar


def _quad_tol(ys: np.ndarray) -> float:
    # Lambda(y) grows like y log y; an absolute tolerance independent of y
    # would be unattainable in doubles for y ~ 1e5.
    return 1e-10 * max(1.0, float(ys[-1]))


def lambda1_sticky(y, p: float):
    """Lambda_1(y) = int_0^1 f_1(y, t) dt for the sticky construction.

    Grows like log Gamma(y(1-p)); the t -> 0 limit of f_1 is
    1 + y(1-p)(y(1-p) - 3 - p)/2 and the t -> 1 limit is 0.
    """
    ys, scalar = _as_y_array(y)
    if np.any(ys < 1.0):
        raise ValueError("lambda1_sticky requires y >= 1")
    val, _ = integrate_exp_tail(
        lambda v: _sticky_f(ys, v, p, 1),
        0.0,
        endpoint_limits=(_sticky_f1_limit(ys, p), np.zeros_like(ys)),
        abs_tol=_quad_tol(ys),
    )
    return float(val[0]) if scalar else val


def lambda2_sticky(y, p: float):
    """Lambda_2(y), companion to lambda1_sticky; grows like log Gamma(1+yp)."""
    ys, scalar = _as_y_array(y)
    if np.any(ys < 1.0):
        raise ValueError("lambda2_sticky requires y >= 1")
    val, _ = integrate_exp_tail(
        lambda v: _sticky_f(ys, v, p, 2),
        0.0,
        endpoint_limits=(_sticky_f2_limit(ys, p), np.zeros_like(ys)),
        abs_tol=_quad_tol(ys),
    )
    return float(val[0]) if scalar else val


def g_sticky(y, p: float):
    """g(y) = log (y-1)! - Lambda_1(y) - Lambda_2(y).

    Satisfies y h(p) - g(y) = (1/2) log y + O(1), which is what makes the
    dual weights q^y exp(g(y) - y h(p)) behave like q^y / sqrt(y).
    """
    ys, scalar = _as_y_array(y)
    val = gammaln(ys) - lambda1_sticky(ys, p) - lambda2_sticky(ys, p)
    return float(val[0]) if scalar else val


def lambdas_duplication(y, p: float):
    """The three duplication Lambda integrals (coefficients k = 1, p, 1-p).

    The integrands extend continuously to [0, 1]; the t -> 0 limits are
    k^2 (y(y-1)/(2(1+p)^2) - y p/(1+p)^3) and the t -> 1 limits are 0.
    """
    ys, scalar = _as_y_array(y)
    if np.any(ys < 1.0):
        raise ValueError("lambdas_duplication requires y >= 1")
    out = []
    for k in (1.0, p, 1.0 - p):
        val, _ = integrate_exp_tail(
            lambda v: _dup_f(ys, v, p, k),
            0.0,
            endpoint_limits=(_dup_f_limit(ys, p, k), np.zeros_like(ys)),
            abs_tol=_quad_tol(ys),
        )
        out.append(float(val[0]) if scalar else val)
    return tuple(out)


def g_duplication(y, p: float):
    """g(y) = Lambda_1(y) - Lambda_2(y) - Lambda_3(y) for duplication."""
    l1, l2, l3 = lambdas_duplication(y, p)
    return l1 - l2 - l3


def _trunc_breaks(p: float) -> np.ndarray:
    v_t = math.log1p(2.0 * p)
    return np.unique(np.concatenate(([0.0], np.geomspace(1e-9, v_t, 50))))


def lambda_trunc_geomdel(y, p: float):
    """The two truncated-deletion Lambda integrals over t in [0, 2p/(1+2p)]."""
    ys, scalar = _as_y_array(y)
    if np.any(ys < 0.0):
        raise ValueError("lambda_trunc_geomdel requires y >= 0")
    v_t = math.log1p(2.0 * p)
    breaks = _trunc_breaks(p)
    out = []
    for which in (1, 2):
        val, _ = integrate_mapped(
            lambda v: _trunc_f(ys, v, p, which),
            0.0,
            v_t,
            endpoint_limits=(_trunc_f_limit(ys, p, which), None),
            abs_tol=_quad_tol(np.maximum(ys, 1.0)),
            breakpoints=breaks,
        )
        out.append(float(val[0]) if scalar else val)
    return tuple(out)


def r_p(x, p: float):
    """R_p(x): the KL-gap of the truncated deletion dual, nonnegative and
    exponentially decaying in x.

    R_p(x) = -int_T^1 (1-t)^(x-1) (1 - ((1-p)/(1-p(1-t)))^x) / (t log(1-t)) dt
    with T = 2p/(1+2p); in v coordinates the integrand is
    exp(-x v) (1 - (d/(1 - p e^-v))^x) / (t v) on [log(1+2p), inf).
    """
    xs, scalar = _as_y_array(x)
    if np.any(xs < 1.0):
        raise ValueError("r_p requires x >= 1")
    d = 1.0 - p
    v_t = math.log1p(2.0 * p)

    def fv(v: float) -> np.ndarray:
        emv = math.exp(-v)
        t = -math.expm1(-v)
        ratio = d / (1.0 - p * emv)
        return np.exp(-xs * v) * (1.0 - ratio**xs) / (t * v)

    val, _ = integrate_exp_tail(fv, v_t, span=60.0, abs_tol=1e-12, left_cluster=False)
    return float(val[0]) if scalar else val


def r_p_envelope(p: float) -> float:
    """I_p = int_T^1 dt / (-t log(1-t)); R_p(x) <= (1+2p)^-(x-1) * I_p."""
    v_t = math.log1p(2.0 * p)

    def fv(v: float) -> float:
        return math.exp(-v) / (-math.expm1(-v) * v)

    val, _ = integrate_exp_tail(fv, v_t, span=60.0, abs_tol=1e-12, left_cluster=False)
    return float(val)


class _STable:
    """Lazily grown table of the q-free log-weight part S(y), y = 1..n.

    S(y) = g(y) - y * rate, so a dual's log-weight is S(y) + y log q.  The
    table doubles in size on demand; growth is serialized by a lock so
    DualDistribution instances can be shared across threads.
    """

    def __init__(self, variant: DualVariant, p: float):
        self.variant = variant
        self.p = p
        self._lock = threading.Lock()
        self._vals = np.empty(0, dtype=float)

    def upto(self, ymax: int) -> np.ndarray:
        """S values for y = 1..ymax as a slice (do not mutate)."""
        if ymax > self._vals.size:
            with self._lock:
                if ymax > self._vals.size:
                    new_size = max(4096, self._vals.size)
                    while new_size < ymax:
                        new_size *= 2
                    lo = self._vals.size + 1
                    block = np.arange(lo, new_size + 1, dtype=float)
                    self._vals = np.concatenate((self._vals, self._compute(block)))
        return self._vals[:ymax]

    def _compute(self, ys: np.ndarray) -> np.ndarray:
        # The integrands peak near v ~ 1/y, so a block spanning decades of y
        # would force one panel set to resolve every scale at once (and pay
        # extended precision across all of them).  Chunking y geometrically
        # keeps each integration call single-scale.
        parts = []
        lo = 0
        while lo < ys.size:
            hi = lo + 1
            while hi < ys.size and ys[hi] < 4.0 * ys[lo]:
                hi += 1
            parts.append(self._compute_chunk(ys[lo:hi]))
            lo = hi
        return np.concatenate(parts)

    def _compute_chunk(self, ys: np.ndarray) -> np.ndarray:
        p = self.p
        h = binary_entropy(p)
        tol = _quad_tol(ys)
        if self.variant is DualVariant.STICKY_ZERO_GAP:
            stacked = lambda v: np.concatenate(
                (_sticky_f(ys, v, p, 1), _sticky_f(ys, v, p, 2))
            )
            lims0 = np.concatenate((_sticky_f1_limit(ys, p), _sticky_f2_limit(ys, p)))
            val, _ = integrate_exp_tail(
                stacked,
                0.0,
                endpoint_limits=(lims0, np.zeros(2 * ys.size)),
                abs_tol=tol,
                max_panels=1024,
            )
            l1, l2 = val[: ys.size], val[ys.size :]
            return gammaln(ys) - l1 - l2 - ys * h
        if self.variant is DualVariant.DUPLICATION_ZERO_GAP:
            ks = (1.0, p, 1.0 - p)
            stacked = lambda v: np.concatenate([_dup_f(ys, v, p, k) for k in ks])
            lims0 = np.concatenate([_dup_f_limit(ys, p, k) for k in ks])
            val, _ = integrate_exp_tail(
                stacked,
                0.0,
                endpoint_limits=(lims0, np.zeros(3 * ys.size)),
                abs_tol=tol,
                max_panels=1024,
            )
            l1, l2, l3 = np.split(val, 3)
            return l1 - l2 - l3 - ys * h / (1.0 + p)
        if self.variant is DualVariant.GEOMDEL_CONVEXITY:
            d = 1.0 - p
            return gammaln(ys / p) - gammaln(ys + 1.0) - gammaln(ys * d / p) - ys * h / p
        if self.variant is DualVariant.GEOMDEL_TRUNCATED:
            v_t = math.log1p(2.0 * p)
            stacked = lambda v: np.concatenate(
                (_trunc_f(ys, v, p, 1), _trunc_f(ys, v, p, 2))
            )
            lims0 = np.concatenate((_trunc_f_limit(ys, p, 1), _trunc_f_limit(ys, p, 2)))
            val, _ = integrate_mapped(
                stacked,
                0.0,
                v_t,
                endpoint_limits=(lims0, None),
                abs_tol=tol,
                breakpoints=_trunc_breaks(p),
                max_panels=1024,
            )
            l1, l2 = val[: ys.size], val[ys.size :]
            li = log_integral_li(1.0 / (1.0 + 2.0 * p))
            return l2 - l1 - gammaln(ys + 1.0) - ys * (li + h / p)
        raise ValueError(f"no table for {self.variant!r}")


_TABLES: dict[tuple[DualVariant, float], _STable] = {}
_TABLES_LOCK = threading.Lock()


def _get_table(variant: DualVariant, p: float) -> _STable:
    # The inverse binomial shares the convexity table: its weights differ
    # by the constant log(1-p) (C(y/p - 1, y) = (1-p) C(y/p, y)).
    kind = (
        DualVariant.GEOMDEL_CONVEXITY
        if variant is DualVariant.INVERSE_BINOMIAL
        else variant
    )
    key = (kind, float(p))
    with _TABLES_LOCK:
        table = _TABLES.get(key)
        if table is None:
            table = _STable(kind, float(p))
            _TABLES[key] = table
    return table


def clear_caches() -> None:
    with _TABLES_LOCK:
        _TABLES.clear()


@dataclass(frozen=True)
class DualDistribution:
    """A tabulated candidate output distribution.

    pmf(0) = exp(-log_normalizer) * delta for the deletion-family variants
    (their weight convention fixes a(0) = 1, so delta = 1 reproduces the
    unmodified distribution); pmf(y) = exp(log_weight(y) - log_normalizer)
    for y >= 1.  log_normalizer is log(1/alpha) = log(delta + sum a(y)),
    equal to log(1/y0) when delta = 1.  truncation records where the
    normalizer series stopped and the geometric bound on what was dropped.
    """

    variant: DualVariant
    p: float
    q: float
    delta: float
    log_normalizer: float
    mean: float
    truncation: tuple[int, float]
    series_converged: bool
    _table: _STable = field(repr=False, compare=False)

    @property
    def support_start(self) -> int:
        return 0 if self.variant in _DELETION_VARIANTS else 1

    @property
    def weight_shift(self) -> float:
        if self.variant is DualVariant.INVERSE_BINOMIAL:
            return -math.log1p(-self.p)
        return 0.0

    def log_weight(self, y):
        """log a(y) for y >= support_start (a(0) = 1 for deletion variants)."""
        ys, scalar = _as_y_array(y)
        yi = ys.astype(np.int64)
        if np.any(yi < self.support_start):
            raise ValueError("y below the dual's support")
        ymax = int(yi.max())
        table = self._table.upto(max(ymax, 1))
        logq = math.log(self.q)
        safe = np.maximum(yi, 1)
        out = table[safe - 1] + self.weight_shift + safe * logq
        out = np.where(yi == 0, 0.0, out)
        return float(out[0]) if scalar else out

    @property
    def log_weights(self) -> np.ndarray:
        """Cached log a(y) for y = support_start..Y_max (copy)."""
        y_max = self.truncation[0]
        ys = np.arange(self.support_start, y_max + 1)
        return self.log_weight(ys)

    def log_pmf(self, y):
        ys, scalar = _as_y_array(y)
        yi = ys.astype(np.int64)
        out = np.empty(yi.shape, dtype=float)
        zero = yi == 0
        if np.any(zero):
            if self.support_start == 1:
                out[zero] = -math.inf
            else:
                out[zero] = math.log(self.delta) - self.log_normalizer
        rest = ~zero
        if np.any(rest):
            out[rest] = self.log_weight(yi[rest]) - self.log_normalizer
        return float(out[0]) if scalar else out


def build_dual(
    variant: DualVariant,
    p: float,
    q: float,
    delta: float = 1.0,
    *,
    series_rel_tol: float = 1e-12,
    hard_cap: int = 2_000_000,
) -> DualDistribution:
    """Construct the dual: sum its normalizer and mean series off the cached
    weight table.

    On hard_cap exhaustion the distribution is still returned with
    series_converged False and the unresolved tail bound in truncation;
    the caller decides whether to accept it.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must be in (0, 1), got {q}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    variant = DualVariant(variant)
    if variant not in _DELETION_VARIANTS and delta != 1.0:
        raise ValueError("mass modification at y = 0 requires support at y = 0")
    table = _get_table(variant, p)
    # A weight series with geometric ratio q needs at least ~28/(1-q) terms
    # to push the relative tail under 1e-12 (the weights decay like
    # q^y / sqrt(y)); refuse upfront when even an underestimate of that
    # exceeds the cap, rather than paying for a doomed summation.
    if 25.0 / (1.0 - q) > hard_cap:
        return DualDistribution(
            variant=variant,
            p=float(p),
            q=float(q),
            delta=float(delta),
            log_normalizer=math.nan,
            mean=math.nan,
            truncation=(0, math.inf),
            series_converged=False,
            _table=table,
        )
    logq = math.log(q)
    shift = -math.log1p(-p) if variant is DualVariant.INVERSE_BINOMIAL else 0.0

    def log_term(ys: np.ndarray) -> np.ndarray:
        vals = table.upto(int(ys[-1]))
        return vals[ys - 1] + shift + ys * logq

    def ratio(ys: np.ndarray) -> np.ndarray:
        vals = table.upto(int(ys[-1]) + 1)
        return np.exp(vals[ys] - vals[ys - 1] + logq)

    def log_term_mean(ys: np.ndarray) -> np.ndarray:
        return log_term(ys) + np.log(ys)

    def ratio_mean(ys: np.ndarray) -> np.ndarray:
        return ratio(ys) * (ys + 1.0) / ys

    norm = sum_series(
        SeriesSpec(log_term, 1, series_rel_tol, ratio, hard_cap)
    )
    mean_num = sum_series(
        SeriesSpec(log_term_mean, 1, series_rel_tol, ratio_mean, hard_cap)
    )
    if variant in _DELETION_VARIANTS:
        log_normalizer = float(np.logaddexp(math.log(delta), norm.log_sum))
    else:
        log_normalizer = norm.log_sum
    mean = math.exp(mean_num.log_sum - log_normalizer)
    return DualDistribution(
        variant=variant,
        p=float(p),
        q=float(q),
        delta=float(delta),
        log_normalizer=log_normalizer,
        mean=mean,
        truncation=(max(norm.terms_used, mean_num.terms_used), norm.tail_bound),
        series_converged=norm.converged and mean_num.converged,
        _table=table,
    )


def _check_pairing(channel: RepeatChannel, dual: DualDistribution) -> None:
    if _VARIANT_FAMILY[dual.variant] is not channel.family:
        raise ValueError(
            f"dual variant {dual.variant.value} does not match channel family "
            f"{channel.family.value}"
        )
    if channel.p != dual.p:
        raise ValueError("channel and dual disagree on p")


def _log_pgf_unrestricted(channel: RepeatChannel, x: int, z: float) -> float:
    # Analytic continuation of the pgf to z > 1, for Chernoff tail bounds.
    p = channel.p
    if channel.family is Family.GEOMETRIC_STICKY:
        return x * (math.log(z) + math.log1p(-p) - math.log1p(-p * z))
    if channel.family is Family.ELEMENTARY_DUPLICATION:
        return x * (math.log(z) + math.log(1.0 - p + p * z))
    if channel.family is Family.GEOMETRIC_DELETION:
        return x * (math.log1p(-p) - math.log1p(-p * z))
    raise ValueError(f"no pgf for {channel.family.value}")


def _tail_mass_bound(channel: RepeatChannel, x: int, cutoff: int) -> float:
    """Chernoff bound on P(Y_x > cutoff) via min_z pgf(z) / z^cutoff."""
    p = channel.p
    if channel.family is Family.ELEMENTARY_DUPLICATION:
        if cutoff >= 2 * x:
            return 0.0
        zs = (1.5, 2.0, 4.0, 8.0)
    else:
        zs = tuple(1.0 + (1.0 / p - 1.0) * f for f in (0.25, 0.5, 0.75))
    best = math.inf
    for z in zs:
        log_bound = _log_pgf_unrestricted(channel, x, z) - cutoff * math.log(z)
        best = min(best, math.exp(min(log_bound, 700.0)))
    return best


def kl_divergence(channel: RepeatChannel, x: int, dual: DualDistribution) -> float:
    """D_KL(Y_x || dual) in nats by summation over Y_x's truncated support.

    The support is cut at mean + 40 stddev; the discarded mass is checked
    against a Chernoff bound and must be below 1e-12.  Returns inf if Y_x
    puts mass where the dual has none (a pairing bug, not a number).
    """
    _check_pairing(channel, dual)
    law = ConditionalOutputLaw(channel, x)
    ys = law.truncated_support(40.0)
    tail = _tail_mass_bound(channel, x, int(ys[-1]))
    if tail > 1e-12:
        raise RuntimeError(
            f"truncated support leaves tail mass {tail:.2e} > 1e-12 for x = {x}"
        )
    lp = law.log_pmf(ys)
    pm = np.exp(lp)
    ld = dual.log_pmf(ys)
    live = pm > 0.0
    if np.any(live & np.isneginf(ld)):
        return math.inf
    contrib = np.where(live, pm * (lp - ld), 0.0)
    return float(np.sum(contrib))


@dataclass(frozen=True)
class KLGapProfile:
    """Gap of D_KL(Y_x || dual) below the affine line slope*E[Y_x] + intercept.

    limit_candidate is the analytic large-x limit of the gap: 0 for the
    zero-gap families and the truncated variant, 1/2 for the convexity
    variant, 1/2 - log(1-p) for the inverse binomial, each shifted by
    -(1-p) log delta when the mass at zero is modified.
    """

    line_slope: float
    line_intercept: float
    gaps: dict[int, float]
    limit_candidate: float | None = None


_BASE_GAP_LIMIT = {
    DualVariant.STICKY_ZERO_GAP: lambda p: 0.0,
    DualVariant.DUPLICATION_ZERO_GAP: lambda p: 0.0,
    DualVariant.GEOMDEL_CONVEXITY: lambda p: 0.5,
    DualVariant.GEOMDEL_TRUNCATED: lambda p: 0.0,
    DualVariant.INVERSE_BINOMIAL: lambda p: 0.5 - math.log1p(-p),
}


def kl_gap_profile(
    channel: RepeatChannel, dual: DualDistribution, x_max: int
) -> KLGapProfile:
    """Evaluate the KL-gap for x = 1..x_max against the dual's bound line."""
    _check_pairing(channel, dual)
    if x_max < 1:
        raise ValueError("x_max must be >= 1")
    slope = -math.log(dual.q)
    d = 1.0 - dual.p
    intercept = dual.log_normalizer
    limit = _BASE_GAP_LIMIT[dual.variant](dual.p)
    if dual.variant in _DELETION_VARIANTS:
        intercept -= d * math.log(dual.delta)
        limit -= d * math.log(dual.delta)
    gaps: dict[int, float] = {}
    for x in range(1, x_max + 1):
        mu_x = output_mean(channel, x)
        gaps[x] = intercept + slope * mu_x - kl_divergence(channel, x, dual)
    return KLGapProfile(
        line_slope=slope, line_intercept=intercept, gaps=gaps, limit_candidate=limit
    )


def epsilon_inf(channel: RepeatChannel, dual: DualDistribution, x_max: int = 500) -> float:
    """inf over x >= 1 of the KL-gap: min of the scan and the analytic limit."""
    profile = kl_gap_profile(channel, dual, x_max)
    lo = min(profile.gaps.values())
    if profile.limit_candidate is not None:
        lo = min(lo, profile.limit_candidate)
    return lo


def convexity_gap_scan(p: float, x_max: int) -> np.ndarray:
    """Delta(x) for x = 1..x_max for the convexity deletion dual.

    The gap is independent of q (both -log y0 and the E[Y_x] log q term
    cancel against the weight's q^y factor), so it reduces to
    H(Y_x) + E[S(Y_x)] with S the cached q-free log-weight part.  This is
    the fast path the bound optimizer uses; the generic route through
    kl_gap_profile computes the same numbers from any built dual.
    """
    if x_max < 1:
        raise ValueError("x_max must be >= 1")
    channel = RepeatChannel(Family.GEOMETRIC_DELETION, p)
    table = _get_table(DualVariant.GEOMDEL_CONVEXITY, p)
    out = np.empty(x_max, dtype=float)
    for x in range(1, x_max + 1):
        law = ConditionalOutputLaw(channel, x)
        ys = law.truncated_support(40.0)
        lp = law.log_pmf(ys)
        pm = np.exp(lp)
        entropy = -float(np.dot(pm, lp))
        pos = ys >= 1
        svals = table.upto(int(ys[-1]))
        out[x - 1] = entropy + float(np.dot(pm[pos], svals[ys[pos] - 1]))
    return out
