"""Independent oracles for the test suite.

Frozen constants were generated by Gauss-Legendre quadrature at 50
significant digits (mpmath) in v = -log(1-t) coordinates, where every
integrand in this package is analytic and the tail decays like exp(-v);
segment lists [0, 0.02, 0.2, 1, 5, 15, 40, 80] (full-line integrals) or
[0, vT/50, vT/5, vT] (truncated ones).  Each value was cross-checked
against scipy QUADPACK and a 4 million point longdouble Simpson rule;
the three routes agree to at least 1e-15.  None of them share code with
the package's float64 adaptive Gauss-Kronrod route.

Live helpers: a composite Simpson rule in longdouble and a textbook
dynamic-programming edit distance, both written independently of the
package implementations they check.
"""

from __future__ import annotations

import math

import numpy as np

# integral of f1(y, t) over t in [0, 1] for the sticky construction,
# f1 = (1 + t - t y (1-p) - (1-t)^(y-1) / (1-pt)^y) / (t log(1-t))
LAMBDA1_STICKY = {
    (1, 0.3): 0.0718937861978697778029,
    (5, 0.3): 1.04198047945836863296,
    (10, 0.3): 6.42468235014017071988,
    (50, 0.5): 54.5322456033007360447,
}

# integral of f2(y, t) = (1 - (1+pt)^-y - t y p) / (t log(1-t))
LAMBDA2_STICKY = {
    (1, 0.3): 0.0557599859807880522241,
    (10, 0.3): 2.34414896114053836525,
}

G_STICKY = {
    (1, 0.3): -0.127653772178657830027,  # log 0! - L1(1) - L2(1)
    (10, 0.3): 4.03299616880076052608,
}

# duplication integrals, integrand (1 - w(k,t)^y - t y k/(1+p)) / (t log(1-t))
# with w = 2(1-kt) / (sqrt((1+p)^2 - 4pkt) + 1 - p), for k = 1, p, 1-p
LAMBDAS_DUPLICATION = {
    (1, 0.2): (
        -0.0921225939332444740865,
        -0.00328621452555455436806,
        -0.0570801496981417493184,
    ),
}

# truncated-deletion integrals over t in [0, 2p/(1+2p)], integrand
# (1 + t - t y c - w^y/(1-t)) / (t log(1-t)); which=1: c=(1-p)/p,
# w=(p-t)/(p(1-t)); which=2: c=1/p, w=(p-t(1+p))/(p(1-t))
LAMBDA_TRUNC_GEOMDEL = {
    (5, 0.5): (1.14025751895683949788, 8.23034728628726571109),
    (0, 0.5): (0.589373787380956510321, 0.589373787380956510321),
}

# R_p(x) = -int_{2p/(1+2p)}^1 (1-t)^(x-1) (1 - ((1-p)/(1-p(1-t)))^x)
#          / (t log(1-t)) dt
R_P = {
    (1, 0.5): 0.225861091721509186531,
    (1, 0.3): 0.204865200828941926249,
    (3, 0.3): 0.101788125814805751574,
}

# I_p = int_{2p/(1+2p)}^1 dt / (-t log(1-t))
I_P_ENVELOPE = {
    0.3: 1.08068596034642858166,
    0.6: 0.45365037849566484275,
    0.9: 0.270192774484700146712,
}

# sum over y >= 1 of q^y exp(g(y) - y h(p)) for the sticky dual at
# p = 0.3, q = 0.5, summed to y = 160 in 50-digit arithmetic with every
# g(y) from the Gauss-Legendre lambdas (terms decay like 0.5^y/sqrt(y);
# y > 160 contributes < 1e-49)
STICKY_NORMALIZER_P03_Q05 = 0.38043498505577985085
STICKY_LOG_NORMALIZER_P03_Q05 = -0.966439983413146897664
STICKY_MEAN_P03_Q05 = 1.64142835547203301225

LI_HALF = -0.378671043061087976727  # logarithmic integral at 1/2 (mpmath li)
LI_THIRD = -0.186411396831567143349
ETA_HALF = -0.571498743652464668416  # equals -I_p at p = 1/2 (substitution
ETA_0625 = -1.08068596034642858166  # t -> 1-u); both routes agree to 21 digits
BINARY_ENTROPY_QUARTER = 0.562335144618808350288
LOG_GAMMA_4_5 = 2.4537365708424422205

# smallest KL-gap of the deletion convexity dual at p = 0.5 over
# x = 1..500 plus the large-x limit; two independent series
# implementations and a direct truncated-KL summation agree on it
EPSILON_CONV_HALF = 0.5844038221104629


def simpson_longdouble(f, a: float, b: float, panels: int) -> float:
    """Composite Simpson rule with longdouble accumulation.

    f must accept a longdouble numpy array of nodes and return the
    integrand values; the endpoints are included, so callers supply a
    form (or analytic limit) that is finite there.
    """
    xs = np.linspace(np.longdouble(a), np.longdouble(b), 2 * panels + 1)
    fx = np.asarray(f(xs), dtype=np.longdouble)
    weights = np.ones(xs.size, dtype=np.longdouble)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    h = (np.longdouble(b) - np.longdouble(a)) / panels
    return float(h / 6.0 * np.sum(weights * fx))


def sticky_f1_raw_v(y: float, p: float, vs: np.ndarray) -> np.ndarray:
    """Raw sticky f1 integrand in v coordinates (Jacobian included),
    longdouble, with the analytic value at v = 0."""
    vs = np.asarray(vs, dtype=np.longdouble)
    out = np.empty_like(vs)
    zero = vs == 0
    out[zero] = 1.0 + y * (1.0 - p) * (y * (1.0 - p) - 3.0 - p) / 2.0
    v = vs[~zero]
    t = 1.0 - np.exp(-v)
    num = 1.0 + t - t * y * (1.0 - p) - (1.0 - t) ** (y - 1.0) / (1.0 - p * t) ** y
    with np.errstate(divide="ignore"):  # t rounds to 1 for v >~ 44
        out[~zero] = num / (t * np.log1p(-t)) * np.exp(-v)
    return out


def dp_edit_distance(a, b) -> int:
    """Textbook O(len(a) * len(b)) Levenshtein distance."""
    a, b = list(a), list(b)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
        prev = cur
    return prev[len(b)]
