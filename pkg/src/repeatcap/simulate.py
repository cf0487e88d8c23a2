"""Monte Carlo study of the Poisson repeat channel with run-length decoding.

Each input bit x_i is replaced by L_i independent Poisson(lambda) copies of
itself; L_i = 0 deletes the bit.  The decoder sees only the concatenated
output, splits it into maximal runs, and rewrites each run of length L as
round(L / lambda) copies of its bit value.  Since a run of j input bits
produces Poisson(j * lambda) output symbols, concentrated within
O(sqrt(j * lambda)) of its mean, the rounding recovers j exactly once
lambda is large against the squared number of runs affected, and the edit
distance between input and decode drops below any fixed fraction of n.
A trial succeeds when ED(x, decode) <= epsilon * n.

Trials draw independent RNG streams spawned from a single seed, so results
are reproducible and trials could run concurrently without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INPUT_SOURCES = ("uniform_random", "all_alternating", "user_supplied")


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one Monte Carlo run.

    n is the input length in bits, lam the Poisson replication mean,
    epsilon the allowed edit-distance fraction, input_bits the fixed input
    when input_source is user_supplied (length must equal n).
    """

    n: int
    lam: float
    epsilon: float
    trials: int
    seed: int
    input_source: str = "uniform_random"
    input_bits: str | None = None


@dataclass(frozen=True)
class TrialReport:
    """Outcome of a single trial; success means edit_distance <= epsilon*n."""

    edit_distance: int
    output_length: int
    success: bool


def _as_bit_array(bits) -> np.ndarray:
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8)
    if arr.size and not np.all(arr <= 1):
        raise ValueError("input bits must be 0 or 1")
    return arr


def _like(arr: np.ndarray, template) -> str | np.ndarray:
    if isinstance(template, str):
        return (arr + ord("0")).tobytes().decode("ascii")
    return arr


def validate_config(config: SimConfig) -> None:
    if config.n < 1:
        raise ValueError(f"n must be positive, got {config.n}")
    if not config.lam > 0.0:
        raise ValueError(f"lambda must be positive, got {config.lam}")
    if not 0.0 < config.epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {config.epsilon}")
    if config.trials < 1:
        raise ValueError(f"trials must be >= 1, got {config.trials}")
    if config.input_source not in INPUT_SOURCES:
        raise ValueError(f"unknown input_source {config.input_source!r}")
    if config.input_source == "user_supplied":
        if config.input_bits is None:
            raise ValueError("user_supplied input_source requires input_bits")
        bits = _as_bit_array(config.input_bits)
        if bits.size != config.n:
            raise ValueError(
                f"input_bits length {bits.size} does not match n = {config.n}"
            )
    elif config.input_bits is not None:
        raise ValueError("input_bits is only valid with input_source=user_supplied")


def sample_channel_output(x_bits, lam: float, rng) -> str | np.ndarray:
    """Concatenation of L_i copies of each x_i, L_i i.i.d. Poisson(lam).

    rng needs a poisson(lam, size) method; numpy Generators qualify (they
    switch between sequential inversion and transformed rejection with the
    mean, which covers lam from 0 to the hundreds used here).
    """
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    arr = _as_bit_array(x_bits)
    counts = rng.poisson(lam, arr.size)
    return _like(np.repeat(arr, counts), x_bits)


def run_length_decode(y_bits, lam: float) -> str | np.ndarray:
    """Rewrite each maximal run of length L as round(L / lam) copies.

    Rounding is half-up (2.5 -> 3); runs rounding to 0 vanish.  Empty
    input decodes to empty output.
    """
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    arr = _as_bit_array(y_bits)
    if arr.size == 0:
        return _like(arr, y_bits)
    starts = np.concatenate([[0], np.flatnonzero(np.diff(arr)) + 1])
    lengths = np.diff(np.concatenate([starts, [arr.size]]))
    copies = np.floor(lengths / lam + 0.5).astype(np.int64)
    return _like(np.repeat(arr[starts], copies).astype(np.uint8), y_bits)


def edit_distance(a, b) -> int:
    """Unit-cost Levenshtein distance between two sequences.

    Bit-parallel column algorithm: the pattern's delta vector is packed
    into one big integer, so a text step costs a handful of word-wide
    bit operations instead of a DP row.  Works for any hashable symbols,
    not just bits.  Memory is one integer of len(a) bits.
    """
    if isinstance(a, np.ndarray):
        a = a.tobytes()
    if isinstance(b, np.ndarray):
        b = b.tobytes()
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0:
        return len(b)
    masks: dict = {}
    bit = 1
    for c in a:
        masks[c] = masks.get(c, 0) | bit
        bit <<= 1
    full = (1 << m) - 1
    high = 1 << (m - 1)
    pv = full
    mv = 0
    score = m
    for c in b:
        eq = masks.get(c, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | (full ^ (xh | pv))
        mh = pv & xh
        if ph & high:
            score += 1
        elif mh & high:
            score -= 1
        ph = ((ph << 1) | 1) & full
        mh = (mh << 1) & full
        pv = mh | (full ^ (xv | ph))
        mv = ph & xv
    return score


def _input_bits(config: SimConfig, rng) -> np.ndarray:
    if config.input_source == "uniform_random":
        return rng.integers(0, 2, config.n, dtype=np.uint8)
    if config.input_source == "all_alternating":
        return (np.arange(config.n, dtype=np.int64) & 1).astype(np.uint8)
    return _as_bit_array(config.input_bits)


def run_monte_carlo(config: SimConfig, *, rng_factory=None):
    """Run config.trials independent trials; returns (success_rate, reports).

    Each trial gets its own RNG stream spawned from SeedSequence(seed), so
    the run is deterministic in the config and trial outcomes do not depend
    on execution order.  rng_factory maps a SeedSequence to an rng and
    exists so tests can inject stub generators; default is numpy's.
    """
    validate_config(config)
    if rng_factory is None:
        rng_factory = np.random.default_rng
    reports = []
    threshold = config.epsilon * config.n
    for child in np.random.SeedSequence(config.seed).spawn(config.trials):
        rng = rng_factory(child)
        x = _input_bits(config, rng)
        y = sample_channel_output(x, config.lam, rng)
        decoded = run_length_decode(y, config.lam)
        dist = edit_distance(x, decoded)
        reports.append(
            TrialReport(
                edit_distance=int(dist),
                output_length=int(y.size),
                success=bool(dist <= threshold),
            )
        )
    success_rate = sum(r.success for r in reports) / len(reports)
    return success_rate, reports
