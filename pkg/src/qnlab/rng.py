"""Deterministic counter-based random numbers.

Experiment traces must be reproducible bit for bit, so all sampling in this
package goes through an explicit, fully specified generator instead of
numpy's global state.  The generator is counter-based splitmix64:

    GOLDEN = 0x9E3779B97F4A7C15
    value(seed, i) = mix64((seed + i * GOLDEN) mod 2**64),  i = 1, 2, ...

where ``mix64`` is the splitmix64 finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9   (mod 2**64)
    z ^= z >> 27;  z *= 0x94D049BB133111EB   (mod 2**64)
    z ^= z >> 31

Derived quantities are defined exactly as:

* uniform in [0, 1):  (value >> 11) * 2**-53
* uniform in (0, 1]:  ((value >> 11) + 1) * 2**-53
* standard normals: Box-Muller on consecutive value pairs, u1 in (0, 1]
  from the even draw and u2 in [0, 1) from the odd draw,
  z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2).

A stream is the value pair ``RngState(seed, counter)``; drawing n numbers
advances the counter by n.  States are plain immutable values, so streams
can be stored, replayed, and split without shared mutable state.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
# arbitrary odd constant decorrelating child streams from the parent draw
_SPLIT_XOR = 0x9FB21C651E98DF25

_U53 = 2.0 ** -53


class RngState(NamedTuple):
    """Immutable stream position: (seed, number of values drawn so far)."""

    seed: int
    counter: int = 0


def rng_from_seed(seed: int) -> RngState:
    return RngState(int(seed) & _MASK, 0)


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2**64, matching _mix64 exactly
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
    return z ^ (z >> np.uint64(31))


def next_u64(state: RngState) -> tuple[int, RngState]:
    """Draw one raw 64-bit value and advance the stream."""
    i = state.counter + 1
    value = _mix64((state.seed + i * _GOLDEN) & _MASK)
    return value, RngState(state.seed, i)


def raw_values(n: int, state: RngState) -> tuple[np.ndarray, RngState]:
    """Draw ``n`` raw 64-bit values as a uint64 array."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    idx = np.arange(state.counter + 1, state.counter + n + 1, dtype=np.uint64)
    z = np.uint64(state.seed) + idx * np.uint64(_GOLDEN)
    return _mix64_array(z), RngState(state.seed, state.counter + n)


def uniforms(n: int, state: RngState, lo: float = 0.0, hi: float = 1.0):
    """``n`` uniforms in [lo, hi), derived from the 53 high bits per draw."""
    values, state = raw_values(n, state)
    u = (values >> np.uint64(11)).astype(np.float64) * _U53
    return lo + (hi - lo) * u, state


def gaussians(n: int, state: RngState) -> tuple[np.ndarray, RngState]:
    """``n`` standard normal deviates via Box-Muller on value pairs."""
    pairs = (n + 1) // 2
    values, state = raw_values(2 * pairs, state)
    bits = values >> np.uint64(11)
    u1 = (bits[0::2].astype(np.float64) + 1.0) * _U53  # (0, 1]
    u2 = bits[1::2].astype(np.float64) * _U53          # [0, 1)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:n], state


def split(state: RngState) -> tuple[RngState, RngState]:
    """Derive an independent child stream; returns (child, advanced parent)."""
    value, parent = next_u64(state)
    child = RngState(_mix64(value ^ _SPLIT_XOR), 0)
    return child, parent
