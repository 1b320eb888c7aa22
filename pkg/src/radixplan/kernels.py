"""Mixed-radix decimation-in-time FFT kernels.

Signals are 1-D (or batched, last axis) ``numpy.complex64`` arrays.  A plan is
a sequence of radixes from {2, 4, 8} whose log2 values sum to log2(N); the
first radix of a plan is applied first, to the shortest butterfly span.

Stage ``s`` with radix ``r`` combines ``r`` already transformed sub-blocks of
length ``2**s`` into blocks of length ``r * 2**s``, so its work depends only on
``(s, r)`` and never on the rest of the plan.
"""

from __future__ import annotations

import functools
import math
from typing import Iterable, Sequence

import numpy as np

FORWARD = "forward"
INVERSE = "inverse"
RADIXES = (2, 4, 8)

_SQRT1_2 = np.float32(math.sqrt(0.5))


class PlanError(ValueError):
    """A radix plan that does not fit the transform size."""


def log2_exact(n: int) -> int:
    """Return log2(n) for a power of two ``n >= 1``; raise ValueError otherwise."""
    n = int(n)
    if n < 1 or n & (n - 1):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1


def _check_direction(direction: str) -> str:
    if direction not in (FORWARD, INVERSE):
        raise ValueError(f"direction must be {FORWARD!r} or {INVERSE!r}, got {direction!r}")
    return direction


def as_signal(samples, *, batched: bool = False) -> np.ndarray:
    """Coerce ``samples`` to a complex64 signal and check its invariants.

    The last axis holds the samples; it must be a power of two >= 2 and every
    value must be finite.  With ``batched=False`` the input must be 1-D.
    """
    x = np.asarray(samples)
    if not batched and x.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {x.shape}")
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("empty signal")
    n = x.shape[-1]
    if n < 2 or n & (n - 1):
        raise ValueError(f"signal length must be a power of two >= 2, got {n}")
    x = x.astype(np.complex64, copy=False)
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains NaN or Inf")
    return x


def parse_plan(text: str) -> tuple[int, ...]:
    """Parse the ``"4,8,8,4"`` notation into a radix tuple."""
    try:
        plan = tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError:
        raise PlanError(f"cannot parse plan {text!r}") from None
    if not plan:
        raise PlanError("empty plan")
    return plan


def format_plan(plan: Iterable[int]) -> str:
    return ",".join(str(r) for r in plan)


def validate_plan(plan: Sequence[int], n_samples: int) -> tuple[int, ...]:
    """Check that ``plan`` is a valid radix schedule for ``n_samples``."""
    plan = tuple(int(r) for r in plan)
    if not plan:
        raise PlanError("empty plan")
    bad = [r for r in plan if r not in RADIXES]
    if bad:
        raise PlanError(f"unsupported radix {bad[0]}; allowed radixes are {RADIXES}")
    total = sum(log2_exact(r) for r in plan)
    if total != log2_exact(n_samples):
        raise PlanError(
            f"radix logs do not sum to log2 N: plan {format_plan(plan)} covers "
            f"{total} stages, N={n_samples} needs {log2_exact(n_samples)}"
        )
    return plan


def default_plan(n_samples: int) -> tuple[int, ...]:
    """Largest-radix-first plan, e.g. 8,8,8,2 for 1024 points."""
    stages = log2_exact(n_samples)
    if stages == 0:
        raise PlanError("no plan for a 1-point transform")
    plan = [8] * (stages // 3)
    rest = stages % 3
    if rest:
        plan.append(2**rest)
    return tuple(plan)


class TwiddleTable:
    """Precomputed ``exp(-+2*pi*i*k/N)`` for ``k = 0..N-1``.

    The table is read-only after construction and may be shared between
    threads.  Per-stage factor blocks are sliced out of the full table and
    memoised.
    """

    def __init__(self, size: int, direction: str = FORWARD):
        log2_exact(size)
        self.size = int(size)
        self.direction = _check_direction(direction)
        sign = -1.0 if direction == FORWARD else 1.0
        k = np.arange(self.size, dtype=np.float64)
        factors = np.exp(sign * 2j * np.pi * k / self.size).astype(np.complex64)
        factors[0] = 1.0
        factors.flags.writeable = False
        self.factors = factors
        # +-j rotation used inside radix-4/8 butterflies
        self._rot = np.complex64(-1j if direction == FORWARD else 1j)
        self._stage_cache: dict[tuple[int, int], np.ndarray] = {}

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"TwiddleTable(size={self.size}, direction={self.direction!r})"

    def stage_factors(self, radix: int, stage_index: int) -> np.ndarray:
        """Factors ``w_{rL}^{q*j}`` as an ``(r, L)`` array with ``L = 2**stage_index``."""
        key = (radix, stage_index)
        block = self._stage_cache.get(key)
        if block is None:
            span = radix << stage_index
            stride = self.size // span
            q = np.arange(radix)[:, None]
            j = np.arange(1 << stage_index)[None, :]
            block = self.factors[(q * j) * stride]
            block.flags.writeable = False
            self._stage_cache[key] = block
        return block


@functools.lru_cache(maxsize=64)
def _cached_table(size: int, direction: str) -> TwiddleTable:
    return TwiddleTable(size, direction)


def twiddle_table(size: int, direction: str = FORWARD) -> TwiddleTable:
    """Shared, cached :class:`TwiddleTable` for ``size`` and ``direction``."""
    return _cached_table(int(size), _check_direction(direction))


@functools.lru_cache(maxsize=256)
def digit_reversal(n_samples: int, plan: tuple[int, ...]) -> np.ndarray:
    """Input permutation for a plan: ``buffer[i] = x[perm[i]]``.

    Generalises bit reversal; the last radix of the plan is the most
    significant digit of the buffer position.
    """
    perm = np.zeros(1, dtype=np.intp)
    length = 1
    for r in plan:
        # block q of the next level holds the subsequence with offset q, stride r
        perm = (np.arange(r)[:, None] + r * perm[None, :]).reshape(-1)
        length *= r
    if length != n_samples:
        raise PlanError("radix logs do not sum to log2 N")
    perm.flags.writeable = False
    return perm


def dft_oracle(samples, direction: str = FORWARD) -> np.ndarray:
    """Direct O(N^2) DFT along the last axis, accumulated in double precision.

    Accepts any length >= 1.  The inverse transform is scaled by 1/N.  The
    result is rounded to complex64.
    """
    _check_direction(direction)
    x = np.asarray(samples, dtype=np.complex128)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("empty signal")
    n = x.shape[-1]
    sign = -1.0 if direction == FORWARD else 1.0
    idx = np.arange(n, dtype=np.int64)
    out = np.empty(x.shape, dtype=np.complex128)
    chunk = max(1, (1 << 20) // n)
    for k0 in range(0, n, chunk):
        k = idx[k0:k0 + chunk]
        # reduce n*k mod N before scaling so phases stay exact for large N
        phase = (np.outer(k, idx) % n).astype(np.float64) * (sign * 2.0 * np.pi / n)
        out[..., k0:k0 + chunk] = x @ np.exp(1j * phase).T
    if direction == INVERSE:
        out /= n
    return out.astype(np.complex64)


def _butterfly2(a0, a1):
    return a0 + a1, a0 - a1


def _butterfly4(a0, a1, a2, a3, rot):
    t0 = a0 + a2
    t1 = a0 - a2
    t2 = a1 + a3
    t3 = (a1 - a3) * rot
    return t0 + t2, t1 + t3, t0 - t2, t1 - t3


def _butterfly8(a, rot):
    e0, e1, e2, e3 = _butterfly4(a[0], a[2], a[4], a[6], rot)
    o0, o1, o2, o3 = _butterfly4(a[1], a[3], a[5], a[7], rot)
    # w8 = (1 -+ j)/sqrt2, w8^2 = rot, w8^3 = rot * w8
    o1 = (o1 + o1 * rot) * _SQRT1_2
    o2 = o2 * rot
    o3 = (o3 * rot - o3) * _SQRT1_2
    return (e0 + o0, e1 + o1, e2 + o2, e3 + o3,
            e0 - o0, e1 - o1, e2 - o2, e3 - o3)


def apply_radix_stage(data: np.ndarray, radix: int, stage_index: int,
                      twiddles: TwiddleTable) -> np.ndarray:
    """Run one radix pass in place on ``data`` (last axis) and return it.

    ``stage_index`` counts log2 progress: a radix-8 pass starting at ``s``
    consumes logical stages ``s, s+1, s+2``.  ``data`` must be a C-contiguous
    complex64 array whose last axis has length ``twiddles.size``.
    """
    n = data.shape[-1]
    if n != twiddles.size:
        raise ValueError(f"twiddle table size {twiddles.size} does not match N={n}")
    if radix not in RADIXES:
        raise PlanError(f"unsupported radix {radix}")
    width = log2_exact(radix)
    if stage_index < 0 or stage_index + width > log2_exact(n):
        raise PlanError(
            f"plan exceeds transform size: radix {radix} at stage {stage_index} "
            f"needs {stage_index + width} of {log2_exact(n)} stages"
        )
    span_in = 1 << stage_index
    view = data.reshape(data.shape[:-1] + (n // (radix * span_in), radix, span_in))
    tw = twiddles.stage_factors(radix, stage_index)
    legs = [view[..., q, :] * tw[q] if stage_index else view[..., q, :] for q in range(radix)]
    if radix == 2:
        outs = _butterfly2(*legs)
    elif radix == 4:
        outs = _butterfly4(*legs, twiddles._rot)
    else:
        outs = _butterfly8(legs, twiddles._rot)
    for p, value in enumerate(outs):
        view[..., p, :] = value
    return data


def _execute(x: np.ndarray, plan: tuple[int, ...], direction: str) -> np.ndarray:
    n = x.shape[-1]
    buf = np.ascontiguousarray(x[..., digit_reversal(n, plan)])
    table = twiddle_table(n, direction)
    stage = 0
    for r in plan:
        apply_radix_stage(buf, r, stage, table)
        stage += log2_exact(r)
    return buf


def run_plan(samples, plan: Sequence[int], direction: str = FORWARD) -> np.ndarray:
    """Mixed-radix FFT of ``samples`` along the last axis following ``plan``.

    Applies the plan's digit-reversal permutation, then each radix pass in
    order; output is in natural order.  The inverse transform is scaled by 1/N.
    """
    _check_direction(direction)
    x = as_signal(samples, batched=True)
    n = x.shape[-1]
    buf = _execute(x, validate_plan(plan, n), direction)
    if direction == INVERSE:
        buf *= np.float32(1.0 / n)
    return buf


def fft(samples, plan: Sequence[int] | None = None, direction: str = FORWARD) -> np.ndarray:
    """:func:`run_plan` with the largest-radix-first plan when none is given."""
    n = np.shape(samples)[-1]
    return run_plan(samples, plan if plan is not None else default_plan(n), direction)


def large_fft_fourstep(samples, base_size: int, base_plan: Sequence[int],
                       row_plan: Sequence[int] | None = None,
                       direction: str = FORWARD) -> np.ndarray:
    """N-point FFT built from ``base_size``-point FFTs (four-step method).

    With ``N = base_size * M`` the input is viewed as a ``base_size x M``
    matrix ``A[j, m] = x[j*M + m]``.  The M columns get base FFTs with
    ``base_plan``, element ``(k, m)`` is scaled by ``w_N^(k*m)``, the matrix is
    transposed and the base_size rows get M-point FFTs.  ``row_plan`` defaults
    to the largest-radix-first plan for M.
    """
    _check_direction(direction)
    x = as_signal(samples)
    n = x.shape[0]
    log2_exact(base_size)
    if n % base_size:
        raise ValueError(f"N={n} is not a multiple of base size {base_size}")
    m = n // base_size
    base_plan = validate_plan(base_plan, base_size)
    if m == 1:
        return run_plan(x, base_plan, direction)
    row_plan = validate_plan(row_plan if row_plan is not None else default_plan(m), m)

    # columns of A as contiguous rows: cols[m, j] = x[j*M + m]
    cols = _execute(np.ascontiguousarray(x.reshape(base_size, m).T), base_plan, direction)
    table = twiddle_table(n, direction)
    exponent = (np.arange(m)[:, None] * np.arange(base_size)[None, :]) % n
    cols *= table.factors[exponent]
    rows = _execute(np.ascontiguousarray(cols.T), row_plan, direction)
    if direction == INVERSE:
        rows *= np.float32(1.0 / n)
    # X[k + base*l] = rows[k, l]
    return np.ascontiguousarray(rows.T).reshape(n)


def relative_l2_error(actual, expected) -> float:
    """``||actual - expected|| / ||expected||`` in double precision."""
    a = np.asarray(actual, dtype=np.complex128)
    b = np.asarray(expected, dtype=np.complex128)
    denom = np.linalg.norm(b)
    diff = np.linalg.norm(a - b)
    if denom == 0.0:
        return float(diff)
    return float(diff / denom)


def default_tolerance(n_samples: int) -> float:
    """Relative L2 tolerance against the oracle at single precision."""
    return 1e-4 if n_samples <= 1024 else 1e-3
