"""Small numerical helpers shared by every module.

Everything here is deterministic: results depend only on the input values and
their order, never on thread count or timing.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# rows of this many values are Kahan-summed side by side, then the row
# partials are combined exactly with math.fsum
SUM_BLOCK = 1024


def csqrt(w):
    """Square root with Re > 0, and +i on the negative real axis.

    numpy's principal root already has Re >= 0; the only ambiguity is the
    negative real axis with a signed-zero imaginary part.
    """
    arr = np.asarray(w, dtype=complex)
    r = np.sqrt(arr)
    on_cut = (arr.imag == 0) & (arr.real < 0)
    if np.any(on_cut):
        r = np.where(on_cut, 1j * np.sqrt(np.abs(arr.real)), r)
    if np.ndim(w) == 0:
        return complex(r)
    return r


def _compensated_rows(block: np.ndarray) -> np.ndarray:
    # Kahan-Babuska (Neumaier) variant: also exact when a term dwarfs the sum
    s = np.zeros(block.shape[0])
    c = np.zeros(block.shape[0])
    for j in range(block.shape[1]):
        x = block[:, j]
        t = s + x
        big = np.abs(s) >= np.abs(x)
        c += np.where(big, (s - t) + x, (x - t) + s)
        s = t
    return np.concatenate([s, c])


def stable_sum(values) -> float:
    """Compensated sum in a fixed order (Neumaier per block, exact across blocks)."""
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n == 0:
        return 0.0
    if n <= SUM_BLOCK:
        return math.fsum(x.tolist())
    nb = -(-n // SUM_BLOCK)
    pad = nb * SUM_BLOCK - n
    if pad:
        x = np.concatenate([x, np.zeros(pad)])
    partial = _compensated_rows(x.reshape(nb, SUM_BLOCK))
    return math.fsum(partial.tolist())


def log_sum_exp(a) -> float:
    """log(sum(exp(a))) with the max shifted out and a compensated sum."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if not math.isfinite(m):
        return m
    return m + math.log(stable_sum(np.exp(a - m)))


def block_sums(values: np.ndarray, block: int) -> np.ndarray:
    """Sums of consecutive runs of length `block` (pairwise, fixed order)."""
    return np.asarray(values, dtype=float).reshape(-1, block).sum(axis=1)


def chunked_apply(fn, arrays, threads: int = 1, min_chunk: int = 1 << 16):
    """Apply an elementwise `fn` to aligned arrays, optionally in threads.

    The output is concatenated in chunk order, so it does not depend on the
    number of threads.
    """
    n = len(arrays[0])
    if threads <= 1 or n < 2 * min_chunk:
        return fn(*arrays)
    nchunks = min(threads * 4, max(1, n // min_chunk))
    edges = np.linspace(0, n, nchunks + 1).astype(int)
    pieces = [tuple(a[lo:hi] for a in arrays) for lo, hi in zip(edges[:-1], edges[1:])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        out = list(pool.map(lambda args: fn(*args), pieces))
    if isinstance(out[0], tuple):
        return tuple(np.concatenate([o[k] for o in out]) for k in range(len(out[0])))
    return np.concatenate(out)


def content_hash(payload) -> str:
    if isinstance(payload, (bytes, bytearray)):
        data = bytes(payload)
    elif isinstance(payload, str):
        data = payload.encode("utf-8")
    else:
        data = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def unit_direction(alpha: float) -> complex:
    """e^{i alpha}, exact on the axis directions so that rays stay on them."""
    exact = {math.pi / 2: 1j, math.pi: -1.0 + 0j, 3 * math.pi / 2: -1j}
    if alpha in exact:
        return exact[alpha]
    return complex(math.cos(alpha), math.sin(alpha))
