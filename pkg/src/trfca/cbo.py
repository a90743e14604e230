"""Close-by-One concept counting and enumeration.

Counting runs a compiled FCbO (CbO that remembers failed canonicity tests
and passes them down) over packed ``uint64`` bitsets.  Intents are computed
through a per-byte table of precomputed row intersections, so one closure
costs a fixed number of word operations regardless of the extent size.

The search tree is expanded breadth-first to ``split_depth`` (or until
``MAX_FRONTIER`` subtrees are queued) and the subtrees go to a pool of
threads.  The kernel releases the GIL, each task returns its own count and
the counts are summed once at the end.  Attribute order is the column order
of the context.

Enumeration is a separate pure-Python path over integer bitsets with an
explicit limit, for materialising small concept lattices.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .context import FormalContext

__all__ = [
    "Concept",
    "CounterOverflow",
    "LimitExceeded",
    "derive_up",
    "derive_down",
    "count_concepts",
    "enumerate_concepts",
    "default_split_depth",
]

U64_MAX = 2**64 - 1
# stop splitting once this many subtrees are queued; deeper splits only add overhead
MAX_FRONTIER = 4096


class CounterOverflow(OverflowError):
    """The concept count does not fit in an unsigned 64-bit counter."""


class LimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Concept:
    extent: frozenset
    intent: frozenset


def derive_up(ctx: FormalContext, objects) -> set[int]:
    """Attributes shared by every object in ``objects`` (all attributes if empty)."""
    inc = ctx.incidence
    idx = sorted(objects)
    if not idx:
        return set(range(inc.shape[1]))
    return set(np.flatnonzero(inc[idx].all(axis=0)).tolist())


def derive_down(ctx: FormalContext, attributes) -> set[int]:
    """Objects having every attribute in ``attributes`` (all objects if empty)."""
    inc = ctx.incidence
    idx = sorted(attributes)
    if not idx:
        return set(range(inc.shape[0]))
    return set(np.flatnonzero(inc[:, idx].all(axis=1)).tolist())


def _pack_bool(mat: np.ndarray) -> np.ndarray:
    """Pack each row of a boolean matrix into little-endian uint64 words."""
    rows, cols = mat.shape
    words = max(1, (cols + 63) // 64)
    padded = np.zeros((rows, words * 64), dtype=bool)
    padded[:, :cols] = mat
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed.view("<u8")).astype(np.uint64)


_ONE = np.uint64(1)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
# index of the lowest set bit of a uint64 via a de Bruijn multiply
_DEBRUIJN = np.uint64(0x03F79D71B4CB0A89)
_DEBRUIJN_POS = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _DEBRUIJN_POS[((1 << _i) * 0x03F79D71B4CB0A89 & 0xFFFFFFFFFFFFFFFF) >> 58] = _i


@numba.njit(cache=True, nogil=True, inline="always")
def _has(bits, k):
    return (bits[k >> 6] >> np.uint64(k & 63)) & _ONE


@numba.njit(cache=True, nogil=True, inline="always")
def _low_word(j, w):
    """Word ``w`` of the mask of attributes strictly below ``j``."""
    q = j >> 6
    if w < q:
        return _ALL
    if w > q:
        return np.uint64(0)
    return (_ONE << np.uint64(j & 63)) - _ONE


@numba.njit(cache=True, nogil=True)
def _expand(rows, cols, full, ext, intent, j0, n_in, c_ext, c_int, c_nxt, m_out, prune):
    """One FCbO step: canonical children of (ext, intent) tried from attribute j0.

    ``n_in`` holds, per attribute, the intent that failed the canonicity test
    somewhere above; while it is not contained in ``intent`` below ``j`` the
    closure by ``j`` would fail again and is skipped.  Children go to
    ``c_ext``/``c_int``/``c_nxt``; the updated sets for them go to ``m_out``.
    With ``prune`` False no failures are recorded and this is plain CbO.
    Returns the number of children.
    """
    n_attr = cols.shape[0]
    ow = ext.shape[0]
    aw = intent.shape[0]
    n = 0
    # children start above j0, so lower entries are never read
    for j in range(j0, n_attr):
        for w in range(aw):
            m_out[j, w] = n_in[j, w]
    for j in range(j0, n_attr):
        if _has(intent, j):
            continue
        skip = False
        for w in range(aw):
            if n_in[j, w] & ~intent[w] & _low_word(j, w):
                skip = True
                break
        if skip:
            continue
        ce = c_ext[n]
        ci = c_int[n]
        for w in range(aw):
            ci[w] = full[w]
        for w in range(ow):
            word = ext[w] & cols[j, w]
            ce[w] = word
            b = w * 8
            while word:
                byte = word & np.uint64(255)
                if byte:
                    for v in range(aw):
                        ci[v] &= rows[b, byte, v]
                word >>= np.uint64(8)
                b += 1
        canonical = True
        for w in range(aw):
            if (ci[w] ^ intent[w]) & _low_word(j, w):
                canonical = False
                break
        if canonical:
            c_nxt[n] = j + 1
            n += 1
        elif prune:
            for w in range(aw):
                m_out[j, w] = ci[w]
    return n


@numba.njit(cache=True, nogil=True)
def _count_subtrees(rows, cols, full, exts0, ints0, nxt0, sets0, set_idx, prune):
    """Concept counts of a batch of FCbO subtrees (roots included), one per task.

    The per-depth workspace is allocated once and reused across the batch.
    """
    n_attr = cols.shape[0]
    ow = exts0.shape[1]
    aw = ints0.shape[1]
    cap = n_attr + 2
    width = max(n_attr, 1)
    ch_ext = np.empty((cap, width, ow), dtype=np.uint64)
    ch_int = np.empty((cap, width, aw), dtype=np.uint64)
    ch_nxt = np.empty((cap, width), dtype=np.int64)
    ch_n = np.zeros(cap, dtype=np.int64)
    ch_i = np.zeros(cap, dtype=np.int64)
    sets = np.empty((cap, width, aw), dtype=np.uint64)
    out = np.zeros(exts0.shape[0], dtype=np.int64)
    for t in range(exts0.shape[0]):
        ch_n[0] = _expand(
            rows, cols, full, exts0[t], ints0[t], nxt0[t], sets0[set_idx[t]],
            ch_ext[0], ch_int[0], ch_nxt[0], sets[0], prune,
        )
        ch_i[0] = 0
        depth = 0
        count = 1
        while depth >= 0:
            k = ch_i[depth]
            if k >= ch_n[depth]:
                depth -= 1
                continue
            ch_i[depth] = k + 1
            count += 1
            d = depth + 1
            ch_n[d] = _expand(
                rows, cols, full, ch_ext[depth, k], ch_int[depth, k], ch_nxt[depth, k],
                sets[depth], ch_ext[d], ch_int[d], ch_nxt[d], sets[d], prune,
            )
            ch_i[d] = 0
            depth = d
        out[t] = count
    return out


@numba.njit(cache=True, nogil=True)
def _children(rows, cols, full, ext, intent, j0, n_in, prune):
    n_attr = cols.shape[0]
    c_ext = np.empty((max(n_attr, 1), ext.shape[0]), dtype=np.uint64)
    c_int = np.empty((max(n_attr, 1), intent.shape[0]), dtype=np.uint64)
    c_nxt = np.empty(max(n_attr, 1), dtype=np.int64)
    m_out = np.empty((max(n_attr, 1), intent.shape[0]), dtype=np.uint64)
    n = _expand(rows, cols, full, ext, intent, j0, n_in, c_ext, c_int, c_nxt, m_out, prune)
    return c_ext[:n], c_int[:n], c_nxt[:n], m_out


def _byte_table(inc: np.ndarray) -> np.ndarray:
    """``table[b, v]``: intersection of the rows of the objects picked by byte ``v`` of block ``b``."""
    n_obj, n_attr = inc.shape
    blocks = max(1, (n_obj + 63) // 64) * 8
    packed = _pack_bool(inc) if n_obj else np.zeros((0, 1), dtype=np.uint64)
    aw = _pack_bool(np.ones((1, n_attr), dtype=bool)).shape[1]
    full = _pack_bool(np.ones((1, n_attr), dtype=bool))[0]
    table = np.empty((blocks, 256, aw), dtype=np.uint64)
    table[:, 0] = full
    if n_obj == 0:
        table[:] = full
        return table
    for v in range(1, 256):
        low = (v & -v).bit_length() - 1
        rest = v & (v - 1)
        objs = np.arange(blocks) * 8 + low
        picked = np.where((objs < n_obj)[:, None], packed[np.minimum(objs, n_obj - 1)], full)
        table[:, v] = table[:, rest] & picked
    return table


def _root(inc: np.ndarray):
    rows, cols = inc.shape
    ext = _pack_bool(np.ones((1, rows), dtype=bool))[0]
    intent = _pack_bool(inc.all(axis=0)[None, :] if rows else np.ones((1, cols), dtype=bool))[0]
    return ext, intent


def default_split_depth(ctx: FormalContext) -> int:
    return min(7, ctx.shape[0] // 4)


def count_concepts(
    ctx: FormalContext, workers: int | None = None, split_depth: int | None = None, algorithm: str = "fcbo"
) -> int:
    """Exact number of formal concepts of ``ctx``.

    The result does not depend on ``workers`` or ``split_depth``; they only
    change how the search tree is distributed.  ``algorithm`` is ``"fcbo"``
    (default) or ``"cbo"`` for the unpruned search, kept as a cross-check.
    """
    if algorithm not in ("fcbo", "cbo"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    prune = algorithm == "fcbo"
    inc = ctx.incidence
    rows, n_attr = inc.shape
    if rows == 0 and n_attr == 0:
        raise ValueError("empty context")
    workers = workers or os.cpu_count() or 1
    if split_depth is None:
        split_depth = default_split_depth(ctx)
    packed_rows = _byte_table(inc)
    cols = _pack_bool(inc.T.copy()) if n_attr else np.zeros((0, 1), dtype=np.uint64)
    full = _pack_bool(np.ones((1, n_attr), dtype=bool))[0]
    ext, intent = _root(inc)
    empty = np.zeros((max(n_attr, 1), intent.shape[0]), dtype=np.uint64)
    # frontier entries: (extent, intent, next attribute, index into set_arrays)
    set_arrays = [empty]
    frontier = [(ext, intent, 0, 0)]
    total = 0
    for _ in range(split_depth):
        if len(frontier) >= MAX_FRONTIER:
            break
        nxt = []
        for e, i, j, s in frontier:
            total += 1
            ce, ci, cn, m = _children(packed_rows, cols, full, e, i, j, set_arrays[s], prune)
            if len(cn):
                set_arrays.append(m)
                idx = len(set_arrays) - 1
                nxt.extend((ce[k], ci[k], int(cn[k]), idx) for k in range(len(cn)))
        frontier = nxt
        if not frontier:
            break
    if frontier:
        exts = np.stack([t[0] for t in frontier])
        ints = np.stack([t[1] for t in frontier])
        nexts = np.array([t[2] for t in frontier], dtype=np.int64)
        sets = np.stack(set_arrays)
        set_idx = np.array([t[3] for t in frontier], dtype=np.int64)
        # several chunks per worker so uneven subtrees still balance out
        n_chunks = 1 if workers <= 1 else min(len(frontier), workers * 8)
        bounds = np.linspace(0, len(frontier), n_chunks + 1).astype(int)
        chunks = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

        def run(chunk):
            a, b = chunk
            counts = _count_subtrees(packed_rows, cols, full, exts[a:b], ints[a:b], nexts[a:b], sets, set_idx[a:b], prune)
            return sum(int(c) for c in counts)

        if len(chunks) == 1:
            total += run(chunks[0])
        else:
            # more threads than cores only adds switching and cache pressure
            threads = max(1, min(workers, os.cpu_count() or 1))
            with ThreadPoolExecutor(max_workers=threads) as pool:
                total += sum(pool.map(run, chunks))
    if total > U64_MAX:
        raise CounterOverflow(f"concept count {total} exceeds 2^64 - 1")
    return total


def enumerate_concepts(ctx: FormalContext, limit: int = 100_000) -> list[Concept]:
    """All concepts in CbO order; raises LimitExceeded past ``limit``."""
    rows = ctx.row_masks()
    cols = ctx.col_masks()
    n_obj, n_attr = ctx.shape
    all_obj = (1 << n_obj) - 1
    all_attr = (1 << n_attr) - 1

    def up(ext):
        b = all_attr
        for i in _bits(ext):
            b &= rows[i]
        return b

    out: list[Concept] = []

    def emit(ext, intent):
        if len(out) >= limit:
            raise LimitExceeded(f"more than {limit} concepts")
        out.append(Concept(frozenset(_bits(ext)), frozenset(_bits(intent))))

    root_int = up(all_obj)
    emit(all_obj, root_int)
    stack = [(all_obj, root_int, 0)]
    while stack:
        ext, intent, j0 = stack.pop()
        children = []
        for j in range(j0, n_attr):
            if intent >> j & 1:
                continue
            c = ext & cols[j]
            d = up(c)
            low = (1 << j) - 1
            if d & low == intent & low:
                emit(c, d)
                children.append((c, d, j + 1))
        stack.extend(reversed(children))
    return out


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1
