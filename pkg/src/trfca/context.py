"""Reduced formal context of the lattice of transfer systems.

Rows and columns are both indexed by the orbits of nontrivial relations
``x < y`` of a G-lattice, each represented by its lexicographically least
member.  Row ``(a, b)`` (the transfer system generated by ``a -> b``) has
column ``(x, y)`` (the meet-irreducible attached to ``x -> y``) iff for every
group element ``g``::

    not (g.a >= x)  or  not (g.b >= y)  or  g.a >= y
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .lattice import GLattice

__all__ = [
    "RelationPair",
    "FormalContext",
    "ContextError",
    "nontrivial_relation_orbits",
    "build_reduced_context",
    "density",
    "codensity",
    "is_reduced",
    "sort_rows_for_cbo",
    "export_fimi",
    "import_fimi",
    "export_pbm",
    "example_context",
    "simultaneous_permutation",
]


class ContextError(ValueError):
    pass


class RelationPair(NamedTuple):
    x: int
    y: int

    def __str__(self):
        return f"{self.x}->{self.y}"


@dataclass(eq=False)
class FormalContext:
    """Objects x attributes incidence matrix with labels."""

    objects: list
    attributes: list
    incidence: np.ndarray
    lattice: GLattice | None = field(default=None, repr=False)

    def __post_init__(self):
        self.incidence = np.ascontiguousarray(self.incidence, dtype=bool).reshape(len(self.objects), len(self.attributes))

    @property
    def shape(self) -> tuple[int, int]:
        return self.incidence.shape

    @property
    def ones(self) -> int:
        return int(self.incidence.sum())

    def row_masks(self) -> list[int]:
        """Rows as integers, bit ``j`` set iff the object has attribute ``j``."""
        return [_pack(r) for r in self.incidence]

    def col_masks(self) -> list[int]:
        return [_pack(c) for c in self.incidence.T]

    def __eq__(self, other):
        return isinstance(other, FormalContext) and np.array_equal(self.incidence, other.incidence)


def _pack(bits) -> int:
    # little-endian: bit j of the result is bits[j]
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def example_context() -> FormalContext:
    """The 3x4 context with rows 1000 / 0001 / 1110."""
    inc = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [1, 1, 1, 0]], dtype=bool)
    return FormalContext(["x1", "x2", "x3"], ["y1", "y2", "y3", "y4"], inc)


def nontrivial_relation_orbits(lat: GLattice) -> list[RelationPair]:
    """Lexicographically least representative of each orbit of ``x < y``."""
    m = lat.size
    xs, ys = np.nonzero(lat.leq & ~np.eye(m, dtype=bool))
    if xs.size == 0:
        return []
    act = lat.action
    codes = (act[:, xs] * m + act[:, ys]).min(axis=0)
    reps = np.unique(codes)
    return [RelationPair(int(c // m), int(c % m)) for c in reps]


def _incidence(lat: GLattice, rows: Sequence[RelationPair], cols: Sequence[RelationPair]) -> np.ndarray:
    leq = lat.leq
    act = lat.action
    cx = np.array([c.x for c in cols], dtype=np.int64)
    cy = np.array([c.y for c in cols], dtype=np.int64)
    out = np.empty((len(rows), len(cols)), dtype=bool)
    for r, (a, b) in enumerate(rows):
        ga, gb = act[:, a], act[:, b]
        # (cols, group) truth table of the disjunction
        ok = ~leq[cx[:, None], ga[None, :]] | ~leq[cy[:, None], gb[None, :]] | leq[cy[:, None], ga[None, :]]
        out[r] = ok.all(axis=1)
    return out


def build_reduced_context(lat: GLattice) -> FormalContext:
    """Reduced context (J(Tr L), M(Tr L), <=) straight from the lattice."""
    reps = nontrivial_relation_orbits(lat)
    inc = _incidence(lat, reps, reps) if reps else np.zeros((0, 0), dtype=bool)
    return FormalContext(list(reps), list(reps), inc, lattice=lat)


def codensity(ctx: FormalContext) -> Fraction:
    """Proportion of zero entries, as an exact rational."""
    rows, cols = ctx.shape
    if rows == 0 or cols == 0:
        raise ContextError("codensity of an empty context")
    return Fraction(rows * cols - ctx.ones, rows * cols)


def density(ctx: FormalContext) -> Fraction:
    """Proportion of one entries, as an exact rational."""
    return 1 - codensity(ctx)


def _reduced_masks(masks: list[int]) -> bool:
    for i, r in enumerate(masks):
        meet = -1
        others = False
        for j, s in enumerate(masks):
            if j != i and r & ~s == 0:
                meet &= s
                others = True
        if others and meet == r:
            return False
    return True


def is_reduced(ctx: FormalContext) -> bool:
    """True iff no row (column) is the intersection of other rows (columns)."""
    return _reduced_masks(ctx.row_masks()) and _reduced_masks(ctx.col_masks())


def sort_rows_for_cbo(ctx: FormalContext) -> FormalContext:
    """Rows in decreasing order of their value read with the last column most significant."""
    keys = ctx.row_masks()
    order = sorted(range(len(keys)), key=lambda i: -keys[i])
    return FormalContext(
        [ctx.objects[i] for i in order], list(ctx.attributes), ctx.incidence[order], lattice=ctx.lattice
    )


def export_fimi(ctx: FormalContext) -> bytes:
    """One line per object listing its 0-based attribute indices."""
    buf = io.StringIO()
    for row in ctx.incidence:
        buf.write(" ".join(str(int(j)) for j in np.flatnonzero(row)))
        buf.write("\n")
    return buf.getvalue().encode("ascii")


def import_fimi(data: bytes | str, n_attributes: int | None = None) -> FormalContext:
    """Parse FIMI ``.dat`` content; the column count is ``1 + max index`` unless given."""
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        try:
            rows.append([int(t) for t in line.split()])
        except ValueError:
            raise ContextError(f"line {lineno}: non-numeric token") from None
        if any(v < 0 for v in rows[-1]):
            raise ContextError(f"line {lineno}: negative attribute index")
    width = 1 + max((max(r) for r in rows if r), default=-1)
    if n_attributes is not None:
        if n_attributes < width:
            raise ContextError("attribute index beyond declared width")
        width = n_attributes
    inc = np.zeros((len(rows), width), dtype=bool)
    for i, r in enumerate(rows):
        inc[i, r] = True
    return FormalContext([f"o{i}" for i in range(len(rows))], [f"a{j}" for j in range(width)], inc)


def export_pbm(ctx: FormalContext) -> bytes:
    """Plain PBM (P1): context 1 is a white pixel (0), context 0 is black (1)."""
    rows, cols = ctx.shape
    lines = ["P1", f"{cols} {rows}"]
    for row in ctx.incidence:
        lines.append(" ".join("0" if v else "1" for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def _refine_colors(mat: np.ndarray) -> list[int]:
    """Stable colouring of indices of a square 0/1 matrix read as a directed graph."""
    n = mat.shape[0]
    colors = [0] * n
    while True:
        sigs = [
            (
                colors[i],
                bool(mat[i, i]),
                tuple(sorted(colors[k] for k in np.flatnonzero(mat[i]))),
                tuple(sorted(colors[k] for k in np.flatnonzero(mat[:, i]))),
            )
            for i in range(n)
        ]
        table = {s: c for c, s in enumerate(sorted(set(sigs)))}
        new = [table[s] for s in sigs]
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def simultaneous_permutation(a: np.ndarray, b: np.ndarray) -> list[int] | None:
    """A permutation ``p`` with ``b[p[i], p[j]] == a[i, j]`` for all i, j, or None.

    Colour refinement on both matrices (jointly, so colours are comparable)
    narrows the candidates, then a backtracking search checks consistency.
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        return None
    n = a.shape[0]
    joint = np.zeros((2 * n, 2 * n), dtype=bool)
    joint[:n, :n] = a
    joint[n:, n:] = b
    colors = _refine_colors(joint)
    ca, cb = colors[:n], colors[n:]
    if sorted(ca) != sorted(cb):
        return None
    order = sorted(range(n), key=lambda i: sum(1 for c in ca if c == ca[i]))
    perm = [-1] * n
    used = [False] * n

    def extend(t):
        if t == n:
            return True
        i = order[t]
        for j in range(n):
            if used[j] or cb[j] != ca[i] or a[i, i] != b[j, j]:
                continue
            ok = all(a[i, k] == b[j, perm[k]] and a[k, i] == b[perm[k], j] for k in order[:t])
            if ok:
                perm[i], used[j] = j, True
                if extend(t + 1):
                    return True
                perm[i], used[j] = -1, False
        return False

    return perm if extend(0) else None
