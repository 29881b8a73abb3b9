"""Alignment losses and lower envelopes along a one-parameter data line.

When the stacked series are restricted to a line, each warping path's loss is
a quadratic in the line parameter ``z``.  The minimal loss over all paths is
the lower envelope of finitely many parabolas, a piecewise quadratic.  This
module computes that envelope either by brute force over an explicit
candidate set or by a table recursion that propagates, cell by cell, only the
paths that are optimal for some ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dtw_core import AlignmentMatrix
from .intervals import IntervalUnion

__all__ = [
    "DataLine",
    "QuadraticLoss",
    "PiecewiseEnvelope",
    "quadratic_loss",
    "envelope_bruteforce",
    "para_dtw",
    "z1_region",
]

# Breakpoints closer than this are collapsed into a single transition.
MIN_BREAKPOINT_GAP = 1e-12
# Quadratic intersections with a discriminant this close to zero are treated
# as tangencies: the parabolas touch but do not cross.
TANGENCY_TOL = 1e-12


@dataclass(frozen=True)
class DataLine:
    """A line ``w(z) = a + b z`` in stacked-data space, split after ``n`` entries.

    The first ``n`` coordinates parametrize the first series, the rest the
    second, so ``x(z) = a[:n] + b[:n] z`` and ``y(z) = a[n:] + b[n:] z``.
    """

    a: np.ndarray
    b: np.ndarray
    n: int

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise ValueError("offset and direction must be 1-d vectors of equal length")
        if not 1 <= self.n < a.size:
            raise ValueError("split must leave both series non-empty")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.a.size - self.n

    @property
    def a1(self) -> np.ndarray:
        return self.a[: self.n]

    @property
    def a2(self) -> np.ndarray:
        return self.a[self.n :]

    @property
    def b1(self) -> np.ndarray:
        return self.b[: self.n]

    @property
    def b2(self) -> np.ndarray:
        return self.b[self.n :]

    def x_at(self, z: float) -> np.ndarray:
        return self.a1 + self.b1 * z

    def y_at(self, z: float) -> np.ndarray:
        return self.a2 + self.b2 * z

    def point(self, z: float) -> np.ndarray:
        return self.a + self.b * z


@dataclass(frozen=True)
class QuadraticLoss:
    """Coefficients of a path loss ``w0 + w1 z + w2 z^2`` along a data line."""

    w0: float
    w1: float
    w2: float

    def __post_init__(self):
        if self.w2 < 0.0:
            raise ValueError("leading coefficient is a sum of squares; it cannot be negative")

    def __call__(self, z: float) -> float:
        return (self.w2 * z + self.w1) * z + self.w0

    def coefficients(self) -> tuple[float, float, float]:
        return (self.w0, self.w1, self.w2)


@dataclass(frozen=True)
class PiecewiseEnvelope:
    """Lower envelope of path losses: breakpoints and per-segment optima.

    ``breakpoints`` runs from ``-inf`` to ``+inf``; segment ``k`` covers
    ``[breakpoints[k], breakpoints[k+1]]`` and stores the alignment that is
    minimal there together with its loss quadratic.
    """

    breakpoints: tuple[float, ...]
    segments: tuple[tuple[AlignmentMatrix, QuadraticLoss], ...]

    def __post_init__(self):
        if len(self.breakpoints) != len(self.segments) + 1:
            raise ValueError("need exactly one more breakpoint than segments")
        if not self.segments:
            raise ValueError("envelope needs at least one segment")
        if self.breakpoints[0] != -math.inf or self.breakpoints[-1] != math.inf:
            raise ValueError("envelope must cover the whole real line")

    def segment_index_at(self, z: float) -> int:
        lo, hi = 0, len(self.segments) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if z <= self.breakpoints[mid + 1]:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def alignment_at(self, z: float) -> AlignmentMatrix:
        return self.segments[self.segment_index_at(z)][0]

    def value(self, z: float) -> float:
        return self.segments[self.segment_index_at(z)][1](z)


def quadratic_loss(M: AlignmentMatrix, line: DataLine) -> QuadraticLoss:
    """Loss quadratic of one alignment along the line.

    Accumulates the per-cell terms in path order, so repeated evaluation and
    the incremental table recursion agree bit for bit.
    """
    if M.n != line.n or M.m != line.m:
        raise ValueError(
            f"alignment is {M.n}x{M.m} but line splits {line.n}+{line.m}"
        )
    a1 = line.a1.tolist()
    a2 = line.a2.tolist()
    b1 = line.b1.tolist()
    b2 = line.b2.tolist()
    w0 = w1 = w2 = 0.0
    for i, j in M.path:
        da = a1[i - 1] - a2[j - 1]
        db = b1[i - 1] - b2[j - 1]
        w0 += da * da
        w1 += 2.0 * da * db
        w2 += db * db
    return QuadraticLoss(w0, w1, w2)


def _crossing_root(d2: float, d1: float, d0: float, z: float) -> float:
    """First point after ``z`` where ``d2 t^2 + d1 t + d0`` turns positive.

    The polynomial is the active loss minus a competitor's, so a sign change
    to positive is where the competitor drops below.  Returns ``inf`` when no
    such crossing exists; near-tangent intersections do not count.
    """
    if d2 == 0.0:
        if d1 <= 0.0:
            return math.inf
        r = -d0 / d1
        return r if r > z else math.inf
    disc = d1 * d1 - 4.0 * d2 * d0
    if disc <= TANGENCY_TOL:
        return math.inf
    sq = math.sqrt(disc)
    q = -0.5 * (d1 + sq) if d1 >= 0.0 else -0.5 * (d1 - sq)
    if q != 0.0:
        ra = q / d2
        rb = d0 / q
    else:
        ra = 0.0
        rb = -d1 / d2
    if ra > rb:
        ra, rb = rb, ra
    r = rb if d2 > 0.0 else ra
    return r if r > z else math.inf


def _walk_envelope(cands: list[tuple], ranks: list[int]) -> tuple[list[float], list[int]]:
    """Trace the lower envelope of candidate quadratics.

    ``cands`` holds ``(path, w0, w1, w2)`` tuples; ``ranks`` is a total order
    used to break exact ties deterministically.  Returns breakpoints from
    ``-inf`` to ``+inf`` and the index of the minimal candidate per segment.
    """
    K = len(cands)
    # minimal as z -> -inf: smallest curvature, then steepest descent, then offset
    active = min(
        range(K), key=lambda k: (cands[k][3], -cands[k][2], cands[k][1], ranks[k])
    )
    breakpoints = [-math.inf]
    order = [active]
    z = -math.inf
    for _ in range(3 * K + 16):
        _, a0, a1c, a2c = cands[active]
        best = math.inf
        roots = [math.inf] * K
        for k in range(K):
            if k == active:
                continue
            _, c0, c1, c2 = cands[k]
            r = _crossing_root(a2c - c2, a1c - c1, a0 - c0, z)
            roots[k] = r
            if r < best:
                best = r
        if best == math.inf:
            break
        # Losses of paths differing by a cell whose cost vanishes at some z*
        # all tie there, so multi-way crossings at one point are routine, and
        # roundoff perturbs the coincident roots.  Cluster every crossing
        # within noise of the earliest one and pick the candidate that is
        # minimal just after: by value, then slope, then curvature, then rank,
        # each compared with a tolerance band so roundoff cannot pre-empt the
        # next criterion.
        gap = MIN_BREAKPOINT_GAP * max(1.0, abs(best))
        crossers = [k for k in range(K) if roots[k] <= best + gap]
        nxt = _minimal_after(crossers, best, cands, ranks)
        breakpoints.append(best)
        order.append(nxt)
        active = nxt
        z = best
    else:
        raise RuntimeError("envelope walk failed to terminate; degenerate candidate set")
    breakpoints.append(math.inf)
    return _merge_segments(breakpoints, order, cands)


def _minimal_after(kept: list[int], z: float, cands, ranks) -> int:
    values = {k: (cands[k][3] * z + cands[k][2]) * z + cands[k][1] for k in kept}
    floor = min(values.values())
    tol = 1e-9 * (1.0 + abs(floor))
    kept = [k for k in kept if values[k] <= floor + tol]
    slopes = {k: 2.0 * cands[k][3] * z + cands[k][2] for k in kept}
    floor = min(slopes.values())
    tol = 1e-9 * (1.0 + abs(floor))
    kept = [k for k in kept if slopes[k] <= floor + tol]
    floor = min(cands[k][3] for k in kept)
    tol = 1e-9 * (1.0 + abs(floor))
    kept = [k for k in kept if cands[k][3] <= floor + tol]
    return min(kept, key=lambda k: ranks[k])


def _merge_segments(breakpoints, order, cands):
    """Drop sliver segments and fuse consecutive segments with equal paths.

    A skipped sliver is absorbed by the segment that follows it; the first and
    last segments are unbounded and therefore never slivers.
    """
    bps = [breakpoints[0]]
    segs: list[int] = []
    for k, seg in enumerate(order):
        lo, hi = breakpoints[k], breakpoints[k + 1]
        if hi - lo < MIN_BREAKPOINT_GAP * max(1.0, abs(lo)) and len(order) > 1:
            continue
        if segs and cands[seg][0] == cands[segs[-1]][0]:
            bps[-1] = hi
            continue
        segs.append(seg)
        bps.append(hi)
    return bps, segs


def _cell_term(a1, a2, b1, b2, i, j):
    da = a1[i] - a2[j]
    db = b1[i] - b2[j]
    return da * da, 2.0 * da * db, db * db


def _rank_candidates(cands) -> list[int]:
    order = sorted(range(len(cands)), key=lambda k: (cands[k][3], cands[k][2], cands[k][1], cands[k][0]))
    ranks = [0] * len(cands)
    for pos, k in enumerate(order):
        ranks[k] = pos
    return ranks


def envelope_bruteforce(candidates, line: DataLine) -> PiecewiseEnvelope:
    """Lower envelope over an explicit set of alignments.

    Walks breakpoints left to right: starting from the candidate minimal as
    ``z -> -inf``, each next breakpoint is the earliest intersection where
    some other candidate's quadratic drops below the active one.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidate set must be non-empty")
    cands = []
    for M in candidates:
        q = quadratic_loss(M, line)
        cands.append((M.path, q.w0, q.w1, q.w2))
    ranks = _rank_candidates(cands)
    bps, order = _walk_envelope(cands, ranks)
    n, m = line.n, line.m
    segments = tuple(
        (AlignmentMatrix(n, m, cands[k][0]), QuadraticLoss(cands[k][1], cands[k][2], cands[k][3]))
        for k in order
    )
    return PiecewiseEnvelope(tuple(bps), segments)


def para_dtw(line: DataLine, n: int, m: int) -> PiecewiseEnvelope:
    """Envelope of the optimal alignment loss for every ``z`` at once.

    Fills an ``n x m`` table bottom-up.  Each cell's candidate paths extend
    the somewhere-optimal paths of its three predecessor cells by one step;
    the cell then keeps exactly the candidates that win a segment of its own
    lower envelope.  The last cell's envelope is returned.
    """
    if line.n != n or line.m != m:
        raise ValueError("line split does not match requested dimensions")
    a1 = line.a1.tolist()
    a2 = line.a2.tolist()
    b1 = line.b1.tolist()
    b2 = line.b2.tolist()
    table: list[list[list[tuple]]] = [[None] * m for _ in range(n)]
    last_walk = None
    for i in range(n):
        for j in range(m):
            t0, t1, t2 = _cell_term(a1, a2, b1, b2, i, j)
            cell = (i + 1, j + 1)
            if i == 0 and j == 0:
                cands = [(((1, 1),), t0, t1, t2)]
            else:
                seen = {}
                for pi, pj in ((i - 1, j - 1), (i - 1, j), (i, j - 1)):
                    if pi < 0 or pj < 0:
                        continue
                    for path, w0, w1, w2 in table[pi][pj]:
                        ext = path + (cell,)
                        if ext not in seen:
                            seen[ext] = (ext, w0 + t0, w1 + t1, w2 + t2)
                cands = list(seen.values())
            ranks = _rank_candidates(cands)
            bps, order = _walk_envelope(cands, ranks)
            kept = []
            kept_idx = set()
            for k in order:
                if k not in kept_idx:
                    kept_idx.add(k)
                    kept.append(cands[k])
            table[i][j] = kept
            if i == n - 1 and j == m - 1:
                last_walk = (bps, order, cands)
    bps, order, cands = last_walk
    segments = tuple(
        (AlignmentMatrix(n, m, cands[k][0]), QuadraticLoss(cands[k][1], cands[k][2], cands[k][3]))
        for k in order
    )
    return PiecewiseEnvelope(tuple(bps), segments)


def z1_region(env: PiecewiseEnvelope, M_obs: AlignmentMatrix) -> IntervalUnion:
    """Parameters where the envelope's optimal alignment equals ``M_obs``.

    Membership is by exact path equality; an alignment absent from the
    envelope yields the empty union.
    """
    pieces = []
    for k, (M, _) in enumerate(env.segments):
        if M.path == M_obs.path and M.n == M_obs.n and M.m == M_obs.m:
            pieces.append((env.breakpoints[k], env.breakpoints[k + 1]))
    return IntervalUnion(pieces)
