"""Core spline types: knots, supports, derivative matrices and families.

A spline of smoothness order ``k`` over knots ``xi[0] < ... < xi[n+1]`` is
stored through the values of its derivatives 0..k at the knots inside its
support.  Derivatives 0..k-1 are continuous; the k-th derivative is constant
between knots and may jump at them, so a convention is needed for the k-th
column of the derivative matrix:

* ``"one"`` (one-sided): row ``i`` holds the value on ``[xi[i], xi[i+1])``;
  the last row of each support block holds 0.
* ``"sym"`` (symmetric): the top half of a block holds right-hand limits and
  the bottom half left-hand limits, split at ``l = m // 2`` rows into the
  block (``m`` = number of internal knots of the support component).

The one-sided form is the canonical in-memory convention; the symmetric form
is used for serialization (see :mod:`splinet.archive`).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

ONE_SIDED = "one"
SYMMETRIC = "sym"

#: relative tolerance used to detect equally spaced knots
EPS_EQUID = 1e-8

#: default relative validity tolerance of a family
DEFAULT_EPSILON = 1e-7

_FAMILY_TYPES = ("sp", "bs", "gsob", "twob", "spnt", "dspnt")


def _factorials(k):
    out = np.ones(k + 1)
    for j in range(2, k + 1):
        out[j] = out[j - 1] * j
    return out


def taylor_step_matrix(alpha, k):
    """Lower-triangular Toeplitz matrix of Taylor-step weights.

    ``A[i, j] = alpha**(i-j) / (i-j)!`` for ``i >= j``.  Propagating a row of
    derivative values across a knot interval of length ``alpha`` amounts to a
    right-multiplication by this matrix.  ``alpha`` may be negative here
    (backward step); the public wrapper :func:`taylor_matrices` rejects that.
    """
    a = np.zeros((k + 1, k + 1))
    fact = _factorials(k + 1)
    for d in range(k + 1):
        val = alpha**d / fact[d]
        for i in range(d, k + 1):
            a[i, i - d] = val
    return a


def taylor_astar(alpha, k):
    """Column of integrated Taylor weights (alpha, alpha^2/2!, ..., alpha^(k+1)/(k+1)!)."""
    fact = _factorials(k + 1)
    return np.array([alpha ** (j + 1) / fact[j + 1] * 1.0 for j in range(k + 1)])


def difference_matrix(size):
    """Square matrix with a zero first row, then -1/+1 sub/diagonal bands."""
    d = np.zeros((size, size))
    for i in range(1, size):
        d[i, i] = 1.0
        d[i, i - 1] = -1.0
    return d


@dataclass(frozen=True)
class TaylorStepMatrix:
    A: np.ndarray
    Astar: np.ndarray
    Delta: np.ndarray


def taylor_matrices(alpha, k):
    """Taylor-step matrices for a knot spacing ``alpha >= 0`` and order ``k``."""
    if k < 0:
        raise ValueError("order k must be non-negative")
    if alpha < 0:
        raise ValueError("knot spacings are positive; got alpha=%g" % alpha)
    return TaylorStepMatrix(
        A=taylor_step_matrix(alpha, k),
        Astar=taylor_astar(alpha, k),
        Delta=difference_matrix(k + 2),
    )


@dataclass(frozen=True)
class KnotSet:
    """Ordered knot vector; ``n`` counts the internal knots only."""

    xi: np.ndarray
    equid: bool = field(default=False)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.ndim != 1 or xi.size < 2:
            raise ValueError("need at least two knots")
        diffs = np.diff(xi)
        if np.any(diffs <= 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "xi", xi)
        rel = np.max(np.abs(diffs - diffs[0])) / diffs[0]
        object.__setattr__(self, "equid", bool(rel <= EPS_EQUID))

    @property
    def n(self):
        return self.xi.size - 2

    def __len__(self):
        return self.xi.size

    def __eq__(self, other):
        return isinstance(other, KnotSet) and np.array_equal(self.xi, other.xi)

    def __hash__(self):
        return hash(self.xi.tobytes())


def equidistant_knots(a, b, n):
    """n internal knots equally spaced in (a, b), terminal knots at a and b."""
    return KnotSet(np.linspace(a, b, n + 2))


@dataclass(frozen=True)
class SupportSet:
    """Disjoint, non-adjacent knot-index intervals ``(lo, hi)``, 0-based.

    A component ``(lo, hi)`` covers knots ``xi[lo] .. xi[hi]`` and therefore
    ``hi - lo`` inter-knot intervals (``m_r = hi - lo - 1`` internal knots).
    """

    components: tuple

    def __post_init__(self):
        comps = tuple((int(lo), int(hi)) for lo, hi in self.components)
        prev_hi = None
        for lo, hi in comps:
            if lo < 0 or hi <= lo:
                raise ValueError("bad support component (%d, %d)" % (lo, hi))
            if prev_hi is not None and lo <= prev_hi + 1:
                raise ValueError("support components must be disjoint and non-adjacent")
            prev_hi = hi
        object.__setattr__(self, "components", comps)

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    @property
    def empty(self):
        return len(self.components) == 0

    def n_intervals(self):
        return sum(hi - lo for lo, hi in self.components)

    def validate_range(self, n):
        for lo, hi in self.components:
            if hi > n + 1:
                raise ValueError("support component (%d, %d) outside knot range" % (lo, hi))


EMPTY_SUPPORT = SupportSet(())


def full_support(knots):
    return SupportSet(((0, len(knots) - 1),))


@dataclass(frozen=True)
class DerivativeMatrix:
    """Per-support-component blocks of derivative values.

    Block ``r`` is an ``(m_r + 2) x (k + 1)`` array; column ``j`` holds the
    j-th derivative at the component's knots.
    """

    blocks: tuple
    convention: str = ONE_SIDED

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=float) for b in self.blocks)
        if self.convention not in (ONE_SIDED, SYMMETRIC):
            raise ValueError("unknown convention %r" % (self.convention,))
        for b in blocks:
            if b.ndim != 2:
                raise ValueError("derivative blocks must be 2-d")
        object.__setattr__(self, "blocks", blocks)

    def max_abs(self):
        return max((float(np.max(np.abs(b))) for b in self.blocks if b.size), default=0.0)


@dataclass(frozen=True)
class SplineFamily:
    """A collection of splines over shared knots and smoothness order."""

    knots: KnotSet
    smorder: int
    members: tuple  # of (SupportSet, DerivativeMatrix)
    type: str = "sp"
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.smorder < 0:
            raise ValueError("smorder must be non-negative")
        if self.type not in _FAMILY_TYPES:
            raise ValueError("unknown family type %r" % (self.type,))
        members = tuple(self.members)
        k = self.smorder
        for supp, der in members:
            supp.validate_range(self.knots.n)
            if len(der.blocks) != len(supp):
                raise ValueError("support/derivative block count mismatch")
            for (lo, hi), blk in zip(supp, der.blocks):
                if blk.shape != (hi - lo + 1, k + 1):
                    raise ValueError(
                        "block shape %s does not match support (%d, %d) at order %d"
                        % (blk.shape, lo, hi, k)
                    )
        object.__setattr__(self, "members", members)

    def __len__(self):
        return len(self.members)

    @property
    def convention(self):
        for _, der in self.members:
            return der.convention
        return ONE_SIDED

    def member_tolerance(self, i):
        """Absolute validity tolerance for member i (epsilon is relative)."""
        scale = self.members[i][1].max_abs()
        return self.epsilon * (scale if scale > 0 else 1.0)

    def full_matrix(self, i):
        """Member i expanded to the full ``(n+2) x (k+1)`` derivative matrix."""
        out = np.zeros((len(self.knots), self.smorder + 1))
        supp, der = self.members[i]
        for (lo, hi), blk in zip(supp, der.blocks):
            out[lo : hi + 1] += blk
        return out


def make_member(supp, blocks, convention=ONE_SIDED):
    return (supp, DerivativeMatrix(tuple(blocks), convention))


def member_from_full(knots, k, full, convention=ONE_SIDED):
    """Wrap a full (n+2) x (k+1) matrix as a full-support member."""
    full = np.asarray(full, dtype=float)
    if full.shape != (len(knots), k + 1):
        raise ValueError("full matrix has wrong shape")
    return make_member(full_support(knots), (full,), convention)


# ---------------------------------------------------------------------------
# convention conversion


def _sym2one_block(blk):
    m = blk.shape[0] - 2
    l = m // 2
    out = blk.copy()
    # bottom-half k-th entries are left-hand limits: shift them up one row
    out[l + 1 : m + 1, -1] = blk[l + 2 : m + 2, -1]
    out[m + 1, -1] = 0.0
    return out


def _one2sym_block(blk, k):
    m = blk.shape[0] - 2
    l = m // 2
    out = blk.copy()
    out[l + 2 : m + 2, -1] = blk[l + 1 : m + 1, -1]
    if k == 0:
        # piecewise constants: the terminal row restores the last interval value
        out[m + 1, -1] = blk[m, -1] if m >= 0 else 0.0
    elif m % 2 == 0:
        out[l + 1, -1] = blk[l, -1]
    else:
        out[l + 1, -1] = 0.0
    return out


def sym2one(fam, inverse=False):
    """Convert the k-th derivative column between conventions.

    With ``inverse=False`` a symmetric family becomes one-sided; with
    ``inverse=True`` the opposite.  Only the last column changes.
    """
    src = SYMMETRIC if not inverse else ONE_SIDED
    dst = ONE_SIDED if not inverse else SYMMETRIC
    k = fam.smorder
    members = []
    for supp, der in fam.members:
        if der.convention != src:
            raise ValueError("expected %r convention, found %r" % (src, der.convention))
        if k == 0 and not inverse:
            blocks = []
            for blk in der.blocks:
                b = blk.copy()
                b[-1, -1] = 0.0
                blocks.append(b)
        elif k == 0:
            # piecewise constants: no interior shift, the terminal row just
            # records the last interval value (the left limit there)
            blocks = []
            for blk in der.blocks:
                b = blk.copy()
                b[-1, -1] = blk[-2, -1] if blk.shape[0] > 1 else 0.0
                blocks.append(b)
        elif not inverse:
            blocks = [_sym2one_block(b) for b in der.blocks]
        else:
            blocks = [_one2sym_block(b, k) for b in der.blocks]
        members.append(make_member(supp, blocks, dst))
    return replace(fam, members=tuple(members))


def as_one_sided(fam):
    if fam.convention == SYMMETRIC:
        return sym2one(fam)
    return fam


def as_symmetric(fam):
    if fam.convention == ONE_SIDED:
        return sym2one(fam, inverse=True)
    return fam


# ---------------------------------------------------------------------------
# validity


@dataclass
class ValidityReport:
    member_ok: list
    max_violation: float
    worst_member: int
    worst_knot: int

    @property
    def all_ok(self):
        return all(self.member_ok)


def is_valid_spline(fam):
    """Check the Taylor propagation and boundary constraints of every member.

    Returns a :class:`ValidityReport`; structural problems (shape mismatches)
    raise instead of reporting invalidity.
    """
    xi = fam.knots.xi
    k = fam.smorder
    report_ok = []
    worst = 0.0
    worst_member = -1
    worst_knot = -1
    for idx in range(len(fam)):
        supp, der = fam.members[idx]
        tol = fam.member_tolerance(idx)
        bad = 0.0
        bad_knot = -1

        def note(v, knot):
            nonlocal bad, bad_knot
            if v > bad:
                bad, bad_knot = v, knot

        for (lo, hi), blk in zip(supp, der.blocks):
            if der.convention == ONE_SIDED:
                one = blk
            elif k == 0:
                one = blk.copy()
                one[-1, -1] = 0.0
            else:
                one = _sym2one_block(blk)
            m = hi - lo - 1
            # zero boundary conditions on derivatives 0..k-1
            if k > 0:
                note(float(np.max(np.abs(one[0, :k]))), lo)
                note(float(np.max(np.abs(one[m + 1, :k]))), hi)
            note(abs(float(one[m + 1, k])), hi)
            # Taylor propagation row by row
            for i in range(m + 1):
                a = taylor_step_matrix(xi[lo + i + 1] - xi[lo + i], k)
                pred = one[i] @ a
                if k > 0:
                    note(float(np.max(np.abs(pred[:k] - one[i + 1, :k]))), lo + i + 1)
            if der.convention == SYMMETRIC and k > 0:
                l = m // 2
                if m % 2 == 0:
                    note(abs(float(blk[l, k] - blk[l + 1, k])), lo + l)
                else:
                    note(abs(float(blk[l + 1, k])), lo + l + 1)
        report_ok.append(bad <= tol)
        if bad > worst:
            worst, worst_member, worst_knot = bad, idx, bad_knot
    return ValidityReport(report_ok, worst, worst_member, worst_knot)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(fam, grid, deriv=0):
    """Evaluate family members (or a derivative) on a grid.

    Returns a ``len(grid) x len(fam)`` array.  Points outside a member's
    support yield exactly 0.0.
    """
    xi = fam.knots.xi
    k = fam.smorder
    if deriv < 0 or deriv > k:
        raise ValueError("derivative order must be in [0, %d]" % k)
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < xi[0] or grid.max() > xi[-1]):
        raise ValueError("grid points outside the knot range")
    fam = as_one_sided(fam)
    out = np.zeros((grid.size, len(fam)))
    for j in range(len(fam)):
        supp, der = fam.members[j]
        for (lo, hi), blk in zip(supp, der.blocks):
            sel = np.nonzero((grid >= xi[lo]) & (grid <= xi[hi]))[0]
            if sel.size == 0:
                continue
            t = grid[sel]
            iv = np.searchsorted(xi, t, side="right") - 1
            # right-continuous: a point at the component's right boundary
            # belongs to the next interval (value 0 there), except at the
            # very last knot where the left limit is used
            at_end = (iv == hi) & (hi == xi.size - 1)
            keep = (iv < hi) | at_end
            sel = sel[keep]
            if sel.size == 0:
                continue
            t = t[keep]
            iv = np.clip(iv[keep], lo, hi - 1)
            dt = t - xi[iv]
            rows = blk[iv - lo]
            # Horner evaluation of the local Taylor polynomial
            val = rows[:, k].copy()
            for p in range(k - deriv - 1, -1, -1):
                val = rows[:, p + deriv] + val * dt / (p + 1)
            out[sel, j] = val
    return out


def sample_grid(knots, k, N):
    """Knots plus ``k*N`` equally spaced points inside every interval."""
    if N < 1:
        raise ValueError("N must be >= 1")
    xi = knots.xi
    pieces = [xi]
    inner = k * N
    if inner > 0:
        frac = np.arange(1, inner + 1) / (inner + 1.0)
        for i in range(xi.size - 1):
            pieces.append(xi[i] + frac * (xi[i + 1] - xi[i]))
    return np.sort(np.concatenate(pieces))


# ---------------------------------------------------------------------------
# family bookkeeping


def gather(a, b):
    """Concatenate two families sharing knots and order."""
    if a.knots != b.knots or a.smorder != b.smorder:
        raise ValueError("gather requires identical knots and order")
    typ = a.type if a.type == b.type else "sp"
    conv = a.convention
    bm = b.members
    if b.convention != conv and len(b):
        bm = (sym2one(b) if conv == ONE_SIDED else sym2one(b, inverse=True)).members
    return SplineFamily(a.knots, a.smorder, a.members + bm, typ, a.epsilon)


def subsample(fam, indices):
    """Select members by index, keeping order of ``indices``."""
    members = tuple(fam.members[int(i)] for i in indices)
    return replace(fam, members=members)


def empty_family(knots, k, type="sp", epsilon=DEFAULT_EPSILON):
    return SplineFamily(knots, k, (), type, epsilon)


def exsupp(fam):
    """Shrink every member's support to where its values actually live.

    Intervals whose one-sided derivative row is entirely below the member's
    validity tolerance are dropped; an everywhere-small member ends up with
    an empty support.
    """
    fam1 = as_one_sided(fam)
    k = fam.smorder
    members = []
    for idx in range(len(fam1)):
        supp, der = fam1.members[idx]
        tol = fam1.member_tolerance(idx)
        runs = []  # (lo, hi) in knot indices, merged across old components
        blocks_src = {}
        for (lo, hi), blk in zip(supp, der.blocks):
            m = hi - lo - 1
            alive = np.max(np.abs(blk[: m + 1]), axis=1) > tol
            i = 0
            while i <= m:
                if alive[i]:
                    j = i
                    while j <= m and alive[j]:
                        j += 1
                    runs.append((lo + i, lo + j))
                    blocks_src[(lo + i, lo + j)] = blk[i : j + 1].copy()
                    i = j
                else:
                    i += 1
        new_blocks = []
        for key in runs:
            b = blocks_src[key]
            b[-1, -1] = 0.0
            new_blocks.append(b)
        members.append(make_member(SupportSet(tuple(runs)), new_blocks))
    out = replace(fam1, members=tuple(members))
    return out if fam.convention == ONE_SIDED else sym2one(out, inverse=True)


def thread_count():
    """Worker cap from the SPLINET_THREADS environment variable (default 1)."""
    try:
        return max(1, int(os.environ.get("SPLINET_THREADS", "1")))
    except ValueError:
        return 1
