"""Calculus on derivative-matrix splines.

All operations work in the one-sided convention internally and return
results in that convention.  Inner products are computed in closed form by
convolving the per-interval Taylor coefficient vectors of the two factors
and integrating the resulting polynomial over each shared interval.
"""

from __future__ import annotations

import numpy as np

from .core import (
    DerivativeMatrix,
    EMPTY_SUPPORT,
    SplineFamily,
    SupportSet,
    as_one_sided,
    make_member,
    taylor_astar,
)


def _merge_components(comps):
    """Union of (lo, hi) index intervals; runs closer than one full knot gap
    are merged so the result is a legal support set."""
    comps = sorted(comps)
    out = []
    for lo, hi in comps:
        if out and lo <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


def _member_from_union(full, comps, k):
    """Cut a full matrix into blocks over the given support components."""
    if not comps:
        return make_member(EMPTY_SUPPORT, ())
    blocks = []
    for lo, hi in comps:
        blk = full[lo : hi + 1].copy()
        blk[-1, k] = 0.0
        blocks.append(blk)
    return make_member(SupportSet(comps), blocks)


def lincomb(fam, coeffs, type=None):
    """Linear combinations of family members.

    ``coeffs`` is ``(p, d)`` (or ``(d,)`` for a single combination) against
    a family of ``d`` members; returns a family of ``p`` members.
    """
    fam1 = as_one_sided(fam)
    k = fam1.smorder
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if coeffs.shape[1] != len(fam1):
        raise ValueError("coefficient matrix has %d columns, family has %d members"
                         % (coeffs.shape[1], len(fam1)))
    n_rows = len(fam1.knots)
    members = []
    for row in coeffs:
        full = np.zeros((n_rows, k + 1))
        comps = []
        for c, (supp, der) in zip(row, fam1.members):
            if c == 0.0:
                continue
            for (lo, hi), blk in zip(supp, der.blocks):
                full[lo : hi + 1] += c * blk
                comps.append((lo, hi))
        members.append(_member_from_union(full, _merge_components(comps), k))
    return SplineFamily(fam1.knots, k, tuple(members),
                        type if type is not None else "sp", fam1.epsilon)


def deriva(fam):
    """Termwise derivative: order drops from k to k-1."""
    fam1 = as_one_sided(fam)
    k = fam1.smorder
    if k < 1:
        raise ValueError("cannot differentiate an order-0 family")
    members = []
    for supp, der in fam1.members:
        blocks = []
        for blk in der.blocks:
            nb = blk[:, 1:].copy()
            nb[-1, k - 1] = 0.0
            blocks.append(nb)
        members.append(make_member(supp, blocks))
    return SplineFamily(fam1.knots, k - 1, tuple(members), "sp", fam1.epsilon)


def _cumulative(fam1, idx):
    """Full (n+2, k+2) matrix of the antiderivative of member ``idx``
    (column 0 holds the running integral) plus the structural support."""
    supp, der = fam1.members[idx]
    k = fam1.smorder
    xi = fam1.knots.xi
    full = np.zeros((xi.size, k + 2))
    c = 0.0
    comps = list(supp)
    for ci, ((lo, hi), blk) in enumerate(zip(supp, der.blocks)):
        full[lo : hi + 1, 1:] = blk
        # constant plateau between the previous component and this one
        prev_hi = comps[ci - 1][1] if ci else 0
        full[prev_hi : lo + 1, 0] = c
        for j in range(lo, hi):
            full[j, 0] = c
            c += float(blk[j - lo] @ taylor_astar(xi[j + 1] - xi[j], k))
        full[hi, 0] = c
    if comps:
        full[comps[-1][1] :, 0] = c
    return full, comps, c


def integra(fam):
    """Termwise antiderivative, zero at the left end: order rises to k+1.

    When a member's total integral is nonzero the support extends to the
    last knot, since the antiderivative stays at a nonzero constant.
    """
    fam1 = as_one_sided(fam)
    k = fam1.smorder
    n_last = len(fam1.knots) - 1
    members = []
    for idx in range(len(fam1)):
        full, comps, _ = _cumulative(fam1, idx)
        tol = fam1.member_tolerance(idx)
        out_comps = []
        run = None
        for ci, (lo, hi) in enumerate(comps):
            if run is None:
                run = [lo, hi]
            else:
                run[1] = hi
            c_after = full[hi, 0]
            last = ci == len(comps) - 1
            if abs(c_after) > tol:
                run[1] = n_last if last else comps[ci + 1][0]
                if last:
                    out_comps.append(tuple(run))
                    run = None
            else:
                out_comps.append(tuple(run))
                run = None
        members.append(_member_from_union(full, _merge_components(out_comps), k + 1))
    return SplineFamily(fam1.knots, k + 1, tuple(members), "sp", fam1.epsilon)


def dintegra(fam):
    """Definite integrals over the whole range, one per member."""
    fam1 = as_one_sided(fam)
    return np.array([_cumulative(fam1, i)[2] for i in range(len(fam1))])


def _interval_rows(fam1, idx):
    """Interval indices and the one-sided rows active on them for member idx."""
    supp, der = fam1.members[idx]
    ints = []
    rows = []
    for (lo, hi), blk in zip(supp, der.blocks):
        ints.append(np.arange(lo, hi))
        rows.append(blk[:-1])
    if not ints:
        k = fam1.smorder
        return np.empty(0, dtype=int), np.empty((0, k + 1))
    return np.concatenate(ints), np.vstack(rows)


def _pair_inner(rows_a, rows_b, widths, k):
    """Sum of integrals of products of two piecewise polynomials given by
    Taylor rows over shared intervals of the given widths."""
    fact = np.array([1.0] + list(np.cumprod(np.arange(1, k + 1)))) if k else np.array([1.0])
    a = rows_a / fact
    b = rows_b / fact
    conv = np.zeros((a.shape[0], 2 * k + 1))
    for i in range(k + 1):
        for j in range(k + 1):
            conv[:, i + j] += a[:, i] * b[:, j]
    powers = np.arange(1, 2 * k + 2)
    w = widths[:, None] ** powers / powers
    return float(np.sum(conv * w))


#: number of entry computations performed by the last gramian() call
#: (support-disjoint pairs are skipped and not counted)
LAST_PAIR_COUNT = 0


def gramian(fam_a, fam_b=None):
    """Matrix of pairwise inner products ``<a_i, b_j>`` in L2.

    With one argument, the (symmetric) Gram matrix of the family.
    """
    global LAST_PAIR_COUNT
    a1 = as_one_sided(fam_a)
    symmetric = fam_b is None
    b1 = a1 if symmetric else as_one_sided(fam_b)
    if a1.knots != b1.knots or a1.smorder != b1.smorder:
        raise ValueError("gramian requires identical knots and order")
    k = a1.smorder
    xi = a1.knots.xi
    widths = np.diff(xi)
    da, db = len(a1), len(b1)
    a_data = [_interval_rows(a1, i) for i in range(da)]
    b_data = a_data if symmetric else [_interval_rows(b1, j) for j in range(db)]
    a_span = [(ints[0], ints[-1]) if ints.size else None for ints, _ in a_data]
    b_span = a_span if symmetric else [(ints[0], ints[-1]) if ints.size else None
                                       for ints, _ in b_data]
    g = np.zeros((da, db))
    LAST_PAIR_COUNT = 0
    for i in range(da):
        if a_span[i] is None:
            continue
        ia, ra = a_data[i]
        j0 = i if symmetric else 0
        for j in range(j0, db):
            if b_span[j] is None:
                continue
            if b_span[j][0] > a_span[i][1] or b_span[j][1] < a_span[i][0]:
                continue
            ib, rb = b_data[j]
            shared, pa, pb = np.intersect1d(ia, ib, assume_unique=True,
                                            return_indices=True)
            if shared.size == 0:
                continue
            LAST_PAIR_COUNT += 1
            g[i, j] = _pair_inner(ra[pa], rb[pb], widths[shared], k)
            if symmetric and j != i:
                g[j, i] = g[i, j]
    return g
