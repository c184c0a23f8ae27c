"""Completion of partially specified derivative matrices.

The solvers fill in the entries of an ``(m+2) x (k+1)`` derivative matrix
over a knot segment given different subsets of known values:

* ``solve_frlc`` -- first row and last (k-th derivative) column known;
* ``solve_frfc`` -- first row (orders 0..k-1) and first (value) column known;
* ``solve_frlr`` -- first and last rows known, ``m <= k`` internal knots.

On top of them, :func:`construct` builds a whole valid spline from seed
values by one of three strategies (``CRLC``, ``CRFC``, ``RRM``) working
outward from the central knot, and :func:`refine` embeds a family into a
finer knot set.  All matrices here use the one-sided k-th derivative
convention; mirrored (right-to-left) passes reuse the same recursions with
negative knot spacings.
"""

from __future__ import annotations

import numpy as np

from .core import (
    DEFAULT_EPSILON,
    EPS_EQUID,
    KnotSet,
    SplineFamily,
    member_from_full,
    taylor_step_matrix,
)

#: condition-number limit for the frlr core system
COND_LIMIT = 1e12


class SingularSystemError(ValueError):
    """The frlr core matrix C is numerically singular."""


def _check_segment(knots_segment):
    seg = np.asarray(knots_segment, dtype=float)
    if seg.ndim != 1 or seg.size < 2:
        raise ValueError("segment needs at least two knots")
    if np.any(np.diff(seg) <= 0):
        raise ValueError("segment knots must be strictly increasing")
    return seg


def _frlc(first_row, kth_col, spacings, k):
    """Propagate rows forward; ``kth_col`` supplies column k for every row."""
    m1 = len(spacings)  # = m + 1
    u = np.zeros((m1 + 1, k + 1))
    u[0] = first_row
    u[:, k] = kth_col
    for i in range(1, m1 + 1):
        a = taylor_step_matrix(spacings[i - 1], k)
        u[i, :k] = (u[i - 1] @ a)[:k]
    return u


def solve_frlc(first_row, last_col, knots_segment):
    """Complete a matrix from its first row and k-th derivative column."""
    seg = _check_segment(knots_segment)
    first_row = np.asarray(first_row, dtype=float)
    last_col = np.asarray(last_col, dtype=float)
    k = first_row.size - 1
    if last_col.size != seg.size:
        raise ValueError("last_col must have one entry per segment knot")
    if last_col[0] != first_row[k]:
        last_col = last_col.copy()
        last_col[0] = first_row[k]
    return _frlc(first_row, last_col, np.diff(seg), k)


def _frfc(first_row_partial, first_col, spacings, k):
    m1 = len(spacings)
    u = np.zeros((m1 + 1, k + 1))
    u[0, :k] = first_row_partial
    u[:, 0] = first_col
    a = taylor_step_matrix(spacings[0], k)
    u[0, k] = (first_col[1] - u[0, :k] @ a[:k, 0]) / a[k, 0]
    for i in range(1, m1 + 1):
        a_prev = taylor_step_matrix(spacings[i - 1], k)
        u[i, 1:k] = (u[i - 1] @ a_prev)[1:k]
        if i < m1:
            a_next = taylor_step_matrix(spacings[i], k)
            u[i, k] = (first_col[i + 1] - u[i, :k] @ a_next[:k, 0]) / a_next[k, 0]
    return u


def solve_frfc(first_row_partial, first_col, knots_segment):
    """Complete a matrix from its first row (orders < k) and value column."""
    seg = _check_segment(knots_segment)
    first_row_partial = np.asarray(first_row_partial, dtype=float)
    first_col = np.asarray(first_col, dtype=float)
    k = first_row_partial.size
    if k < 1:
        raise ValueError("frfc needs order k >= 1")
    if first_col.size != seg.size:
        raise ValueError("first_col must have one entry per segment knot")
    if first_col[0] != first_row_partial[0]:
        raise ValueError("first_col[0] disagrees with the first row value")
    return _frfc(first_row_partial, first_col, np.diff(seg), k)


def _frlr(first_row, last_row, spacings, k):
    """Core first-row/last-row solve; spacings may be negative (mirrored)."""
    m = len(spacings) - 1
    first_row = np.asarray(first_row, dtype=float)
    last_row = np.asarray(last_row, dtype=float)
    if m == 0:
        u = np.vstack([first_row, last_row])
        a = taylor_step_matrix(spacings[0], k)
        prop = (first_row @ a)[:k]
        residual = float(np.max(np.abs(prop - last_row[:k]))) if k else 0.0
        u[1, :k] = prop
        return u, residual

    equid = np.max(np.abs(np.abs(spacings) - abs(spacings[0]))) <= EPS_EQUID * abs(spacings[0])
    if equid:
        a_full = taylor_step_matrix(spacings[0], k)
        ab = a_full[k - m : k, k - m : k]
        c = a_full[k, k - m : k]
        # B^{(r, m+1)} = A^{m+1-r+1}... powers of the single block
        pow_cache = [np.eye(m)]
        for _ in range(m + 1):
            pow_cache.append(pow_cache[-1] @ ab)
        cmat = np.vstack([c @ pow_cache[m + 1 - r] for r in range(2, m + 2)])
        dmat = a_full[k - m : k + 1, k - m : k] @ pow_cache[m]
    else:
        a_fulls = [taylor_step_matrix(s, k) for s in spacings]
        ab = [a[k - m : k, k - m : k] for a in a_fulls]
        c = [a[k, k - m : k] for a in a_fulls]
        # suffix[r] = A^{(r)} A^{(r+1)} ... A^{(m+1)}  (steps are 1-based)
        suffix = [np.eye(m) for _ in range(m + 3)]
        for r in range(m + 1, 0, -1):
            suffix[r] = ab[r - 1] @ suffix[r + 1]
        cmat = np.vstack([c[r - 1] @ suffix[r + 1] for r in range(2, m + 2)])
        dmat = a_fulls[0][k - m : k + 1, k - m : k] @ suffix[2]

    if np.linalg.cond(cmat) > COND_LIMIT:
        raise SingularSystemError("frlr system is numerically singular")
    rhs = last_row[k - m : k] - first_row[k - m : k + 1] @ dmat
    mid_kth = np.linalg.solve(cmat.T, rhs)

    kth_col = np.concatenate([[first_row[k]], mid_kth, [last_row[k]]])
    u = _frlc(first_row, kth_col, spacings, k)
    residual = 0.0
    if k - m > 0:
        residual = float(np.max(np.abs(u[m + 1, : k - m] - last_row[: k - m])))
    return u, residual


def solve_frlr(first_row, last_row, knots_segment, m=None):
    """Complete a matrix from its first and last rows (``m <= k`` case).

    Returns ``(matrix, residual)`` where the residual is the magnitude by
    which the unused last-row entries had to be overwritten for consistency.
    """
    seg = _check_segment(knots_segment)
    first_row = np.asarray(first_row, dtype=float)
    last_row = np.asarray(last_row, dtype=float)
    k = first_row.size - 1
    seg_m = seg.size - 2
    if m is None:
        m = seg_m
    if m != seg_m:
        raise ValueError("segment has %d internal knots, expected m=%d" % (seg_m, m))
    if m > k:
        raise ValueError("frlr requires m <= k")
    if last_row.size != k + 1:
        raise ValueError("first and last rows must both have k+1 entries")
    return _frlr(first_row, last_row, np.diff(seg), k)


# ---------------------------------------------------------------------------
# whole-spline construction


def _backward_row(derivs_next, kth_on_interval, spacing, k):
    """Derivatives 0..k-1 at the left knot of an interval from the right knot."""
    d = np.concatenate([derivs_next, [kth_on_interval]])
    return (d @ taylor_step_matrix(-spacing, k))[:k]


def _seed_matrix(knots, k, seed, method):
    n = knots.n
    l = n // 2
    seed = np.asarray(seed, dtype=float)
    if seed.ndim == 2:
        if seed.shape != (n + 2, k + 1):
            raise ValueError("seed matrix must be (n+2) x (k+1)")
        return seed
    t = np.zeros((n + 2, k + 1))
    if method == "CRLC":
        want = (n - 2 * k + 1) + k
        if seed.size != want:
            raise ValueError("CRLC seed needs %d values" % want)
        t[k : n - k + 1, k] = seed[: n - 2 * k + 1]
        t[l + 1, :k] = seed[n - 2 * k + 1 :]
    elif method == "CRFC":
        want = (n - 2 * k + 2) + (k - 1)
        if seed.size != want:
            raise ValueError("CRFC seed needs %d values" % want)
        t[k : n - k + 2, 0] = seed[: n - 2 * k + 2]
        t[l + 1, 1:k] = seed[n - 2 * k + 2 :]
    else:
        raise ValueError("RRM takes a full (n+2) x (k+1) seed matrix")
    return t


def _left_terminal(s, t, xi, k, residuals):
    """Resolve knots 0..k+1 by a mirrored m=k frlr with zero boundary rows."""
    first = np.concatenate([s[k + 1, :k], [t[k, k] if s[k, k] == 0.0 else s[k, k]]])
    s[k, k] = first[k]
    spac = xi[k::-1] - xi[k + 1 : 0 : -1]  # negative steps xi[k]-xi[k+1], ...
    u, _ = _frlr(first, np.zeros(k + 1), spac, k)
    for i in range(1, k + 1):
        s[k - i, k] = u[i, k]
        s[k + 1 - i, :k] = u[i, :k]
    residuals["left_boundary"] = float(np.max(np.abs(u[k + 1, :k]))) if k else 0.0
    s[0, :k] = 0.0


def _right_terminal(s, t, xi, k, n, residuals):
    if s[n - k, k] == 0.0:
        s[n - k, k] = t[n - k, k]
    first = s[n - k].copy()
    u, _ = _frlr(first, np.zeros(k + 1), np.diff(xi[n - k :]), k)
    for i in range(1, k + 1):
        s[n - k + i, k] = u[i, k]
        s[n - k + i, :k] = u[i, :k]
    residuals["right_boundary"] = float(np.max(np.abs(u[k + 1, :k]))) if k else 0.0
    s[n + 1, :] = 0.0


def _construct_crlc(knots, k, t):
    xi = knots.xi
    n = knots.n
    l = n // 2
    s = np.zeros_like(t)
    residuals = {}
    s[k : n - k + 1, k] = t[k : n - k + 1, k]
    s[l + 1, :k] = t[l + 1, :k]
    q_left = l + 1 if n % 2 else l
    if n % 2 == 0:
        s[l, :k] = _backward_row(s[l + 1, :k], s[l, k], xi[l + 1] - xi[l], k)
        residuals["center_bridge"] = float(np.max(np.abs(s[l, :k] - t[l, :k]))) if k else 0.0
    for i in range(q_left, k + 1, -1):
        s[i - 1, :k] = _backward_row(s[i, :k], s[i - 1, k], xi[i] - xi[i - 1], k)
    for i in range(l + 1, n - k):
        a = taylor_step_matrix(xi[i + 1] - xi[i], k)
        s[i + 1, :k] = (s[i] @ a)[:k]
    _left_terminal(s, t, xi, k, residuals)
    _right_terminal(s, t, xi, k, n, residuals)
    return s, residuals


def _construct_crfc(knots, k, t):
    xi = knots.xi
    n = knots.n
    l = n // 2
    s = np.zeros_like(t)
    residuals = {}
    s[k : n - k + 2, 0] = t[k : n - k + 2, 0]
    s[l + 1, 1:k] = t[l + 1, 1:k]
    # right of center: plain frfc over xi[l+1] .. xi[n-k+1]
    u = _frfc(s[l + 1, :k], s[l + 1 : n - k + 2, 0], np.diff(xi[l + 1 : n - k + 2]), k)
    mr = n - k - l - 1
    for i in range(mr + 2):
        s[l + 1 + i, 1:k] = u[i, 1:k]
        if i <= mr:
            s[l + 1 + i, k] = u[i, k]
    # left of center: mirrored frfc over xi[l+1] .. xi[k]
    rev = xi[l + 1 :: -1][: l + 2 - k]
    vals = s[:, 0][l + 1 :: -1][: l + 2 - k]
    ul = _frfc(s[l + 1, :k], vals, np.diff(rev), k)
    ml = l - k
    for i in range(ml + 2):
        s[l + 1 - i, 1:k] = ul[i, 1:k]
        if i <= ml:
            s[l - i, k] = ul[i, k]
    _left_terminal(s, t, xi, k, residuals)
    _right_terminal(s, t, xi, k, n, residuals)
    return s, residuals


def _construct_rrm(knots, k, t):
    xi = knots.xi
    n = knots.n
    l = n // 2
    s = np.zeros_like(t)
    residuals = {"groups": 0.0}
    s[l + 1, :k] = t[l + 1, :k]
    q_left = l + 1 if n % 2 else l
    if n % 2 == 0:
        s[l, k] = t[l, k]
        s[l, :k] = _backward_row(s[l + 1, :k], t[l, k], xi[l + 1] - xi[l], k)
        residuals["center_bridge"] = float(np.max(np.abs(s[l, :k] - t[l, :k]))) if k else 0.0

    def note(r):
        residuals["groups"] = max(residuals["groups"], r)

    # left half: mirrored m=k groups, then a remainder group, down to xi[k+1]
    cur = q_left
    while cur - (k + 1) >= k + 1:
        nxt = cur - (k + 1)
        first = np.concatenate([s[cur, :k], [t[cur - 1, k]]])
        s[cur - 1, k] = t[cur - 1, k]
        last = np.concatenate([t[nxt, :k], [0.0]])
        seg = xi[nxt : cur + 1][::-1]
        u, r = _frlr(first, last, np.diff(seg), k)
        note(r)
        for i in range(1, k + 1):
            s[cur - i - 1, k] = u[i, k]
            s[cur - i, :k] = u[i, :k]
        s[nxt, :k] = u[k + 1, :k]
        cur = nxt
    if cur > k + 1:
        mrem = cur - k - 2
        first = np.concatenate([s[cur, :k], [t[cur - 1, k]]])
        s[cur - 1, k] = t[cur - 1, k]
        last = np.concatenate([t[k + 1, :k], [0.0]])
        seg = xi[k + 1 : cur + 1][::-1]
        u, r = _frlr(first, last, np.diff(seg), k)
        note(r)
        for i in range(1, mrem + 1):
            s[cur - i - 1, k] = u[i, k]
        for i in range(1, mrem + 2):
            s[cur - i, :k] = u[i, :k]

    # right half: forward m=k groups, remainder, up to xi[n-k]
    cur = l + 1
    while cur + (k + 1) <= n - k:
        nxt = cur + (k + 1)
        first = np.concatenate([s[cur, :k], [t[cur, k]]])
        s[cur, k] = t[cur, k]
        last = np.concatenate([t[nxt, :k], [0.0]])
        u, r = _frlr(first, last, np.diff(xi[cur : nxt + 1]), k)
        note(r)
        for i in range(1, k + 1):
            s[cur + i, k] = u[i, k]
            s[cur + i, :k] = u[i, :k]
        s[nxt, :k] = u[k + 1, :k]
        cur = nxt
    if cur < n - k:
        mrem = n - k - cur - 1
        first = np.concatenate([s[cur, :k], [t[cur, k]]])
        s[cur, k] = t[cur, k]
        last = np.concatenate([t[n - k, :k], [0.0]])
        u, r = _frlr(first, last, np.diff(xi[cur : n - k + 1]), k)
        note(r)
        for i in range(1, mrem + 1):
            s[cur + i, k] = u[i, k]
        for i in range(1, mrem + 2):
            s[cur + i, :k] = u[i, :k]

    _left_terminal(s, t, xi, k, residuals)
    _right_terminal(s, t, xi, k, n, residuals)
    return s, residuals


def construct(knots, k, seed, method="RRM", epsilon=DEFAULT_EPSILON, return_residuals=False):
    """Build a single valid full-support spline from seed values.

    ``seed`` is either a full ``(n+2) x (k+1)`` one-sided derivative matrix
    (any method; the method decides which entries it reads) or a flat vector
    of the method's free parameters (``CRLC``/``CRFC`` only).
    """
    if not isinstance(knots, KnotSet):
        knots = KnotSet(np.asarray(knots, dtype=float))
    n = knots.n
    if method not in ("CRLC", "CRFC", "RRM"):
        raise ValueError("method must be one of CRLC, CRFC, RRM")
    if n < 2 * k + 2:
        raise ValueError(
            "construct needs at least 2k+2 internal knots in the support; "
            "use project() onto a spline basis instead"
        )
    if k == 0:
        t = _seed_matrix(knots, 0, seed, "CRLC") if np.asarray(seed).ndim == 1 else np.asarray(seed, float)
        s = np.zeros((n + 2, 1))
        s[:, 0] = t[:, 0]
        s[-1, 0] = 0.0
        residuals = {}
    else:
        t = _seed_matrix(knots, k, seed, method)
        if method == "CRLC":
            s, residuals = _construct_crlc(knots, k, t)
        elif method == "CRFC":
            s, residuals = _construct_crfc(knots, k, t)
        else:
            s, residuals = _construct_rrm(knots, k, t)
    fam = SplineFamily(knots, k, (member_from_full(knots, k, s),), "sp", epsilon)
    if return_residuals:
        return fam, residuals
    return fam


# ---------------------------------------------------------------------------
# knot refinement


def refine(fam, new_knots):
    """Re-express a family over a superset of its knots."""
    from .core import SupportSet, make_member  # local to avoid clutter above

    old = fam.knots.xi
    new = new_knots.xi
    scale = old[-1] - old[0]
    idx_map = np.searchsorted(new, old)
    idx_map = np.clip(idx_map, 0, new.size - 1)
    # a knot may land one slot late due to rounding; fix up and verify
    for i, x in enumerate(old):
        j = idx_map[i]
        if j > 0 and abs(new[j - 1] - x) < abs(new[j] - x):
            idx_map[i] = j - 1
        if abs(new[idx_map[i]] - x) > 1e-12 * scale:
            raise ValueError("new knots do not contain original knot %g" % x)
    k = fam.smorder
    from .core import as_one_sided

    fam1 = as_one_sided(fam)
    members = []
    for supp, der in fam1.members:
        comps = []
        blocks = []
        for (lo, hi), blk in zip(supp, der.blocks):
            nlo, nhi = int(idx_map[lo]), int(idx_map[hi])
            nb = np.zeros((nhi - nlo + 1, k + 1))
            for j in range(nlo, nhi + 1):
                pos = np.searchsorted(old, new[j], side="right") - 1
                pos = min(max(pos, lo), hi - 1)
                dt = new[j] - old[pos]
                if dt == 0.0:
                    nb[j - nlo] = blk[pos - lo]
                else:
                    nb[j - nlo] = blk[pos - lo] @ taylor_step_matrix(dt, k)
            nb[-1, :] = blk[-1, :]
            nb[-1, k] = 0.0
            blocks.append(nb)
            comps.append((nlo, nhi))
        members.append(make_member(SupportSet(tuple(comps)), blocks))
    out = SplineFamily(new_knots, k, tuple(members), fam.type, fam.epsilon)
    return out
