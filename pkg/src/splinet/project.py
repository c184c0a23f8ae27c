"""Orthogonal projection onto spline spaces and functional PCA.

Spline families project by solving the normal equations against a basis of
the target space; discretized functional data are treated as
right-continuous step functions whose inner products with basis members are
exact (differences of the basis antiderivative at the arguments).  The PCA
works on decomposition coefficients in an orthonormal basis, where the L2
geometry of the function space is the Euclidean geometry of coefficients.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bases import splinet
from .calculus import gramian, integra, lincomb
from .core import KnotSet, SplineFamily, evaluate
from .construct import refine

_BASIS_TYPES = ("spnt", "dspnt", "bs", "gsob", "twob")


@dataclass(frozen=True)
class ProjectionResult:
    """Decomposition coefficients, the basis used, and the projections."""

    coeff: np.ndarray  # (m, d)
    basis: SplineFamily
    sp: SplineFamily
    transform: object = None  # TransformMatrix when an orthonormal type


@dataclass(frozen=True)
class FunctionalDataMatrix:
    """Discrete functional data: shared arguments and per-sample columns."""

    args: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        args = np.asarray(self.args, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if args.ndim != 1 or values.shape[0] != args.size:
            raise ValueError("values must have one row per argument")
        if np.any(np.diff(args) <= 0):
            raise ValueError("arguments must be strictly increasing")
        if np.any(~np.isfinite(values)) or np.any(~np.isfinite(args)):
            raise ValueError("missing or non-finite entries are not supported")
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "values", values)

    @property
    def n_samples(self):
        return self.values.shape[1]


def _make_basis(knots, k, type):
    if type not in _BASIS_TYPES:
        raise ValueError("basis type must be one of %s" % (_BASIS_TYPES,))
    res = splinet(knots, k, type="bs" if type == "bs" else type)
    basis = res.bs if type == "bs" else res.os
    return basis, res.transform


def _union_knots(a, b):
    scale = max(a.xi[-1] - a.xi[0], b.xi[-1] - b.xi[0])
    merged = np.union1d(a.xi, b.xi)
    keep = np.concatenate([[True], np.diff(merged) > 1e-12 * scale])
    return KnotSet(merged[keep])


def _band_cholesky_solve(g, rhs, k):
    """Solve G X = rhs for banded SPD G of bandwidth k (columns of rhs)."""
    d = g.shape[0]
    bw = min(k, d - 1)
    ab = np.zeros((bw + 1, d))
    for u in range(bw + 1):
        ab[u, : d - u] = np.diagonal(g, -u)
    cb = scipy.linalg.cholesky_banded(ab, lower=True)
    return scipy.linalg.cho_solve_banded((cb, True), rhs)


def project_splines(fam, target_knots=None, type="spnt"):
    """Project every member of ``fam`` onto a spline space.

    With no ``target_knots`` this is a pure change of basis on the family's
    own knots; otherwise both spaces are refined into their knot union and
    the projection is orthogonal in L2 of that union.
    """
    k = fam.smorder
    target = fam.knots if target_knots is None else target_knots
    basis, transform = _make_basis(target, k, type)
    if target == fam.knots:
        fam_ref, basis_ref = fam, basis
    else:
        union = _union_knots(fam.knots, target)
        fam_ref = refine(fam, union)
        basis_ref = refine(basis, union)
    b = gramian(fam_ref, basis_ref)  # (m, d) inner products
    if type == "bs":
        g = gramian(basis)
        coeff = _band_cholesky_solve(g, b.T, k).T
    else:
        coeff = b
    sp = lincomb(basis, coeff)
    return ProjectionResult(coeff, basis, sp, transform)


def project_data(data, knots, k, type="spnt"):
    """Project step-function data onto a spline space.

    Each sample is the right-continuous step function taking the row value
    on ``[args[i], args[i+1])``; the last value extends to the end of the
    knot range.  Arguments outside the knot range are dropped with a
    warning.
    """
    if not isinstance(data, FunctionalDataMatrix):
        data = FunctionalDataMatrix(*data)
    if not isinstance(knots, KnotSet):
        knots = KnotSet(np.asarray(knots, dtype=float))
    xi = knots.xi
    inside = (data.args >= xi[0]) & (data.args <= xi[-1])
    if not np.any(inside):
        raise ValueError("all data arguments fall outside the knot range")
    if not np.all(inside):
        warnings.warn("%d data arguments outside the knot range were dropped"
                      % int(np.sum(~inside)))
    args = data.args[inside]
    values = data.values[inside]

    basis, transform = _make_basis(knots, k, type)
    prim = integra(basis)
    ends = args if args[-1] == xi[-1] else np.concatenate([args, [xi[-1]]])
    f = evaluate(prim, ends)  # (T(+1), d) antiderivative values
    if ends.size == args.size:
        # last step has zero width; its value never contributes
        deltas = np.diff(f, axis=0)
        vals = values[:-1]
    else:
        deltas = np.diff(f, axis=0)
        vals = values
    b = vals.T @ deltas  # (m, d)
    if type == "bs":
        g = gramian(basis)
        coeff = _band_cholesky_solve(g, b.T, k).T
    else:
        coeff = b
    sp = lincomb(basis, coeff)
    return ProjectionResult(coeff, basis, sp, transform)


# ---------------------------------------------------------------------------
# functional PCA


def _jacobi_eigh(a):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns eigenvalues (descending) and the matching eigenvector columns.
    """
    a = np.array(a, dtype=float)
    d = a.shape[0]
    v = np.eye(d)
    norm = np.linalg.norm(a, "fro")
    if norm == 0.0:
        return np.zeros(d), v
    tol = 1e-12 * norm

    def offdiag():
        return np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))

    for _ in range(60):
        if offdiag() <= tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                # threshold Jacobi: negligible entries are left alone
                if abs(apq) <= 1e-18 * norm:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e8:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p].copy(), a[q].copy()
                a[p], a[q] = c * rp - s * rq, s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


@dataclass(frozen=True)
class FpcaResult:
    mean_coeff: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: SplineFamily
    scores: np.ndarray
    basis: SplineFamily
    eigenvectors: np.ndarray  # columns, one per retained component
    n_retained: int


def fpca(pr):
    """Principal component analysis of a projection's coefficient rows."""
    basis = pr.basis
    d = len(basis)
    ident = gramian(basis)
    if np.max(np.abs(ident - np.eye(d))) > 1e-6:
        raise ValueError("fpca needs an orthonormal basis; project with type='spnt'")
    coeff = np.asarray(pr.coeff, dtype=float)
    m = coeff.shape[0]
    if m < 2:
        raise ValueError("fpca needs at least two samples")
    mean = coeff.mean(axis=0)
    centered = coeff - mean
    cov = centered.T @ centered / (m - 1)
    w, v = _jacobi_eigh(cov)
    lam1 = w[0] if w.size else 0.0
    if w.size and w[-1] < -1e-10 * max(lam1, 1.0):
        raise ValueError("coefficient covariance is indefinite")
    w = np.clip(w, 0.0, None)
    # rounding noise from centering identical samples counts as zero
    w[w < 1e-20 * max(1.0, float(np.mean(coeff ** 2)))] = 0.0
    lam1 = w[0] if w.size else 0.0
    # reproducible sign: largest-magnitude coefficient positive
    for j in range(v.shape[1]):
        lead = np.argmax(np.abs(v[:, j]))
        if v[lead, j] < 0:
            v[:, j] = -v[:, j]
    retained = int(np.sum(w > 1e-10 * lam1)) if lam1 > 0 else 0
    scores = centered @ v[:, :retained]
    scores = scores / np.sqrt(w[:retained])
    eigenfun = lincomb(basis, v.T)
    return FpcaResult(mean, w, eigenfun, scores, basis, v, retained)


def kl_reconstruct(fp, coeff_row, m_components):
    """Truncated Karhunen-Loeve reconstruction of one coefficient row."""
    if m_components < 0 or m_components > fp.n_retained:
        raise ValueError("m_components must be in [0, %d]" % fp.n_retained)
    centered = np.asarray(coeff_row, dtype=float) - fp.mean_coeff
    v = fp.eigenvectors[:, :m_components]
    rec = fp.mean_coeff + v @ (v.T @ centered)
    return lincomb(fp.basis, rec[None, :])


# ---------------------------------------------------------------------------
# CSV interfaces


def read_fdata_csv(path):
    """Functional-data CSV: column 1 ascending args, columns 2.. samples."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    start = 0
    try:
        float(rows[0][0])
    except ValueError:
        start = 1  # header line
    body = np.array([[float(x) for x in r] for r in rows[start:]])
    if body.ndim != 2 or body.shape[1] < 2:
        raise ValueError("need an argument column plus at least one sample")
    return FunctionalDataMatrix(body[:, 0], body[:, 1:])


def write_coeff_csv(path, coeff):
    coeff = np.atleast_2d(np.asarray(coeff, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["c%d" % (j + 1) for j in range(coeff.shape[1])])
        for row in coeff:
            w.writerow([repr(float(x)) for x in row])
