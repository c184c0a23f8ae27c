"""Splines as derivative matrices at knots: construction, orthonormal
bases, projection, and functional PCA, plus a batch command line tool."""

from .core import (
    DEFAULT_EPSILON,
    EPS_EQUID,
    ONE_SIDED,
    SYMMETRIC,
    DerivativeMatrix,
    KnotSet,
    SplineFamily,
    SupportSet,
    ValidityReport,
    as_one_sided,
    as_symmetric,
    empty_family,
    equidistant_knots,
    evaluate,
    exsupp,
    full_support,
    gather,
    is_valid_spline,
    make_member,
    member_from_full,
    sample_grid,
    subsample,
    sym2one,
    taylor_matrices,
)
from .construct import (
    SingularSystemError,
    construct,
    refine,
    solve_frfc,
    solve_frlc,
    solve_frlr,
)
from .calculus import deriva, dintegra, gramian, integra, lincomb
from .bases import (
    DyadicNet,
    SplinetResult,
    TransformMatrix,
    bspline_basis,
    diagonalize_gram,
    net_layout,
    splinet,
)
from .random import RNG_ALGORITHM, NoiseSpec, rspline
from .project import (
    FpcaResult,
    FunctionalDataMatrix,
    ProjectionResult,
    fpca,
    kl_reconstruct,
    project_data,
    project_splines,
    read_fdata_csv,
    write_coeff_csv,
)
from .archive import load_archive, save_archive

__all__ = [
    "DEFAULT_EPSILON",
    "EPS_EQUID",
    "ONE_SIDED",
    "RNG_ALGORITHM",
    "SYMMETRIC",
    "DerivativeMatrix",
    "DyadicNet",
    "FpcaResult",
    "FunctionalDataMatrix",
    "KnotSet",
    "NoiseSpec",
    "ProjectionResult",
    "SingularSystemError",
    "SplineFamily",
    "SplinetResult",
    "SupportSet",
    "TransformMatrix",
    "ValidityReport",
    "as_one_sided",
    "as_symmetric",
    "bspline_basis",
    "construct",
    "deriva",
    "diagonalize_gram",
    "dintegra",
    "empty_family",
    "equidistant_knots",
    "evaluate",
    "exsupp",
    "fpca",
    "full_support",
    "gather",
    "gramian",
    "integra",
    "is_valid_spline",
    "kl_reconstruct",
    "lincomb",
    "load_archive",
    "make_member",
    "member_from_full",
    "net_layout",
    "project_data",
    "project_splines",
    "read_fdata_csv",
    "refine",
    "rspline",
    "sample_grid",
    "save_archive",
    "splinet",
    "subsample",
    "sym2one",
    "solve_frfc",
    "solve_frlc",
    "solve_frlr",
    "taylor_matrices",
    "write_coeff_csv",
]
