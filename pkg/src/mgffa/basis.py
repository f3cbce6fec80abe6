"""Cubic B-spline evaluation matrices and second-difference roughness penalties.

All curves in the model share one clamped cubic B-spline basis evaluated on
the common observation grid.  The roughness penalty is the squared
second-order difference of adjacent basis coefficients plus a small ridge
that restores full rank.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .exceptions import InvalidDimensionError

DEFAULT_RIDGE = 1e-7
SPLINE_DEGREE = 3


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing observation times t_1 < ... < t_T, T >= 4."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        if pts.ndim != 1 or pts.size < 4:
            raise InvalidDimensionError(
                f"time grid needs at least 4 points, got {pts.size}"
            )
        if not np.all(np.diff(pts) > 0.0):
            raise InvalidDimensionError("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size


def build_bspline_basis(grid: TimeGrid, num_basis: int) -> np.ndarray:
    """Evaluate a clamped cubic B-spline basis on the grid, as a T x R matrix.

    Knots are equally spaced over [t_1, t_T] with multiplicity 4 at both
    boundaries, so rows form a partition of unity and each row has at most
    4 nonzero entries.

    Raises
    ------
    InvalidDimensionError
        If num_basis < 4 or num_basis > T.
    """
    T = len(grid)
    R = int(num_basis)
    if R < 4 or R > T:
        raise InvalidDimensionError(f"num_basis must lie in [4, {T}], got {R}")
    # R - 2 breakpoints -> R - 4 interior knots; boundary knots repeated 4x.
    breaks = np.linspace(grid.points[0], grid.points[-1], R - 2)
    knots = np.concatenate(
        [np.repeat(breaks[0], SPLINE_DEGREE), breaks, np.repeat(breaks[-1], SPLINE_DEGREE)]
    )
    design = BSpline.design_matrix(grid.points, knots, SPLINE_DEGREE, extrapolate=False)
    return design.toarray()


def second_difference_penalty(num_basis: int) -> np.ndarray:
    """Unridged penalty D2' D2 with D2 the (R-2) x R second-difference operator.

    Rows of D2 are (1, -2, 1, 0, ...); the result annihilates constant and
    linear coefficient vectors, hence has rank R - 2.
    """
    R = int(num_basis)
    if R < 3:
        raise InvalidDimensionError(f"penalty needs num_basis >= 3, got {R}")
    D2 = np.zeros((R - 2, R))
    idx = np.arange(R - 2)
    D2[idx, idx] = 1.0
    D2[idx, idx + 1] = -2.0
    D2[idx, idx + 2] = 1.0
    return D2.T @ D2


def build_penalty(num_basis: int, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """Ridged roughness penalty: second differences plus ridge * identity.

    The ridge must be positive; it lifts the two zero eigenvalues of the
    raw difference penalty so the result admits a Cholesky factorization.
    """
    if ridge <= 0.0:
        raise InvalidDimensionError(f"ridge must be positive, got {ridge}")
    return second_difference_penalty(num_basis) + ridge * np.eye(int(num_basis))


@dataclass(frozen=True)
class BasisSystem:
    """B-spline evaluation matrix plus its ridged penalty.

    B is T x R, Omega is R x R symmetric positive definite, and gram caches
    B' B which every conjugate update needs.
    """

    B: np.ndarray
    Omega: np.ndarray
    ridge: float
    gram: np.ndarray = field(repr=False, default=None)
    degree: int = SPLINE_DEGREE

    def __post_init__(self):
        if self.B.ndim != 2 or self.Omega.shape != (self.B.shape[1], self.B.shape[1]):
            raise InvalidDimensionError("basis/penalty shapes are inconsistent")
        if self.gram is None:
            object.__setattr__(self, "gram", self.B.T @ self.B)

    @property
    def num_points(self) -> int:
        return self.B.shape[0]

    @property
    def num_basis(self) -> int:
        return self.B.shape[1]


def build_basis_system(
    grid: TimeGrid, num_basis: int, ridge: float = DEFAULT_RIDGE
) -> BasisSystem:
    """Construct the shared basis and penalty for a grid in one step."""
    B = build_bspline_basis(grid, num_basis)
    Omega = build_penalty(num_basis, ridge)
    return BasisSystem(B=B, Omega=Omega, ridge=ridge)
