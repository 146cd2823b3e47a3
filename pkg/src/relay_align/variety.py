"""Plucker-coordinate machinery and numeric probes of the degenerate locus.

For K = 3 equal-dimension strategies, the bad locus is where the triple
intersection is nonzero.  In the plane case (N = 3, d = 2) this locus is cut
out by a single 3x3 determinant in the perp-line coordinates; in general we
detect membership by rank computations on iterated intersections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .subspace import DEFAULT_TOL, Subspace, Tolerance, intersect, orthonormal_basis

__all__ = [
    "PluckerPoint",
    "plucker",
    "check_plucker_relations",
    "plucker_residual",
    "triple_intersection_dim",
    "perp_line",
    "determinantal_test",
    "line_determinant",
    "codim_line_probe",
    "LineProbeReport",
]

DET_ZERO_THRESHOLD = 1e-8


@dataclass(frozen=True)
class PluckerPoint:
    """Projective wedge coordinates of a d-dimensional subspace of C^n.

    Coordinates are indexed by sorted d-subsets of {0..n-1} in lexicographic
    order, scaled to unit norm with the first nonzero coordinate real
    positive, so two points are comparable by plain vector distance.
    """

    n: int
    d: int
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.complex128)
        from math import comb

        if c.shape != (comb(self.n, self.d),):
            raise InvalidInput(f"expected {comb(self.n, self.d)} coordinates, got shape {c.shape}")
        object.__setattr__(self, "coords", _normalize_projective(c))

    def index_sets(self) -> list[tuple[int, ...]]:
        return list(itertools.combinations(range(self.n), self.d))


def _normalize_projective(c: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(c)
    if norm == 0:
        raise InvalidInput("zero coordinate vector is not a projective point")
    c = c / norm
    peak = np.max(np.abs(c))
    first = int(np.argmax(np.abs(c) > 1e-12 * peak))
    phase = c[first] / abs(c[first])
    return c / phase


def plucker(s: Subspace) -> PluckerPoint:
    """Wedge coordinates of a subspace: all d x d minors of its basis."""
    if s.d < 1:
        raise InvalidInput("zero-dimensional subspace has no projective wedge")
    rows = list(itertools.combinations(range(s.ambient_dim), s.d))
    coords = np.array([np.linalg.det(s.basis[list(r), :]) for r in rows])
    return PluckerPoint(n=s.ambient_dim, d=s.d, coords=coords)


def _coord_lookup(p: PluckerPoint) -> dict[tuple[int, ...], complex]:
    return dict(zip(p.index_sets(), p.coords))


def _signed_coord(lookup, indices: tuple[int, ...]) -> complex:
    """Coordinate for an arbitrary index tuple, with antisymmetric sign."""
    if len(set(indices)) != len(indices):
        return 0.0
    order = tuple(sorted(indices))
    perm = list(indices)
    sign = 1
    # count inversions of the sorting permutation
    for a in range(len(perm)):
        for b in range(a + 1, len(perm)):
            if perm[a] > perm[b]:
                sign = -sign
    return sign * lookup[order]


def check_plucker_relations(p: PluckerPoint, tol: float = 1e-9) -> bool:
    """True iff all three-term quadratic wedge relations vanish within tol.

    For every (d-1)-subset S and (d+1)-subset T of {0..n-1}:
        sum_l (-1)^l p_{S + T[l]} * p_{T - T[l]} = 0
    Dimension-one points have no relations and always pass.
    """
    return plucker_residual(p) < tol


def plucker_residual(p: PluckerPoint) -> float:
    """Largest absolute value among all three-term wedge relations."""
    if p.d <= 1:
        return 0.0
    lookup = _coord_lookup(p)
    worst = 0.0
    for s_idx in itertools.combinations(range(p.n), p.d - 1):
        for t_idx in itertools.combinations(range(p.n), p.d + 1):
            acc = 0.0
            for pos, l in enumerate(t_idx):
                left = _signed_coord(lookup, s_idx + (l,))
                right = _signed_coord(lookup, tuple(x for x in t_idx if x != l))
                acc += (-1) ** pos * left * right
            worst = max(worst, abs(acc))
    return worst


def triple_intersection_dim(
    v1: Subspace, v2: Subspace, v3: Subspace, tol: Tolerance = DEFAULT_TOL
) -> int:
    """dim(V1 & V2 & V3) via iterated intersection."""
    if not (v1.ambient_dim == v2.ambient_dim == v3.ambient_dim):
        raise DimensionMismatch("ambient dimensions differ")
    return intersect(intersect(v1, v2, tol), v3, tol).d


def perp_line(v: Subspace) -> np.ndarray:
    """Unit, phase-normalized vector spanning the orthogonal complement of a plane in C^3."""
    if v.ambient_dim != 3 or v.d != 2:
        raise InvalidInput("expected a 2-dimensional subspace of C^3")
    _, _, vh = np.linalg.svd(v.basis.conj().T)
    w = vh[-1].conj()
    return _normalize_projective(w)


def determinantal_test(v1: Subspace, v2: Subspace, v3: Subspace) -> complex:
    """Determinant of the perp-line coordinates of three planes in C^3.

    Zero (below DET_ZERO_THRESHOLD) exactly when the three planes share a
    common line, i.e. the triple intersection is nonzero.
    """
    w = [perp_line(v) for v in (v1, v2, v3)]
    return complex(np.linalg.det(np.column_stack(w)))


def line_determinant(anchors: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Coefficients (highest power first) of det([a_i + t b_i]) as a polynomial in t.

    anchors and directions are 3x3 matrices whose columns are the perp-line
    coordinates of the three planes and their per-column drift.  The
    determinant is a polynomial of degree <= 3 in t; coefficients are
    recovered exactly by evaluating at four nodes and solving a Vandermonde
    system.
    """
    anchors = np.asarray(anchors, dtype=np.complex128)
    directions = np.asarray(directions, dtype=np.complex128)
    if anchors.shape != (3, 3) or directions.shape != (3, 3):
        raise InvalidInput("expected 3x3 anchor and direction matrices")
    nodes = np.array([0.0, 1.0, -1.0, 2.0])
    vals = np.array([np.linalg.det(anchors + t * directions) for t in nodes])
    vander = np.vander(nodes, 4)  # columns t^3, t^2, t, 1
    return np.linalg.solve(vander, vals)


def _poly_roots(coeffs: np.ndarray, scale_tol: float = 1e-10) -> np.ndarray:
    mags = np.abs(coeffs)
    peak = mags.max()
    if peak == 0 or peak < scale_tol:
        return np.array([])  # identically zero
    trimmed = np.trim_zeros(np.where(mags > scale_tol * peak, coeffs, 0), "f")
    if trimmed.size <= 1:
        return np.array([])  # nonzero constant
    return np.roots(trimmed)


@dataclass(frozen=True)
class LineProbeReport:
    """Root statistics of the restriction of the determinant to random lines."""

    samples: int
    root_counts: list[int]
    identically_zero: list[bool]
    residuals: list[float]

    @property
    def all_lines_hit(self) -> bool:
        """Every non-degenerate sampled line meets the determinant's zero set."""
        return all(
            z or c >= 1 for c, z in zip(self.root_counts, self.identically_zero)
        )


def codim_line_probe(rng: np.random.Generator, samples: int) -> LineProbeReport:
    """Restrict the plane-triple determinant to random affine lines.

    Each sample draws random anchors and directions for the three perp lines,
    forms det(t), and finds its roots.  A generic line yields a nonconstant
    polynomial with at least one complex root, evidence that the degenerate
    locus has codimension one.
    """
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    counts, zeros, residuals = [], [], []
    for _ in range(samples):
        anchors = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        directions = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        coeffs = line_determinant(anchors, directions)
        roots = _poly_roots(coeffs)
        is_zero = bool(np.max(np.abs(coeffs)) < 1e-10)
        counts.append(len(roots))
        zeros.append(is_zero)
        if len(roots):
            vals = [abs(np.polyval(coeffs, r)) for r in roots]
            residuals.append(float(max(vals)))
        else:
            residuals.append(0.0)
    return LineProbeReport(
        samples=samples, root_counts=counts, identically_zero=zeros, residuals=residuals
    )
