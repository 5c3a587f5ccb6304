"""Spectral analysis: counting functions, regime change, multiplicities,
full-vs-Dirichlet eigenvector pairing, boundary localization, and the
high-frequency landscape vector with its eigenvector bound.

Index conventions: in-memory arrays are 0-based like everything else in the
package, but report fields that name an eigenvalue position (index_star,
multiplicity group starts, pairing indices, localization CSV rows) are
1-based, matching the j of the published eigenvalue tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Mesh, boundary_hop_distance
from .operators import OperatorBundle
from .solver import Spectrum


class AnalysisError(Exception):
    """A spectral-analysis precondition failed (degenerate or short data)."""


def counting_function(spec: Spectrum, x: float) -> int:
    """N(x) = number of eigenvalues <= x, with multiplicity.

    Right-continuous by construction; N of the largest eigenvalue is the
    pair count.
    """
    return int(np.searchsorted(spec.eigenvalues, x, side="right"))


MIN_REGIME_POINTS = 10
BURN_IN_DEFAULT = 20


def _segment_slope(x: np.ndarray, y: np.ndarray, what: str) -> float:
    if len(x) < MIN_REGIME_POINTS:
        raise AnalysisError(
            f"fewer than {MIN_REGIME_POINTS} points in {what} regime "
            f"(got {len(x)})")
    if np.ptp(x) < 1e-12:
        raise AnalysisError(
            f"degenerate {what} regime: zero spread in log eigenvalues")
    return float(np.polyfit(x, y, 1)[0])


def loglog_slopes(spec: Spectrum, threshold: float,
                  burn_in: int = BURN_IN_DEFAULT) -> tuple[float, float]:
    """Least-squares slopes of log N(lambda) vs log lambda below and above
    the threshold, excluding lambda = 0 and the first `burn_in` eigenvalues.
    """
    w = spec.eigenvalues
    rank = np.arange(1, len(w) + 1, dtype=float)  # N at each eigenvalue
    pos = w > 0
    w, rank = w[pos], rank[pos]
    w, rank = w[burn_in:], rank[burn_in:]
    if len(w) == 0:
        raise AnalysisError("no positive eigenvalues past burn-in")
    x, y = np.log(w), np.log(rank)
    low = w <= threshold
    low_slope = _segment_slope(x[low], y[low], "low")
    high_slope = _segment_slope(x[~low], y[~low], "high")
    return low_slope, high_slope


@dataclass(frozen=True)
class RegimeReport:
    """Where the counting function changes growth rate.

    lambda_star is the top of the Dirichlet spectrum (the primary
    definition of the threshold); index_star is the 1-based position in the
    first spectrum where its counting function crosses lambda_star, and
    nearest_eigenvalue the eigenvalue there.  The kink fields come from an
    independent two-segment least-squares fit of log N vs log lambda; when
    that fit is not meaningful (too few points above lambda_star, or the two
    slopes do not actually differ) kink_degenerate is set and the kink is
    still reported for inspection.  A spectrum too small to fit at all gets
    NaN kink fields and kink_index 0.
    """

    lambda_star: float
    index_star: int
    nearest_eigenvalue: float
    kink_lambda: float
    kink_index: int
    kink_low_slope: float
    kink_high_slope: float
    kink_degenerate: bool


def _threshold_position(w: np.ndarray, lambda_star: float) -> int:
    """1-based position where the counting function crosses the threshold:
    the last eigenvalue at or below lambda_star (position 1 if none are).

    This is the regime-change point on the counting curve.  A plain
    nearest-by-distance rule is unstable here: an eigenvalue a hair above
    the threshold can be metrically closer than the last one below it.
    """
    return max(1, int(np.searchsorted(w, lambda_star, side="right")))


def _two_segment_kink(w: np.ndarray) -> tuple[float, int, float, float]:
    """Best split of the log-log counting curve into two LS segments.

    Returns (kink lambda, 1-based kink rank, low slope, high slope); the
    kink point is the first point of the upper segment.  O(N) via prefix
    sums.
    """
    rank = np.arange(1, len(w) + 1, dtype=float)
    pos = w > 0
    x, y = np.log(w[pos]), np.log(rank[pos])
    n = len(x)
    if n < 2 * MIN_REGIME_POINTS:
        raise AnalysisError("too few positive eigenvalues for a kink fit")

    def prefix(a):
        out = np.zeros(n + 1)
        np.cumsum(a, out=out[1:])
        return out

    sx, sy = prefix(x), prefix(y)
    sxx, sxy, syy = prefix(x * x), prefix(x * y), prefix(y * y)

    def sse(i, j):
        # least-squares residual of points i..j-1 (vectorized over arrays)
        k = j - i
        vx = (sxx[j] - sxx[i]) - (sx[j] - sx[i]) ** 2 / k
        vy = (syy[j] - syy[i]) - (sy[j] - sy[i]) ** 2 / k
        cxy = (sxy[j] - sxy[i]) - (sx[j] - sx[i]) * (sy[j] - sy[i]) / k
        with np.errstate(divide="ignore", invalid="ignore"):
            out = vy - np.where(vx > 0, cxy * cxy / np.where(vx > 0, vx, 1.0),
                                0.0)
        return np.maximum(out, 0.0)

    splits = np.arange(MIN_REGIME_POINTS, n - MIN_REGIME_POINTS + 1)
    total = sse(np.zeros_like(splits), splits) + sse(splits,
                                                     np.full_like(splits, n))
    s = int(splits[np.argmin(total)])

    def slope(i, j):
        k = j - i
        vx = (sxx[j] - sxx[i]) - (sx[j] - sx[i]) ** 2 / k
        cxy = (sxy[j] - sxy[i]) - (sx[j] - sx[i]) * (sy[j] - sy[i]) / k
        return float(cxy / vx) if vx > 0 else float("nan")

    pos_idx = np.flatnonzero(pos)
    kink_pos = int(pos_idx[s])  # first point of the upper segment
    return float(w[kink_pos]), kink_pos + 1, slope(0, s), slope(s, n)


def regime_threshold(specL: Spectrum, specLd: Spectrum) -> RegimeReport:
    """Threshold between the two growth regimes of specL's counting function.

    specLd supplies the reference top eigenvalue (intended use: the
    Dirichlet spectrum at the same level); the kink fit runs on specL alone.
    """
    if specL.count == 0 or specLd.count == 0:
        raise AnalysisError("empty spectrum")
    if specL.level != specLd.level:
        raise AnalysisError(
            f"level mismatch: {specL.level} vs {specLd.level}")
    if specL.count != specL.dimension or specLd.count != specLd.dimension:
        raise AnalysisError("regime detection needs complete spectra")

    lambda_star = float(specLd.eigenvalues[-1])
    index_star = _threshold_position(specL.eigenvalues, lambda_star)
    nearest = float(specL.eigenvalues[index_star - 1])

    try:
        kink_lambda, kink_index, lo, hi = _two_segment_kink(specL.eigenvalues)
    except AnalysisError:
        # spectrum too small for a two-segment fit; the threshold fields
        # above stay valid, the kink fields degrade to the degenerate state
        kink_lambda, kink_index, lo, hi = (float("nan"), 0, float("nan"),
                                           float("nan"))
    above = specL.count - counting_function(specL, lambda_star)
    degenerate = (above < MIN_REGIME_POINTS
                  or not np.isfinite(lo) or not np.isfinite(hi)
                  or abs(lo - hi) < 0.15)

    return RegimeReport(lambda_star=lambda_star, index_star=index_star,
                        nearest_eigenvalue=nearest, kink_lambda=kink_lambda,
                        kink_index=kink_index, kink_low_slope=lo,
                        kink_high_slope=hi, kink_degenerate=degenerate)


@dataclass(frozen=True)
class MultiplicityGroup:
    start: int   # 1-based position of the first eigenvalue in the group
    size: int
    value: float  # group mean


def multiplicity_groups(spec: Spectrum,
                        rel_tol: float = 1e-6) -> list[MultiplicityGroup]:
    """Cluster consecutive eigenvalues with |gap| <= rel_tol * max(1, lambda)."""
    if not rel_tol > 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    w = spec.eigenvalues
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[i - 1]) > rel_tol * max(1.0, abs(w[i - 1])):
            groups.append(MultiplicityGroup(
                start=start + 1, size=i - start,
                value=float(np.mean(w[start:i]))))
            start = i
    return groups


@dataclass(frozen=True)
class PairMatch:
    j: int            # 1-based index into the first spectrum
    j_tilde: int      # 1-based index into the second spectrum
    similarity: float
    gap: float        # |lambda_j - lambda_tilde|


def pair_eigenvectors(specL: Spectrum, specLd: Spectrum, mesh: Mesh,
                      top_k: int = 10) -> list[PairMatch]:
    """Best interior-overlap matches between two spectra's eigenvectors.

    Both sets of eigenvectors are restricted to the mesh's interior
    vertices and normalized there in the m-inner product; similarity is the
    absolute value of that inner product.  Returns the top_k entries of the
    similarity matrix, best first.  The published pairs are identified
    visually; this metric is this library's quantitative stand-in.
    """
    interior = set(mesh.interior_vertices.tolist())

    def restrict(spec):
        rows = np.flatnonzero(np.isin(spec.vertex_map, mesh.interior_vertices))
        verts = spec.vertex_map[rows]
        return verts, spec.eigenvectors[rows, :]

    vL, A = restrict(specL)
    vD, B = restrict(specLd)
    if len(vL) == 0 or len(vD) == 0:
        raise AnalysisError("a spectrum has no interior-vertex rows")
    if not np.array_equal(vL, vD):
        raise AnalysisError(
            "spectra cover different interior vertex sets; cannot pair")
    if not set(vL.tolist()) <= interior:
        raise AnalysisError("vertex maps disagree with the mesh")

    m_int = 1.0 / (9 ** mesh.level) * np.ones(len(vL))

    def m_normalize(X):
        nrm = np.sqrt((m_int[:, None] * X * X).sum(axis=0))
        safe = np.where(nrm > 0, nrm, 1.0)
        return X / safe, nrm > 0

    An, okA = m_normalize(A)
    Bn, okB = m_normalize(B)
    G = np.abs(An.T @ (m_int[:, None] * Bn))
    G[~okA, :] = 0.0
    G[:, ~okB] = 0.0

    top_k = min(top_k, G.size)
    flat = np.argsort(G.ravel())[::-1][:top_k]
    out = []
    for f in flat:
        a, b = np.unravel_index(f, G.shape)
        out.append(PairMatch(
            j=int(a) + 1, j_tilde=int(b) + 1, similarity=float(G[a, b]),
            gap=float(abs(specL.eigenvalues[a] - specLd.eigenvalues[b]))))
    return out


CONTOUR_CLASSES = ("zero", "pos", "neg")


def contour_classes(phi: np.ndarray, eps: float) -> np.ndarray:
    """Class codes on the max-normalized vector: 0 where |phi| <= eps,
    1 where phi > eps, 2 where phi < -eps."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    peak = np.max(np.abs(phi))
    v = phi / peak if peak > 0 else phi
    out = np.zeros(len(v), dtype=np.int64)
    out[v > eps] = 1
    out[v < -eps] = 2
    return out


@dataclass(frozen=True)
class LocalizationReport:
    """Per-eigenpair boundary localization metrics for a full spectrum.

    distance_histogram[j, d] is the share of pair j's m-weighted squared
    mass at graph hop distance d from the boundary (d = 0 is the boundary
    itself); rows sum to 1.  contour_counts[j] counts vertices in the
    (zero, pos, neg) classes of the max-normalized eigenvector.
    """

    level: int
    eps: float
    eigenvalues: np.ndarray            # (k,)
    boundary_mass_fraction: np.ndarray  # (k,)
    distance_histogram: np.ndarray     # (k, max_distance + 1)
    contour_counts: np.ndarray         # (k, 3)

    def __post_init__(self):
        for arr in (self.eigenvalues, self.boundary_mass_fraction,
                    self.distance_histogram, self.contour_counts):
            arr.setflags(write=False)


def localization_report(spec: Spectrum, mesh: Mesh,
                        eps: float = 0.01) -> LocalizationReport:
    """Boundary mass fractions, distance profiles, and contour class counts
    for every eigenpair of a full-mesh spectrum."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if spec.dimension != mesh.num_vertices or not np.array_equal(
            spec.vertex_map, np.arange(mesh.num_vertices)):
        raise AnalysisError("localization needs a spectrum on the full mesh")

    n = mesh.level
    m = np.where(mesh.boundary_flags, 1.0 / (4 ** n), 1.0 / (9 ** n))
    dist = boundary_hop_distance(mesh)
    nd = int(dist.max()) + 1

    Phi = spec.eigenvectors
    k = spec.count
    mass = m[:, None] * Phi * Phi
    total = mass.sum(axis=0)
    bmf = mass[mesh.boundary_flags, :].sum(axis=0) / total

    hist = np.empty((k, nd))
    counts = np.empty((k, 3), dtype=np.int64)
    peak = np.max(np.abs(Phi), axis=0)
    for j in range(k):
        hist[j] = np.bincount(dist, weights=mass[:, j], minlength=nd) / total[j]
        v = Phi[:, j] / peak[j] if peak[j] > 0 else Phi[:, j]
        pos = int(np.count_nonzero(v > eps))
        neg = int(np.count_nonzero(v < -eps))
        counts[j] = (len(v) - pos - neg, pos, neg)

    return LocalizationReport(
        level=mesh.level, eps=eps, eigenvalues=spec.eigenvalues.copy(),
        boundary_mass_fraction=bmf, distance_histogram=hist,
        contour_counts=counts)


@dataclass(frozen=True)
class LandscapeVector:
    """Absolute row sums of L = M^-1 S, one value per operator vertex."""

    kind: str
    level: int
    c0: float
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


def landscape(op: OperatorBundle) -> LandscapeVector:
    """u_i = sum_j |L_ij|, formed exactly.

    The row sum of |S| is 4 * (sum of incident conductances), a sum of a
    handful of exactly-represented values, and inv_m is an exact integer in
    a double, so the product is exact (for c0 = 1 everything stays integer
    and below 2**53).
    """
    row_abs = np.asarray(abs(op.S).sum(axis=1)).ravel()
    return LandscapeVector(kind=op.kind, level=op.level, c0=op.c0,
                           values=op.inv_m * row_abs)


def landscape_closed_forms(level: int, c0: float = 1.0) -> dict[str, float]:
    """The three values the full-operator landscape takes at c0-weighted
    boundary coupling: constant on the interior, and two boundary values
    keyed by vertex degree (tips have degree 2, bases degree 5)."""
    n = level
    return {
        "interior": 24.0 * 9 ** n,
        "boundary_tip": c0 * 8.0 * 16 ** n,
        "boundary_base": c0 * 8.0 * 16 ** n + 12.0 * 4 ** n,
    }


@dataclass(frozen=True)
class BoundViolation:
    pair: int     # 1-based eigenpair position
    vertex: int   # mesh vertex index (via the operator's vertex_map)
    value: float  # |phi| after max-normalization
    bound: float  # u / lambda


@dataclass(frozen=True)
class BoundCheckResult:
    violations: tuple
    skipped: tuple  # 1-based positions of lambda = 0 pairs (bound undefined)

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0


def landscape_bound_check(spec: Spectrum, u: LandscapeVector,
                          tol: float = 1e-10) -> BoundCheckResult:
    """Check |phi_i| <= u_i / lambda for every eigenpair with lambda > 0,
    after normalizing each eigenvector to max |phi| = 1.

    Returns every index where the bound fails by more than `tol`; an empty
    violation list verifies the bound on this spectrum.
    """
    if (spec.kind, spec.level, spec.c0) != (u.kind, u.level, u.c0):
        raise AnalysisError(
            "spectrum and landscape come from different operators")
    if spec.dimension != len(u.values):
        raise AnalysisError(
            f"dimension mismatch: {spec.dimension} vs {len(u.values)}")

    w = spec.eigenvalues
    Phi = spec.eigenvectors
    skipped = tuple(int(i) + 1 for i in np.flatnonzero(w == 0))
    violations = []
    block = 512
    for lo in range(0, spec.count, block):
        hi = min(lo + block, spec.count)
        ww = w[lo:hi]
        P = np.abs(Phi[:, lo:hi])
        P = P / np.max(P, axis=0)
        with np.errstate(divide="ignore"):
            bound = u.values[:, None] / ww[None, :]
        mask = (P > bound + tol) & (ww > 0)[None, :]
        for r, c in zip(*np.nonzero(mask)):
            violations.append(BoundViolation(
                pair=lo + int(c) + 1, vertex=int(spec.vertex_map[r]),
                value=float(P[r, c]), bound=float(bound[r, c])))
    return BoundCheckResult(violations=tuple(violations), skipped=skipped)
