"""Peres lattices and the quantitative spectral diagnostics built on them:
density of states, slope-change (ESQPT) markers, unfolding and nearest-
neighbour spacing statistics."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, UnfoldError
from .hamiltonian import ModelParams
from .observables import ConvergenceReport
from .solver import Spectrum

DEFAULT_BIN_WIDTH = 0.05
DEFAULT_UNFOLD_DEGREE = 6

# mean consecutive-gap ratio references
POISSON_RATIO = 2.0 * math.log(2.0) - 1.0  # ~0.38629, uncorrelated levels
GOE_RATIO = 0.5307  # level repulsion


@dataclass
class PeresLattice:
    """Per-eigenstate records (E/j, expectation, parity, top-shell weight) for
    one Peres operator, sorted by energy."""

    operator_kind: str
    energy_over_j: np.ndarray
    expectation: np.ndarray
    parity: np.ndarray
    delta_p: np.ndarray
    params: ModelParams

    @property
    def size(self):
        return self.energy_over_j.size

    def select(self, mask):
        return PeresLattice(
            self.operator_kind,
            self.energy_over_j[mask],
            self.expectation[mask],
            self.parity[mask],
            self.delta_p[mask],
            self.params,
        )


@dataclass
class EsqptMarkers:
    """E/j positions of the two slope changes of a binned Jz lattice: the
    lower (coupling-dependent) one and the upper (saturation) one."""

    static_marker: float
    dynamic_marker: float
    bin_width: float


@dataclass
class SpacingStats:
    hist_counts: np.ndarray
    hist_edges: np.ndarray
    mean_ratio: float


def lattice(
    spectrum: Spectrum,
    expectations,
    parities,
    report: ConvergenceReport,
    params: ModelParams,
    operator_kind: str,
    converged_only: bool = False,
) -> PeresLattice:
    """Assemble the per-state lattice for one operator, energies normalized by j."""
    e = np.asarray(spectrum.energies, dtype=float)
    x = np.asarray(expectations, dtype=float)
    p = np.asarray(parities, dtype=int)
    dp = np.asarray(report.delta_p, dtype=float)
    if not (e.size == x.size == p.size == dp.size):
        raise ValueError("spectrum, expectations, parities and report lengths differ")
    if not np.isfinite(dp).all():
        raise ValueError("every lattice point needs a finite delta_p")
    _check_bounds(operator_kind, x, params)
    lat = PeresLattice(operator_kind, e / params.j, x, p, dp, params)
    if converged_only:
        lat = lat.select(dp < report.tolerance)
    return lat


def _check_bounds(operator_kind, x, params, slack=1e-9):
    j = params.j
    if operator_kind == "Jz":
        lo, hi = -j, j
    elif operator_kind == "Jx2":
        lo, hi = 0.0, j * j
    elif operator_kind == "photon_n":
        lo, hi = 0.0, math.inf
    else:
        return
    tol = slack * max(1.0, abs(lo), 1.0 if hi == math.inf else abs(hi))
    if x.size and (x.min() < lo - tol or x.max() > hi + tol):
        raise ValueError(
            f"{operator_kind} expectation outside [{lo}, {hi}]: "
            f"range [{x.min()}, {x.max()}]"
        )


def _anchored_edges(lo, hi, width):
    first = math.floor(lo / width)
    last = math.floor(hi / width) + 1
    return width * np.arange(first, last + 1)


def density_of_states(energies, j, bin_width):
    """Histogram of E/j on a grid anchored at multiples of bin_width.
    Returns (edges, counts); empty input gives empty arrays."""
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    e = np.asarray(energies, dtype=float) / j
    if e.size == 0:
        return np.array([]), np.array([], dtype=int)
    edges = _anchored_edges(e.min(), e.max(), bin_width)
    counts, _ = np.histogram(e, bins=edges)
    return edges, counts


def esqpt_markers(
    lat: PeresLattice,
    bin_width=DEFAULT_BIN_WIDTH,
    window=(-2.0, 2.0),
    min_separation=0.5,
    curvature_scale=0.25,
) -> EsqptMarkers:
    """Locate the two slope changes of the bin-averaged Jz lattice inside `window`.

    The points are binned at `bin_width`; the binned curve is averaged over a
    fixed energy scale `curvature_scale` (count-weighted, so scatter inside
    the chaotic region averages out) and its two largest-magnitude second
    differences at that lag give the marker positions, constrained to sit at
    least `min_separation` apart so both flanks of one kink are not reported
    twice.  Marker positions resolve at bin-width level while the curvature
    estimate lives on the fixed physical scale, which keeps the markers
    stable when the bin width is halved.  The smaller position is the dynamic
    marker, the larger the static one.
    """
    if lat.operator_kind != "Jz":
        raise ValueError("slope-change markers are defined on the Jz lattice")
    inside = (lat.energy_over_j >= window[0]) & (lat.energy_over_j <= window[1])
    e = lat.energy_over_j[inside]
    y = lat.expectation[inside]
    if e.size == 0:
        raise InsufficientDataError("no lattice points inside the marker window")
    edges = _anchored_edges(e.min(), e.max(), bin_width)
    which = np.digitize(e, edges) - 1
    n_bins = edges.size - 1
    counts = np.bincount(which, minlength=n_bins).astype(float)
    sums = np.bincount(which, weights=y, minlength=n_bins)
    if np.count_nonzero(counts) < 5:
        raise InsufficientDataError(
            f"only {np.count_nonzero(counts)} populated bins; need at least 5"
        )
    centers = 0.5 * (edges[:-1] + edges[1:])
    half = max(0, round(curvature_scale / (2 * bin_width)))
    lag = max(1, round(curvature_scale / bin_width))
    box = np.ones(2 * half + 1)
    sum_s = np.convolve(sums, box, mode="same")
    cnt_s = np.convolve(counts, box, mode="same")
    valid = cnt_s > 0
    smooth = np.divide(sum_s, cnt_s, out=np.zeros_like(sum_s), where=valid)
    d2 = np.full(n_bins, np.nan)
    for i in range(lag, n_bins - lag):
        if valid[i] and valid[i - lag] and valid[i + lag]:
            d2[i] = smooth[i + lag] - 2 * smooth[i] + smooth[i - lag]
    mag = np.where(np.isnan(d2), -1.0, np.abs(d2))
    if (mag >= 0).sum() < 2:
        raise InsufficientDataError("too few bins with a full curvature stencil")
    order = np.argsort(mag, kind="stable")[::-1]
    first = order[0]
    second = None
    for idx in order[1:]:
        if mag[idx] < 0:
            break
        if abs(centers[idx] - centers[first]) >= min_separation:
            second = idx
            break
    if second is None:
        raise InsufficientDataError("no second slope change beyond the separation limit")
    pos = sorted((centers[first], centers[second]))
    return EsqptMarkers(static_marker=pos[1], dynamic_marker=pos[0], bin_width=bin_width)


def unfold(energies, polynomial_degree=DEFAULT_UNFOLD_DEGREE):
    """Map a sorted spectrum to unit mean level spacing.

    The cumulative level count is fit with a polynomial of the given degree
    (on a scaled domain) and the energies are passed through the fit; an
    affine rescale then pins the mean spacing to exactly one.  Raises
    UnfoldError when the fit is rank-deficient or the mapping is not
    monotone.
    """
    e = np.asarray(energies, dtype=float)
    if e.size < 50:
        raise ValueError("unfolding needs at least 50 levels")
    if np.any(np.diff(e) < 0):
        raise ValueError("energies must be sorted ascending")
    counts = np.arange(e.size) + 0.5
    series, diag = np.polynomial.Polynomial.fit(e, counts, polynomial_degree, full=True)
    rank, sv = diag[1], diag[2]
    if rank < polynomial_degree + 1:
        raise UnfoldError(
            f"rank-deficient staircase fit: rank {rank} < {polynomial_degree + 1}, "
            f"singular values {sv}"
        )
    mapped = series(e)
    if np.any(np.diff(mapped) < 0):
        raise UnfoldError(
            f"degree-{polynomial_degree} staircase fit is not monotone on the sample"
        )
    span = mapped[-1] - mapped[0]
    if span <= 0:
        raise UnfoldError("unfolded spectrum has zero span")
    return (mapped - mapped[0]) * ((e.size - 1) / span)


def spacing_stats(unfolded, bin_width=0.25) -> SpacingStats:
    """Nearest-neighbour spacing histogram plus the mean consecutive-gap ratio
    <min(s_i, s_i+1) / max(s_i, s_i+1)> (~0.386 for uncorrelated levels,
    ~0.53 under level repulsion)."""
    s = np.diff(np.asarray(unfolded, dtype=float))
    if s.size < 2:
        raise ValueError("need at least three levels for spacing statistics")
    hi = max(4.0, float(s.max()))
    edges = np.arange(0.0, hi + bin_width, bin_width)
    counts, _ = np.histogram(s, bins=edges)
    lo = np.minimum(s[:-1], s[1:])
    hi_ = np.maximum(s[:-1], s[1:])
    ratios = np.where(hi_ > 0, lo / np.where(hi_ > 0, hi_, 1.0), 0.0)
    return SpacingStats(counts, edges, float(ratios.mean()))


def drop_degenerate(energies, gap_tol=1e-10):
    """Collapse near-degenerate runs to a single representative level.

    Symmetry-driven degeneracies carry no dynamical information, so spacing
    statistics exclude them.
    """
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        return e
    keep = np.concatenate([[True], np.diff(e) > gap_tol])
    return e[keep]


def mean_gap_ratio(energies):
    """Mean consecutive-gap ratio straight from sorted energies (unfolding-free)."""
    s = np.diff(np.asarray(energies, dtype=float))
    if s.size < 2:
        raise ValueError("need at least three levels")
    lo = np.minimum(s[:-1], s[1:])
    hi = np.maximum(s[:-1], s[1:])
    ratios = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 0.0)
    return float(ratios.mean())
