"""Euler characteristic of a sampled set from neighborhood complexes.

At a scale r the cloud's Vietoris-Rips complex has a simplex for every
clique of the r-neighborhood graph, and chi is the alternating sum of
simplex counts; no homology is needed, the count is exact for the
complex.  Cliques of every size are enumerated: truncating at the
target dimension would bend chi on scales where the complex is briefly
thicker than the manifold (a 200-point circle at three gaps of scale
carries tetrahedra; its chi is 0 only with the full count).  The
declared dimension of the target is kept as metadata and drives the
scale ladder.

One scale proves nothing, so a scan walks a geometric ladder of scales
and looks for the longest run of consecutive scales that agree on chi.
A run at least plateau_min long is reported as stable, with ties going
to the smaller scales, where the complex is closer to the manifold.
Stage estimates rerun the scan on random 80% subsamples over the
parent's plateau window (stretched across budget-aborted scales just
above it), and downgrade stability when what a subsample settles on at
the coarse end of that window is a different chi.

Raw projection clouds have very uneven density, and full clique counts
blow up right where random holes finish closing; the cure is to thin
each cloud to a greedy net at twice its mean nearest-neighbor gap
before scanning.  Even spacing makes holes close together, well before
the clique budget ends the valid scale window.  When projection piles
points into a few dense basins the mean gap undershoots badly, so the
net radius escalates until the worst local spacing of the net is in
line with its typical spacing; one ladder then serves the whole cloud.

Zero-dimensional targets get the ladder anchored three decades below
the mean nearest-neighbor gap: a finite point set has its true chi only
below the minimal separation, and the standard [2x, 30x] window would
never look there.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

from . import sampling
from .cliques import DEFAULT_CLIQUE_BUDGET, CliqueBudgetError, clique_counts
from .germs import MapGerm

PLATEAU_MIN = 5
NUM_SCALES = 40
SCALE_LO_FACTOR = 2.0
SCALE_HI_FACTOR = 30.0
DIM0_ANCHOR = 1e-3
SUBSAMPLE_TRIALS = 3
SUBSAMPLE_FRACTION = 0.8
# net-thinning factor applied to stage clouds before scanning; skipped
# for zero-dimensional targets, whose points are the whole content
THIN_FACTOR = 2.0
# a net is accepted once its largest nearest-neighbor gap is within this
# factor of its mean one; otherwise the net radius escalates.  A single
# gap of 4x the mean keeps a spurious 1-cycle alive across scales that
# would otherwise belong to the plateau, so the tolerance stays tight.
NET_UNIFORMITY = 2.5


class EstimatorError(RuntimeError):
    pass


@dataclass
class ComplexStats:
    """Counts of one Rips complex: c_k simplices of dimension k."""

    scale: float
    simplex_counts: tuple  # (c_0, c_1, ...), all clique sizes found
    chi: int
    n_components: int
    dim_cap: int  # declared dimension of the target; metadata only
    valid: bool = True
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "scale": self.scale,
            "simplex_counts": [int(c) for c in self.simplex_counts],
            "chi": int(self.chi),
            "n_components": int(self.n_components),
            "dim_cap": int(self.dim_cap),
            "valid": self.valid,
            "note": self.note,
        }


@dataclass
class ChiEstimate:
    """A scan's verdict: chi, the plateau that backs it, confidence."""

    chi: int
    plateau: tuple  # (r_min, r_max, length)
    scan: list  # ComplexStats per scale
    confidence: str  # "stable" | "unstable"
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        r_min, r_max, length = self.plateau
        return {
            "chi": int(self.chi),
            "confidence": self.confidence,
            "plateau": {
                "r_min": float(r_min),
                "r_max": float(r_max),
                "length": int(length),
            },
            "scan": [s.to_json_dict() for s in self.scan],
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def _as_points(cloud) -> np.ndarray:
    pts = getattr(cloud, "points", cloud)
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2:
        raise EstimatorError(f"expected an (N, M) point array, got shape {pts.shape}")
    return pts


def mean_nn_distance(points: np.ndarray) -> float:
    points = _as_points(points)
    if points.shape[0] < 2:
        return 0.0
    d, _ = cKDTree(points).query(points, k=2)
    return float(d[:, 1].mean())


def default_scales(points, d: int, num: int = NUM_SCALES) -> np.ndarray:
    """Geometric ladder over [2x, 30x] mean-NN; anchored low when d = 0."""
    base = mean_nn_distance(points)
    if base <= 0.0:
        base = 1.0
    lo = DIM0_ANCHOR * base if d == 0 else SCALE_LO_FACTOR * base
    hi = SCALE_HI_FACTOR * base
    return np.geomspace(lo, hi, num)


def _stats_at_scale(
    condensed: np.ndarray, n: int, r: float, d: int, budget: int
) -> ComplexStats:
    if n == 0:
        return ComplexStats(r, (), 0, 0, d)
    if n == 1:
        return ComplexStats(r, (1,), 1, 1, d)
    adj = squareform(condensed <= r)
    np.fill_diagonal(adj, False)
    ncomp = int(connected_components(csr_matrix(adj), directed=False)[0])
    try:
        counts = clique_counts(adj, budget=budget)
    except CliqueBudgetError as e:
        return ComplexStats(r, (), 0, 0, d, valid=False, note=str(e))
    c = tuple(int(v) for v in counts[1:])
    chi = int(sum((-1) ** k * v for k, v in enumerate(c)))
    return ComplexStats(r, c, chi, ncomp, d)


def rips_chi(cloud, r: float, d: int, budget: int = DEFAULT_CLIQUE_BUDGET) -> ComplexStats:
    """Simplex counts and chi of the Rips complex at one scale.

    ``d`` is the declared dimension of the sampled target; it is
    recorded for reporting but does not cap the clique sizes counted.
    Raises on a blown budget instead of returning a truncated count.
    """
    if r <= 0:
        raise EstimatorError(f"scale must be positive, got {r}")
    if d < 0:
        raise EstimatorError(f"dimension must be >= 0, got {d}")
    points = _as_points(cloud)
    n = points.shape[0]
    condensed = pdist(points) if n > 1 else np.zeros(0)
    stats = _stats_at_scale(condensed, n, float(r), d, budget)
    if not stats.valid:
        raise CliqueBudgetError(stats.note)
    return stats


def _longest_run(stats: Sequence[ComplexStats]):
    """Longest run of consecutive valid scales with one chi; ties -> first."""
    best = (0, 0, 0)  # (length, start, end)
    i = 0
    n = len(stats)
    while i < n:
        if not stats[i].valid:
            i += 1
            continue
        j = i
        while j + 1 < n and stats[j + 1].valid and stats[j + 1].chi == stats[i].chi:
            j += 1
        if j - i + 1 > best[0]:
            best = (j - i + 1, i, j)
        i = j + 1
    return best


def chi_scan(
    cloud,
    d: int,
    scales=None,
    plateau_min: int = PLATEAU_MIN,
    budget: int = DEFAULT_CLIQUE_BUDGET,
    threads: int = 1,
) -> ChiEstimate:
    """Scan a scale ladder and report the plateau chi.

    The ladder needs at least 15 scales (geometric spacing is what the
    default provides; custom ladders are trusted on that point).  Scales
    whose clique enumeration blows the budget are marked invalid and
    break runs rather than contaminate them.
    """
    points = _as_points(cloud)
    n = points.shape[0]
    if n == 0:
        return ChiEstimate(0, (0.0, 0.0, 0), [], "unstable",
                           {"note": "empty cloud"})
    if scales is None:
        scales = default_scales(points, d)
    scales = np.asarray(scales, dtype=float)
    if scales.size < 15:
        raise EstimatorError(f"scale ladder needs >= 15 scales, got {scales.size}")
    if (scales <= 0).any() or (np.diff(scales) <= 0).any():
        raise EstimatorError("scales must be positive and strictly increasing")
    condensed = pdist(points) if n > 1 else np.zeros(0)

    def one(r: float) -> ComplexStats:
        return _stats_at_scale(condensed, n, float(r), d, budget)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(one, scales))
    else:
        stats = [one(r) for r in scales]

    length, i0, i1 = _longest_run(stats)
    if length == 0:
        return ChiEstimate(
            0, (0.0, 0.0, 0), stats, "unstable",
            {"note": "no valid scale in the scan"},
        )
    plateau = (float(scales[i0]), float(scales[i1]), int(length))
    conf = "stable" if length >= plateau_min else "unstable"
    chi = int(stats[i0].chi)
    diag = {
        "n_points": int(n),
        "mean_nn": mean_nn_distance(points),
        "invalid_scales": int(sum(1 for s in stats if not s.valid)),
        "plateau_components": int(stats[i0].n_components),
    }
    return ChiEstimate(chi, plateau, stats, conf, diag)


STAGE_KINDS = ("fiber", "boundary", "link", "page")


def target_dimension(M: int, K: int, I: int, kind: str) -> int:
    """Declared dimension of each sampled target."""
    if kind == "fiber":
        return M - I
    if kind in ("boundary", "link"):
        return M - I - 1
    if kind == "page":
        return M - K
    raise EstimatorError(f"unknown kind {kind!r}")


def estimate_stage(
    f: MapGerm,
    I: int,
    kind: str,
    radii: Optional[sampling.Radii] = None,
    n_points: int = 600,
    seed: int = 0,
    y=None,
    theta=None,
    scales=None,
    plateau_min: int = PLATEAU_MIN,
    budget: int = DEFAULT_CLIQUE_BUDGET,
    sample_budget: Optional[int] = None,
    threads: int = 1,
    subsample_trials: int = SUBSAMPLE_TRIALS,
) -> ChiEstimate:
    """Sample one stage target and scan it; the full numeric pipeline.

    Composes the sampler with the scan, picks the declared dimension by
    kind, enforces subsample stability, and for fibers also reports the
    chi of the rim-shrunk cloud (|x| <= 0.95 eps) as a cross-check.
    An empty sample short-circuits to chi = 0, the chi of nothing.
    """
    if kind not in STAGE_KINDS:
        raise EstimatorError(f"unknown kind {kind!r}")
    M, K = f.source_dim, f.target_dim
    if radii is None:
        radii = sampling.choose_radii(f, I, seed=seed).radii
    d = target_dimension(M, K, I, kind)

    kw = {"threads": threads}
    if sample_budget is not None:
        kw["budget"] = sample_budget
    max_angle_dev = None
    if kind == "fiber":
        y_eff = y if y is not None else sampling.default_regular_value(I, radii.eta)
        cloud = sampling.sample_fiber(f, I, y_eff, radii, n_points, seed, **kw)
    elif kind == "boundary":
        y_eff = y if y is not None else sampling.default_regular_value(I, radii.eta)
        cloud = sampling.sample_boundary(f, I, y_eff, radii, n_points, seed, **kw)
    elif kind == "link":
        cloud = sampling.sample_link(f, I, radii, n_points, seed, **kw)
    else:
        if theta is None:
            theta = np.zeros(K - I)
            theta[0] = 1.0
        book = sampling.sample_openbook_page(
            f, I, theta, radii, n_points, seed, y=y, **kw
        )
        cloud = book.page_cloud
        max_angle_dev = book.max_angle_dev

    cloud_meta = {
        "kind": kind,
        "stage": int(I),
        "n_points": len(cloud),
        "n_proposals": int(cloud.n_proposals),
        "n_converged": int(cloud.n_converged),
        "saturated": cloud.saturated,
        "residual_eq": cloud.residual_eq,
        "residual_sphere": cloud.residual_sphere,
        "epsilon": radii.epsilon,
        "seed": int(seed),
        "note": cloud.note,
    }
    if max_angle_dev is not None:
        cloud_meta["max_angle_dev"] = max_angle_dev

    if len(cloud) == 0:
        return ChiEstimate(
            0, (0.0, 0.0, 0), [], "stable",
            {
                "cloud": cloud_meta,
                "note": f"empty {kind} cloud: chi(empty set) = 0 by convention",
            },
        )

    points = cloud.points
    if d >= 1 and len(cloud) >= 20:
        net_r = THIN_FACTOR * mean_nn_distance(points)
        net = points[sampling.greedy_net(points, net_r)]
        # Escalate while the net is lopsided; a mean-gap radius undershoots
        # when projection piles points into dense basins, and the ladder it
        # anchors then never reaches the sparse side's hole-closing scales.
        for _ in range(4):
            if net.shape[0] < 20:
                break
            nn = cKDTree(net).query(net, k=2)[0][:, 1]
            if float(nn.max()) <= NET_UNIFORMITY * float(nn.mean()):
                break
            wider_r = 0.5 * float(nn.max())
            wider = points[sampling.greedy_net(points, wider_r)]
            if wider.shape[0] < 20:
                break
            net_r, net = wider_r, wider
        points = net
        cloud_meta["net_radius"] = float(net_r)
    cloud_meta["n_used"] = int(points.shape[0])

    est = chi_scan(points, d, scales=scales, plateau_min=plateau_min,
                   budget=budget, threads=threads)
    est.diagnostics["cloud"] = cloud_meta
    if est.plateau[2] > 0:
        # component count where the complex sits closest to the manifold;
        # for links this is the evidence that separates two circles from one
        for s in est.scan:
            if s.valid and s.scale == est.plateau[0]:
                est.diagnostics["plateau_components"] = int(s.n_components)
                break

    valid_idx = [i for i, s in enumerate(est.scan) if s.valid]
    valid_scales = [est.scan[i].scale for i in valid_idx]
    # Subsamples rescan the parent's plateau window.  Deleting a fifth of
    # the points pushes each hole closure rightward by a random amount, so
    # inside the window a subsample may keep a transient hole alive for a
    # while; what it settles on at the coarse end is the value to compare.
    # The window grows past the plateau only across scales the parent
    # aborted on budget, where it had no opinion; a valid scale with a
    # different chi is a regime change and ends the comparison range.
    r_lo, r_hi, _ = est.plateau
    plat_idx = [i for i in valid_idx if r_lo <= est.scan[i].scale <= r_hi]
    sub_scales = []
    if plat_idx:
        hi = plat_idx[-1] + 1
        while hi < len(est.scan) and hi - plat_idx[-1] <= 3:
            if est.scan[hi].valid:
                break
            hi += 1
        sub_scales = [s.scale for s in est.scan[plat_idx[0] : hi]]

    n_used = points.shape[0]
    if est.confidence == "stable" and subsample_trials > 0 and n_used >= 10:
        sub_chis = []
        sub_lens = []
        agree = True
        m = max(1, int(SUBSAMPLE_FRACTION * n_used))
        for trial in range(subsample_trials):
            rng = sampling.rng_stream(seed, 500_000 + trial)
            idx = np.sort(rng.choice(n_used, size=m, replace=False))
            chi_t, len_t = _settled_on_scales(points[idx], sub_scales, d, budget)
            sub_chis.append(chi_t)
            sub_lens.append(len_t)
            if chi_t != est.chi:
                agree = False
        est.diagnostics["subsample_chis"] = sub_chis
        est.diagnostics["subsample_plateaus"] = sub_lens
        if not agree:
            est.confidence = "unstable"
            est.diagnostics["note"] = "downgraded: subsample scans disagree"

    if kind == "fiber":
        inner = points[np.linalg.norm(points, axis=1) <= 0.95 * radii.epsilon]
        if inner.shape[0] >= 10:
            chi_s, len_s = _plateau_on_scales(inner, valid_scales, d, budget)
            est.diagnostics["shrunk_chi"] = chi_s
            est.diagnostics["shrunk_confidence"] = (
                "stable" if len_s >= plateau_min else "unstable"
            )

    return est


def _plateau_on_scales(points: np.ndarray, scales, d: int, budget: int):
    """Plateau chi and run length of a cloud over a fixed scale list."""
    n = points.shape[0]
    condensed = pdist(points) if n > 1 else np.zeros(0)
    stats = [_stats_at_scale(condensed, n, float(r), d, budget) for r in scales]
    length, i0, _ = _longest_run(stats)
    if length == 0:
        return None, 0
    return int(stats[i0].chi), int(length)


def _settled_on_scales(points: np.ndarray, scales, d: int, budget: int):
    """Chi of the rightmost run of at least two scales, and its length.

    Deleting points only pushes hole closures toward larger scales, so a
    degraded cloud is judged by what it settles on at the coarse end of
    the range, not by which value holds the longest run inside it.
    """
    n = points.shape[0]
    condensed = pdist(points) if n > 1 else np.zeros(0)
    stats = [_stats_at_scale(condensed, n, float(r), d, budget) for r in scales]
    best = (None, 0)
    run_chi, run_len = None, 0
    for s in stats:
        if not s.valid:
            run_chi, run_len = None, 0
            continue
        if s.chi == run_chi:
            run_len += 1
        else:
            run_chi, run_len = s.chi, 1
        if run_len >= 2:
            best = (int(run_chi), int(run_len))
    return best


def write_scan_svg(est: ChiEstimate, path) -> None:
    """Static chi-versus-log-scale chart for one scan; no timestamps."""
    W, H, ml, mr, mt, mb = 640, 360, 60, 20, 20, 44
    valid = [s for s in est.scan if s.valid]
    if not valid:
        body = ['<text x="320" y="180" text-anchor="middle">no valid scales</text>']
        _write_svg(path, W, H, body)
        return
    xs = np.log([s.scale for s in est.scan])
    chis = [s.chi for s in est.scan]
    lo_x, hi_x = float(xs.min()), float(xs.max())
    lo_c = min(min(chis), est.chi) - 1
    hi_c = max(max(chis), est.chi) + 1

    def X(v):
        t = 0.5 if hi_x == lo_x else (v - lo_x) / (hi_x - lo_x)
        return ml + t * (W - ml - mr)

    def Y(c):
        t = (c - lo_c) / (hi_c - lo_c)
        return H - mb - t * (H - mt - mb)

    body = []
    r_min, r_max, length = est.plateau
    if length:
        x0, x1 = X(np.log(r_min)), X(np.log(r_max))
        body.append(
            f'<rect x="{x0:.1f}" y="{mt}" width="{max(x1 - x0, 2.0):.1f}" '
            f'height="{H - mt - mb}" fill="#9ecae1" opacity="0.35"/>'
        )
    for c in range(int(lo_c), int(hi_c) + 1):
        y = Y(c)
        body.append(
            f'<line x1="{ml}" y1="{y:.1f}" x2="{W - mr}" y2="{y:.1f}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{ml - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-size="11">{c}</text>'
        )
    pts = []
    for s in est.scan:
        if s.valid:
            pts.append(f"{X(np.log(s.scale)):.1f},{Y(s.chi):.1f}")
    body.append(
        f'<polyline points="{" ".join(pts)}" fill="none" stroke="#3182bd" '
        f'stroke-width="1.5"/>'
    )
    for s in est.scan:
        x = X(np.log(s.scale))
        if s.valid:
            body.append(
                f'<circle cx="{x:.1f}" cy="{Y(s.chi):.1f}" r="2.5" fill="#3182bd"/>'
            )
        else:
            y = H - mb - 6
            body.append(
                f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="middle" '
                f'fill="#cb181d" font-size="11">x</text>'
            )
    body.append(
        f'<text x="{(ml + W - mr) / 2:.1f}" y="{H - 10}" text-anchor="middle" '
        f'font-size="12">log scale</text>'
    )
    body.append(
        f'<text x="{ml}" y="{mt - 4}" font-size="12">chi = {est.chi} '
        f'({est.confidence}, plateau {length})</text>'
    )
    _write_svg(path, W, H, body)


def _write_svg(path, w, h, body) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}" font-family="sans-serif">\n'
        )
        fh.write(f'<rect width="{w}" height="{h}" fill="white"/>\n')
        for el in body:
            fh.write(el + "\n")
        fh.write("</svg>\n")
