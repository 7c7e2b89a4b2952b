"""Point clouds on the fibers, boundaries, links and pages of a germ.

Every sampled set is a real algebraic intersection near the origin:

    fiber     F_I = B_eps  n f_I^{-1}(y)      dim M - I
    boundary bF_I = S_eps  n f_I^{-1}(y)      dim M - I - 1
    link      L_I = S_eps  n f_I^{-1}(0)      dim M - I - 1
    page           subset of bF_I where f_rest points in a fixed
                   direction theta                 dim M - K

Points come from uniform proposals in the ball (fiber) or on the sphere
(everything else), projected onto the target by Gauss-Newton iteration
with Armijo backtracking on the residual norm.  The sphere equation is
scaled to signed-distance form so the convergence tolerance bounds
| |x| - eps | directly.

Proposals are drawn in fixed-size waves from counter-based Philox
streams keyed by (seed, wave index), and waves are merged in index
order, so results are bit-for-bit reproducible for a given seed no
matter how many worker threads run the waves.  Accepted points are
deduplicated by a keep-first rule at radius eps*1e-4; when consecutive
waves stop producing new points the target is treated as saturated
(finite sets do this) and sampling stops early.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .germs import MapGerm, PolyMap, StageMaps, numerical_rank, stage

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 60
ARMIJO_C = 1e-4
ARMIJO_MAX_HALVINGS = 20
DEDUP_FACTOR = 1e-4
WAVE_SIZE = 1024
LOW_ACCEPTANCE = 0.01

KINDS = ("fiber", "boundary", "link", "page")


class SamplingError(RuntimeError):
    pass


class EmptySampleError(SamplingError):
    """The full proposal budget produced no accepted point.

    For real germs this can be honest geometry (the real fiber over y
    may be empty), so it is a distinguished outcome, never a retry."""


class RadiusSearchError(SamplingError):
    """No radius in the ladder passed the rank certification."""

    def __init__(self, message: str, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Radii:
    """Ball radius eps, tube radius eta, binding-tube radius tau.

    The scale separation eta <= eps/10 and tau <= eta/10 is enforced,
    not just suggested; the defaults of :meth:`auto` sit well inside.
    """

    epsilon: float
    eta: float
    tau: float

    def __post_init__(self):
        eps, eta, tau = self.epsilon, self.eta, self.tau
        if not (0 < tau and 0 < eta and 0 < eps):
            raise SamplingError(f"radii must be positive, got {self}")
        if eta > eps / 10 + 1e-15:
            raise SamplingError(f"need eta <= epsilon/10, got eta={eta}, eps={eps}")
        if tau > eta / 10 + 1e-15:
            raise SamplingError(f"need tau <= eta/10, got tau={tau}, eta={eta}")

    @classmethod
    def auto(cls, epsilon: float) -> "Radii":
        eta = epsilon / 20.0
        return cls(epsilon=epsilon, eta=eta, tau=eta / 10.0)


@dataclass
class PointCloud:
    """A finite sample of one target set, with its defining data."""

    points: np.ndarray  # (N, M) float64
    kind: str  # fiber | boundary | link | page
    stage: int
    y: np.ndarray  # regular value for the first-stage components
    radii: Radii
    seed: int
    germ_name: str = ""
    theta: Optional[np.ndarray] = None  # page direction, None otherwise
    residual_eq: float = 0.0  # max |f_I(x) - y| over points
    residual_sphere: float = 0.0  # max | |x| - eps | (sphere-bound kinds)
    saturated: bool = False
    n_proposals: int = 0
    n_converged: int = 0
    note: str = ""

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim_ambient(self) -> int:
        return int(self.points.shape[1])

    # -- serialization ------------------------------------------------------

    MAGIC = b"FCPC"
    VERSION = 1

    def save_binary(self, path) -> None:
        """Little-endian binary: header, y, theta, then float64 rows."""
        pts = np.ascontiguousarray(self.points, dtype="<f8")
        name_b = self.germ_name.encode("utf-8")
        note_b = self.note.encode("utf-8")
        theta = np.zeros(0) if self.theta is None else np.asarray(self.theta)
        head = struct.pack(
            "<4sBBHII Q ddd",
            self.MAGIC,
            self.VERSION,
            KINDS.index(self.kind),
            self.stage,
            pts.shape[1],
            pts.shape[0],
            self.seed & 0xFFFFFFFFFFFFFFFF,
            self.radii.epsilon,
            self.radii.eta,
            self.radii.tau,
        )
        with open(path, "wb") as fh:
            fh.write(head)
            y = np.asarray(self.y, dtype="<f8").ravel()
            fh.write(struct.pack("<I", y.size))
            fh.write(y.tobytes())
            th = np.asarray(theta, dtype="<f8").ravel()
            fh.write(struct.pack("<I", th.size))
            fh.write(th.tobytes())
            fh.write(
                struct.pack(
                    "<ddBQQ",
                    self.residual_eq,
                    self.residual_sphere,
                    1 if self.saturated else 0,
                    self.n_proposals,
                    self.n_converged,
                )
            )
            fh.write(struct.pack("<H", len(name_b)) + name_b)
            fh.write(struct.pack("<H", len(note_b)) + note_b)
            fh.write(pts.tobytes())

    @classmethod
    def load_binary(cls, path) -> "PointCloud":
        with open(path, "rb") as fh:
            data = fh.read()
        off = 0

        def take(fmt):
            nonlocal off
            vals = struct.unpack_from(fmt, data, off)
            off += struct.calcsize(fmt)
            return vals

        magic, version, kind_code, stage_i, m, n, seed, eps, eta, tau = take(
            "<4sBBHII Q ddd"
        )
        if magic != cls.MAGIC:
            raise SamplingError(f"not a point-cloud file (magic {magic!r})")
        if version != cls.VERSION:
            raise SamplingError(f"unsupported cloud version {version}")
        (ny,) = take("<I")
        y = np.frombuffer(data, "<f8", count=ny, offset=off).copy()
        off += 8 * ny
        (nth,) = take("<I")
        theta = np.frombuffer(data, "<f8", count=nth, offset=off).copy()
        off += 8 * nth
        res_eq, res_sph, saturated, n_prop, n_conv = take("<ddBQQ")
        (ln,) = take("<H")
        name = data[off : off + ln].decode("utf-8")
        off += ln
        (ln,) = take("<H")
        note = data[off : off + ln].decode("utf-8")
        off += ln
        pts = np.frombuffer(data, "<f8", count=n * m, offset=off).reshape(n, m).copy()
        return cls(
            points=pts,
            kind=KINDS[kind_code],
            stage=stage_i,
            y=y,
            radii=Radii(eps, eta, tau),
            seed=seed,
            germ_name=name,
            theta=theta if nth else None,
            residual_eq=res_eq,
            residual_sphere=res_sph,
            saturated=bool(saturated),
            n_proposals=n_prop,
            n_converged=n_conv,
            note=note,
        )

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# fiberchi point cloud v1\n")
            fh.write(f"# germ: {self.germ_name}\n")
            fh.write(f"# kind: {self.kind}  stage: {self.stage}  seed: {self.seed}\n")
            fh.write(
                f"# epsilon: {self.radii.epsilon!r}  eta: {self.radii.eta!r}"
                f"  tau: {self.radii.tau!r}\n"
            )
            yv = ",".join(format(v, ".17g") for v in np.asarray(self.y).ravel())
            fh.write(f"# y: {yv}\n")
            fh.write(",".join(f"x{i + 1}" for i in range(self.dim_ambient)) + "\n")
            for row in self.points:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


@dataclass
class OpenBookSample:
    """One page of the boundary open book: direction and its cloud."""

    theta: np.ndarray
    page_cloud: PointCloud
    max_angle_dev: float = 0.0


@dataclass
class ChosenRadii:
    radii: Radii
    diagnostics: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# RNG and proposals
# ---------------------------------------------------------------------------


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for (seed, stream); threads never share one."""
    return np.random.Generator(
        np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF])
    )


def _sphere_points(rng, n: int, m: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((n, m))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    return g * (radius / norms)[:, None]


def _ball_points(rng, n: int, m: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((n, m))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    r = radius * rng.random(n) ** (1.0 / m)
    return g * (r / norms)[:, None]


# ---------------------------------------------------------------------------
# Gauss-Newton projection
# ---------------------------------------------------------------------------


def _newton_project(
    eval_fn: Callable[[np.ndarray], np.ndarray],
    jac_fn: Callable[[np.ndarray], np.ndarray],
    X0: np.ndarray,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
):
    """Project each row of X0 onto {F = 0}; returns (X, converged mask).

    Minimal-norm Gauss-Newton steps dx = -pinv(J) F with Armijo
    backtracking on |F|_2; rows that cannot make progress are dropped.
    """
    X = np.array(X0, dtype=np.float64, copy=True)
    n = X.shape[0]
    status = np.zeros(n, dtype=np.int8)  # 0 active, 1 converged, 2 failed
    for _ in range(max_iter):
        act = status == 0
        if not act.any():
            break
        gidx = np.flatnonzero(act)
        Xa = X[act]
        F = eval_fn(Xa)
        if F.shape[1] == 0:
            status[gidx] = 1
            break
        res = np.abs(F).max(axis=1)
        done = res <= tol
        status[gidx[done]] = 1
        work = ~done
        if not work.any():
            continue
        widx = gidx[work]
        Xw = Xa[work]
        Fw = F[work]
        J = jac_fn(Xw)
        step = -(np.linalg.pinv(J) @ Fw[:, :, None])[:, :, 0]
        base = np.linalg.norm(Fw, axis=1)
        t = np.ones(Xw.shape[0])
        ok = np.zeros(Xw.shape[0], dtype=bool)
        Xnext = Xw.copy()
        for _h in range(ARMIJO_MAX_HALVINGS + 1):
            pend = np.flatnonzero(~ok)
            if pend.size == 0:
                break
            trial = Xw[pend] + t[pend, None] * step[pend]
            tres = np.linalg.norm(eval_fn(trial), axis=1)
            good = tres <= (1.0 - ARMIJO_C * t[pend]) * base[pend]
            Xnext[pend[good]] = trial[good]
            ok[pend[good]] = True
            t[pend[~good]] /= 2.0
        X[widx[ok]] = Xnext[ok]
        status[widx[~ok]] = 2
    status[status == 0] = 2
    return X, status == 1


# ---------------------------------------------------------------------------
# Defining systems
# ---------------------------------------------------------------------------


def _fiber_system(first: PolyMap, y: np.ndarray):
    def ev(X):
        return first.evaluate_batch(X) - y[None, :]

    def ja(X):
        return first.jacobian_batch(X)

    return ev, ja


def _with_sphere(ev0, ja0, eps: float):
    """Append the sphere equation in signed-distance scaling."""

    def ev(X):
        s = ((X * X).sum(axis=1) - eps * eps) / (2.0 * eps)
        return np.concatenate([ev0(X), s[:, None]], axis=1)

    def ja(X):
        base = ja0(X)
        row = (X / eps)[:, None, :]
        return np.concatenate([base, row], axis=1)

    return ev, ja


def _direction_basis(theta: np.ndarray) -> np.ndarray:
    """Orthonormal basis of theta-perp as columns, deterministic.

    Columns 2..k of the Householder reflection sending e1 to (a sign
    of) theta; exactly orthogonal and never degenerate for unit theta.
    """
    k = theta.shape[0]
    if k == 1:
        return np.zeros((1, 0))
    sign = 1.0 if theta[0] >= 0 else -1.0
    v = theta.copy()
    v[0] += sign
    H = np.eye(k) - (2.0 / np.dot(v, v)) * np.outer(v, v)
    return H[:, 1:]


def _page_system(st: StageMaps, y: np.ndarray, eps: float, theta: np.ndarray):
    B = _direction_basis(theta)  # (K-I, K-I-1)

    def ev(X):
        top = st.first.evaluate_batch(X) - y[None, :]
        s = ((X * X).sum(axis=1) - eps * eps) / (2.0 * eps)
        rest = st.rest.evaluate_batch(X) @ B
        return np.concatenate([top, s[:, None], rest], axis=1)

    def ja(X):
        top = st.first.jacobian_batch(X)
        row = (X / eps)[:, None, :]
        rest = np.einsum("kj,nkm->njm", B, st.rest.jacobian_batch(X))
        return np.concatenate([top, row, rest], axis=1)

    return ev, ja


# ---------------------------------------------------------------------------
# Core sampling driver
# ---------------------------------------------------------------------------


def greedy_net(points: np.ndarray, radius: float) -> np.ndarray:
    """Indices of a greedy net: earliest point wins inside each radius.

    Deterministic for a fixed point order.  With a tiny radius this is
    the sampler's duplicate filter; at a few nearest-neighbor spacings
    it evens out density, which is what the estimator needs before
    counting cliques.
    """
    n = points.shape[0]
    if n <= 1:
        return np.arange(n)
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    if pairs.shape[0] == 0:
        return np.arange(n)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    keep = np.ones(n, dtype=bool)
    for i, j in pairs:
        if keep[i] and keep[j]:
            keep[j] = False
    return np.flatnonzero(keep)


def _sample_core(
    f: MapGerm,
    kind: str,
    I: int,
    y: np.ndarray,
    radii: Radii,
    n: int,
    seed: int,
    theta: Optional[np.ndarray] = None,
    budget: Optional[int] = None,
    threads: int = 1,
    wave_size: int = WAVE_SIZE,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    allow_empty: bool = False,
) -> PointCloud:
    M = f.source_dim
    st = stage(f, I)
    eps = radii.epsilon
    if budget is None:
        budget = max(20_000, 20 * n)

    if kind == "fiber":
        ev, ja = _fiber_system(st.first, y)
        propose = lambda rng, k: _ball_points(rng, k, M, eps)  # noqa: E731
    elif kind in ("boundary", "link"):
        ev, ja = _with_sphere(*_fiber_system(st.first, y), eps)
        propose = lambda rng, k: _sphere_points(rng, k, M, eps)  # noqa: E731
    elif kind == "page":
        ev, ja = _page_system(st, y, eps, theta)
        propose = lambda rng, k: _sphere_points(rng, k, M, eps)  # noqa: E731
    else:
        raise SamplingError(f"unknown kind {kind!r}")

    # the wave schedule is fixed up front so it cannot depend on threading
    n_waves = (budget + wave_size - 1) // wave_size if n > 0 else 0
    wave_sizes = [min(wave_size, budget - w * wave_size) for w in range(n_waves)]

    def run_wave(w: int):
        size = wave_sizes[w]
        X0 = propose(rng_stream(seed, w), size)
        X, okm = _newton_project(ev, ja, X0, tol=tol, max_iter=max_iter)
        Xok = X[okm]
        if kind == "fiber":
            Xok = Xok[np.linalg.norm(Xok, axis=1) <= eps]
        elif kind == "page":
            rest = st.rest.evaluate_batch(Xok)
            Xok = Xok[rest @ theta > 0.0]
        return Xok, size, int(okm.sum())

    accepted = np.zeros((0, M))
    proposals = converged = 0
    saturated = False
    zero_streak = 0
    dedup_r = eps * DEDUP_FACTOR
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        w = 0
        while w < n_waves and accepted.shape[0] < n:
            group = list(range(w, min(w + max(1, threads), n_waves)))
            results = (
                list(pool.map(run_wave, group)) if pool else [run_wave(g) for g in group]
            )
            for Xok, size, nconv in results:
                proposals += size
                converged += nconv
                before = accepted.shape[0]
                merged = np.concatenate([accepted, Xok], axis=0)
                accepted = merged[greedy_net(merged, dedup_r)]
                zero_streak = zero_streak + 1 if accepted.shape[0] == before else 0
                if before > 0 and zero_streak >= 3:
                    saturated = True
                    break
                if accepted.shape[0] >= n:
                    break
            if saturated:
                break
            w += len(group)
    finally:
        if pool:
            pool.shutdown(wait=False)

    note = ""
    if n > 0 and accepted.shape[0] == 0:
        if not allow_empty:
            raise EmptySampleError(
                f"{kind} sample at stage {I} produced no points after {proposals} "
                f"proposals; the real target set may be empty at these radii"
            )
        note = f"empty {kind}: no point found in {proposals} proposals"
    if accepted.shape[0] > n:
        accepted = accepted[:n]

    if not note and n > 0 and proposals > 0 and converged / proposals < LOW_ACCEPTANCE:
        note = f"low acceptance rate: {converged}/{proposals} converged"

    if accepted.shape[0]:
        res_eq = float(np.abs(st.first.evaluate_batch(accepted) - y).max())
        if kind == "fiber":
            res_sph = 0.0
        else:
            res_sph = float(np.abs(np.linalg.norm(accepted, axis=1) - eps).max())
    else:
        res_eq = res_sph = 0.0

    return PointCloud(
        points=accepted,
        kind=kind,
        stage=I,
        y=np.array(y, dtype=float),
        radii=radii,
        seed=seed,
        germ_name=f.name or "",
        theta=None if theta is None else np.array(theta, dtype=float),
        residual_eq=res_eq,
        residual_sphere=res_sph,
        saturated=saturated,
        n_proposals=proposals,
        n_converged=converged,
        note=note,
    )


def _check_stage_range(f: MapGerm, I: int) -> None:
    if not 1 <= I <= f.target_dim:
        raise SamplingError(f"stage {I} out of range 1..{f.target_dim}")


def _check_regular_value(y, I: int, eta: float) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.shape != (I,):
        raise SamplingError(f"regular value must have length {I}, got shape {y.shape}")
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        raise SamplingError("regular value must be nonzero (0 is the critical value)")
    if abs(ny - eta) > 1e-9 * max(1.0, eta):
        raise SamplingError(f"|y| = {ny} but the tube radius is eta = {eta}")
    return y


def default_regular_value(I: int, eta: float) -> np.ndarray:
    y = np.zeros(I)
    y[0] = eta
    return y


def sample_fiber(f: MapGerm, I: int, y, radii: Radii, n: int, seed: int, **kw) -> PointCloud:
    """Sample B_eps n f_I^{-1}(y); requires a nonzero y with |y| = eta."""
    _check_stage_range(f, I)
    if n < 1:
        raise SamplingError(f"fiber sampling needs n >= 1, got {n}")
    y = _check_regular_value(y, I, radii.eta)
    return _sample_core(f, "fiber", I, y, radii, n, seed, **kw)


def sample_boundary(f: MapGerm, I: int, y, radii: Radii, n: int, seed: int, **kw) -> PointCloud:
    """Sample S_eps n f_I^{-1}(y), the boundary of the stage-I fiber."""
    _check_stage_range(f, I)
    if n < 0:
        raise SamplingError(f"n must be >= 0, got {n}")
    y = _check_regular_value(y, I, radii.eta)
    return _sample_core(f, "boundary", I, y, radii, n, seed, **kw)


def sample_link(f: MapGerm, I: int, radii: Radii, n: int, seed: int, **kw) -> PointCloud:
    """Sample S_eps n f_I^{-1}(0); an empty result is a valid outcome.

    The surrounding theory assumes the zero locus meets the sphere, but
    a real germ can fail that; an empty cloud with a note reports it."""
    _check_stage_range(f, I)
    if n < 0:
        raise SamplingError(f"n must be >= 0, got {n}")
    return _sample_core(f, "link", I, np.zeros(I), radii, n, seed, allow_empty=True, **kw)


def sample_openbook_page(
    f: MapGerm,
    I: int,
    theta,
    radii: Radii,
    n: int,
    seed: int,
    y=None,
    **kw,
) -> OpenBookSample:
    """Sample the page of the boundary open book in direction theta.

    The page sits inside the stage-I boundary over the regular value y
    (default eta*e1): the K-I trailing components are constrained to the
    ray r*theta, r > 0.  For K-I = 1 this degenerates to picking the
    sign of the single trailing component, matching the two-page case.
    """
    _check_stage_range(f, I)
    kmi = f.target_dim - I
    if kmi < 1:
        raise SamplingError("open-book pages need K - I >= 1")
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape != (kmi,):
        raise SamplingError(f"theta must have length {kmi}, got shape {theta.shape}")
    if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
        raise SamplingError("theta must be a unit vector")
    if y is None:
        y = default_regular_value(I, radii.eta)
    else:
        y = _check_regular_value(y, I, radii.eta)
    cloud = _sample_core(f, "page", I, y, radii, n, seed, theta=theta, **kw)
    if len(cloud):
        rest = stage(f, I).rest.evaluate_batch(cloud.points)
        norms = np.linalg.norm(rest, axis=1)
        along = rest @ theta
        perp = np.sqrt(np.maximum(0.0, norms**2 - along**2))
        dev = float(np.max(perp / np.maximum(norms, 1e-300)))
    else:
        dev = 0.0
    return OpenBookSample(theta=theta, page_cloud=cloud, max_angle_dev=dev)


# ---------------------------------------------------------------------------
# Radius selection and tameness evidence
# ---------------------------------------------------------------------------

EPS_LADDER = (0.5, 0.25, 0.1, 0.05, 0.025, 0.01)


def _stacked_matrix(f: MapGerm, x: np.ndarray) -> np.ndarray:
    return np.vstack([f.jacobian(x), (2.0 * x)[None, :]])


def choose_radii(
    f: MapGerm,
    I: int,
    budget: int = 4000,
    seed: int = 0,
    ladder=EPS_LADDER,
    num_values: int = 8,
    rank_rel_tol: float = 1e-8,
) -> ChosenRadii:
    """Pick (eps, eta) from a descending ladder by rank certification.

    For each ladder rung, eta = eps/20 and ``num_values`` regular values
    with |y| = eta are probed: boundary points of f_I over y are sampled
    and the stacked matrix [df; dg] must reach its maximal rank K+1 at
    every probe.  The budget counts Newton proposals per rung.  The
    minimum singular values of the stacked matrix are reported as
    tameness evidence either way.
    """
    _check_stage_range(f, I)
    if budget < 1000:
        raise SamplingError(f"choose_radii needs a budget >= 1000, got {budget}")
    K = f.target_dim
    maximal = K + 1
    diagnostics = []
    per_value = max(1, budget // num_values)
    for rung, eps in enumerate(ladder):
        radii = Radii.auto(eps)
        dirs = [default_regular_value(I, radii.eta)]
        rng = rng_stream(seed, 900_000 + rung)
        while len(dirs) < num_values:
            u = rng.standard_normal(I)
            nu = np.linalg.norm(u)
            if nu > 1e-12:
                dirs.append(radii.eta * u / nu)
        sigmas = []
        probes = 0
        deficient = 0
        per_y_counts = []
        for vi, y in enumerate(dirs):
            try:
                cloud = _sample_core(
                    f, "boundary", I, y, radii, n=min(50, per_value), seed=seed + 7 * vi,
                    budget=per_value,
                )
            except EmptySampleError:
                per_y_counts.append(0)
                continue
            per_y_counts.append(len(cloud))
            probes += len(cloud)
            for x in cloud.points:
                A = _stacked_matrix(f, x)
                s = np.linalg.svd(A, compute_uv=False)
                sigmas.append(float(s[-1]))
                if numerical_rank(A, rank_rel_tol) < maximal:
                    deficient += 1
        entry = {
            "epsilon": eps,
            "eta": radii.eta,
            "probes": probes,
            "per_value_counts": per_y_counts,
            "rank_deficient": deficient,
            "sigma_min_min": min(sigmas) if sigmas else None,
            "sigma_min_median": float(np.median(sigmas)) if sigmas else None,
            "accepted": False,
            "reason": "",
        }
        if probes == 0:
            entry["reason"] = "no boundary probes converged at this radius"
            diagnostics.append(entry)
            continue
        if deficient:
            entry["reason"] = f"{deficient}/{probes} probes rank-deficient"
            diagnostics.append(entry)
            continue
        entry["accepted"] = True
        diagnostics.append(entry)
        return ChosenRadii(radii=radii, diagnostics=diagnostics)
    raise RadiusSearchError(
        f"no radius certified for stage {I}: every ladder rung failed the "
        "maximal-rank probe; the germ may not be tame at these scales",
        diagnostics,
    )


def tameness_evidence(
    f: MapGerm, radii: Radii, n: int = 200, seed: int = 0, rank_rel_tol: float = 1e-8
) -> dict:
    """Search the shell eps/10 <= |x| <= eps for tameness violations.

    A hit is a point where [df; dg] is rank-deficient, f(x) is away from
    0, and df itself is rank-deficient: evidence that the closure of the
    polar set off V(f) meets the singular set away from the origin.
    Minimization of the two smallest singular values runs from random
    starts; this gathers evidence only, it can never prove tameness.
    """
    from scipy.optimize import minimize

    if n < 100:
        raise SamplingError(f"tameness evidence needs n >= 100 starts, got {n}")
    eps = radii.epsilon
    lo, hi = eps / 10.0, eps
    K = f.target_dim

    def objective(x):
        r = np.linalg.norm(x)
        pen = 0.0
        if r < lo:
            pen = (lo - r) / eps
        elif r > hi:
            pen = (r - hi) / eps
        A = _stacked_matrix(f, x)
        sA = np.linalg.svd(A, compute_uv=False)
        sdf = np.linalg.svd(f.jacobian(x), compute_uv=False)
        return float(sA[-1] + sdf[-1] + 10.0 * pen)

    rng = rng_stream(seed, 777_000)
    starts = _sphere_points(rng, n, f.source_dim, 1.0) * rng.uniform(lo, hi, n)[:, None]
    hits = []
    inclusion_checked = 0
    inclusion_violations = 0
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": 120 * f.source_dim, "xatol": 1e-12,
                                "fatol": 1e-14})
        x = res.x
        r = float(np.linalg.norm(x))
        if not (lo * (1 - 1e-6) <= r <= hi * (1 + 1e-6)):
            continue
        A = _stacked_matrix(f, x)
        df = f.jacobian(x)
        sA = np.linalg.svd(A, compute_uv=False)
        sdf = np.linalg.svd(df, compute_uv=False)
        fval = np.array([float(v) for v in f.evaluate(x)])
        polar_def = sA[-1] <= 1e-6 * max(1.0, sA[0])
        sing_def = sdf[-1] <= 1e-6 * max(1.0, sdf[0])
        off_zero = np.linalg.norm(fval) > 1e-8
        # diagram inclusion: rank df_I < I must force rank df < K
        profile_ranks = []
        for I in range(1, K):
            st = stage(f, I)
            rI = numerical_rank(st.first.jacobian(x), rank_rel_tol)
            profile_ranks.append(rI)
            if rI < I:
                inclusion_checked += 1
                if numerical_rank(df, rank_rel_tol) >= K:
                    inclusion_violations += 1
        if polar_def and sing_def and off_zero:
            hits.append(
                {
                    "x": [float(v) for v in x],
                    "norm": r,
                    "sigma_min_stacked": float(sA[-1]),
                    "sigma_min_df": float(sdf[-1]),
                    "f_norm": float(np.linalg.norm(fval)),
                }
            )
    return {
        "germ": f.name or "",
        "shell": [lo, hi],
        "n_starts": int(n),
        "seed": int(seed),
        "hits": hits,
        "hit_count": len(hits),
        "inclusion_checks": {
            "checked": inclusion_checked,
            "violations": inclusion_violations,
        },
        "verdict_hint": (
            "polar-accumulation-suspected" if hits else "no-evidence-against-tameness"
        ),
    }
