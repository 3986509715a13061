"""Empirical width estimation for finite snapshot clouds.

Two width notions are estimated: the best sup-residual achievable by
``n``-dimensional linear subspaces through the origin, and the same over
affine subspaces (offset plus linear part).  True minimax widths are hard to
optimize, so each estimator evaluates a small deterministic family of
candidate subspaces (singular-vector and greedy-pivot constructions) and
reports the best, which is always an upper bound on the cloud's width.  A
brute-force oracle for tiny real instances provides independent values for
tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .subspaces import AffineSubspace, orthonormal_columns, set_distance

ORACLE_MAX_DIM = 3
ORACLE_MAX_N = 1
ORACLE_MAX_POINTS = 12


@dataclass(frozen=True)
class SnapshotCloud:
    """A nonempty finite sample of states, stored as rows of ``points``."""

    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError(f"expected a nonempty (count, dim) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud has non-finite entries")
        pts = pts.astype(np.complex128 if np.iscomplexobj(pts) else np.float64)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.points)

    @property
    def radius(self) -> float:
        """Largest sample norm (distance of the cloud to the origin)."""
        return float(np.max(np.linalg.norm(self.points, axis=1)))


@dataclass(frozen=True)
class WidthProfile:
    """Width estimates for n = 0..n_max with the achieving subspaces."""

    ns: np.ndarray
    linear_estimates: np.ndarray
    affine_estimates: np.ndarray
    linear_subspaces: tuple = field(repr=False, default=())
    affine_subspaces: tuple = field(repr=False, default=())

    def __post_init__(self):
        lin = np.asarray(self.linear_estimates, dtype=np.float64)
        aff = np.asarray(self.affine_estimates, dtype=np.float64)
        if np.any(np.diff(lin) > 1e-12) or np.any(np.diff(aff) > 1e-12):
            raise ValueError("width estimates must be non-increasing in n")
        if np.any(aff > lin + 1e-12):
            raise ValueError("affine estimates must not exceed linear estimates")


def _svd_directions(points: np.ndarray) -> np.ndarray:
    """Right singular vectors of the snapshot matrix as ambient columns."""
    _, s, vh = np.linalg.svd(points, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((points.shape[1], 0), dtype=points.dtype)
    rank = int(np.sum(s > 1e-13 * s[0]))
    return vh[:rank].conj().T


def _greedy_directions(points: np.ndarray, offset: np.ndarray, n: int) -> np.ndarray:
    """Greedy sup-residual pivoting: repeatedly absorb the worst point's residual.

    Ties on the maximal residual break toward the smallest point index.
    """
    dim = points.shape[1]
    basis = np.zeros((dim, 0), dtype=points.dtype)
    rel = points - offset[None, :]
    scale = float(np.max(np.linalg.norm(rel, axis=1), initial=0.0))
    for _ in range(n):
        if basis.shape[1]:
            resid = rel - (rel @ basis.conj()) @ basis.T
        else:
            resid = rel
        norms = np.linalg.norm(resid, axis=1)
        pick = int(np.argmax(norms))
        if norms[pick] <= 1e-14 * max(scale, 1.0):
            break
        vec = resid[pick]
        if basis.shape[1]:
            # second projection pass keeps the basis orthonormal to round-off
            vec = vec - basis @ (basis.conj().T @ vec)
        nv = np.linalg.norm(vec)
        if nv <= 1e-14 * max(scale, 1.0):
            break
        basis = np.hstack([basis, (vec / nv)[:, None]])
    return basis


def _as_cloud(cloud) -> SnapshotCloud:
    return cloud if isinstance(cloud, SnapshotCloud) else SnapshotCloud(np.asarray(cloud))


def _check_extra(extra, ambient: int, n: int, require_linear: bool):
    out = []
    for cand in extra or ():
        if not isinstance(cand, AffineSubspace):
            raise TypeError("extra candidates must be AffineSubspace instances")
        if cand.ambient_dim != ambient:
            raise ValueError("extra candidate has mismatched ambient dimension")
        if cand.dim > n:
            continue
        if require_linear and not cand.is_linear:
            raise ValueError("extra candidates for the linear estimate must have zero offset")
        out.append(cand)
    return out


def _best(points: np.ndarray, candidates) -> tuple[AffineSubspace, float]:
    best_w, best_v = None, np.inf
    for w in candidates:
        v = set_distance(points, w)
        if v < best_v - 0.0:  # strict improvement keeps the earliest candidate on ties
            best_w, best_v = w, v
    return best_w, float(best_v)


def linear_width_estimate(
    cloud, n: int, extra_candidates=None
) -> tuple[AffineSubspace, float]:
    """Best sup-residual over candidate n-dimensional linear subspaces.

    Candidates are the top-n singular subspace of the snapshot matrix and a
    greedy sup-residual pivot basis, plus any ``extra_candidates`` (zero
    offset, dimension ≤ n).  The value is an upper bound on the cloud's
    linear width and is non-increasing in ``n`` for each candidate family.
    """
    cloud = _as_cloud(cloud)
    if n < 0:
        raise ValueError("n must be nonnegative")
    pts = cloud.points
    zero = np.zeros(cloud.ambient_dim, dtype=pts.dtype)
    n_eff = min(n, cloud.ambient_dim)
    svd_dirs = _svd_directions(pts)[:, :n_eff]
    candidates = [
        AffineSubspace(zero, svd_dirs),
        AffineSubspace(zero, _greedy_directions(pts, zero, n_eff)),
    ]
    candidates += _check_extra(extra_candidates, cloud.ambient_dim, n, require_linear=True)
    return _best(pts, candidates)


def affine_width_estimate(
    cloud, n: int, extra_candidates=None
) -> tuple[AffineSubspace, float]:
    """Best sup-residual over candidate n-dimensional affine subspaces.

    Offset candidates are the origin (so the affine estimate never exceeds
    the linear one), the cloud mean, and the midpoint of the two points with
    the largest residuals after a mean-centered first fit.  For each offset
    both singular-vector and greedy bases are tried, plus any
    ``extra_candidates`` of dimension ≤ n.
    """
    cloud = _as_cloud(cloud)
    if n < 0:
        raise ValueError("n must be nonnegative")
    pts = cloud.points
    dim = cloud.ambient_dim
    n_eff = min(n, dim)
    zero = np.zeros(dim, dtype=pts.dtype)
    mean = pts.mean(axis=0)

    first_basis = _svd_directions(pts - mean[None, :])[:, :n_eff]
    rel = pts - mean[None, :]
    if first_basis.shape[1]:
        rel = rel - (rel @ first_basis.conj()) @ first_basis.T
    order = np.argsort(-np.linalg.norm(rel, axis=1), kind="stable")
    worst = pts[order[0]]
    second = pts[order[1]] if cloud.count > 1 else pts[order[0]]
    midpoint = (worst + second) / 2.0

    candidates = []
    for offset in (zero, mean, midpoint):
        centered = pts - offset[None, :]
        svd_dirs = _svd_directions(centered)[:, :n_eff]
        candidates.append(AffineSubspace(offset, svd_dirs))
        candidates.append(AffineSubspace(offset, _greedy_directions(pts, offset, n_eff)))
    candidates += _check_extra(extra_candidates, dim, n, require_linear=False)
    return _best(pts, candidates)


def width_profile(cloud, n_max: int, extra_candidates=None) -> WidthProfile:
    """Linear and affine estimates for n = 0..n_max with a cleanup pass.

    The cleanup replaces each entry by the best value among all entries with
    smaller or equal n (keeping the achieving subspace), so reported
    sequences are non-increasing and the affine value never exceeds the
    linear one at the same n.
    """
    cloud = _as_cloud(cloud)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    lin_vals, aff_vals, lin_subs, aff_subs = [], [], [], []
    for n in range(n_max + 1):
        w_lin, v_lin = linear_width_estimate(cloud, n, extra_candidates=lin_subs)
        w_aff, v_aff = affine_width_estimate(
            cloud, n, extra_candidates=list(aff_subs) + [w_lin] + (list(extra_candidates) if extra_candidates else [])
        )
        if lin_vals and lin_vals[-1] < v_lin:
            v_lin, w_lin = lin_vals[-1], lin_subs[-1]
        if aff_vals and aff_vals[-1] < v_aff:
            v_aff, w_aff = aff_vals[-1], aff_subs[-1]
        if v_lin < v_aff:
            v_aff, w_aff = v_lin, w_lin
        lin_vals.append(v_lin)
        aff_vals.append(v_aff)
        lin_subs.append(w_lin)
        aff_subs.append(w_aff)
    return WidthProfile(
        ns=np.arange(n_max + 1),
        linear_estimates=np.array(lin_vals),
        affine_estimates=np.array(aff_vals),
        linear_subspaces=tuple(lin_subs),
        affine_subspaces=tuple(aff_subs),
    )


def _local_min_starts(vals: np.ndarray, max_starts: int) -> np.ndarray:
    """Indices of the best local minima of a sampled curve (flattened grids ok)."""
    vals = np.asarray(vals)
    if vals.ndim == 1:
        interior = np.where(
            (vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])
        )[0] + 1
        idx = np.concatenate([[0], interior, [vals.size - 1]])
    else:
        idx = np.arange(vals.size)
        vals = vals.ravel()
    order = idx[np.argsort(vals[idx], kind="stable")]
    return order[:max_starts]


def _meb_candidates_2d(P: np.ndarray):
    """Candidate centers/radii for the smallest enclosing circle.

    ``P`` has shape (p, ..., 2); candidates are all pair midpoints and all
    triple circumcenters (the true minimum ball is supported by ≤ 3 points,
    so it always appears among these).  Returns centers (C, ..., 2) and
    radii (C, ...), with degenerate triples given infinite radius.
    """
    p = P.shape[0]
    ii, jj = np.triu_indices(p, 1)
    c_pair = (P[ii] + P[jj]) / 2.0
    r_pair = 0.5 * np.linalg.norm(P[ii] - P[jj], axis=-1)
    centers = [c_pair]
    radii = [r_pair]
    if p >= 3:
        from itertools import combinations

        tri = np.array(list(combinations(range(p), 3)))
        a, b, c = P[tri[:, 0]], P[tri[:, 1]], P[tri[:, 2]]
        # circumcenter x solves 2(b-a)·x = |b|²-|a|², 2(c-a)·x = |c|²-|a|²
        m00 = 2.0 * (b[..., 0] - a[..., 0])
        m01 = 2.0 * (b[..., 1] - a[..., 1])
        m10 = 2.0 * (c[..., 0] - a[..., 0])
        m11 = 2.0 * (c[..., 1] - a[..., 1])
        rhs0 = np.sum(b**2 - a**2, axis=-1)
        rhs1 = np.sum(c**2 - a**2, axis=-1)
        det = m00 * m11 - m01 * m10
        scale = np.maximum(np.abs(m00) + np.abs(m01) + np.abs(m10) + np.abs(m11), 1e-300)
        ok = np.abs(det) > 1e-14 * scale**2
        safe = np.where(ok, det, 1.0)
        x0 = (rhs0 * m11 - rhs1 * m01) / safe
        x1 = (m00 * rhs1 - m10 * rhs0) / safe
        c_tri = np.stack([x0, x1], axis=-1)
        r_tri = np.where(ok, np.linalg.norm(c_tri - a, axis=-1), np.inf)
        centers.append(c_tri)
        radii.append(r_tri)
    return np.concatenate(centers, axis=0), np.concatenate(radii, axis=0)


def _meb_radius_2d_batch(P: np.ndarray) -> np.ndarray:
    """Exact smallest-enclosing-circle radii for a batch of 2-d clouds (p, ..., 2)."""
    centers, radii = _meb_candidates_2d(P)
    dists = np.linalg.norm(P[:, None, ...] - centers[None, ...], axis=-1)
    scale = 1.0 + np.max(radii[np.isfinite(radii)], initial=0.0)
    feasible = np.all(dists <= radii[None, ...] + 1e-9 * scale, axis=0)
    return np.min(np.where(feasible, radii, np.inf), axis=0)


def _meb_radius_3d(P: np.ndarray) -> float:
    """Exact smallest enclosing ball radius of ≤ 12 points in 3-space."""
    from itertools import combinations

    p = P.shape[0]
    centers = []
    radii = []
    ii, jj = np.triu_indices(p, 1)
    centers.append((P[ii] + P[jj]) / 2.0)
    radii.append(0.5 * np.linalg.norm(P[ii] - P[jj], axis=-1))
    for size in (3, 4):
        if p < size:
            continue
        for idx in combinations(range(p), size):
            a = P[idx[0]]
            rows = np.array([2.0 * (P[i] - a) for i in idx[1:]])
            rhs = np.array([np.sum(P[i] ** 2 - a**2) for i in idx[1:]])
            if size == 3:
                # circumcenter within the plane of the three points
                u = P[idx[1]] - a
                v = P[idx[2]] - a
                nrm = np.cross(u, v)
                if np.linalg.norm(nrm) < 1e-13 * (np.linalg.norm(u) + np.linalg.norm(v)) ** 2:
                    continue
                rows = np.vstack([rows, nrm])
                rhs = np.append(rhs, nrm @ a)
            if abs(np.linalg.det(rows)) < 1e-13 * max(np.linalg.norm(rows), 1e-300) ** 3:
                continue
            x = np.linalg.solve(rows, rhs)
            centers.append(x[None, :])
            radii.append(np.array([np.linalg.norm(x - a)]))
    centers = np.concatenate(centers, axis=0)
    radii = np.concatenate(radii, axis=0)
    dists = np.linalg.norm(P[:, None, :] - centers[None, :, :], axis=-1)
    scale = 1.0 + float(np.max(radii[np.isfinite(radii)], initial=0.0))
    feasible = np.all(dists <= radii[None, :] + 1e-9 * scale, axis=0)
    return float(np.min(np.where(feasible, radii, np.inf)))


def _chebyshev_radius(points: np.ndarray) -> float:
    """Radius of the smallest ball enclosing the points (dimension ≤ 3, exact)."""
    dim = points.shape[1]
    if dim == 1:
        return float(points.max() - points.min()) / 2.0
    if dim == 2:
        return float(_meb_radius_2d_batch(points))
    return _meb_radius_3d(points)


def _line_residual_2d(points: np.ndarray, affine: bool) -> float:
    def f(thetas):
        normal = np.stack([-np.sin(thetas), np.cos(thetas)], axis=0)
        proj = points @ normal
        if affine:
            return (proj.max(axis=0) - proj.min(axis=0)) / 2.0
        return np.abs(proj).max(axis=0)

    coarse = np.linspace(0.0, np.pi, 8193)
    vals = f(coarse)
    best = float(vals.min())
    cell = coarse[1] - coarse[0]
    for i in _local_min_starts(vals, 10):
        lo, hi = coarse[i] - cell, coarse[i] + cell
        for _ in range(14):
            ts = np.linspace(lo, hi, 33)
            sub = f(ts)
            j = int(np.argmin(sub))
            best = min(best, float(sub[j]))
            w = (hi - lo) / 32.0
            lo, hi = ts[j] - 2 * w, ts[j] + 2 * w
            if w < 1e-13:
                break
    return best


def _direction_grid(thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Unit directions for all (theta, phi) combinations, shape (T*F, 3)."""
    t, f = np.meshgrid(thetas, phis, indexing="ij")
    d = np.stack(
        [np.sin(f) * np.cos(t), np.sin(f) * np.sin(t), np.cos(f)], axis=-1
    )
    return d.reshape(-1, 3)


def _line_values_3d(points: np.ndarray, dirs: np.ndarray, affine: bool) -> np.ndarray:
    """Sup-residual of the cloud to the best line along each direction."""
    if not affine:
        # residual vectors directly; the difference-of-squares form loses
        # half the digits near zero residual
        comp = points @ dirs.T  # (p, D)
        resid = points[:, None, :] - comp[:, :, None] * dirs[None, :, :]
        return np.linalg.norm(resid, axis=-1).max(axis=0)
    # orthonormal frame per direction, then exact minimax center in the plane
    ref = np.where(np.abs(dirs[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(dirs, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(dirs, e1)
    proj = np.stack([points @ e1.T, points @ e2.T], axis=-1)  # (p, D, 2)
    return _meb_radius_2d_batch(proj)


def _line_residual_3d(points: np.ndarray, affine: bool) -> float:
    coarse_t = np.linspace(0.0, np.pi, 73)
    coarse_f = np.linspace(0.0, np.pi, 73)
    dirs = _direction_grid(coarse_t, coarse_f)
    vals = _line_values_3d(points, dirs, affine).reshape(73, 73)
    best = float(vals.min())
    cell_t = coarse_t[1] - coarse_t[0]
    cell_f = coarse_f[1] - coarse_f[0]
    for flat in _local_min_starts(vals, 8):
        i, j = np.unravel_index(int(flat), vals.shape)
        tlo, thi = coarse_t[i] - cell_t, coarse_t[i] + cell_t
        flo, fhi = coarse_f[j] - cell_f, coarse_f[j] + cell_f
        for _ in range(16):
            ts = np.linspace(tlo, thi, 13)
            fs = np.linspace(flo, fhi, 13)
            sub = _line_values_3d(points, _direction_grid(ts, fs), affine).reshape(13, 13)
            a, b = np.unravel_index(int(np.argmin(sub)), sub.shape)
            best = min(best, float(sub[a, b]))
            wt = (thi - tlo) / 12.0
            wf = (fhi - flo) / 12.0
            tlo, thi = ts[a] - 2 * wt, ts[a] + 2 * wt
            flo, fhi = fs[b] - 2 * wf, fs[b] + 2 * wf
            if max(wt, wf) < 1e-11:
                break
    return best


def exact_width_oracle(cloud, n: int, mode: str = "linear") -> float:
    """Brute-force width of a tiny real cloud by refined grid search.

    Only for test provenance: real field, ambient dimension ≤ 3, ``n`` ≤ 1,
    at most 12 points.  The search refines far past the guaranteed 1e-4
    absolute accuracy so that exactly-embeddable clouds report widths below
    1e-8.
    """
    cloud = _as_cloud(cloud)
    if mode not in ("linear", "affine"):
        raise ValueError(f"unknown mode {mode!r}")
    if (
        cloud.is_complex
        or cloud.ambient_dim > ORACLE_MAX_DIM
        or n > ORACLE_MAX_N
        or cloud.count > ORACLE_MAX_POINTS
    ):
        raise ValueError("instance too large for the brute-force width oracle")
    if n < 0:
        raise ValueError("n must be nonnegative")
    pts = cloud.points
    if mode == "linear" and n == 0:
        return cloud.radius
    if mode == "affine" and n == 0:
        return _chebyshev_radius(pts)
    if cloud.ambient_dim == 1:
        return 0.0
    if cloud.ambient_dim == 2:
        return _line_residual_2d(pts, affine=(mode == "affine"))
    return _line_residual_3d(pts, affine=(mode == "affine"))
