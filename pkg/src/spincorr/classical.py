"""Classical stroboscopic map of two coupled unit spins and its Liouville ensembles.

Phase points are stored as Cartesian 6-vectors ``(Sx, Sy, Sz, Lx, Ly, Lz)`` of
unit spins. Ensembles are ``(n, 6)`` arrays; observables are accumulated on the
fly in chunks so that ensembles of 10^7 trajectories never need to be held in
memory across all kicks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numba
import numpy as np

from spincorr.rng import uniforms

DEFAULT_CHUNK_SIZE = 2**16
RENORM_EVERY = 1000


@dataclass(frozen=True)
class ClassicalParams:
    """Dimensionless map parameters: rotation ``a``, coupling ``gamma``, ratio ``r``."""

    a: float
    gamma: float
    r: float = 1.1

    def __post_init__(self):
        if not self.r >= 1.0:
            raise ValueError(f"spin ratio r must be >= 1, got {self.r}")
        for name in ("a", "gamma", "r"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def angles_to_point(theta_s, phi_s, theta_l, phi_l):
    """Unit 6-vector for spherical angles (radians) of both spins."""
    return np.array([
        math.sin(theta_s) * math.cos(phi_s),
        math.sin(theta_s) * math.sin(phi_s),
        math.cos(theta_s),
        math.sin(theta_l) * math.cos(phi_l),
        math.sin(theta_l) * math.sin(phi_l),
        math.cos(theta_l),
    ])


def point_to_angles(p):
    """Inverse of :func:`angles_to_point`; returns (theta_s, phi_s, theta_l, phi_l)."""
    p = np.asarray(p, dtype=float)
    ts = math.acos(max(-1.0, min(1.0, p[2] / np.linalg.norm(p[:3]))))
    tl = math.acos(max(-1.0, min(1.0, p[5] / np.linalg.norm(p[3:]))))
    return ts, math.atan2(p[1], p[0]), tl, math.atan2(p[4], p[3])


def _split(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 6:
        raise ValueError(f"phase points must have 6 components, got shape {p.shape}")
    return p


def map_step(p, params: ClassicalParams):
    """Advance phase point(s) ``p`` (shape ``(..., 6)``) by one kick period.

    The kick rotates S about x by ``gamma*r*Lx`` and L about x by
    ``gamma*Sx``; both spins are then rotated about z by ``a``.
    """
    p = _split(p)
    sx, sy, sz, lx, ly, lz = np.moveaxis(p, -1, 0)
    a, g, r = params.a, params.gamma, params.r
    ca, sa = math.cos(a), math.sin(a)
    als = g * r * lx
    all_ = g * sx
    cs, ss = np.cos(als), np.sin(als)
    cl, sl = np.cos(all_), np.sin(all_)
    sy1 = sy * cs - sz * ss
    sz1 = sz * cs + sy * ss
    ly1 = ly * cl - lz * sl
    lz1 = lz * cl + ly * sl
    out = np.stack([
        sx * ca - sy1 * sa,
        sy1 * ca + sx * sa,
        sz1,
        lx * ca - ly1 * sa,
        ly1 * ca + lx * sa,
        lz1,
    ], axis=-1)
    return out


def jacobian(p, params: ClassicalParams):
    """Analytic 6x6 Jacobian of :func:`map_step` at a single point ``p``."""
    p = _split(p)
    sx, sy, sz, lx, ly, lz = p
    a, g, r = params.a, params.gamma, params.r
    als = g * r * lx
    all_ = g * sx

    def rx(t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])

    def drx(t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])

    S = np.array([sx, sy, sz])
    L = np.array([lx, ly, lz])
    ex = np.array([1.0, 0.0, 0.0])
    kick = np.zeros((6, 6))
    kick[:3, :3] = rx(als)
    kick[:3, 3:] = np.outer(drx(als) @ S, g * r * ex)
    kick[3:, 3:] = rx(all_)
    kick[3:, :3] = np.outer(drx(all_) @ L, g * ex)
    ca, sa = math.cos(a), math.sin(a)
    rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    rot = np.zeros((6, 6))
    rot[:3, :3] = rz
    rot[3:, 3:] = rz
    return rot @ kick


def tangent_step(p, v, params: ClassicalParams):
    """Propagate tangent vector ``v`` at base point ``p`` through one kick."""
    return jacobian(p, params) @ np.asarray(v, dtype=float)


def renormalize(p):
    """Project both spins of ``p`` back onto the unit spheres."""
    p = np.array(p, dtype=float)
    p[..., :3] /= np.linalg.norm(p[..., :3], axis=-1, keepdims=True)
    p[..., 3:] /= np.linalg.norm(p[..., 3:], axis=-1, keepdims=True)
    return p


def trajectory(p0, params: ClassicalParams, n_kicks):
    """Single trajectory, shape ``(n_kicks + 1, 6)`` including the initial point."""
    out = np.empty((n_kicks + 1, 6))
    out[0] = p = _split(p0).astype(float)
    for n in range(1, n_kicks + 1):
        p = map_step(p, params)
        if n % RENORM_EVERY == 0:
            p = renormalize(p)
        out[n] = p
    return out


# -- compiled kernels ---------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _step_inplace(x, ca, sa, g, gr):
    sx, sy, sz, lx, ly, lz = x[0], x[1], x[2], x[3], x[4], x[5]
    als = gr * lx
    all_ = g * sx
    cs, ss = math.cos(als), math.sin(als)
    cl, sl = math.cos(all_), math.sin(all_)
    sy1 = sy * cs - sz * ss
    sz1 = sz * cs + sy * ss
    ly1 = ly * cl - lz * sl
    lz1 = lz * cl + ly * sl
    x[0] = sx * ca - sy1 * sa
    x[1] = sy1 * ca + sx * sa
    x[2] = sz1
    x[3] = lx * ca - ly1 * sa
    x[4] = ly1 * ca + lx * sa
    x[5] = lz1


@numba.njit(cache=True, nogil=True)
def _tangent_inplace(x, v, ca, sa, g, gr):
    # x is the base point before the kick; v is updated to M v.
    sx, sy, sz, lx, ly, lz = x[0], x[1], x[2], x[3], x[4], x[5]
    als = gr * lx
    all_ = g * sx
    cs, ss = math.cos(als), math.sin(als)
    cl, sl = math.cos(all_), math.sin(all_)
    dals = gr * v[3]
    dall = g * v[0]
    # kicked S: (sx, sy*cs - sz*ss, sz*cs + sy*ss)
    wsx = v[0]
    wsy = v[1] * cs - v[2] * ss + (-sy * ss - sz * cs) * dals
    wsz = v[2] * cs + v[1] * ss + (-sz * ss + sy * cs) * dals
    wlx = v[3]
    wly = v[4] * cl - v[5] * sl + (-ly * sl - lz * cl) * dall
    wlz = v[5] * cl + v[4] * sl + (-lz * sl + ly * cl) * dall
    v[0] = wsx * ca - wsy * sa
    v[1] = wsy * ca + wsx * sa
    v[2] = wsz
    v[3] = wlx * ca - wly * sa
    v[4] = wly * ca + wlx * sa
    v[5] = wlz


@numba.njit(cache=True, nogil=True)
def _renorm_inplace(x):
    ns = math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    nl = math.sqrt(x[3] * x[3] + x[4] * x[4] + x[5] * x[5])
    for i in range(3):
        x[i] /= ns
        x[3 + i] /= nl


@numba.njit(cache=True, nogil=True)
def _lyapunov_kernel(x0, v0, ca, sa, g, gr, n_steps):
    x = x0.copy()
    v = v0.copy()
    total = 0.0
    for n in range(1, n_steps + 1):
        _tangent_inplace(x, v, ca, sa, g, gr)
        _step_inplace(x, ca, sa, g, gr)
        d = 0.0
        for i in range(6):
            d += abs(v[i])
        total += math.log(d)
        for i in range(6):
            v[i] /= d
        if n % 1000 == 0:
            _renorm_inplace(x)
    return total / n_steps


def _default_tangent(p):
    """Fixed initial tangent direction, projected onto both spheres' tangent planes."""
    p = np.asarray(p, dtype=float)
    v = np.array([1.0, -0.7, 0.4, -0.3, 0.9, 0.2])
    v[:3] -= np.dot(v[:3], p[:3]) * p[:3]
    v[3:] -= np.dot(v[3:], p[3:]) * p[3:]
    return v / np.abs(v).sum()


def lyapunov_max(p0, params: ClassicalParams, n_steps=10_000, v0=None):
    """Largest Lyapunov exponent per kick, as the mean of ``ln d(n)``.

    ``d(n)`` is the L1 norm of the tangent vector after each step; the tangent
    vector is rescaled to ``d = 1`` after every step.
    """
    p0 = renormalize(_split(p0))
    v = _default_tangent(p0) if v0 is None else np.asarray(v0, dtype=float)
    v = v / np.abs(v).sum()
    return float(_lyapunov_kernel(p0, v, math.cos(params.a), math.sin(params.a),
                                  params.gamma, params.gamma * params.r, int(n_steps)))


@numba.njit(cache=True, nogil=True)
def _lyapunov_many(points, ca, sa, g, gr, n_steps, out):
    v0 = np.empty(6)
    for k in range(points.shape[0]):
        x = points[k]
        base = np.array([1.0, -0.7, 0.4, -0.3, 0.9, 0.2])
        ds = base[0] * x[0] + base[1] * x[1] + base[2] * x[2]
        dl = base[3] * x[3] + base[4] * x[4] + base[5] * x[5]
        for i in range(3):
            v0[i] = base[i] - ds * x[i]
            v0[3 + i] = base[3 + i] - dl * x[3 + i]
        tot = 0.0
        for i in range(6):
            tot += abs(v0[i])
        for i in range(6):
            v0[i] /= tot
        out[k] = _lyapunov_kernel(x, v0, ca, sa, g, gr, n_steps)


def lyapunov_many(points, params: ClassicalParams, n_steps=10_000):
    """Vectorised :func:`lyapunov_max` over an ``(n, 6)`` array of unit points."""
    pts = np.ascontiguousarray(renormalize(points), dtype=float)
    out = np.empty(len(pts))
    _lyapunov_many(pts, math.cos(params.a), math.sin(params.a), params.gamma,
                   params.gamma * params.r, int(n_steps), out)
    return out


# -- trivial fixed points -----------------------------------------------------

def characteristic_poly(params: ClassicalParams, branch="parallel"):
    """Quartic coefficients (highest power first) for the pole fixed points.

    ``[xi^2 - 2 xi cos a + 1]^2 -/+ xi^2 gamma^2 r sin^2 a``, minus for the
    parallel branch and plus for the anti-parallel one.
    """
    if branch not in ("parallel", "antiparallel"):
        raise ValueError("branch must be 'parallel' or 'antiparallel'")
    c = math.cos(params.a)
    k = params.gamma**2 * params.r * math.sin(params.a) ** 2
    sign = -1.0 if branch == "parallel" else 1.0
    quad = np.array([1.0, -2.0 * c, 1.0])
    poly = np.polymul(quad, quad)
    poly[2] += sign * k
    return poly


def fixed_point_eigs(params: ClassicalParams, branch="parallel"):
    """The four nontrivial tangent-map eigenvalues at the pole fixed points.

    The quartic factors exactly as ``(q - w xi)(q + w xi)`` with
    ``q = xi^2 - 2 xi cos a + 1`` and ``w^2 = -/+ gamma^2 r sin^2 a``; each
    quadratic is solved through its companion matrix. Solving the quartic
    directly would split its double roots at ``gamma = 0`` by ~sqrt(eps).
    """
    poly = characteristic_poly(params, branch)
    k = params.gamma**2 * params.r * math.sin(params.a) ** 2
    w = math.sqrt(k) if branch == "parallel" else 1j * math.sqrt(k)
    c = math.cos(params.a)
    roots = []
    for sgn in (1.0, -1.0):
        b = -(2.0 * c + sgn * w)
        comp = np.array([[-b, -1.0], [1.0, 0.0]], dtype=complex)
        roots.extend(np.linalg.eigvals(comp))
    roots = np.array(roots, dtype=complex)
    resid = np.abs(np.polyval(poly, roots))
    if np.any(resid > 1e-9 * max(1.0, np.abs(poly).max())):
        raise ArithmeticError(f"quartic residual too large: {resid.max():.3g}")
    return roots


def is_stable(params: ClassicalParams, branch="parallel", tol=1e-9):
    return bool(np.all(np.abs(fixed_point_eigs(params, branch)) <= 1.0 + tol))


def stability_threshold(a, r, lo=0.0, hi=10.0, tol=1e-10, branch="parallel"):
    """Bisect for the smallest coupling at which the pole fixed points destabilise."""
    if not is_stable(ClassicalParams(a, lo, r), branch):
        return lo
    if is_stable(ClassicalParams(a, hi, r), branch):
        raise ValueError(f"fixed points still stable at gamma={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_stable(ClassicalParams(a, mid, r), branch):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- matched densities and ensembles -------------------------------------------

def matched_sigma2(j):
    """Width giving the quantum ratio <J_z>/<J_x^2> for spin quantum number j."""
    return 1.0 / (2.0 * math.sqrt(j * (j + 1.0)))


def G(sigma2):
    """Normalised first moment <J_z>/|J| of the matched density about the pole."""
    e = math.exp(-2.0 / sigma2)
    return (1.0 + e) / (1.0 - e) - sigma2


def matched_cdf(z, sigma2):
    """Analytic CDF of the unit z-component under the pole-aligned density."""
    z = np.asarray(z, dtype=float)
    # (exp(-(1-z)/s) - exp(-2/s)) / (1 - exp(-2/s)), factored to avoid cancellation
    f = (np.exp(-(1.0 - z) / sigma2) * -np.expm1(-(1.0 + z) / sigma2)
         / -math.expm1(-2.0 / sigma2))
    return np.clip(f, 0.0, 1.0)


@dataclass(frozen=True)
class MatchedDensitySpec:
    """Density ``C exp[-(1 - Jz)/sigma2]`` about the pole, rotated to (theta0, phi0)."""

    sigma2: float
    theta0: float = 0.0
    phi0: float = 0.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @classmethod
    def for_spin(cls, j, theta0, phi0):
        return cls(matched_sigma2(j), theta0, phi0)


def sample_matched(spec: MatchedDensitySpec, u1, u2):
    """Map two arrays of uniforms in [0, 1) to unit 3-vectors (shape ``(n, 3)``).

    Exact inverse-CDF sampling: ``phi = 2 pi u2`` and
    ``Jz = 1 + sigma2 ln(1 - u1 (1 - exp(-2/sigma2)))``, followed by a rigid
    rotation by theta0 about y and phi0 about z.
    """
    s2 = spec.sigma2
    u1 = np.asarray(u1, dtype=float)
    z = 1.0 + s2 * np.log1p(u1 * math.expm1(-2.0 / s2))
    z = np.clip(z, -1.0, 1.0)
    rho = np.sqrt(np.maximum(0.0, (1.0 - z) * (1.0 + z)))
    phi = 2.0 * math.pi * np.asarray(u2, dtype=float)
    x = rho * np.cos(phi)
    y = rho * np.sin(phi)
    ct, st = math.cos(spec.theta0), math.sin(spec.theta0)
    cp, sp = math.cos(spec.phi0), math.sin(spec.phi0)
    # rotate about y by theta0
    x1 = x * ct + z * st
    z1 = -x * st + z * ct
    # rotate about z by phi0
    return np.stack([x1 * cp - y * sp, x1 * sp + y * cp, z1], axis=-1)


def sample_uniform_sphere(u1, u2):
    """Uniform measure on the unit sphere from two uniform arrays."""
    z = 2.0 * np.asarray(u1) - 1.0
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * np.asarray(u2)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


@dataclass
class Ensemble:
    """Equal-weight trajectory ensemble, reproducible from ``master_seed``.

    Points are generated lazily per chunk from counter-based streams, so a
    chunk's contents depend only on ``(master_seed, trajectory index)``.
    """

    spec_s: MatchedDensitySpec
    spec_l: MatchedDensitySpec
    n_traj: int
    master_seed: int = 0
    chunk_size: int = DEFAULT_CHUNK_SIZE
    _points: np.ndarray | None = field(default=None, repr=False)

    def chunk_bounds(self):
        return [(i, min(i + self.chunk_size, self.n_traj))
                for i in range(0, self.n_traj, self.chunk_size)]

    def initial_chunk(self, start, stop):
        idx = np.arange(start, stop, dtype=np.uint64)
        u = uniforms(self.master_seed, idx, 4)
        out = np.empty((stop - start, 6))
        out[:, :3] = sample_matched(self.spec_s, u[0], u[1])
        out[:, 3:] = sample_matched(self.spec_l, u[2], u[3])
        return out

    @property
    def points(self):
        """All initial points, shape ``(n_traj, 6)`` (materialised on demand)."""
        if self._points is None:
            self._points = np.concatenate(
                [self.initial_chunk(a, b) for a, b in self.chunk_bounds()]
            ) if self.n_traj else np.empty((0, 6))
        return self._points


def make_ensemble(s, l, angles, n_traj, master_seed=0, chunk_size=DEFAULT_CHUNK_SIZE):
    """Matched ensemble for quantum numbers ``(s, l)`` centred on ``angles`` (radians)."""
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    ts, ps, tl, pl = angles
    return Ensemble(MatchedDensitySpec.for_spin(s, ts, ps),
                    MatchedDensitySpec.for_spin(l, tl, pl),
                    int(n_traj), int(master_seed), int(chunk_size))


def evolve_points(points, params: ClassicalParams, n_kicks):
    """Advance every row of an ``(n, 6)`` array by ``n_kicks`` map steps."""
    pts = np.array(points, dtype=float, order="C")
    _evolve_kernel(pts, math.cos(params.a), math.sin(params.a), params.gamma,
                   params.gamma * params.r, int(n_kicks))
    return pts


@numba.njit(cache=True, nogil=True)
def _evolve_kernel(pts, ca, sa, g, gr, n_kicks):
    for k in range(pts.shape[0]):
        x = pts[k]
        for n in range(1, n_kicks + 1):
            _step_inplace(x, ca, sa, g, gr)
            if n % 1000 == 0:
                _renorm_inplace(x)


@numba.njit(cache=True, nogil=True)
def _bin_index(v, mag, j, nbins):
    # bins [m - 1/2, m + 1/2] with m = j - k; edge values go to the lower m,
    # overflow beyond |m| = j is folded into the edge bins
    k = math.floor(j - v * mag + 0.5)
    if k < 0:
        k = 0
    if k > nbins - 1:
        k = nbins - 1
    return int(k)


@numba.njit(cache=True, nogil=True)
def _observe_kernel(pts, ca, sa, g, gr, n_kicks, mag_s, mag_l, s, l,
                    sums, hist_l, hist_j):
    nl = hist_l.shape[1]
    nj = hist_j.shape[1]
    for k in range(pts.shape[0]):
        x = pts[k]
        for n in range(n_kicks + 1):
            if n > 0:
                _step_inplace(x, ca, sa, g, gr)
                if n % 1000 == 0:
                    _renorm_inplace(x)
            for i in range(6):
                sums[n, i] += x[i]
            hist_l[n, _bin_index(x[5], mag_l, l, nl)] += 1
            jz = x[2] * mag_s + x[5] * mag_l
            hist_j[n, _bin_index(jz, 1.0, s + l, nj)] += 1


@dataclass
class EnsembleObservables:
    """Per-kick ensemble statistics.

    ``mean`` holds the unit-vector ensemble means, shape ``(n_kicks + 1, 6)``;
    ``hist_lz`` and ``hist_jz`` hold bin counts over m descending from the top.
    """

    n_traj: int
    mean: np.ndarray
    hist_lz: np.ndarray
    hist_jz: np.ndarray

    @property
    def p_lz(self):
        return self.hist_lz / self.n_traj

    @property
    def p_jz(self):
        return self.hist_jz / self.n_traj


def _observe_chunk(ens: Ensemble, bounds, params, n_kicks, s, l):
    a, b = bounds
    pts = np.ascontiguousarray(ens.initial_chunk(a, b))
    nl = int(round(2 * l + 1))
    nj = int(round(2 * (s + l) + 1))
    sums = np.zeros((n_kicks + 1, 6))
    hl = np.zeros((n_kicks + 1, nl), dtype=np.int64)
    hj = np.zeros((n_kicks + 1, nj), dtype=np.int64)
    _observe_kernel(pts, math.cos(params.a), math.sin(params.a), params.gamma,
                    params.gamma * params.r, int(n_kicks),
                    math.sqrt(s * (s + 1.0)), math.sqrt(l * (l + 1.0)),
                    float(s), float(l), sums, hl, hj)
    return sums, hl, hj


def observe_ensemble(ens: Ensemble, params: ClassicalParams, n_kicks, s, l, workers=1):
    """Evolve the ensemble chunk by chunk and collect per-kick statistics.

    Chunk partial sums are merged in chunk order, so the result is bit-stable
    for a fixed chunk size and independent of ``workers``.
    """
    bounds = ens.chunk_bounds()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda bd: _observe_chunk(ens, bd, params, n_kicks, s, l), bounds))
    else:
        parts = [_observe_chunk(ens, bd, params, n_kicks, s, l) for bd in bounds]
    sums = np.zeros((n_kicks + 1, 6))
    hl = np.zeros_like(parts[0][1])
    hj = np.zeros_like(parts[0][2])
    for ps, pl, pj in parts:
        sums += ps
        hl += pl
        hj += pj
    return EnsembleObservables(ens.n_traj, sums / ens.n_traj, hl, hj)


def evolve_ensemble(ens: Ensemble, params: ClassicalParams, n_kicks):
    """Initial points of ``ens`` advanced ``n_kicks`` steps, shape ``(n_traj, 6)``."""
    return evolve_points(ens.points, params, n_kicks)


def ensemble_mean_L(points, l):
    """Ensemble mean of L in absolute units (scaled by sqrt(l(l+1)))."""
    pts = np.asarray(points, dtype=float)
    return pts[:, 3:].mean(axis=0) * math.sqrt(l * (l + 1.0))


def _bin_counts(values, j):
    n = int(round(2 * j + 1))
    k = np.floor(j - np.asarray(values, dtype=float) + 0.5)
    idx = np.clip(k, 0, n - 1).astype(np.int64)
    return np.bincount(idx, minlength=n)


def binned_marginal_Lz(points, l):
    """Classical L_z marginal in unit-width bins centred on m_l = l, ..., -l."""
    pts = np.asarray(points, dtype=float)
    counts = _bin_counts(pts[:, 5] * math.sqrt(l * (l + 1.0)), l)
    return counts / len(pts)


def binned_marginal_Jz(points, s, l):
    """Classical J_z = S_z + L_z marginal in unit bins centred on m_j = s+l, ..., -(s+l)."""
    pts = np.asarray(points, dtype=float)
    jz = pts[:, 2] * math.sqrt(s * (s + 1.0)) + pts[:, 5] * math.sqrt(l * (l + 1.0))
    counts = _bin_counts(jz, s + l)
    return counts / len(pts)


def vector_model_moment(j, m):
    """<J_x^m> for the delta-ring (vector model) density with |J| = sqrt(j(j+1))."""
    if m < 0 or int(m) != m:
        raise ValueError("moment order must be a non-negative integer")
    m = int(m)
    if m % 2:
        return 0.0
    mag2 = j * (j + 1.0)
    sin2 = 1.0 - j * j / mag2
    # <cos^m phi> over a uniform azimuth = C(m, m/2) / 2^m
    return math.comb(m, m // 2) / 2.0**m * (mag2 * sin2) ** (m // 2)
