"""The regularised surface v over a shape and its critical points.

Two ways of computing v are provided. ``solve_screened`` solves
``lap(v) - v / rho**2 = 0`` with ``v = 1`` on the boundary cells;
``diffuse`` evolves ``dv/dtau = lap(v)`` from ``v = 0`` inside, with the
same Dirichlet data, up to time ``tau``. Both use the 5-point Laplacian
with unit spacing; ``1 - v`` behaves like a smoothed distance surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import expm_multiply
from scipy.special import ive

from .errors import ConvergenceError, StepSizeError, TopologyError
from .grid import EIGHT, RING, ShapeMask

Mode = Literal["screened", "diffusion"]


@dataclass(frozen=True, eq=False)
class Field:
    """v on the full raster (exterior cells carry 1.0) plus solver metadata.

    ``depth`` holds ``1 - v`` computed directly by the solver; near v = 1 it is
    the better-conditioned quantity, so the critical point search uses it.
    """

    mask: ShapeMask
    depth: np.ndarray
    mode: Mode
    rho: float | None = None
    time: float | None = None
    iterations: int = 0

    def __post_init__(self):
        d = np.where(self.mask.interior, np.clip(self.depth, 0.0, 1.0), 0.0)
        d[self.mask.boundary] = 0.0
        d.setflags(write=False)
        object.__setattr__(self, "depth", d)

    @property
    def values(self) -> np.ndarray:
        return 1.0 - self.depth

    def __getitem__(self, cell):
        return float(1.0 - self.depth[cell])


@dataclass(frozen=True)
class CriticalPoint:
    cell: tuple[int, int]
    kind: Literal["elliptic", "hyperbolic"]
    depth: float


@dataclass(frozen=True)
class DiffusionSchedule:
    tau_start: float
    growth_factor: float = 2.0
    tau_max: float | None = None
    target: Literal["single-center", "retain-dumbbell"] = "single-center"
    persistence: int = 3

    def __post_init__(self):
        if self.tau_max is None:
            object.__setattr__(self, "tau_max", 64.0 * self.tau_start)
        if not self.tau_start > 0:
            raise ValueError("tau_start must be positive")
        if self.growth_factor < 1.5:
            raise ValueError("growth_factor must be at least 1.5")
        if self.tau_max < self.tau_start:
            raise ValueError("tau_max must not be below tau_start")
        if self.target not in ("single-center", "retain-dumbbell"):
            raise ValueError(f"unknown target {self.target!r}")

    @classmethod
    def for_mask(cls, mask: ShapeMask, **kw) -> "DiffusionSchedule":
        """Default schedule scaled to the shape's bounding-box extent."""
        rows = np.flatnonzero(mask.interior.any(axis=1))
        cols = np.flatnonzero(mask.interior.any(axis=0))
        extent = max(rows[-1] - rows[0] + 1, cols[-1] - cols[0] + 1)
        return cls(tau_start=extent / 4.0, **kw)

    def taus(self):
        tau = float(self.tau_start)
        while tau <= self.tau_max * (1 + 1e-12):
            yield tau
            tau *= self.growth_factor


# --------------------------------------------------------------------------
# solvers


def _neighbour_sum(a: np.ndarray) -> np.ndarray:
    s = np.zeros_like(a)
    s[1:-1, 1:-1] = a[:-2, 1:-1] + a[2:, 1:-1] + a[1:-1, :-2] + a[1:-1, 2:]
    return s


def screened_residual(v: np.ndarray, mask: ShapeMask, rho: float) -> float:
    """Max-norm of the discrete ``lap(v) - v / rho**2`` over non-boundary cells."""
    r = _neighbour_sum(v) - (4.0 + 1.0 / rho**2) * v
    inner = mask.inner
    return float(np.abs(r[inner]).max()) if inner.any() else 0.0


def solve_screened(
    mask: ShapeMask,
    rho: float,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    omega: float | None = None,
) -> Field:
    """Red-black SOR for the screened Poisson problem with v = 1 on the boundary."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    inner = mask.inner
    v = np.ones(mask.interior.shape)
    if not inner.any():
        return Field(mask, np.zeros_like(v), "screened", rho=rho)
    diag = 4.0 + 1.0 / rho**2
    if omega is None:
        rows = np.flatnonzero(inner.any(axis=1))
        cols = np.flatnonzero(inner.any(axis=0))
        m, n = rows[-1] - rows[0] + 1, cols[-1] - cols[0] + 1
        # Jacobi spectral radius of the bounding box bounds the true one
        mu = 2.0 * (math.cos(math.pi / (m + 1)) + math.cos(math.pi / (n + 1))) / diag
        omega = 2.0 / (1.0 + math.sqrt(max(1.0 - mu * mu, 0.0)))
    rr, cc = np.indices(v.shape)
    colours = [inner & ((rr + cc) % 2 == k) for k in (0, 1)]
    # start from the 1-D-ish guess v = 0 inside; converges from any start
    v[inner] = 0.0
    for it in range(1, max_iter + 1):
        for sel in colours:
            gs = _neighbour_sum(v)[sel] / diag
            v[sel] += omega * (gs - v[sel])
        if it % 10 == 0 and screened_residual(v, mask, rho) <= tol:
            return Field(mask, 1.0 - v, "screened", rho=rho, iterations=it)
    raise ConvergenceError(
        f"screened solve did not reach residual {tol:g} in {max_iter} iterations "
        f"(residual {screened_residual(v, mask, rho):.3g})"
    )


def dirichlet_laplacian(mask: ShapeMask):
    """Sparse 5-point Laplacian on the non-boundary cells, zero Dirichlet data.

    Returns the matrix and the flat raster indices of the unknowns.
    """
    inner = mask.inner
    idx = np.flatnonzero(inner.ravel())
    n = idx.size
    pos = -np.ones(inner.size, dtype=np.int64)
    pos[idx] = np.arange(n)
    w = inner.shape[1]
    rows, cols = [np.arange(n)], [np.arange(n)]
    vals = [np.full(n, -4.0)]
    for off in (-w, w, -1, 1):
        nb = pos[idx + off]
        ok = nb >= 0
        rows.append(np.arange(n)[ok])
        cols.append(nb[ok])
        vals.append(np.ones(ok.sum()))
    A = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return A, idx


def chebyshev_expm(A, u: np.ndarray, tau: float, tol: float = 1e-16) -> np.ndarray:
    """``exp(tau * A) @ u`` for a symmetric operator with spectrum in [-8, 0].

    Uses the Chebyshev expansion of the exponential on the spectral interval,
    whose coefficients are modified Bessel functions: with B = (A + 4I) / 4,
    exp(tau A) = e^{-t} I_0(t) + 2 sum_k e^{-t} I_k(t) T_k(B), t = 4 tau.
    The number of terms grows like sqrt(tau), against tau for Taylor-based
    schemes.
    """
    t = 4.0 * tau
    c0 = ive(0, t)
    out = c0 * u
    if t == 0:
        return out
    prev, cur = u, (A @ u + 4.0 * u) / 4.0
    k = 1
    while True:
        ck = ive(k, t)
        out += 2.0 * ck * cur
        if ck < tol * c0 and k > t:
            break
        if ck < tol * c0 and ck * k < tol:
            break
        prev, cur = cur, (A @ cur + 4.0 * cur) / 2.0 - prev
        k += 1
    return out


# largest predicted decay exponent per expansion; beyond it the result
# would fall under the expansion's absolute error
MAX_DECAY = 10.0


def _chebyshev_chunked(A, u: np.ndarray, span: float) -> np.ndarray:
    """``exp(span * A) @ u`` in pieces short enough to keep relative accuracy.

    The expansion error is absolute (relative to ``|u|``) while late-time
    depth decays like ``exp(-lambda_1 t)``. The Rayleigh quotient of the
    current state bounds lambda_1 from above, so a piece of length
    ``MAX_DECAY / rq`` never shrinks the dominant mode by more than
    ``exp(-MAX_DECAY)``.
    """
    left = span
    while left > 0:
        uu = float(u @ u)
        if uu == 0.0:
            break
        rq = -float(u @ (A @ u)) / uu
        h = left if rq * left <= MAX_DECAY else MAX_DECAY / rq
        u = chebyshev_expm(A, u, h)
        left = left - h if h < left else 0.0
    return u


def diffuse(
    mask: ShapeMask,
    tau: float,
    method: Literal["chebyshev", "expm", "explicit"] = "chebyshev",
    dt: float | None = None,
    start: Field | None = None,
) -> Field:
    """Linear diffusion of v from 0 inside (1 on the boundary) up to time ``tau``.

    The default integrators apply the matrix exponential of the Dirichlet
    Laplacian (``chebyshev`` expansion or scipy's ``expm`` action), so the
    result does not depend on a step count. ``explicit`` is forward Euler
    with step ``dt``. ``start`` continues from an earlier diffusion field of
    the same mask.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    t0 = 0.0
    if start is not None:
        if start.mode != "diffusion" or start.mask is not mask or start.time > tau:
            raise ValueError("start must be an earlier diffusion field of the same mask")
        t0 = start.time
    A, idx = dirichlet_laplacian(mask)
    u = np.ones(idx.size) if start is None else start.depth.ravel()[idx].copy()
    span = tau - t0
    if idx.size and span > 0:
        if method == "chebyshev":
            u = _chebyshev_chunked(A, u, span)
        elif method == "expm":
            u = expm_multiply(A * span, u)
        elif method == "explicit":
            if dt is None:
                dt = 0.2
            if not 0 < dt <= 0.25:
                raise StepSizeError(f"explicit step {dt} is outside the stable range (0, 0.25]")
            steps = max(1, math.ceil(span / dt))
            h = span / steps
            for _ in range(steps):
                u = u + h * (A @ u)
        else:
            raise ValueError(f"unknown method {method!r}")
    depth = np.zeros(mask.interior.size)
    depth[idx] = u
    return Field(mask, depth.reshape(mask.interior.shape), "diffusion", time=float(tau))


# --------------------------------------------------------------------------
# critical points


def _ring_stack(depth: np.ndarray) -> np.ndarray:
    """ring[k] = depth at the k-th 8-neighbour, zero beyond the raster."""
    p = np.pad(depth, 1)
    h, w = depth.shape
    return np.stack([p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w] for dr, dc in RING])


def find_critical_points(field: Field) -> list[CriticalPoint]:
    """Elliptic (local maxima of 1 - v) and hyperbolic (saddle) cells.

    Ties are broken by row-major order; a flat local maximum is reported
    once, at the plateau cell nearest its centroid. Adjacent saddle cells are
    merged into one saddle.
    """
    d = field.depth
    inner = field.mask.inner
    h, w = d.shape
    order = np.arange(d.size).reshape(d.shape)
    ring = _ring_stack(d)
    ring_order = _ring_stack(order.astype(float) + 1.0) - 1.0
    # neighbour "above" the cell in the total order (depth, then earlier index)
    above = (ring > d) | ((ring == d) & (ring_order < order) & (ring_order >= 0))

    out: list[CriticalPoint] = []

    cand = inner & (ring <= d).all(axis=0)
    has_tie = cand & (ring == d).any(axis=0)
    for r, c in np.argwhere(cand & ~has_tie):
        out.append(CriticalPoint((int(r), int(c)), "elliptic", float(d[r, c])))
    seen = np.zeros_like(cand)
    for r, c in np.argwhere(has_tie):
        if seen[r, c]:
            continue
        plateau = _plateau(d, (int(r), int(c)))
        seen[tuple(np.array(plateau).T)] = True
        if all(cand[p] for p in plateau):
            pts = np.array(plateau, dtype=float)
            cen = pts.mean(axis=0)
            k = int(np.argmin(((pts - cen) ** 2).sum(axis=1)))  # first on ties
            out.append(CriticalPoint(plateau[k], "elliptic", float(d[r, c])))

    changes = (above != np.roll(above, 1, axis=0)).sum(axis=0)
    sad = inner & (changes >= 4)
    labels, n = ndimage.label(sad, structure=EIGHT)
    for k in range(1, n + 1):
        pts = np.argwhere(labels == k)
        cen = pts.mean(axis=0)
        j = int(np.argmin(((pts - cen) ** 2).sum(axis=1)))
        r, c = (int(v) for v in pts[j])
        out.append(CriticalPoint((r, c), "hyperbolic", float(d[r, c])))

    out.sort(key=lambda p: (p.kind != "elliptic", -p.depth, p.cell))
    return out


def _plateau(d, seed):
    val = d[seed]
    h, w = d.shape
    stack, seen = [seed], {seed}
    while stack:
        r, c = stack.pop()
        for dr, dc in RING:
            q = (r + dr, c + dc)
            if 0 <= q[0] < h and 0 <= q[1] < w and q not in seen and d[q] == val:
                seen.add(q)
                stack.append(q)
    return sorted(seen)


def count_kinds(points) -> tuple[int, int]:
    ne = sum(p.kind == "elliptic" for p in points)
    return ne, len(points) - ne


# --------------------------------------------------------------------------
# annealing


def anneal_to_center(mask: ShapeMask, schedule: DiffusionSchedule):
    """Diffuse along the schedule until the requested topology is reached.

    Returns ``(field, center)``. With the single-center target the center is
    the unique elliptic point. The retain-dumbbell target also accepts a
    single center, and otherwise stops once two elliptic points and one
    saddle have persisted for ``schedule.persistence`` consecutive steps; the
    returned center is then the saddle.
    """
    field = None
    streak = 0
    crit: list[CriticalPoint] = []
    for tau in schedule.taus():
        field = diffuse(mask, tau, start=field)
        crit = find_critical_points(field)
        ne, nh = count_kinds(crit)
        if ne == 1:
            return field, crit[0]
        if schedule.target == "retain-dumbbell":
            streak = streak + 1 if (ne, nh) == (2, 1) else 0
            if streak >= schedule.persistence:
                return field, next(p for p in crit if p.kind == "hyperbolic")
    names = ", ".join(f"{p.kind}@{p.cell}" for p in crit) or "none"
    raise TopologyError(
        f"unresolved topology at tau_max={schedule.tau_max:g} "
        f"(target {schedule.target}); surviving critical points: {names}",
        crit,
    )


def write_field(field: Field, path) -> None:
    """Text dump: ``FIELD w h`` then row-major v values, one row per line."""
    v = field.values
    h, w = v.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"FIELD {w} {h}\n")
        for row in v:
            fh.write(" ".join(f"{x:.9g}" for x in row) + "\n")


def read_field(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 3 or head[0] != "FIELD":
            raise ValueError(f"{path}: not a FIELD file")
        w, h = int(head[1]), int(head[2])
        vals = np.array(fh.read().split(), dtype=float)
    return vals.reshape(h, w)
