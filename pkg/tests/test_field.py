import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import spsolve

from axisdesc import corpus
from axisdesc.errors import StepSizeError, TopologyError
from axisdesc.field import (
    DiffusionSchedule,
    anneal_to_center,
    count_kinds,
    diffuse,
    dirichlet_laplacian,
    find_critical_points,
    read_field,
    solve_screened,
    write_field,
)
from axisdesc.grid import mask_from_foreground
from axisdesc.shapes import Pose, rasterize
from conftest import rect_mask


def heat_1d(n_inner: int, tau: float) -> np.ndarray:
    """Dense eigen-solution of the 1-D Dirichlet heat problem from u = 1."""
    L = -2 * np.eye(n_inner) + np.eye(n_inner, k=1) + np.eye(n_inner, k=-1)
    lam, V = np.linalg.eigh(L)
    return V @ (np.exp(lam * tau) * (V.T @ np.ones(n_inner)))


@pytest.mark.parametrize("method", ["chebyshev", "expm"])
@pytest.mark.parametrize("tau", [3.0, 200.0, 2500.0])
def test_rectangle_diffusion_is_separable_product(method, tau):
    # the 5-point Laplacian on a box is a Kronecker sum, so the solution from
    # u = 1 is the outer product of two 1-D solutions
    m = rect_mask(32, 64)
    f = diffuse(m, tau, method=method)
    inner = f.depth[m.inner].reshape(30, 62)
    ref = np.outer(heat_1d(30, tau), heat_1d(62, tau))
    assert np.max(np.abs(inner - ref)) < 1e-10 * max(1.0, ref.max()) + 1e-13


def test_late_time_depth_keeps_relative_accuracy():
    # by tau = 20000 the depth is ~1e-100; the error must shrink with it
    m = rect_mask(32, 64)
    for tau in (5000.0, 20000.0):
        inner = diffuse(m, tau).depth[m.inner].reshape(30, 62)
        ref = np.outer(heat_1d(30, tau), heat_1d(62, tau))
        assert np.max(np.abs(inner / ref - 1.0)) < 1e-8


def test_explicit_euler_agrees_with_exponential():
    m = rect_mask(32, 64)
    A, idx = dirichlet_laplacian(m)
    u = np.ones(idx.size)
    for _ in range(2000):  # tau = 200 with dt = 0.1
        u = u + 0.1 * (A @ u)
    ref = diffuse(m, 200.0).depth.ravel()[idx]
    assert np.max(np.abs(u - ref)) < 2e-3 * ref.max()
    ex = diffuse(m, 200.0, method="explicit", dt=0.1).depth.ravel()[idx]
    assert np.allclose(ex, u, rtol=0, atol=1e-12)


def test_explicit_step_guard():
    with pytest.raises(StepSizeError):
        diffuse(rect_mask(8, 8), 5.0, method="explicit", dt=0.3)


def test_continuation_matches_single_run():
    m = mask_from_foreground(rasterize(corpus.vase(), Pose(0.6))[0])
    a = diffuse(m, 40.0)
    b = diffuse(m, 90.0, start=a)
    c = diffuse(m, 90.0)
    assert np.max(np.abs(b.depth - c.depth)) < 1e-12


def test_screened_matches_direct_solve():
    m = mask_from_foreground(rasterize(corpus.hand(), Pose(0.3))[0])
    rho = 6.0
    f = solve_screened(m, rho, tol=1e-11)
    A, idx = dirichlet_laplacian(m)
    # v = 1 - depth; lap(v) - v/rho^2 = 0 with v = 1 on the boundary gives
    # (A - I/rho^2) depth = -1/rho^2 on the unknowns
    n = idx.size
    from scipy import sparse

    depth = spsolve((A - sparse.identity(n) / rho**2).tocsc(), -np.ones(n) / rho**2)
    assert np.max(np.abs(f.depth.ravel()[idx] - depth)) < 1e-8


@pytest.mark.parametrize("a", [8, 16])
@pytest.mark.parametrize("rho", [4.0, 8.0, 32.0])
def test_screened_strip_profile(a, rho):
    # rows at x = -a..a, the outer two are boundary cells with v = 1
    fg = np.zeros((2 * a + 1 + 4, 160 + 4), bool)
    fg[2:-2, 2:-2] = True
    m = mask_from_foreground(fg, pad=2)
    v = solve_screened(m, rho, tol=1e-12).values
    x = np.arange(-a, a + 1)
    exact = np.cosh(x / rho) / math.cosh(a / rho)
    cols = slice(2 + 2 * a + 1, 2 + 160 - 2 * a - 1)
    prof = v[2 : 2 + 2 * a + 1, cols]
    assert np.max(np.abs(prof - exact[:, None]) / exact[:, None]) < 0.02


def test_field_bounds_and_monotone_in_time():
    m = mask_from_foreground(rasterize(corpus.star(5), Pose(0.5))[0])
    prev = None
    for tau in (5.0, 20.0, 80.0):
        d = diffuse(m, tau).depth
        assert d.min() >= 0.0 and d.max() <= 1.0
        assert (d[~m.inner] == 0).all()
        if prev is not None:
            assert (d <= prev + 1e-14).all()
        prev = d


@settings(max_examples=15, deadline=None)
@given(st.integers(6, 20), st.integers(6, 20), st.floats(1.0, 60.0))
def test_diffusion_commutes_with_rot90(h, w, tau):
    fg = np.zeros((h + 4, w + 4), bool)
    fg[2 : 2 + h, 2 : 2 + w] = True
    fg[2 : 2 + h // 2, 2 : 2 + w // 3] = False  # break the symmetry
    m = mask_from_foreground(fg)
    a = np.rot90(diffuse(m, tau).depth)
    b = diffuse(m.rot90(), tau).depth
    assert np.max(np.abs(a - b)) < 1e-10


def test_disk_has_one_center():
    m = mask_from_foreground(rasterize(corpus.disk(), Pose(1.0))[0])
    f = diffuse(m, 0.02 * m.area)
    crit = find_critical_points(f)
    assert count_kinds(crit) == (1, 0)
    r, c = crit[0].cell
    rows, cols = np.nonzero(m.interior)
    assert abs(r - rows.mean()) <= 1 and abs(c - cols.mean()) <= 1


def test_square_plateau_resolves_to_one_cell():
    # an even square has a 2x2 plateau of equal maxima: one elliptic point,
    # at the first centroid-nearest cell
    m = rect_mask(20, 20)
    crit = find_critical_points(diffuse(m, 30.0))
    assert count_kinds(crit) == (1, 0)
    assert crit[0].cell == (11, 11)


def test_dog_bone_keeps_dumbbell_at_small_tau():
    m = mask_from_foreground(rasterize(corpus.dog_bone(), Pose(1.0))[0])
    crit = find_critical_points(diffuse(m, 0.02 * m.area))
    assert count_kinds(crit) == (2, 1)


def test_annealing_failure_reports_survivors():
    m = mask_from_foreground(rasterize(corpus.dog_bone(), Pose(1.0))[0])
    sch = DiffusionSchedule(tau_start=0.02 * m.area, tau_max=0.04 * m.area)
    with pytest.raises(TopologyError) as info:
        anneal_to_center(m, sch)
    assert len(info.value.criticals) == 3


def test_field_dump_round_trip(tmp_path):
    m = rect_mask(5, 6)
    f = diffuse(m, 2.0)
    p = tmp_path / "f.txt"
    write_field(f, p)
    head = p.read_text().splitlines()[0]
    assert head == f"FIELD {m.width} {m.height}"
    assert np.allclose(read_field(p), f.values, atol=1e-9)


def test_schedule_validation():
    with pytest.raises(ValueError):
        DiffusionSchedule(tau_start=0)
    with pytest.raises(ValueError):
        DiffusionSchedule(tau_start=1, growth_factor=1.1)
    s = DiffusionSchedule(tau_start=2.0)
    assert list(s.taus())[-1] == pytest.approx(128.0)


@pytest.mark.slow
def test_elliptic_count_never_grows_along_schedule():
    from axisdesc.pipeline import ExtractParams

    grew = []
    for it in corpus.corpus_items(4, 0):
        m = mask_from_foreground(rasterize(it.silhouette, it.pose)[0])
        f, counts = None, []
        for tau in ExtractParams().schedule(m).taus():
            f = diffuse(m, tau, start=f)
            counts.append(count_kinds(find_critical_points(f))[0])
        if any(b > a for a, b in zip(counts, counts[1:])):
            grew.append((it.shape_id, counts))
    assert not grew, f"elliptic count increased: {grew}"
