import math

import numpy as np
import pytest

from conftest import grid_mesh, single_triangle, sphere_mesh
from oracles import LeapfrogGrid

from decwave import (
    AssemblyError,
    DivergenceError,
    LinearSolveConfig,
    LinearSolveError,
    MaterialField,
    MaterialParams,
    SourceSpec,
    advance,
    assemble_laplacian,
    assign_regions,
    dual_metrics,
    init_state,
    inject_source,
    nonlinear_rhs_L,
    source_signal,
    stable_dt,
    step_explicit,
    step_implicit,
    step_semi_implicit,
)
from decwave.media import Box, RegionSpec
from decwave.mesh import DualMetrics
from decwave.meshgen import grid_vertex
from decwave.solver import BOUNDARY_DIRICHLET_ZERO, EXPLICIT, IMPLICIT, SEMI_IMPLICIT

LINEAR = MaterialParams(c0=1.0, rho0=1.0, delta=0.0, beta=0.0)


def uniform_media(mesh, params=LINEAR):
    return MaterialField.uniform(mesh.n_vertices, params)


def setup(mesh, params=LINEAR):
    metrics = dual_metrics(mesh)
    lap = assemble_laplacian(mesh, metrics)
    media = uniform_media(mesh, params)
    return metrics, lap, media


class TestSourceSignal:
    def test_paper_pulse_center_value(self):
        spec = SourceSpec(vertices=(0,))
        assert source_signal(0.0, spec) == pytest.approx(
            1.0 / math.sqrt(2.0 * math.pi), rel=1e-15
        )
        assert spec.peak == pytest.approx(0.3989422804014327, rel=1e-12)

    def test_gaussian_decay(self):
        spec = SourceSpec(vertices=(0,), amplitude=5.0, sigma=2.0, omega=3.0)
        assert abs(source_signal(1e6, spec)) == 0.0
        assert abs(source_signal(-1e6, spec)) == 0.0
        assert abs(source_signal(40.0, spec)) < 1e-80

    def test_cosine_zero_crossing(self):
        spec = SourceSpec(vertices=(0,))
        assert source_signal(math.pi / 2.0, spec) == pytest.approx(0.0, abs=1e-16)

    def test_validation(self):
        with pytest.raises(ValueError):
            SourceSpec(vertices=())
        with pytest.raises(ValueError):
            SourceSpec(vertices=(0,), sigma=0.0)
        with pytest.raises(ValueError):
            SourceSpec(vertices=(0,), mode="soft")


class TestTemporalSplit:
    def test_zero_history(self):
        mesh = single_triangle()
        media = uniform_media(mesh, MaterialParams(c0=2.0, rho0=1.0))
        state = init_state(mesh, 0.5)
        coef, const = nonlinear_rhs_L(state, media, 0)
        assert coef == 1.0 / (2.0 * 0.5) ** 2
        assert const == 0.0

    def test_linear_two_levels(self):
        mesh = single_triangle()
        media = uniform_media(mesh, MaterialParams(c0=3.0, rho0=1.0))
        state = init_state(mesh, 0.25)
        a, b = 1.7, -0.4
        state.history[0][:] = a
        state.history[1][:] = b
        coef, const = nonlinear_rhs_L(state, media, 1)
        assert const == pytest.approx(-(2.0 * a - b) / (3.0 * 0.25) ** 2, rel=1e-14)

    def test_full_example_hand_evaluated(self):
        # delta=0.01, beta=1, rho0=10000, c0=1, dt=0.1, flat unit history:
        # wave part -(2-1)/0.01 = -100, the other stencils vanish
        mesh = single_triangle()
        media = uniform_media(
            mesh, MaterialParams(c0=1.0, rho0=10000.0, delta=0.01, beta=1.0)
        )
        state = init_state(mesh, 0.1)
        for level in state.history:
            level[:] = 1.0
        coef, const = nonlinear_rhs_L(state, media, 0)
        assert coef == pytest.approx(100.0, rel=1e-12)
        assert const == pytest.approx(-100.0, rel=1e-12)

    def test_scalar_matches_step_reconstruction(self):
        # the explicit step must equal (lap p - const)/coef vertex by vertex
        mesh = grid_mesh(4)
        metrics, lap, _ = setup(mesh)
        media = uniform_media(
            mesh, MaterialParams(c0=2.0, rho0=500.0, delta=0.003, beta=0.8)
        )
        state = init_state(mesh, 0.01)
        rng = np.random.default_rng(3)
        for level in state.history:
            level[:] = rng.normal(size=mesh.n_vertices)
        lap_applied = lap.apply(state.history[0])
        expected = np.empty(mesh.n_vertices)
        for v in range(mesh.n_vertices):
            coef, const = nonlinear_rhs_L(state, media, v)
            expected[v] = (lap_applied[v] - const) / coef
        step_explicit(state, lap, media, mesh)
        assert np.allclose(state.pressure, expected, rtol=1e-13, atol=0.0)


class TestInjectSource:
    def test_far_tail_is_noop(self):
        mesh = single_triangle()
        state = init_state(mesh, 0.1)
        spec = SourceSpec(vertices=(1,), t0=0.0, sigma=1.0)
        inject_source(state, spec, t=1e9)
        assert np.all(state.history[0] == 0.0)

    def test_hard_mode_holds_peak_at_center(self):
        mesh = single_triangle()
        state = init_state(mesh, 0.1)
        state.history[0][:] = 9.9
        spec = SourceSpec(vertices=(0, 2), amplitude=2.0, t0=3.0, sigma=0.5,
                          omega=7.0, mode="hard")
        inject_source(state, spec, t=3.0)
        expected = 2.0 / (0.5 * math.sqrt(2.0 * math.pi))
        assert state.history[0][0] == expected
        assert state.history[0][2] == expected
        assert state.history[0][1] == 9.9

    def test_additive_accumulates(self):
        mesh = single_triangle()
        state = init_state(mesh, 0.1)
        spec = SourceSpec(vertices=(1,))
        inject_source(state, spec, t=0.0)
        once = state.history[0][1]
        inject_source(state, spec, t=0.0)
        assert state.history[0][1] == 2.0 * once

    def test_out_of_range_vertex(self):
        mesh = single_triangle()
        state = init_state(mesh, 0.1)
        with pytest.raises(ValueError):
            inject_source(state, SourceSpec(vertices=(5,)), t=0.0)


class TestInitAndRotation:
    def test_init_zero(self):
        mesh = grid_mesh(3)
        state = init_state(mesh, 1e-3)
        assert state.step_index == 0
        assert len(state.history) == 4
        for level in state.history:
            assert level.shape == (mesh.n_vertices,)
            assert np.all(level == 0.0)

    def test_invalid_args(self):
        mesh = single_triangle()
        with pytest.raises(ValueError):
            init_state(mesh, 0.0)
        with pytest.raises(ValueError):
            init_state(mesh, 0.1, scheme="magic")
        with pytest.raises(ValueError):
            init_state(mesh, 0.1, boundary="absorbing")

    def test_scheme_mismatch_rejected(self):
        mesh = single_triangle()
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, 0.1, scheme=IMPLICIT)
        with pytest.raises(ValueError, match="configured"):
            step_explicit(state, lap, media, mesh)
        with pytest.raises(ValueError, match="configured"):
            step_semi_implicit(state, lap, media, mesh)

    def test_history_rotation_sentinels(self):
        mesh = single_triangle()
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, 0.1)
        for k, level in enumerate(state.history):
            level[:] = float(k + 1)
        old = [level.copy() for level in state.history]
        step_explicit(state, lap, media, mesh)
        assert state.step_index == 1
        for k in range(3):
            assert np.array_equal(state.history[k + 1], old[k])

    @pytest.mark.parametrize("scheme", [EXPLICIT, IMPLICIT, SEMI_IMPLICIT])
    def test_quiescence(self, scheme):
        mesh = grid_mesh(4)
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, 0.05, scheme=scheme)
        for _ in range(20):
            advance(state, lap, media, metrics, mesh)
        assert np.all(state.pressure == 0.0)
        assert state.step_index == 20


class TestExplicitScheme:
    def test_matches_leapfrog_oracle_short_run(self):
        n, c0, dt = 16, 1.0, 0.02
        mesh = grid_mesh(n)
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, dt, boundary=BOUNDARY_DIRICHLET_ZERO)
        oracle = LeapfrogGrid(n, c0=c0, dt=dt)
        spec = SourceSpec(vertices=(grid_vertex(n, 8, 8),), sigma=0.3, omega=12.0,
                          t0=0.5)
        for _ in range(10):
            t = state.time
            inject_source(state, spec, t)
            oracle.inject(8, 8, source_signal(t, spec))
            step_explicit(state, lap, media, mesh)
            oracle.step()
            assert np.abs(state.pressure - oracle.flat()).max() <= 1e-12

    def test_impulse_one_step_hand_expansion(self):
        mesh = grid_mesh(4)
        metrics, lap, media = setup(mesh)
        dt = 0.1
        v0 = grid_vertex(4, 2, 2)
        state = init_state(mesh, dt)
        state.history[0][v0] = 1.0
        step_explicit(state, lap, media, mesh)
        # accumulate the stencil weights straight from the metrics
        wsum = 0.0
        for e in mesh.vertex_edges[v0]:
            wsum += metrics.dual_edge_length[e] / metrics.primal_edge_length[e]
        assert state.pressure[v0] == pytest.approx(
            2.0 - dt**2 * wsum / metrics.dual_area[v0], rel=1e-13
        )
        for e in mesh.vertex_edges[v0]:
            i, j = mesh.edges[e]
            w = int(j if i == v0 else i)
            weight = metrics.dual_edge_length[e] / metrics.primal_edge_length[e]
            assert state.pressure[w] == pytest.approx(
                dt**2 * weight / metrics.dual_area[w], abs=1e-15
            )

    def test_divergence_detected(self):
        mesh = grid_mesh(3)
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, 0.1)
        state.history[0][:] = 1e308
        state.history[1][:] = -1e308
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceError, match="step 1"):
                step_explicit(state, lap, media, mesh)

    def test_dirichlet_clamps_boundary(self):
        n = 6
        mesh = grid_mesh(n)
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, 0.9 * stable_dt(mesh, metrics, media),
                           boundary=BOUNDARY_DIRICHLET_ZERO)
        spec = SourceSpec(vertices=(grid_vertex(n, 3, 3),), sigma=0.2, omega=5.0)
        for _ in range(40):
            inject_source(state, spec, state.time)
            step_explicit(state, lap, media, mesh)
            assert np.all(state.pressure[mesh.vertex_is_boundary] == 0.0)
        assert np.abs(state.pressure).max() > 0.0

    def test_mirror_symmetry_preserved(self):
        n = 8
        mesh = grid_mesh(n)
        metrics, lap, media = setup(mesh)
        dt = 0.9 * stable_dt(mesh, metrics, media)
        state = init_state(mesh, dt)
        center = grid_vertex(n, n // 2, n // 2)
        spec = SourceSpec(vertices=(center,), sigma=0.3, omega=9.0, t0=0.6)
        mirror = np.array(
            [grid_vertex(n, n - (v % (n + 1)), v // (n + 1))
             for v in range(mesh.n_vertices)]
        )
        for _ in range(200):
            inject_source(state, spec, state.time)
            step_explicit(state, lap, media, mesh)
            p = state.pressure
            scale = max(np.abs(p).max(), 1e-300)
            assert np.abs(p - p[mirror]).max() <= 1e-10 * scale


class TestImplicitScheme:
    def test_single_triangle_against_dense_solve(self):
        mesh = single_triangle()
        metrics, lap, media = setup(
            mesh, MaterialParams(c0=2.0, rho0=1.0, delta=0.0, beta=0.0)
        )
        dt = 0.3
        state = init_state(mesh, dt, scheme=IMPLICIT)
        rng = np.random.default_rng(11)
        state.history[0][:] = rng.normal(size=3)
        state.history[1][:] = rng.normal(size=3)

        # dense oracle: build (lap - C) row by row from the metrics
        a = np.zeros((3, 3))
        for v in range(3):
            for e in mesh.vertex_edges[v]:
                i, j = mesh.edges[e]
                w = int(j if i == v else i)
                weight = (
                    metrics.dual_edge_length[e] / metrics.primal_edge_length[e]
                ) / metrics.dual_area[v]
                a[v, w] += weight
                a[v, v] -= weight
        coef = 1.0 / (2.0 * dt) ** 2
        rhs = np.empty(3)
        for v in range(3):
            _, const = nonlinear_rhs_L(state, media, v)
            rhs[v] = const
            a[v, v] -= coef
        expected = np.linalg.solve(a, rhs)

        step_implicit(state, lap, media, metrics, mesh)
        assert np.allclose(state.pressure, expected, rtol=1e-9)

    def test_zero_rhs_zero_solution(self):
        mesh = grid_mesh(4)
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, 0.5, scheme=IMPLICIT)
        step_implicit(state, lap, media, metrics, mesh)
        assert np.all(state.pressure == 0.0)

    def test_iteration_budget_exhausted(self):
        mesh = grid_mesh(6)
        metrics, lap, media = setup(mesh)
        state = init_state(mesh, 0.5, scheme=IMPLICIT)
        rng = np.random.default_rng(5)
        state.history[0][:] = rng.normal(size=mesh.n_vertices)
        cfg = LinearSolveConfig(rel_tol=1e-14, max_iter=1)
        with pytest.raises(LinearSolveError) as err:
            step_implicit(state, lap, media, metrics, mesh, cfg)
        assert err.value.residual > 0.0

    def test_solver_config_validation(self):
        with pytest.raises(ValueError):
            LinearSolveConfig(rel_tol=0.0)
        with pytest.raises(ValueError):
            LinearSolveConfig(rel_tol=1.5)
        with pytest.raises(ValueError):
            LinearSolveConfig(max_iter=0)


class TestSemiImplicitScheme:
    def test_single_triangle_scalar_equation(self):
        mesh = single_triangle()
        metrics, lap, media = setup(mesh)
        dt = 0.4
        state = init_state(mesh, dt, scheme=SEMI_IMPLICIT)
        state.history[0][:] = [1.0, 0.0, 0.0]
        weights = {}
        for v in range(3):
            for e in mesh.vertex_edges[v]:
                i, j = mesh.edges[e]
                w = int(j if i == v else i)
                weights[(v, w)] = (
                    metrics.dual_edge_length[e] / metrics.primal_edge_length[e]
                )
        p1 = np.array([1.0, 0.0, 0.0])
        expected = np.empty(3)
        for v in range(3):
            neighbor = sum(weights[(v, w)] * p1[w] for w in range(3) if w != v)
            wsum = sum(weights[(v, w)] for w in range(3) if w != v)
            p = metrics.dual_area[v]
            # (neighbor - wsum x)/P = (x - 2 p1_v + 0)/dt^2, solved for x
            expected[v] = (neighbor / p + 2.0 * p1[v] / dt**2) / (
                1.0 / dt**2 + wsum / p
            )
        step_semi_implicit(state, lap, media, mesh)
        assert np.allclose(state.pressure, expected, rtol=1e-13)

    def test_schemes_agree_as_dt_shrinks(self):
        mesh = grid_mesh(6)
        metrics, lap, _ = setup(mesh)
        media = uniform_media(
            mesh, MaterialParams(c0=1.0, rho0=10000.0, delta=0.01, beta=1.0)
        )
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        smooth = 0.3 * np.sin(np.pi * x) * np.sin(np.pi * y)
        base = stable_dt(mesh, metrics, media)

        def one_step_outputs(dt):
            fields = []
            for scheme in (EXPLICIT, IMPLICIT, SEMI_IMPLICIT):
                state = init_state(mesh, dt, scheme=scheme)
                for level in state.history:
                    level[:] = smooth
                advance(state, lap, media, metrics, mesh)
                fields.append(state.pressure.copy())
            return fields

        gaps = []
        for dt in (base / 2.0, base / 8.0, base / 32.0):
            e, i, s = one_step_outputs(dt)
            gaps.append(
                (
                    np.abs(e - i).max(),
                    np.abs(e - s).max(),
                    np.abs(i - s).max(),
                )
            )
        for k in range(3):
            assert gaps[0][k] > gaps[1][k] > gaps[2][k]


class TestStableDt:
    def test_square_grid_closed_form(self):
        mesh = grid_mesh(8)
        metrics = dual_metrics(mesh)
        media = uniform_media(mesh, MaterialParams(c0=2.0, rho0=1.0))
        expected = (math.sqrt(2.0) / 2.0) * 0.125 / 2.0
        assert stable_dt(mesh, metrics, media) == pytest.approx(expected, rel=1e-12)

    def test_physical_grid_value(self):
        # 0.01 m spacing at 340 m/s
        mesh = grid_mesh(16, size=0.16)
        metrics = dual_metrics(mesh)
        media = uniform_media(mesh, MaterialParams(c0=340.0, rho0=1.2))
        expected = (math.sqrt(2.0) / 2.0) * 0.01 / 340.0
        got = stable_dt(mesh, metrics, media)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(2.0797e-5, rel=1e-4)

    def test_two_media_bound_set_by_fast_region(self):
        mesh = grid_mesh(8)
        metrics = dual_metrics(mesh)
        slow = MaterialParams(c0=340.0, rho0=1.2)
        fast = MaterialParams(c0=3400.0, rho0=1.2)
        uniform = stable_dt(mesh, metrics, uniform_media(mesh, slow))
        split = assign_regions(
            mesh, RegionSpec(slow, [(Box((0.5, -1, -1), (2, 2, 2)), fast)])
        )
        assert stable_dt(mesh, metrics, split) == pytest.approx(
            uniform / 10.0, rel=1e-12
        )

    def test_uncoupled_vertices_excluded(self):
        mesh = single_triangle()
        metrics = dual_metrics(mesh)
        media = uniform_media(mesh)
        # silence the edges at vertex 2 (synthetic): only edges (0,1) keeps weight
        doctored = DualMetrics(
            primal_edge_length=metrics.primal_edge_length,
            dual_edge_length=np.array(
                [metrics.dual_edge_length[0], 0.0, 0.0]
            ),
            dual_area=metrics.dual_area,
            circumcenters=metrics.circumcenters,
        )
        got = stable_dt(mesh, doctored, media)
        weight = doctored.dual_edge_length[0] / doctored.primal_edge_length[0]
        expected = min(
            math.sqrt(2.0 * metrics.dual_area[v] / weight) for v in (0, 1)
        )
        assert got == pytest.approx(expected, rel=1e-12)

    def test_all_uncoupled_is_error(self):
        mesh = single_triangle()
        metrics = dual_metrics(mesh)
        dead = DualMetrics(
            primal_edge_length=metrics.primal_edge_length,
            dual_edge_length=np.zeros(3),
            dual_area=metrics.dual_area,
            circumcenters=metrics.circumcenters,
        )
        with pytest.raises(AssemblyError, match="coupling"):
            stable_dt(mesh, dead, uniform_media(mesh))

    def test_nonpositive_area_rejected(self):
        mesh = single_triangle()
        metrics = dual_metrics(mesh)
        bad = DualMetrics(
            primal_edge_length=metrics.primal_edge_length,
            dual_edge_length=metrics.dual_edge_length,
            dual_area=np.array([1.0, -0.5, 1.0]),
            circumcenters=metrics.circumcenters,
        )
        with pytest.raises(AssemblyError):
            stable_dt(mesh, bad, uniform_media(mesh))


class TestCflEmpirical:
    """Fast smoke versions; the acceptance suite runs the full 2000 steps."""

    def _run(self, scheme, dt_factor, steps=400):
        n = 16
        mesh = grid_mesh(n)
        metrics, lap, media = setup(mesh)
        bound = stable_dt(mesh, metrics, media)
        state = init_state(mesh, dt_factor * bound, scheme=scheme)
        spec = SourceSpec(
            vertices=(grid_vertex(n, 8, 8),), sigma=0.3, omega=10.0, t0=1.2
        )
        worst = 0.0
        for _ in range(steps):
            inject_source(state, spec, state.time)
            try:
                advance(state, lap, media, metrics, mesh)
            except DivergenceError:
                return math.inf
            worst = max(worst, float(np.abs(state.pressure).max()))
        return worst / spec.peak

    def test_explicit_below_bound_is_bounded(self):
        assert self._run(EXPLICIT, 0.99) <= 10.0

    def test_explicit_above_bound_diverges(self):
        assert self._run(EXPLICIT, 1.05) > 1e3

    @pytest.mark.parametrize("scheme", [IMPLICIT, SEMI_IMPLICIT])
    def test_implicit_family_stable_beyond_bound(self, scheme):
        assert self._run(scheme, 4.0) <= 10.0
