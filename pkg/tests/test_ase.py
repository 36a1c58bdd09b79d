import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import rasesim as rs
from rasesim.ase import weighted_norm
from rasesim.errors import NormGrowthError

from helpers import ase_rhs_reference, rk4_step


def test_post_jump_state_is_uniform(small_density):
    s = rs.post_jump_state(small_density, detection_time=-4.0)
    assert np.all(s.values == 1.0 + 0.0j)
    assert s.t == -4.0
    assert rs.survival_probability(s, small_density) == 1.0


def test_free_evolution_is_pure_phase(small_density):
    g = small_density.grid
    s0 = rs.post_jump_state(small_density)
    traj = rs.evolve_no_jump(s0, small_density, rs.CouplingParams(0.0), dt=2e-3, t_end=2.0)
    expected = np.exp(1j * g.delta * 2.0)[None, :] * np.ones((g.n_z, 1))
    assert np.max(np.abs(traj.final.values - expected)) < 1e-8
    assert np.max(np.abs(np.abs(traj.final.values) - 1.0)) < 1e-10
    assert np.max(np.abs(traj.survival - 1.0)) < 1e-12


def test_kernel_matches_reference_step(small_density):
    rng = np.random.default_rng(7)
    g = small_density.grid
    shape = (g.n_z, g.n_delta)
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    coupling = rs.coupling_for_depth(1.5, small_density)
    state = rs.Amplitude(g, values.copy(), 0.0)
    traj = rs.evolve_no_jump(state, small_density, coupling, dt=1e-3, t_end=1e-3)
    expected = rk4_step(values, lambda v: ase_rhs_reference(v, small_density, coupling), 1e-3)
    assert np.max(np.abs(traj.final.values - expected)) < 1e-12 * np.max(np.abs(expected))


def test_detuning_reflection_symmetry(small_density):
    # conjugating and mirroring delta maps trajectories onto each other
    rng = np.random.default_rng(3)
    g = small_density.grid
    shape = (g.n_z, g.n_delta)
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    coupling = rs.coupling_for_depth(0.8, small_density)
    a = rs.evolve_no_jump(rs.Amplitude(g, values.copy(), 0.0), small_density, coupling,
                          dt=2e-3, t_end=1.0)
    mirrored = np.conj(values[:, ::-1])
    b = rs.evolve_no_jump(rs.Amplitude(g, mirrored, 0.0), small_density, coupling,
                          dt=2e-3, t_end=1.0)
    assert np.max(np.abs(b.final.values - np.conj(a.final.values[:, ::-1]))) < 1e-10


def test_norm_never_increases_per_step(small_density):
    coupling = rs.coupling_for_depth(1.0, small_density)
    traj = rs.evolve_no_jump(rs.post_jump_state(small_density), small_density, coupling,
                             dt=2e-3, t_end=4.0)
    ratios = traj.step_survival[1:] / traj.step_survival[:-1]
    assert np.all(ratios <= 1.0 + 1e-8)


@settings(max_examples=8, deadline=None)
@given(alpha=st.floats(0.05, 5.0))
def test_survival_bracketed_by_single_and_double_rate(small_density, alpha):
    # collective term adds between 0x and 1x the bare decay rate
    # (Cauchy-Schwarz on the coherent sum), so exp(-2 aL t) <= P <= exp(-aL t)
    coupling = rs.coupling_for_depth(alpha, small_density)
    traj = rs.evolve_no_jump(rs.post_jump_state(small_density), small_density, coupling,
                             dt=2e-3, t_end=2.0)
    lo = np.exp(-2 * alpha * (traj.times - traj.times[0]))
    hi = np.exp(-alpha * (traj.times - traj.times[0]))
    assert np.all(traj.survival <= hi * (1 + 1e-9))
    assert np.all(traj.survival >= lo * (1 - 1e-9))


def test_weak_coupling_matches_exponential_oracle(small_density):
    for alpha in (0.01, 0.02):
        curve = rs.survival_curve_for_depth(alpha, small_density, t_end=8.0, dt=2e-3)
        dev = np.max(np.abs(curve.probabilities - rs.weak_coupling_survival(alpha, curve.times)))
        assert dev < 2e-2, f"alpha_l={alpha}: deviation {dev}"


def test_survival_at_reference_depth_below_half(small_density):
    # above this depth a second emission inside the storage window is more
    # likely than not; converged value is 0.3795 (bunching-enhanced decay)
    curve = rs.survival_curve_for_depth(0.2, small_density, t_end=4.0, dt=2e-3)
    p = curve.probabilities[-1]
    assert p < 0.5
    assert math.isclose(p, 0.37947, abs_tol=2e-3)


def test_n_invariance_at_fixed_depth(small_grid):
    curves = []
    for n_atoms in (1e5, 1e7):
        density = rs.gaussian_density(small_grid, n_atoms)
        curves.append(rs.survival_curve_for_depth(0.2, density, t_end=2.0, dt=2e-3))
    assert np.max(np.abs(curves[0].probabilities - curves[1].probabilities)) < 1e-6


def test_survival_probability_validates(small_density, small_grid):
    other = rs.make_grid(31, 31, 5.0)
    s = rs.post_jump_state(small_density)
    with pytest.raises(ValueError, match="different grids"):
        rs.survival_probability(rs.Amplitude(other, np.ones((31, 31), complex), 0.0), small_density)


def test_growth_guard_trips_on_unstable_step(small_density):
    # dt far beyond the RK4 imaginary-axis stability limit
    coupling = rs.coupling_for_depth(0.5, small_density)
    with pytest.raises(NormGrowthError, match="norm grew"):
        rs.evolve_no_jump(rs.post_jump_state(small_density), small_density, coupling,
                          dt=1.0, t_end=8.0)


def test_non_integer_step_count_rejected(small_density):
    coupling = rs.CouplingParams(0.0)
    with pytest.raises(ValueError, match="integer number"):
        rs.evolve_no_jump(rs.post_jump_state(small_density), small_density, coupling,
                          dt=3e-3, t_end=1.0)


class TestDeexcitationDistribution:
    def test_at_detection_equals_density_shape(self, small_density):
        s = rs.post_jump_state(small_density)
        dist = rs.deexcitation_distribution(s, small_density)
        assert np.allclose(dist.values, small_density.values / small_density.n_atoms, rtol=1e-9)

    def test_zero_state_rejected(self, small_density):
        g = small_density.grid
        s = rs.Amplitude(g, np.zeros((g.n_z, g.n_delta), complex), 0.0)
        with pytest.raises(ValueError, match="zero weighted norm"):
            rs.deexcitation_distribution(s, small_density)

    def test_deep_ensemble_concentrates_at_output_face(self, small_density):
        # storage-time snapshot at depth 7.5: marginal peaks at z = L with
        # off-resonant ridges at the far (input) face
        coupling = rs.coupling_for_depth(7.5, small_density)
        traj = rs.evolve_no_jump(rs.post_jump_state(small_density), small_density,
                                 coupling, dt=2e-3, t_end=4.0)
        dist = rs.deexcitation_distribution(traj.final, small_density)
        zm = dist.z_marginal()
        assert np.argmax(zm) == zm.size - 1
        assert zm[-1] > 5 * zm[0]
        back_row = dist.values[0]
        mid = small_density.grid.n_delta // 2
        assert back_row.max() > 2 * back_row[mid]  # ridge beats the resonant trough
        # shaping an ensemble from this snapshot keeps the exit-face peak
        shaped = rs.tailored_density(dist, 1e6)
        assert math.isclose(shaped.quadrature(), 1e6, rel_tol=1e-9)
        assert np.argmax(shaped.spatial_marginal()) == shaped.grid.n_z - 1

    def test_moderate_depth_tilts_toward_output_face(self, small_density):
        coupling = rs.coupling_for_depth(0.75, small_density)
        traj = rs.evolve_no_jump(rs.post_jump_state(small_density), small_density,
                                 coupling, dt=2e-3, t_end=4.0)
        zm = rs.deexcitation_distribution(traj.final, small_density).z_marginal()
        assert np.argmax(zm) == zm.size - 1
        assert np.all(np.diff(zm) > 0)


class TestSurvivalSurface:
    def test_nearly_uncoupled_column_stays_at_one(self, small_density):
        t_grid = np.linspace(0.0, 1.0, 21)
        surf = rs.no_second_emission_surface([1e-9], t_grid, small_density, dt=5e-3)
        assert np.allclose(surf.p_no_jump[0], 1.0, atol=1e-6)
        assert not surf.failures

    def test_rows_nonincreasing_in_time(self, small_density):
        t_grid = np.linspace(0.0, 2.0, 41)
        surf = rs.no_second_emission_surface([0.2, 1.0], t_grid, small_density, dt=5e-3)
        assert np.all(np.diff(surf.p_no_jump, axis=1) <= 1e-12)

    def test_failed_cell_recorded_as_missing(self, small_density, monkeypatch):
        import rasesim.ase as ase_mod

        real = ase_mod.survival_curve_for_depth

        def flaky(alpha_l, *args, **kwargs):
            if alpha_l == 0.5:
                raise rs.SolverError("synthetic fault")
            return real(alpha_l, *args, **kwargs)

        monkeypatch.setattr(ase_mod, "survival_curve_for_depth", flaky)
        t_grid = np.linspace(0.0, 1.0, 21)
        surf = ase_mod.no_second_emission_surface([0.2, 0.5], t_grid, small_density, dt=5e-3)
        assert np.all(np.isfinite(surf.p_no_jump[0]))
        assert np.all(np.isnan(surf.p_no_jump[1]))
        assert list(surf.failures) == [0.5]

    def test_bad_t_grid_rejected(self, small_density):
        with pytest.raises(ValueError, match="start at 0"):
            rs.no_second_emission_surface([0.1], np.linspace(1, 2, 5), small_density)
        with pytest.raises(ValueError, match="positive"):
            rs.no_second_emission_surface([-0.1], np.linspace(0, 1, 5), small_density)


def test_survival_curve_csv(tmp_path, small_density):
    curve = rs.survival_curve_for_depth(0.1, small_density, t_end=0.5, dt=5e-3, sample_every=0.05)
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,p_no_jump"
    assert len(lines) == 1 + curve.times.size
    assert float(lines[1].split(",")[1]) == 1.0
