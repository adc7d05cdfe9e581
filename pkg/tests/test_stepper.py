import logging
from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg
from conftest import bump_states, isolated, with_grid, without_reactions

from sirgate.config import (
    CrossDiffusion,
    LockdownSignal,
    SigmaProfile,
    TransferLosses,
    configure_for_testing,
    reference_config,
)
from sirgate.core.coefficients import diffusion_field
from sirgate.core.fvm import assemble_diffusion, interface_closure
from sirgate.core.policy import LockdownLedger
from sirgate.core.reaction import ReactionInput, exchange_eval, reaction_eval
from sirgate.core.state import InterfaceMode, RegionState
from sirgate.core.stepper import (
    ClampStats,
    RegionCoefficients,
    _split_losses,
    clamp_negatives,
    lockdown_levels,
    plan_step,
    run_simulation,
    step_coupled,
    step_region,
    uniform_initial_states,
)
from sirgate.errors import PositivityViolationError, SimulationStepError


def timing(cfg, *, dt, t_final, stride=None):
    numerics = replace(cfg.numerics, output_stride=stride or max(1, round(t_final / dt)))
    return replace(cfg, dt=dt, t_final=t_final, numerics=numerics)


def region_mass(state: RegionState, dx: float) -> np.ndarray:
    return state.stack().sum(axis=1) * dx


def test_zero_rates_leave_the_state_unchanged(small_cfg):
    cfg = isolated(without_reactions(small_cfg), sigma_scale=0.0)
    state1, state2 = bump_states(cfg)
    new1, new2, interface1, interface2 = step_coupled(state1, state2, cfg, 0.0)
    np.testing.assert_array_equal(new1.stack(), state1.stack())
    np.testing.assert_array_equal(new2.stack(), state2.stack())
    assert new1.time == pytest.approx(cfg.dt)
    assert interface1.mode is InterfaceMode.NEUMANN_CLOSED
    assert interface2.alpha_value == 0.0


def test_pure_decay_of_infected(small_cfg):
    cfg = isolated(without_reactions(small_cfg), sigma_scale=0.0)
    cfg = timing(replace(cfg, params=replace(cfg.params, mu_i=0.13)), dt=0.0125, t_final=2.0)
    state1 = RegionState.uniform(16, 0.0, 1.0, 0.0)
    state2 = RegionState.uniform(16, 0.0, 0.0, 0.0)
    new1 = step_region(1, state1, state2, cfg, 0.0)
    np.testing.assert_allclose(new1.i, 0.998375, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(new1.s, 0.0)


def test_zero_horizon_records_only_the_initial_frame(small_cfg):
    record = run_simulation(replace(small_cfg, t_final=0.0))
    assert len(record) == 1
    assert record.frames[0].t == 0.0
    np.testing.assert_array_equal(record.frames[0].state1.s, 0.8)
    assert record.lockdown_days == 0.0


def test_frames_follow_the_output_stride(small_cfg):
    record = run_simulation(small_cfg)
    np.testing.assert_allclose(record.times, np.arange(11) * 0.2)
    assert all(frame.state1.n_cells == 16 for frame in record.frames)


def test_last_step_is_always_recorded(small_cfg):
    cfg = replace(small_cfg, numerics=replace(small_cfg.numerics, output_stride=3))
    record = run_simulation(cfg)
    assert record.times[-1] == pytest.approx(2.0)
    assert len(record) == 1 + 13 + 1


def test_runs_are_deterministic(small_cfg):
    first, second = run_simulation(small_cfg), run_simulation(small_cfg)
    for a, b in zip(first.frames, second.frames, strict=True):
        np.testing.assert_array_equal(a.state1.stack(), b.state1.stack())
        np.testing.assert_array_equal(a.state2.stack(), b.state2.stack())
        assert a.mode is b.mode
    assert first.lockdown_days == second.lockdown_days


def test_positivity_at_full_resolution():
    cfg = timing(reference_config(), dt=0.0125, t_final=5.0, stride=80)
    record = run_simulation(cfg)
    for frame in record.frames:
        assert frame.state1.min_value() >= 0.0
        assert frame.state2.min_value() >= 0.0


def test_mass_is_conserved_without_reactions_and_closed_boundaries(small_cfg):
    cfg = isolated(without_reactions(small_cfg), sigma_scale=0.01)
    cfg = timing(cfg, dt=0.05, t_final=500.0)
    state1, state2 = bump_states(cfg)
    record = run_simulation(cfg, initial_states=(state1, state2))
    assert cfg.n_steps == 10000
    dx = cfg.grid.dx
    final = record.frames[-1]
    for before, after in ((state1, final.state1), (state2, final.state2)):
        np.testing.assert_allclose(region_mass(after, dx), region_mass(before, dx), rtol=1e-10)
    assert not np.allclose(final.state1.s, state1.s)


def test_max_norm_does_not_grow_for_large_steps(small_cfg):
    cfg = isolated(without_reactions(small_cfg), sigma_scale=1.0, profile=SigmaProfile.CONSTANT)
    cfg = timing(cfg, dt=1.0, t_final=10.0, stride=1)
    record = run_simulation(cfg, initial_states=bump_states(cfg))
    peaks = [max(f.state1.max_value(), f.state2.max_value()) for f in record.frames]
    assert all(b <= a + 1e-14 for a, b in zip(peaks, peaks[1:], strict=False))
    assert min(min(f.state1.min_value(), f.state2.min_value()) for f in record.frames) >= 0.0


def _delta_run(cfg, dt):
    cfg = timing(cfg, dt=dt, t_final=0.5)
    n = cfg.grid.n_cells_per_region
    delta = np.zeros(n)
    delta[3] = 1.0 / cfg.grid.dx
    start = (RegionState(delta, np.zeros(n), np.zeros(n), 0.0), RegionState.uniform(n, 0.0, 0.0, 0.0))
    return run_simulation(cfg, initial_states=start).frames[-1].state1.s


def test_delta_spreads_like_the_matrix_exponential(small_cfg):
    cfg = isolated(without_reactions(with_grid(small_cfg, 8)), sigma_scale=0.05)
    k = assemble_diffusion(cfg.grid, diffusion_field(cfg, 1), 0.0, 1).to_dense()
    u0 = np.zeros(8)
    u0[3] = 8.0
    exact = scipy.linalg.expm(-0.5 * k) @ u0

    coarse, fine = _delta_run(cfg, 0.005), _delta_run(cfg, 0.0025)
    error_coarse = np.max(np.abs(coarse - exact))
    error_fine = np.max(np.abs(fine - exact))
    assert error_coarse < 0.05 * u0.max()
    assert 1.6 < error_coarse / error_fine < 2.4
    assert np.sum(fine) == pytest.approx(np.sum(u0), rel=1e-12)


def _manufactured_cfg(small_cfg, n):
    return isolated(without_reactions(with_grid(small_cfg, n)), sigma_scale=1.0, profile=SigmaProfile.CONSTANT)


def _shape(region: int, x: np.ndarray) -> np.ndarray:
    if region == 1:
        return np.sin(np.pi * x / 2.0)
    return np.sin(np.pi * (2.0 - x) / 2.0)


def _max_error(record, exact_fn):
    cfg = record.config
    final = record.frames[-1]
    return max(
        np.max(np.abs(final.state(r).stack() - exact_fn(r, cfg.grid.cell_centers(r), final.t)))
        for r in (1, 2)
    )


def test_spatial_convergence_is_second_order(small_cfg):
    def source(region, t, x):
        return np.tile((np.pi / 2.0) ** 2 * _shape(region, x), (3, 1))

    def exact(region, x, t):
        return _shape(region, x)

    errors = []
    for n in (20, 40):
        cfg = timing(_manufactured_cfg(small_cfg, n), dt=0.05, t_final=20.0)
        zero = RegionState.uniform(n, 0.0, 0.0, 0.0)
        errors.append(_max_error(run_simulation(cfg, source=source, initial_states=(zero, zero)), exact))
    assert 3.4 <= errors[0] / errors[1] <= 4.6


def test_temporal_convergence_is_first_order(small_cfg):
    def source(region, t, x):
        return np.tile(np.exp(-t) * (np.pi**2 / 4.0 - 1.0) * _shape(region, x), (3, 1))

    base = _manufactured_cfg(small_cfg, 20)
    start = tuple(
        RegionState.from_stack(np.tile(_shape(r, base.grid.cell_centers(r)), (3, 1)), 0.0) for r in (1, 2)
    )

    def final_fields(dt):
        record = run_simulation(timing(base, dt=dt, t_final=1.0), source=source, initial_states=start)
        return np.concatenate([record.frames[-1].state1.stack(), record.frames[-1].state2.stack()])

    reference = final_fields(0.05 / 64)
    errors = [np.max(np.abs(final_fields(dt) - reference)) for dt in (0.05, 0.025)]
    assert 1.7 <= errors[0] / errors[1] <= 2.3


def test_uniform_regions_follow_the_reaction_recurrence(small_cfg):
    cfg = timing(small_cfg, dt=0.05, t_final=5.0)
    cfg = replace(cfg, policy=replace(cfg.policy, lockdown_trigger=0.0))
    coefficients = RegionCoefficients.from_config(cfg)
    ledger = LockdownLedger(dt=cfg.dt)
    state1, state2 = uniform_initial_states(cfg)

    u1 = np.array(cfg.initial.triple(1))
    u2 = np.array(cfg.initial.triple(2))
    lam1, lam2 = cfg.params.lambda_1, cfg.params.lambda_2
    n1 = cfg.initial.population_scale * u1.sum()
    n2 = cfg.initial.population_scale * u2.sum()
    for step in range(100):
        t = step * cfg.dt
        state1, state2, _, _ = step_coupled(state1, state2, cfg, t, ledger=ledger, coefficients=coefficients)
        f1 = np.array(reaction_eval(ReactionInput(tuple(u1), tuple(u2), n1), cfg.params, 1))
        new1 = u1 + cfg.dt * (f1 + lam2 * u2 - lam1 * u1)
        f2 = np.array(reaction_eval(ReactionInput(tuple(u2), tuple(new1), n2), cfg.params, 2))
        u2 = u2 + cfg.dt * (f2 + lam1 * new1 - lam2 * u2)
        u1 = new1

    np.testing.assert_allclose(state1.stack(), np.tile(u1[:, None], (1, 16)), rtol=1e-8, atol=1e-14)
    np.testing.assert_allclose(state2.stack(), np.tile(u2[:, None], (1, 16)), rtol=1e-8, atol=1e-14)
    assert ledger.lockdown_days == pytest.approx(5.0)


def test_extra_coupling_sweeps_change_a_step_at_second_order(small_cfg):
    def sweep_gap(dt):
        cfg = timing(small_cfg, dt=dt, t_final=2.0)
        state1, state2 = bump_states(cfg)
        one = step_coupled(state1, state2, cfg, 0.0)
        many = step_coupled(state1, state2, replace(cfg, coupling_sweeps=10), 0.0)
        return max(np.max(np.abs(one[k].stack() - many[k].stack())) for k in (0, 1))

    coarse, fine = sweep_gap(0.01), sweep_gap(0.005)
    assert 0.0 < fine < 0.4 * coarse


def test_explicit_transfer_losses_run(small_cfg):
    cfg = timing(small_cfg, dt=0.0125, t_final=1.0, stride=8)
    cfg = replace(cfg, numerics=replace(cfg.numerics, transfer_losses=TransferLosses.EXPLICIT))
    record = run_simulation(cfg, initial_states=bump_states(cfg))
    final = record.frames[-1]
    assert np.all(np.isfinite(final.state1.stack()))
    assert final.state2.min_value() >= 0.0


def test_clamp_negatives():
    cfg = configure_for_testing()
    stats = ClampStats()
    raw = np.array([[1.0, -1e-12], [0.5, 0.5], [0.0, 0.0]])
    clamped = clamp_negatives(raw, 1, cfg, stats)
    assert clamped[0, 1] == 0.0
    assert raw[0, 1] == -1e-12
    assert stats.count == 1
    assert stats.max_clamp == pytest.approx(1e-12)
    assert RegionState.from_stack(clamped, 0.0).min_value() == 0.0

    bad = np.array([[1.0, -1e-3], [0.5, 0.5], [0.0, 0.0]])
    with pytest.raises(PositivityViolationError) as info:
        clamp_negatives(bad, 2, cfg)
    assert (info.value.region, info.value.compartment) == (2, "S")


def test_region_state_rejects_negative_densities():
    with pytest.raises(ValueError):
        RegionState(np.array([1.0, -1e-12]), np.array([0.5, 0.5]), np.zeros(2), 0.0)


def test_step_region_clamps_before_building_the_state(small_cfg):
    cfg = isolated(without_reactions(small_cfg), sigma_scale=0.0)
    n = cfg.grid.n_cells_per_region

    def nudge_below_zero(region, t, x):
        return np.full((3, x.size), -1e-13 / cfg.dt)

    stats = ClampStats()
    values = np.ones(n)
    values[0] = 0.0
    state = RegionState(values, values.copy(), values.copy(), 0.0)
    new1 = step_region(1, state, state, cfg, 0.0, source=nudge_below_zero, stats=stats)
    np.testing.assert_array_equal(new1.stack()[:, 0], 0.0)
    assert stats.count == 3
    assert stats.max_clamp == pytest.approx(1e-13)


def test_split_losses_ignore_subnormal_densities():
    rates = np.array([-1.0, -1e3, -2.0, 0.5])
    u_old = np.array([5e-324, 1e-310, 1.0, 1e-320])
    with np.errstate(all="raise"):
        gains, weight = _split_losses(rates, u_old)
    np.testing.assert_array_equal(weight, [0.0, 0.0, 2.0, 0.0])
    np.testing.assert_array_equal(gains, [0.0, 0.0, 0.0, 0.5])


def test_implicit_losses_on_a_subnormal_interface_cell(small_cfg):
    cfg = replace(small_cfg, params=replace(small_cfg.params, lambda_1=0.0, lambda_2=0.0))
    n = cfg.grid.n_cells_per_region
    state1 = RegionState(np.full(n, 0.5), np.full(n, 5e-324), np.zeros(n), 0.0)
    state2 = bump_states(cfg)[1]
    with np.errstate(over="raise", invalid="raise"):
        new1 = step_region(1, state1, state2, cfg, 0.0)
    assert np.all(np.isfinite(new1.stack()))


def test_exchange_goes_through_the_pairwise_operator(small_cfg):
    cfg = isolated(without_reactions(small_cfg), sigma_scale=0.0)
    cfg = replace(cfg, params=replace(cfg.params, lambda_1=0.1, lambda_2=0.2))
    state1, state2 = bump_states(cfg)
    gain1, gain2 = exchange_eval(tuple(state1.stack()), tuple(state2.stack()), 0.1, 0.2)
    new1 = step_region(1, state1, state2, cfg, 0.0)
    new2 = step_region(2, state2, state1, cfg, 0.0)
    np.testing.assert_allclose(new1.stack(), state1.stack() + cfg.dt * np.stack(gain1), rtol=1e-14)
    np.testing.assert_allclose(new2.stack(), state2.stack() + cfg.dt * np.stack(gain2), rtol=1e-14)


def test_explicit_robin_term_is_the_difference_of_closures(small_cfg):
    cfg = without_reactions(small_cfg)
    cfg = replace(
        cfg,
        params=replace(cfg.params, lambda_1=0.0, lambda_2=0.0),
        numerics=replace(cfg.numerics, sigma_scale=0.0, cross_diffusion=CrossDiffusion.OFF,
                         transfer_losses=TransferLosses.EXPLICIT),
    )
    state1, state2 = bump_states(cfg)
    policy = RegionCoefficients.from_config(cfg).policy
    into_1, _ = interface_closure(state1, state2, policy, region_i=1)
    into_2, _ = interface_closure(state2, state1, policy, region_i=2)
    new1 = step_region(1, state1, state2, cfg, 0.0)
    k = cfg.grid.interface_cell(1)
    np.testing.assert_allclose(new1.stack()[:, k], state1.stack()[:, k] + cfg.dt * (into_1 - into_2) / cfg.grid.dx)
    np.testing.assert_array_equal(new1.stack()[:, :k], state1.stack()[:, :k])


def test_run_reports_weak_degeneracy_per_region(small_cfg, caplog):
    with caplog.at_level(logging.INFO, logger="sirgate.core.stepper"):
        record = run_simulation(small_cfg)
    assert set(record.degeneracy) == {1, 2}
    assert all(report.finite for report in record.degeneracy.values())
    assert "dégénérescence faible" in caplog.text


def test_vanishing_sigma_skips_the_degeneracy_report(small_cfg, caplog):
    cfg = isolated(small_cfg, sigma_scale=0.0)
    with caplog.at_level(logging.WARNING, logger="sirgate.core.stepper"):
        record = run_simulation(cfg)
    assert record.degeneracy == {}
    assert "test de dégénérescence impossible" in caplog.text


def test_step_failures_carry_their_time(small_cfg):
    def draining(region, t, x):
        return np.full((3, x.size), -1e3)

    with pytest.raises(SimulationStepError) as info:
        run_simulation(small_cfg, source=draining)
    assert info.value.t == 0.0
    assert isinstance(info.value.cause, PositivityViolationError)


def test_lockdown_levels(small_cfg):
    state1, state2 = bump_states(small_cfg)
    assert lockdown_levels(state1, state2, small_cfg) == (state1.i[15], state2.i[0])
    regional = replace(small_cfg, policy=replace(small_cfg.policy, lockdown_signal=LockdownSignal.REGIONAL_TOTAL))
    levels = lockdown_levels(state1, state2, regional)
    assert levels[0] == pytest.approx(np.mean(state1.i))
    assert levels[1] == pytest.approx(np.mean(state2.i))


def test_plan_reports_signed_interface_conditions(small_cfg):
    state1, state2 = uniform_initial_states(small_cfg)
    plan = plan_step(state1, state2, small_cfg, 0.0)
    assert plan.mode is InterfaceMode.ROBIN_OPEN
    interface1, interface2 = plan.flux_states()
    # I¹_Γ = 0.2 < I_th² et I²_Γ = 0 < I_th¹: les deux α sont négatifs
    assert interface1.alpha_value == pytest.approx(-1.0 / 1.04)
    assert interface2.alpha_value == pytest.approx(-1.0)


def _mirror_gap(cfg, dt):
    cfg = timing(cfg, dt=dt, t_final=dt)
    n = cfg.grid.n_cells_per_region
    state = RegionState.uniform(n, 0.7, 0.2, 0.1)
    new1, new2, _, _ = step_coupled(state, RegionState.uniform(n, 0.7, 0.2, 0.1), cfg, 0.0)
    return float(np.max(np.abs(new1.stack() - new2.stack()[:, ::-1])))


def test_mirror_symmetry_holds_to_second_order(small_cfg):
    # la région 2 voit la région 1 déjà avancée (Gauss–Seidel): écart O(Δt²) seulement
    coarse, fine = _mirror_gap(small_cfg, 0.05), _mirror_gap(small_cfg, 0.025)
    assert 0.0 < coarse < 0.1
    assert fine < 0.45 * coarse
