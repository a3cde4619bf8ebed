import numpy as np
import pytest

from serpentsim.cpg import (
    CpgParams,
    CpgState,
    build_coupling_matrices,
    cpg_output,
    cpg_step,
    steady_phase_differences,
)
from serpentsim.errors import InvalidDimensionError, NumericDomainError

# r(t) = R + (r0 - R)(1 + (a/2)t) e^{-(a/2)t} for the critically damped
# amplitude filter; value frozen from the analytic formula at a=4, t=1.
R_AT_1S = 0.5939941502901619


def euler_oracle(state, params, dt, n_steps):
    """Plain explicit-Euler integration of the same ODEs, independent of cpg_step."""
    A, B = params.coupling.A, params.coupling.B
    phi, r, rd = state.phi.copy(), state.r.copy(), state.r_dot.copy()
    for _ in range(n_steps):
        phi_dot = params.frequency + A @ phi + B @ params.phase_shift
        r_ddot = params.a * (params.a / 4.0 * (params.amplitude - r) - rd)
        phi = phi + dt * phi_dot
        r = r + dt * rd
        rd = rd + dt * r_ddot
    return phi, r, rd


def make_params(n=2, a=4.0, mu=0.0, amplitude=1.0, frequency=0.0):
    return CpgParams(
        amplitude=np.full(n, amplitude),
        frequency=np.full(n, frequency),
        phase_shift=np.zeros(n - 1),
        offset=np.zeros(n),
        a=a,
        mu=np.full(n, mu),
    )


class TestCouplingMatrices:
    def test_two_channel_unit_coupling(self):
        cm = build_coupling_matrices([1.0, 1.0])
        assert np.array_equal(cm.A, [[-1.0, 1.0], [1.0, -1.0]])

    def test_zero_coupling_gives_zero_matrix(self):
        cm = build_coupling_matrices([0.0, 0.0])
        assert np.array_equal(cm.A, np.zeros((2, 2)))

    def test_three_channel_stencil(self):
        cm = build_coupling_matrices([1.0, 2.0, 3.0])
        assert np.array_equal(cm.A, [[-1, 1, 0], [2, -4, 2], [0, 3, -3]])

    def test_row_sums_zero(self):
        rng = np.random.default_rng(3)
        for n in (2, 5, 11):
            cm = build_coupling_matrices(rng.uniform(0, 10, n))
            assert np.allclose(cm.A.sum(axis=1), 0.0, atol=1e-12)

    def test_b_shape_and_pattern(self):
        cm = build_coupling_matrices(np.ones(4))
        expected = np.array([[1, 0, 0], [-1, 1, 0], [0, -1, 1], [0, 0, -1]], dtype=float)
        assert np.array_equal(cm.B, expected)

    def test_single_channel_rejected(self):
        with pytest.raises(InvalidDimensionError):
            build_coupling_matrices([1.0])

    def test_negative_mu_rejected(self):
        with pytest.raises(NumericDomainError):
            build_coupling_matrices([1.0, -0.5])


class TestCpgStep:
    def test_decoupled_linear_phase_growth(self):
        params = make_params(n=2, mu=0.0, frequency=np.pi)
        state = CpgState.zeros(2)
        for _ in range(1000):
            state = cpg_step(state, params, 1e-3)
        assert np.allclose(state.phi, np.pi, atol=1e-9)

    def test_amplitude_matches_analytic_solution(self):
        params = make_params(n=2, a=4.0, mu=0.0, amplitude=1.0)
        state = CpgState.zeros(2)
        for _ in range(1000):
            state = cpg_step(state, params, 1e-3)
        assert abs(state.r[0] - R_AT_1S) < 1e-6

    def test_amplitude_equilibrium_is_fixed_point(self):
        params = make_params(n=2, a=4.0, amplitude=0.8)
        state = CpgState(phi=np.zeros(2), r=np.full(2, 0.8), r_dot=np.zeros(2))
        for _ in range(200):
            state = cpg_step(state, params, 5e-3)
            assert np.abs(state.r - 0.8).max() < 1e-12

    def test_one_step_matches_fine_euler_oracle(self):
        rng = np.random.default_rng(0)
        params = CpgParams(
            amplitude=rng.uniform(0, 1, 4),
            frequency=rng.uniform(0, 6, 4),
            phase_shift=rng.uniform(-1, 1, 3),
            offset=rng.uniform(-0.5, 0.5, 4),
            a=4.0,
            mu=rng.uniform(0, 5, 4),
        )
        state = CpgState(phi=rng.normal(0, 1, 4), r=rng.uniform(0, 1, 4), r_dot=rng.normal(0, 0.5, 4))
        stepped = cpg_step(state, params, 1e-3)
        phi, r, rd = euler_oracle(state, params, 1e-6, 1000)
        assert np.abs(stepped.phi - phi).max() < 1e-7
        assert np.abs(stepped.r - r).max() < 1e-7
        assert np.abs(stepped.r_dot - rd).max() < 1e-7

    def test_convergence_bound(self):
        # critically damped envelope plus slack holds along the whole trajectory
        params = make_params(n=2, a=4.0, mu=0.0, amplitude=1.0)
        state = CpgState(phi=np.zeros(2), r=np.array([0.0, 0.3]), r_dot=np.zeros(2))
        e0 = np.abs(state.r - params.amplitude).max()
        t = 0.0
        for _ in range(2000):
            state = cpg_step(state, params, 5e-3)
            t += 5e-3
            bound = e0 * (1 + (params.a / 2) * t) * np.exp(-(params.a / 2) * t) + 1e-6
            assert np.abs(state.r - params.amplitude).max() <= bound

    def test_dt_bounds_enforced(self):
        params = make_params()
        state = CpgState.zeros(2)
        with pytest.raises(NumericDomainError):
            cpg_step(state, params, 0.0)
        with pytest.raises(NumericDomainError):
            cpg_step(state, params, 0.06)

    def test_nonfinite_state_rejected(self):
        params = make_params()
        state = CpgState(phi=np.array([np.nan, 0.0]), r=np.zeros(2), r_dot=np.zeros(2))
        with pytest.raises(NumericDomainError):
            cpg_step(state, params, 1e-3)


class TestCpgOutput:
    def test_zero_amplitude_passes_offset(self):
        params = make_params(n=3)
        params.offset = np.array([0.1, -0.2, 0.3])
        state = CpgState.zeros(3)
        assert np.array_equal(cpg_output(state, params), params.offset)

    def test_sine_peak(self):
        params = make_params(n=2)
        state = CpgState(phi=np.array([np.pi / 2, 0.0]), r=np.array([1.0, 0.0]), r_dot=np.zeros(2))
        out = cpg_output(state, params)
        assert abs(out[0] - 1.0) < 1e-12

    def test_half_amplitude_plus_offset(self):
        params = make_params(n=2)
        params.offset = np.array([0.5, 0.0])
        state = CpgState(phi=np.array([np.pi / 6, 0.0]), r=np.array([1.0, 0.0]), r_dot=np.zeros(2))
        out = cpg_output(state, params)
        assert abs(out[0] - 1.0) < 1e-12

    def test_output_bounded_by_running_peak_amplitude(self):
        rng = np.random.default_rng(5)
        params = CpgParams(
            amplitude=rng.uniform(0.2, 1.0, 5),
            frequency=rng.uniform(1, 8, 5),
            phase_shift=rng.uniform(-2, 2, 4),
            offset=rng.uniform(-0.5, 0.5, 5),
            a=6.0,
            mu=rng.uniform(0, 8, 5),
        )
        state = CpgState(phi=np.zeros(5), r=rng.uniform(0, 1.5, 5), r_dot=np.zeros(5))
        r_max = state.r.copy()
        for _ in range(4000):
            state = cpg_step(state, params, 2e-3)
            r_max = np.maximum(r_max, state.r)
            out = cpg_output(state, params)
            assert np.all(np.abs(out - params.offset) <= r_max + 1e-12)


class TestSteadyPhases:
    def test_differences_converge_to_linear_solve(self):
        n = 11
        rng = np.random.default_rng(7)
        params = CpgParams(
            amplitude=np.ones(n),
            frequency=np.full(n, np.pi),
            phase_shift=rng.uniform(-np.pi / 2, np.pi / 2, n - 1),
            offset=np.zeros(n),
            a=4.0,
            mu=np.full(n, 10.0),
        )
        state = CpgState.zeros(n)
        for _ in range(30000):  # 60 s
            state = cpg_step(state, params, 2e-3)
        d_dyn = state.phi[:-1] - state.phi[1:]
        d_lin = steady_phase_differences(params)
        assert np.abs(d_dyn - d_lin).max() < 1e-3

    def test_common_drift_rate_after_convergence(self):
        n = 5
        params = CpgParams(
            amplitude=np.ones(n),
            frequency=np.full(n, 2.0),
            phase_shift=np.full(n - 1, 0.7),
            offset=np.zeros(n),
            a=4.0,
            mu=np.full(n, 10.0),
        )
        state = CpgState.zeros(n)
        for _ in range(20000):
            state = cpg_step(state, params, 2e-3)
        before = state.phi.copy()
        state = cpg_step(state, params, 2e-3)
        rates = (state.phi - before) / 2e-3
        assert np.abs(rates - rates[0]).max() < 1e-6
