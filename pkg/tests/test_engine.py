import numpy as np
import pytest

from aligned_consensus.alignment import make_signal_subspace
from aligned_consensus.engine import (
    Outcome,
    RunControls,
    RunSetup,
    Trajectory,
    detect_convergence,
    error_orthogonality,
    oracle_projected_average,
    run_conservative,
    run_incoming,
    run_naive,
    run_outgoing,
    run_uniform_aligned,
)
from aligned_consensus.interference import (
    InterferenceModel,
    random_interference_graph,
    random_low_rank,
)
from aligned_consensus.topology import Graph, build_graph, metropolis_weights


def make_setup(
    protocol_variant,
    n=3,
    N=8,
    rank=1,
    scale=0.05,
    density=0.4,
    signal_dim=None,
    seed=0,
    graph_seed=1,
    init_seed=2,
    eps=1e-11,
    gains=None,
):
    g = build_graph("random_connected", N, seed=graph_seed, edge_prob=0.4)
    wm = metropolis_weights(g)
    a = random_interference_graph(g, density, seed=seed)
    if gains is None:
        if protocol_variant == "uniform":
            gains = (random_low_rank(n, rank, seed, unit_norm=True) * scale,)
        else:
            gains = tuple(
                random_low_rank(n, rank, seed + 31 * i, unit_norm=True) * scale
                for i in range(N)
            )
    model = InterferenceModel(variant=protocol_variant, n=n, a=a, gains=gains)
    if signal_dim is None:
        signal_dim = n - rank
    signal = make_signal_subspace(n, signal_dim, seed=seed + 5)
    rng = np.random.default_rng(init_seed)
    x0 = rng.standard_normal((N, n))
    controls = RunControls(eps=eps, max_iters=5000)
    return RunSetup(wm=wm, model=model, signal=signal, x0=x0, controls=controls)


class TestOracles:
    def test_projected_average(self):
        s = make_signal_subspace(2, 1, mode="principal", a=np.ones((2, 2)))
        x0 = np.array([[2.0, 0.0], [0.0, 2.0]])
        np.testing.assert_allclose(oracle_projected_average(x0, s), [1.0, 1.0])

    def test_full_subspace_oracle_is_plain_average(self):
        s = make_signal_subspace(3, 3, seed=0)
        rng = np.random.default_rng(1)
        x0 = rng.standard_normal((5, 3))
        np.testing.assert_allclose(
            oracle_projected_average(x0, s), x0.mean(axis=0), atol=1e-12
        )


class TestNaive:
    def test_no_interference_reaches_average(self):
        g = build_graph("ring", 6)
        wm = metropolis_weights(g)
        signal = make_signal_subspace(2, 2, seed=0)
        rng = np.random.default_rng(3)
        x0 = rng.standard_normal((6, 2))
        setup = RunSetup(wm=wm, model=None, signal=signal, x0=x0)
        traj, result = run_naive(setup)
        assert traj.outcome.converged
        assert result.oracle_distance <= 1e-8
        np.testing.assert_allclose(result.oracle, x0.mean(axis=0), atol=1e-12)
        assert traj.max_leakage == 0.0

    def test_nullspace_init_is_untouched_by_interference(self):
        """With every initial vector inside the gain's null space the channel
        never fires and the run matches interference-free consensus."""
        setup = make_setup("uniform", scale=0.05, eps=1e-10)
        gamma = setup.model.gains[0]
        from aligned_consensus.numerics import null_space

        theta = null_space(gamma)
        rng = np.random.default_rng(4)
        setup.x0 = rng.standard_normal((8, theta.dim)) @ theta.basis.T
        traj, result = run_naive(setup)
        assert traj.outcome.converged
        assert traj.max_leakage <= 1e-10
        err = np.linalg.norm(result.final - setup.x0.mean(axis=0), axis=1).max()
        assert err <= 1e-8

    def test_live_interference_diverges_at_strong_coupling(self):
        setup = make_setup("uniform", scale=0.5, density=0.6)
        traj, result = run_naive(setup)
        assert result.spectral_radius is not None and result.spectral_radius > 1.0
        assert traj.outcome.kind == "diverged"

    def test_variant_guard(self):
        setup = make_setup("outgoing")
        with pytest.raises(ValueError):
            run_uniform_aligned(setup)


class TestUniformAligned:
    def test_recovers_projected_average(self):
        setup = make_setup("uniform")
        traj, result = run_uniform_aligned(setup)
        assert traj.outcome.converged
        assert result.oracle_distance <= 1e-8
        # the live channel did fire at least once during the run
        assert traj.max_leakage < 1e-10

    def test_zero_gain_full_signal(self):
        setup = make_setup(
            "uniform", gains=(np.zeros((3, 3)),), signal_dim=3, eps=1e-10
        )
        traj, result = run_uniform_aligned(setup)
        assert traj.outcome.converged
        np.testing.assert_allclose(result.oracle, setup.x0.mean(axis=0), atol=1e-12)
        assert result.oracle_distance <= 1e-8


class TestConservative:
    def base_setup(self, gains, signal_dim):
        setup = make_setup("uniform", n=4, rank=1, gains=None)
        model = InterferenceModel(
            variant="general", n=4, a=setup.model.a, gains=gains
        )
        setup.model = model
        setup.signal_builder = lambda d: make_signal_subspace(4, d, seed=9)
        setup.signal = setup.signal_builder(signal_dim)
        return setup

    def test_empty_blanket_null_recovers_zero(self):
        # four generic symmetric rank-1 gains fill R^4: gamma_low = 0
        gains = tuple(
            0.05 * random_low_rank(4, 1, seed=s, symmetric=True, unit_norm=True)
            for s in (1, 2, 3, 4)
        )
        setup = self.base_setup(gains, signal_dim=0)
        traj, result = run_conservative(setup)
        np.testing.assert_allclose(result.recovered, 0.0, atol=1e-12)
        np.testing.assert_allclose(result.oracle, 0.0, atol=1e-12)

    def test_shared_range_leaves_usable_subspace(self):
        base = random_low_rank(4, 1, seed=7, symmetric=True, unit_norm=True)
        gains = (0.05 * base, 0.02 * base, -0.03 * base)
        setup = self.base_setup(gains, signal_dim=3)
        traj, result = run_conservative(setup)
        assert traj.outcome.converged
        assert result.oracle_distance <= 1e-8

    def test_dim_mismatch_without_builder(self):
        gains = (0.05 * random_low_rank(4, 2, seed=1, symmetric=True, unit_norm=True),)
        setup = self.base_setup(gains, signal_dim=1)
        setup.signal_builder = None
        with pytest.raises(ValueError):
            run_conservative(setup)


class TestOutgoing:
    def test_recovers_projected_average(self):
        setup = make_setup("outgoing", seed=3)
        traj, result = run_outgoing(setup)
        assert traj.outcome.converged
        assert result.oracle_distance <= 1e-8
        # iterates stay inside the signal subspace
        assert max(traj.alignment_residual) <= 1e-9

    def test_single_agent_network(self):
        g = Graph(n_agents=1, edges=frozenset())
        wm = metropolis_weights(g)
        gamma = 0.1 * random_low_rank(3, 1, seed=0, unit_norm=True)
        a = np.zeros((1, 1, 1), dtype=np.int8)
        model = InterferenceModel(variant="outgoing", n=3, a=a, gains=(gamma,))
        signal = make_signal_subspace(3, 2, seed=1)
        x0 = np.array([[1.0, -2.0, 0.5]])
        setup = RunSetup(wm=wm, model=model, signal=signal, x0=x0)
        traj, result = run_outgoing(setup)
        assert traj.outcome.converged
        np.testing.assert_allclose(result.recovered[0], signal.projector @ x0[0])
        assert result.oracle_distance <= 1e-12


class TestIncoming:
    def test_recovers_projected_average(self):
        setup = make_setup("incoming", seed=4)
        traj, result = run_incoming(setup)
        assert traj.outcome.converged
        assert result.oracle_distance <= 1e-8

    def test_shadow_matches_interference_free_reference(self):
        setup = make_setup("incoming", seed=6)
        traj, _ = run_incoming(setup)
        assert traj.shadow_residual, "shadow residual must be recorded"
        assert max(traj.shadow_residual) <= 1e-9


class TestOrthogonality:
    def test_residual_small_for_aligned_runs(self):
        setup = make_setup("uniform", seed=8)
        _, result = run_uniform_aligned(setup)
        norm2 = float(result.true_average @ result.true_average)
        assert error_orthogonality(result) <= 1e-9 * (1.0 + norm2)

    def test_exact_identity(self):
        # oracle is a projection of the true average, so the residual
        # oracle^T (avg - oracle) vanishes analytically
        s = make_signal_subspace(4, 2, seed=3)
        rng = np.random.default_rng(5)
        x0 = rng.standard_normal((6, 4))
        g = build_graph("complete", 6)
        setup = RunSetup(
            wm=metropolis_weights(g), model=None, signal=s, x0=x0
        )
        _, result = run_naive(setup)
        assert abs(result.oracle @ (result.true_average - result.oracle)) <= 1e-12


class TestConvergenceDetection:
    def test_redetection_matches_live_outcome(self):
        setup = make_setup("uniform", seed=10)
        traj, _ = run_uniform_aligned(setup)
        again = detect_convergence(traj, setup.controls.eps, setup.controls.window)
        assert again == traj.outcome

    def test_synthetic_cases(self):
        traj = Trajectory(
            ks=[0, 1, 2, 3, 4],
            disagreement=[1.0, 1e-12, 1e-12, 1e-12, 1e-12],
            norm=[1.0] * 5,
        )
        traj.ceiling = 1e9
        assert detect_convergence(traj, 1e-9, 3) == Outcome("converged", 3)
        assert detect_convergence(traj, 1e-9, 10) == Outcome("max_iters", 4)
        blown = Trajectory(ks=[0, 1], disagreement=[1.0, 1.0], norm=[1.0, 1e12])
        blown.ceiling = 1e9
        assert detect_convergence(blown, 1e-9, 3) == Outcome("diverged", 1)

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError):
            detect_convergence(Trajectory(), 0.0, 3)

    def test_constant_state_converges_after_window(self):
        g = build_graph("complete", 3)
        wm = metropolis_weights(g)
        s = make_signal_subspace(2, 2, seed=0)
        x0 = np.ones((3, 2))
        setup = RunSetup(wm=wm, model=None, signal=s, x0=x0)
        traj, _ = run_naive(setup)
        assert traj.outcome == Outcome("converged", setup.controls.window)
