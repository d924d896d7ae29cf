import numpy as np
import pytest

from newtonlab import assembly, geometry, potential


@pytest.fixture
def clamped_ip(beam_mesh, snh_model):
    clamp = geometry.select_in_box(beam_mesh, (-1e-9,) * 3, (1e-9, 2, 2))
    bc = potential.BoundarySpec(mode=potential.DIRECT, constrained=clamp)
    return potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01,
                                          boundary=bc, damping=0.5)


@pytest.fixture
def penalty_ip(beam_mesh, snh_model):
    clamp = geometry.select_in_box(beam_mesh, (-1e-9,) * 3, (1e-9, 2, 2))
    bc = potential.BoundarySpec(mode=potential.PENALTY, constrained=clamp,
                                penalty=1e8)
    return potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01,
                                          boundary=bc)


def _fd_gradient(ip, u, h=1e-6):
    g = np.empty(len(u))
    for i in range(len(u)):
        up, um = u.copy(), u.copy()
        up[i] += h
        um[i] -= h
        g[i] = (ip.energy(up) - ip.energy(um)) / (2 * h)
    return g


def test_energy_terms_match_oracles(beam_mesh, snh_model, rng):
    """Total energy equals an independent per-term recomputation."""
    ip = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.02,
                                        gravity=(0, 0, -9.81), damping=0.3)
    ip.u_prev = 0.01 * rng.standard_normal(ip.num_full_dofs)
    ip.v_prev = 0.1 * rng.standard_normal(ip.num_full_dofs)
    ip.u_tilde = ip.u_prev + ip.dt * ip.v_prev
    u = ip.u_prev + 0.01 * rng.standard_normal(ip.num_full_dofs)

    M = ip.mass.dense()
    dm = u - ip.u_tilde
    du = u - ip.u_prev
    expected = (0.5 * dm @ M @ dm / ip.dt**2
                + assembly.assemble_elastic_energy(beam_mesh, snh_model, u)
                + 0.5 * ip.damping / ip.dt * (du @ M @ du)
                - du @ ip.gravity_force)
    assert ip.energy(u) == pytest.approx(expected, rel=1e-12)


def test_energy_zero_terms(beam_mesh, snh_model):
    ip = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01,
                                        gravity=(0, 0, 0), damping=0.0)
    # At the inertia target with no deformation, only elastic energy remains.
    assert ip.energy(ip.u_tilde) == pytest.approx(
        assembly.assemble_elastic_energy(beam_mesh, snh_model, ip.u_tilde),
        abs=1e-12)


def test_gradient_zero_at_stationary_rest(beam_mesh, snh_model):
    ip = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01,
                                        gravity=(0, 0, 0))
    np.testing.assert_allclose(ip.gradient(np.zeros(ip.num_dofs)), 0.0,
                               atol=1e-9)


def test_gradient_fd_direct(clamped_ip, rng):
    u = 0.02 * rng.standard_normal(clamped_ip.num_dofs)
    g = clamped_ip.gradient(u)
    np.testing.assert_allclose(g, _fd_gradient(clamped_ip, u),
                               atol=1e-5 * np.abs(g).max())


def test_gradient_fd_penalty(penalty_ip, rng):
    u = 0.02 * rng.standard_normal(penalty_ip.num_dofs)
    g = penalty_ip.gradient(u)
    np.testing.assert_allclose(g, _fd_gradient(penalty_ip, u),
                               atol=1e-5 * np.abs(g).max())


def test_gradient_dimension_direct(clamped_ip, beam_mesh):
    n_free = beam_mesh.num_vertices - len(clamped_ip.boundary.constrained)
    assert clamped_ip.num_dofs == 3 * n_free
    assert len(clamped_ip.gradient(np.zeros(clamped_ip.num_dofs))) == 3 * n_free


def test_hessian_fd(clamped_ip, rng):
    u = 0.02 * rng.standard_normal(clamped_ip.num_dofs)
    H = clamped_ip.hessian(u, assembly.NO_PROJECTION).dense()
    h = 1e-6
    for i in rng.choice(len(u), size=6, replace=False):
        up, um = u.copy(), u.copy()
        up[i] += h
        um[i] -= h
        fd = (clamped_ip.gradient(up) - clamped_ip.gradient(um)) / (2 * h)
        np.testing.assert_allclose(H[:, i], fd, atol=1e-5 * np.abs(H).max())


def test_hessian_modes_agree_at_rest(clamped_ip):
    u = np.zeros(clamped_ip.num_dofs)
    H0 = clamped_ip.hessian(u, assembly.NO_PROJECTION).dense()
    for mode in (assembly.PER_ELEMENT_NUMERICAL, assembly.PER_QUADRATURE_ANALYTIC):
        np.testing.assert_allclose(clamped_ip.hessian(u, mode).dense(), H0,
                                   atol=1e-9 * np.linalg.norm(H0))


def test_penalty_block_structure(penalty_ip):
    """Penalty adds sigma * M_ii exactly on constrained diagonal entries."""
    u = np.zeros(penalty_ip.num_dofs)
    H_pen = penalty_ip.hessian(u, assembly.NO_PROJECTION).dense()
    free = potential.IncrementalPotential(
        penalty_ip.mesh, penalty_ip.model, dt=penalty_ip.dt,
        gravity=(0, 0, -9.81))
    H_free = free.hessian(u, assembly.NO_PROJECTION).dense()
    D = H_pen - H_free
    expected = np.zeros_like(D)
    cd = penalty_ip.constrained_dofs
    expected[cd, cd] = 1e8 * penalty_ip.mass.dense().diagonal()[cd]
    np.testing.assert_allclose(D, expected, atol=1e-6 * np.abs(expected).max())


def test_damping_hessian_term(beam_mesh, snh_model):
    base = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01)
    damped = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01,
                                            damping=0.7)
    u = np.zeros(base.num_dofs)
    D = damped.hessian(u).dense() - base.hessian(u).dense()
    np.testing.assert_allclose(D, (0.7 / 0.01) * base.mass.dense(), rtol=1e-9)


def test_gravity_shift_gradient_invariance(beam_mesh, snh_model, rng):
    """The shifted gravity form -(u - u_prev).f_ext differs from the
    unshifted -u.f_ext by a constant per step: identical gradients."""
    ip = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01)
    ip.u_prev = 0.05 * rng.standard_normal(ip.num_full_dofs)
    ip.u_tilde = ip.u_prev.copy()
    u1 = ip.u_prev + 0.01 * rng.standard_normal(ip.num_dofs)
    u2 = ip.u_prev + 0.01 * rng.standard_normal(ip.num_dofs)

    def unshifted(u):
        return ip.energy(u) + np.dot(u - ip.u_prev, ip.gravity_force) \
            - np.dot(u, ip.gravity_force)

    const = np.dot(-ip.u_prev, ip.gravity_force)
    assert unshifted(u1) - ip.energy(u1) == pytest.approx(const, rel=1e-12)
    assert unshifted(u2) - ip.energy(u2) == pytest.approx(const, rel=1e-12)
    # Gradient of the constant shift is zero, so ip.gradient serves both.
    g = ip.gradient(u1)
    h = 1e-6
    for i in rng.choice(len(u1), size=5, replace=False):
        up, um = u1.copy(), u1.copy()
        up[i] += h
        um[i] -= h
        fd = (unshifted(up) - unshifted(um)) / (2 * h)
        assert g[i] == pytest.approx(fd, abs=2e-5 * np.abs(g).max())


def test_kinetic_regularization_identity(clamped_ip, beam_mesh, snh_model, rng):
    """hessian(beta) equals the Hessian of the same state at dt' = beta*dt."""
    clamp = clamped_ip.boundary
    base = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01,
                                          boundary=clamp, damping=0.0)
    u = 0.02 * rng.standard_normal(base.num_dofs)
    for beta in (1.0, 0.5, 0.25):
        A = base.hessian(u, beta=beta).dense()
        other = potential.IncrementalPotential(
            beam_mesh, snh_model, dt=beta * 0.01, boundary=clamp, damping=0.0)
        B = other.hessian(u).dense()
        np.testing.assert_allclose(A, B, atol=1e-12 * np.abs(B).max())


def test_acceleration_residual_trivial(clamped_ip):
    u = clamped_ip.initial_guess()
    r = clamped_ip.gradient(u)
    ra = clamped_ip.acceleration_residual(u)
    # r_a solves M r_a = r exactly.
    np.testing.assert_allclose(clamped_ip.mass_restricted.matvec(ra), r,
                               atol=1e-8 * max(np.abs(r).max(), 1.0))


def test_acceleration_residual_diag_vs_exact(penalty_ip, rng):
    """Max-norms agree within a factor of two on random residuals."""
    for _ in range(20):
        u = 0.01 * rng.standard_normal(penalty_ip.num_dofs)
        a = np.abs(penalty_ip.acceleration_residual(
            u, potential.EXACT_MASS_INVERSE)).max()
        b = np.abs(penalty_ip.acceleration_residual(
            u, potential.DIAGONAL_MASS_INVERSE)).max()
        assert 0.5 <= a / b <= 2.0


def test_advance_zero_motion(clamped_ip):
    u = clamped_ip.initial_guess()
    clamped_ip.advance(u)
    np.testing.assert_allclose(clamped_ip.v_prev, 0.0)


def test_advance_uniform_translation(beam_mesh, snh_model):
    ip = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.25)
    d = np.tile([0.5, -0.25, 1.0], beam_mesh.num_vertices)
    ip.advance(d)
    np.testing.assert_allclose(ip.v_prev, d / 0.25, rtol=1e-14)
    np.testing.assert_allclose(ip.u_tilde, d + 0.25 * (d / 0.25), rtol=1e-14)


def test_free_fall_matches_backward_euler_recurrence(single_tet_mesh, snh_model):
    """Rigid free fall: v^{n+1} = v^n + dt*g exactly (gravity constant)."""
    dt, g = 0.02, -9.81
    ip = potential.IncrementalPotential(single_tet_mesh, snh_model, dt=dt)
    for n in range(1, 6):
        u = ip.u_tilde + dt**2 * np.tile([0.0, 0.0, g], 4)
        assert np.abs(ip.gradient(u)).max() < 1e-6
        ip.advance(u)
        np.testing.assert_allclose(ip.v_prev[2::3], n * dt * g, rtol=1e-9)


def test_direct_vs_stiff_penalty_quasistatic(beam_mesh, snh_model):
    """A Direct solve and a sigma=1e10 Penalty solve settle to nearly the
    same displacement field under gravity."""
    from newtonlab import linesearch, solvers
    clamp = geometry.select_in_box(beam_mesh, (-1e-9,) * 3, (1e-9, 2, 2))
    results = {}
    for mode, sigma in ((potential.DIRECT, 0.0), (potential.PENALTY, 1e10)):
        bc = potential.BoundarySpec(mode=mode, constrained=clamp, penalty=sigma)
        ip = potential.IncrementalPotential(beam_mesh, snh_model, dt=0.01,
                                            boundary=bc, damping=20.0)
        var = solvers.SolverVariant(solvers.NEWTON)
        crit = solvers.ConvergenceCriterion(solvers.ACCELERATION_BALANCE, 0.01)
        for _ in range(60):
            u, rep = solvers.solve_step(ip, var, linesearch.ROBUST, crit)
            assert rep.failure_reason == solvers.FAIL_NONE
            ip.advance(u)
        results[mode] = ip.u_prev
    diff = np.abs(results[potential.DIRECT] - results[potential.PENALTY]).max()
    assert diff <= 1e-3


def test_boundary_spec_validation():
    with pytest.raises(ValueError):
        potential.BoundarySpec(mode="augmented")
    with pytest.raises(ValueError):
        potential.BoundarySpec(mode=potential.PENALTY,
                               constrained=geometry.VertexSet(np.array([0])),
                               penalty=0.0)


def test_direct_teleport_inversion_detected(beam_mesh, nh_model):
    """Moving Direct targets can invert boundary elements; the energy at
    the warm start is then infinite."""
    clamp = geometry.select_in_box(beam_mesh, (-1e-9,) * 3, (1e-9, 2, 2))
    traj = lambda t: np.tile([10.0 * t, 0.0, 0.0], (len(clamp), 1))
    bc = potential.BoundarySpec(mode=potential.DIRECT, constrained=clamp,
                                trajectory=traj)
    ip = potential.IncrementalPotential(beam_mesh, nh_model, dt=0.5,
                                        boundary=bc)
    assert ip.energy(ip.initial_guess()) == np.inf
