"""Path synthesis, Cartan trajectories, solid angles, lattice condition."""

import math

import numpy as np
import pytest

import quditphase as qp

TWO_PI = 2.0 * math.pi


def test_synthesize_cartan_linear_qutrit():
    evo = qp.LocalEvolution(3, [qp.CartanLinear(np.array([1.0, 1.0, -2.0]), TWO_PI)])
    for t in (0.0, 0.7, 2.5):
        u, u_dot = evo.synthesize(t)
        np.testing.assert_allclose(
            u, np.diag(np.exp(1j * np.array([t, t, -2 * t]))), atol=1e-13)
        np.testing.assert_allclose(
            u_dot, np.diag(1j * np.array([1, 1, -2]) * np.exp(1j * np.array([t, t, -2 * t]))),
            atol=1e-13)


def test_synthesize_bloch_segment_is_explicit_coset_matrix():
    theta = math.pi / 2
    evo = qp.LocalEvolution(2, [qp.BlochLoop(theta_end=theta, phi_rate=1.0,
                                             duration=TWO_PI, theta_start=theta)])
    for t in (0.0, 1.0, 4.0):
        u, _ = evo.synthesize(t)
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        expected = np.array([[c, 1j * s * np.exp(-1j * t)],
                             [1j * s * np.exp(1j * t), c]])
        np.testing.assert_allclose(u, expected, atol=1e-13)


def test_zero_duration_path_is_identity():
    evo = qp.LocalEvolution(3, [])
    u, u_dot = evo.synthesize(0.0)
    np.testing.assert_allclose(u, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(u_dot, 0.0, atol=1e-15)


def test_sample_rejects_out_of_range():
    evo = qp.LocalEvolution(2, [qp.CartanHold(1.0)])
    with pytest.raises(ValueError):
        evo.sample([1.5])
    with pytest.raises(ValueError):
        evo.sample([-0.5])


def test_cartan_trajectory_qubit_h_convention():
    evo = qp.LocalEvolution(2, [qp.CartanLinear(np.array([1.0, -1.0]), math.pi)])
    traj = qp.cartan_trajectory(evo, [math.pi / 2])
    np.testing.assert_allclose(traj.levels[0], [math.pi / 2, -math.pi / 2],
                               atol=1e-13)
    assert traj.h[0, 0] == pytest.approx(math.sqrt(2) * math.pi / 2)


def test_cartan_trajectory_hold_is_constant():
    evo = qp.LocalEvolution(3, [qp.CartanLinear(np.array([0.5, 0.5, -1.0]), 1.0),
                                qp.CartanHold(2.0)])
    traj = qp.cartan_trajectory(evo, [1.0, 1.7, 3.0])
    for row in traj.levels:
        np.testing.assert_allclose(row, [0.5, 0.5, -1.0], atol=1e-13)


def test_cartan_trajectory_stepped_profile():
    # chi_T0 = -t throughout; chi_T1 ramps and holds alternately
    dur = TWO_PI / 3.0
    segs = []
    for k in range(6):
        rates = [-1.0, 1.0, 0.0] if k % 2 == 0 else [-1.0, 0.0, 1.0]
        segs.append(qp.CartanLinear(np.array(rates), dur))
    evo = qp.LocalEvolution(3, segs)
    traj = qp.cartan_trajectory(evo, [TWO_PI / 3.0])
    np.testing.assert_allclose(traj.levels[0],
                               [-TWO_PI / 3.0, TWO_PI / 3.0, 0.0], atol=1e-12)


def test_hold_pins_expected_angles():
    good = qp.LocalEvolution(2, [qp.CartanLinear(np.array([1.0, -1.0]), 0.5),
                                 qp.CartanHold(1.0, angles=np.array([0.5, -0.5]))])
    assert good.duration == pytest.approx(1.5)
    with pytest.raises(ValueError):
        qp.LocalEvolution(2, [qp.CartanLinear(np.array([1.0, -1.0]), 0.5),
                              qp.CartanHold(1.0, angles=np.array([0.7, -0.7]))])


def test_rates_must_sum_to_zero():
    with pytest.raises(ValueError):
        qp.CartanLinear(np.array([1.0, 1.0]), 1.0)


def test_bloch_requires_qubit_dimension():
    with pytest.raises(ValueError):
        qp.LocalEvolution(3, [qp.BlochLoop(theta_end=1.0, phi_rate=0.0,
                                           duration=1.0)])


def test_generator_validation():
    with pytest.raises(ValueError):
        qp.GeneratorConst(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)  # not Hermitian
    with pytest.raises(ValueError):
        qp.GeneratorConst(np.eye(2), 1.0)  # not traceless


def test_diagonal_generator_folds_into_cartan():
    g = np.diag([0.4, -0.1, -0.3])
    evo = qp.LocalEvolution(3, [qp.GeneratorConst(g, 2.0)])
    assert evo.is_diagonal
    traj = qp.cartan_trajectory(evo, [1.5])
    np.testing.assert_allclose(traj.levels[0], np.diagonal(g) * 1.5, atol=1e-13)


def test_generator_segment_matches_eigenexponential():
    g = 0.4 * np.array([[0, 1, 0], [1, 0, -1j], [0, 1j, 0]], dtype=complex)
    evo = qp.LocalEvolution(3, [qp.GeneratorConst(g, 3.0)])
    evals, vecs = np.linalg.eigh(g)
    for t in (0.3, 1.9):
        u, u_dot = evo.synthesize(t)
        expected = (vecs * np.exp(1j * evals * t)) @ vecs.conj().T
        np.testing.assert_allclose(u, expected, atol=1e-12)
        np.testing.assert_allclose(u_dot, 1j * g @ expected, atol=1e-12)


def test_unitarity_along_composite_path():
    rng = np.random.default_rng(0)
    g = 0.3 * np.array([[0, 1j], [-1j, 0]], dtype=complex)
    evo = qp.LocalEvolution(2, [
        qp.CartanLinear(np.array([0.8, -0.8]), 1.0),
        qp.BlochLoop(theta_end=1.2, phi_rate=0.9, duration=1.0),
        qp.GeneratorConst(g, 1.0),
        qp.CartanHold(0.5),
    ])
    t = np.sort(rng.uniform(0, evo.duration, size=200))
    u, _ = evo.sample(t)
    res = np.abs(u.conj().transpose(0, 2, 1) @ u - np.eye(2)).max()
    det = np.abs(np.linalg.det(u) - 1.0).max()
    assert res < 1e-10
    assert det < 1e-10


def test_derivative_consistency_second_order():
    evo = qp.LocalEvolution(2, [
        qp.BlochLoop(theta_end=1.4, phi_rate=0.7, duration=2.0),
        qp.CartanLinear(np.array([0.6, -0.6]), 1.0),
    ])
    ts = np.array([0.9, 2.4])
    errs = []
    for h in (1e-3, 5e-4):
        u_hi, _ = evo.sample(ts + h)
        u_lo, _ = evo.sample(ts - h)
        _, u_dot = evo.sample(ts)
        errs.append(np.abs((u_hi - u_lo) / (2 * h) - u_dot).max())
    order = math.log2(errs[0] / errs[1])
    assert order >= 1.9


def test_pure_cartan_velocity_has_no_coset_part():
    b = qp.make_generators(3)
    evo = qp.LocalEvolution(3, [qp.CartanLinear(np.array([1.0, -0.4, -0.6]), 2.0)])
    u_mat, u_dot = evo.synthesize(1.3)
    u = qp.velocity_vector(b, u_mat, u_dot)
    np.testing.assert_allclose(u[2:], 0.0, atol=1e-13)
    dec = qp.decompose_velocity(b, u, qp.cartan_trajectory(evo, [1.3]).h[0],
                                np.zeros(8))
    np.testing.assert_allclose(dec.v_perp_rot, 0.0, atol=1e-13)
    np.testing.assert_allclose(dec.v_par, 0.0, atol=1e-13)


def _pole_loop(theta, windings=1.0, ramp=1.0, loop=1.0):
    return qp.LocalEvolution(2, [
        qp.BlochLoop(theta_end=theta, phi_rate=0.0, duration=ramp),
        qp.BlochLoop(theta_end=theta, phi_rate=windings * TWO_PI / loop,
                     duration=loop),
        qp.BlochLoop(theta_end=0.0, phi_rate=0.0, duration=ramp),
    ])


def test_solid_angle_closed_forms():
    assert qp.solid_angle(_pole_loop(math.pi / 2)) == pytest.approx(
        TWO_PI, abs=1e-12)
    assert qp.solid_angle(_pole_loop(2 * math.pi / 3)) == pytest.approx(
        3 * math.pi, abs=1e-12)
    # degenerate pole loop
    pole = qp.LocalEvolution(2, [qp.BlochLoop(theta_end=0.0, phi_rate=1.0,
                                              duration=TWO_PI)])
    assert qp.solid_angle(pole) == pytest.approx(0.0, abs=1e-12)


def test_solid_angle_matches_const_theta_loop_without_ramps():
    theta = 1.234
    const = qp.LocalEvolution(2, [qp.BlochLoop(theta_end=theta, phi_rate=1.0,
                                               duration=TWO_PI,
                                               theta_start=theta)])
    assert qp.solid_angle(const) == pytest.approx(TWO_PI * (1 - math.cos(theta)),
                                                  abs=1e-12)


def test_solid_angle_additive_and_orientation():
    theta = 0.9
    double = qp.solid_angle(_pole_loop(theta, windings=2.0))
    single = qp.solid_angle(_pole_loop(theta, windings=1.0))
    assert double == pytest.approx(2 * single, abs=1e-12)
    reversed_ = qp.solid_angle(_pole_loop(theta, windings=-1.0))
    assert reversed_ == pytest.approx(-single, abs=1e-12)
    # concatenating two different loops adds their angles
    t1, t2 = 0.7, 1.6
    both = qp.LocalEvolution(2, list(_pole_loop(t1).segments)
                             + list(_pole_loop(t2).segments))
    assert qp.solid_angle(both) == pytest.approx(
        qp.solid_angle(_pole_loop(t1)) + qp.solid_angle(_pole_loop(t2)),
        abs=1e-12)


def test_solid_angle_open_path_raises():
    open_theta = qp.LocalEvolution(2, [qp.BlochLoop(theta_end=1.0, phi_rate=0.0,
                                                    duration=1.0)])
    with pytest.raises(ValueError):
        qp.solid_angle(open_theta)
    open_phi = qp.LocalEvolution(2, [
        qp.BlochLoop(theta_end=1.0, phi_rate=0.0, duration=1.0),
        qp.BlochLoop(theta_end=1.0, phi_rate=0.5, duration=1.0),
        qp.BlochLoop(theta_end=0.0, phi_rate=0.0, duration=1.0)])
    # phi advanced by 0.5, away from the pole at the loop altitude, but the
    # path closes at the pole where phi is degenerate, so this is closed
    assert qp.solid_angle(open_phi) == pytest.approx(
        0.5 * (1 - math.cos(1.0)), abs=1e-12)
    truly_open = qp.LocalEvolution(2, [
        qp.BlochLoop(theta_end=1.0, phi_rate=0.0, duration=1.0, theta_start=1.0),
        qp.BlochLoop(theta_end=1.0, phi_rate=0.5, duration=1.0)])
    with pytest.raises(ValueError):
        qp.solid_angle(truly_open)


def test_lattice_condition_check():
    assert qp.lattice_condition_check(np.zeros(3)) == 0
    chi = np.array([TWO_PI / 3, TWO_PI / 3, TWO_PI / 3 - TWO_PI])
    assert qp.lattice_condition_check(chi) == 1
    assert qp.lattice_condition_check(np.array([math.pi / 2, -math.pi / 2])) is None
    assert qp.lattice_condition_check(np.array([math.pi, -math.pi])) == 1


def test_cartan_trajectory_gated_by_open_coset():
    g = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)  # eigenvalues +-0.5
    evo = qp.LocalEvolution(2, [qp.GeneratorConst(g, 4 * math.pi)])
    # closed at t = 4 pi (exp(i g t) = 1), open before
    traj = qp.cartan_trajectory(evo, [0.0, 4 * math.pi])
    np.testing.assert_allclose(traj.levels, 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        qp.cartan_trajectory(evo, [1.0])


def test_bloch_start_continuity_enforced():
    with pytest.raises(ValueError):
        qp.LocalEvolution(2, [
            qp.BlochLoop(theta_end=1.0, phi_rate=0.0, duration=1.0),
            qp.BlochLoop(theta_end=0.5, phi_rate=0.0, duration=1.0,
                         theta_start=0.3)])


def test_time_grid_validation():
    with pytest.raises(ValueError):
        qp.TimeGrid(1.0, 3)  # odd
    with pytest.raises(ValueError):
        qp.TimeGrid(0.0, 4)
    grid = qp.TimeGrid(2.0, 4)
    np.testing.assert_allclose(grid.times(), [0, 0.5, 1.0, 1.5, 2.0])


def test_pair_evolution_validation():
    a = qp.LocalEvolution(2, [qp.CartanHold(1.0)])
    b = qp.LocalEvolution(2, [qp.CartanHold(2.0)])
    with pytest.raises(ValueError):
        qp.PairEvolution(a, b, qp.TimeGrid(2.0, 10))  # A too short
    # boundary off the grid
    c = qp.LocalEvolution(2, [qp.CartanLinear(np.array([1.0, -1.0]), 0.37),
                              qp.CartanHold(1.63)])
    with pytest.raises(ValueError):
        qp.PairEvolution(c, b, qp.TimeGrid(2.0, 10))
    qp.PairEvolution(c, b, qp.TimeGrid(2.0, 200))  # 0.37 = 37 * dt
