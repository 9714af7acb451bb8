import numpy as np
import pytest

from paulibench import CapabilityError, PauliChannel, UsageError, mub_covering
from paulibench import dense_oracle as oracle
from paulibench.pauli import parse_bits, symp
from paulibench.sampler import outcome_distribution_alg1
from paulibench.stabilizer import StabilizerGroup


def test_pauli_matrices():
    x = oracle.pauli_matrix(parse_bits("X", 1), 1)
    z = oracle.pauli_matrix(parse_bits("Z", 1), 1)
    y = oracle.pauli_matrix(parse_bits("Y", 1), 1)
    assert np.allclose(x @ z + 1j * y, 0)  # XZ = -iY
    xz = oracle.pauli_matrix(parse_bits("XZ", 2), 2)
    assert np.allclose(xz, np.kron(x, z))
    for n in (1, 2):
        stack = oracle.pauli_stack(n)
        for a in range(4**n):
            assert np.allclose(stack[a] @ stack[a], np.eye(2**n))
            assert np.allclose(stack[a], stack[a].conj().T)
            for b in range(4**n):
                sign = (-1) ** symp(a, b)
                assert np.allclose(stack[a] @ stack[b],
                                   sign * stack[b] @ stack[a])


def test_bell_projector_expansion():
    # Psi_v = 4^-k sum_u (-1)^<u,v> P_u x P_u^T
    for k in (1, 2):
        stack = oracle.pauli_stack(k)
        for v in (0, 1, 4**k - 1):
            direct = oracle.build_bell(v, k)
            expansion = sum(
                (-1) ** symp(u, v) * np.kron(stack[u], stack[u].T)
                for u in range(4**k)
            ) / 4**k
            assert np.max(np.abs(direct - expansion)) < 1e-12


def test_bell_basis_orthonormal_complete():
    for k in (1, 2):
        projs = oracle.bell_projector_stack(k)
        total = projs.sum(axis=0)
        assert np.max(np.abs(total - np.eye(4**k))) < 1e-12
        for v in range(4**k):
            for w in range(4**k):
                overlap = np.trace(projs[v] @ projs[w]).real
                assert abs(overlap - (v == w)) < 1e-12


def test_stabilizer_states():
    z1 = StabilizerGroup(1, (parse_bits("Z", 1),))
    assert np.allclose(oracle.build_stabilizer_state(z1, 0),
                       np.diag([1.0, 0.0]))
    assert np.allclose(oracle.build_stabilizer_state(z1, 1),
                       np.diag([0.0, 1.0]))
    for grp in mub_covering(2).groups:
        states = [oracle.build_stabilizer_state(grp, e) for e in range(4)]
        assert np.max(np.abs(sum(states) - np.eye(4))) < 1e-12
        for e, state in enumerate(states):
            oracle.check_density(state)
            for j, g in enumerate(grp.generators):
                sign = (-1) ** ((e >> j) & 1)
                pauli = oracle.pauli_matrix(g, 2)
                assert np.max(np.abs(pauli @ state - sign * state)) < 1e-12


def test_alg1_dense_point_mass():
    grp = mub_covering(1).groups[0]
    table = oracle.alg1_distribution_dense(PauliChannel.identity(2), 1, grp)
    assert table[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert table.sum() == pytest.approx(1.0, abs=1e-12)


def test_alg1_dense_matches_fast_path():
    rng = np.random.default_rng(0)
    z1 = StabilizerGroup(1, (parse_bits("Z", 1),))
    ch = PauliChannel.depolarizing(2, 0.3)
    dense = oracle.alg1_distribution_dense(ch, 1, z1)
    fast = outcome_distribution_alg1(ch, 1, z1)
    assert np.max(np.abs(dense - fast)) < 1e-12
    ch2 = PauliChannel.random_dirichlet(3, rng)
    for grp in mub_covering(2).groups[:2]:
        dense = oracle.alg1_distribution_dense(ch2, 1, grp)
        fast = outcome_distribution_alg1(ch2, 1, grp)
        assert np.max(np.abs(dense - fast)) < 1e-10


def test_alg1_dense_marginals_recover_eigenvalues():
    # inverting the outcome distribution recovers lambda on covered labels
    rng = np.random.default_rng(1)
    ch = PauliChannel.random_dirichlet(2, rng)
    k = 1
    grp = StabilizerGroup(1, (parse_bits("Y", 1),))
    table = oracle.alg1_distribution_dense(ch, k, grp)
    for u in range(4):
        for alpha, s in enumerate(grp.elements()):
            acc = 0.0
            for v in range(4):
                for e in range(2):
                    sign = symp(u, v) ^ ((alpha & e).bit_count() & 1)
                    acc += table[v, e] * (-1.0) ** sign
            label = u | (s << 2)
            assert acc == pytest.approx(float(ch.eigenvalues[label]), abs=1e-10)


def test_choi_state_expansion():
    rng = np.random.default_rng(2)
    for n in (1, 2):
        ch = PauliChannel.random_dirichlet(n, rng)
        choi = oracle.choi_state(ch)
        oracle.check_density(choi)
        stack = oracle.pauli_stack(n)
        expansion = sum(
            ch.eigenvalues[a] * np.kron(stack[a], stack[a].T)
            for a in range(4**n)
        ) / 4**n
        assert np.max(np.abs(choi - expansion)) < 1e-12


def test_teleportation_identity_channel():
    rng = np.random.default_rng(3)
    ch = PauliChannel.identity(1)
    choi = oracle.choi_state(ch)
    vec = rng.normal(size=2) + 1j * rng.normal(size=2)
    vec /= np.linalg.norm(vec)
    rho = np.outer(vec, vec.conj())
    probs, states = oracle.teleport_branches(choi, rho)
    assert np.allclose(probs, 0.25, atol=1e-12)
    for state in states:
        assert np.max(np.abs(state - rho)) < 1e-12
    sampled = oracle.teleport_apply(choi, rho, rng)
    assert np.max(np.abs(sampled - rho)) < 1e-12


def test_teleportation_depolarizing_and_spike():
    rng = np.random.default_rng(4)
    dep = PauliChannel.fully_depolarizing(1)
    rho = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    _, states = oracle.teleport_branches(oracle.choi_state(dep), rho)
    for state in states:
        assert np.max(np.abs(state - np.eye(2) / 2)) < 1e-12
    spike = PauliChannel.spike(1, parse_bits("Z", 1), +1)
    plus = np.full((2, 2), 0.5)
    expected = oracle.apply_pauli_channel(spike, plus)
    assert np.max(np.abs(expected - np.eye(2) / 2)) < 1e-12
    _, states = oracle.teleport_branches(oracle.choi_state(spike), plus)
    for state in states:
        assert np.max(np.abs(state - expected)) < 1e-10


def test_teleportation_all_branches_random_channels():
    rng = np.random.default_rng(5)
    for trial in range(8):
        n = 1 + trial % 2
        ch = PauliChannel.random_dirichlet(n, rng)
        choi = oracle.choi_state(ch)
        vec = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        vec /= np.linalg.norm(vec)
        rho = np.outer(vec, vec.conj())
        expected = oracle.apply_pauli_channel(ch, rho)
        probs, states = oracle.teleport_branches(choi, rho)
        assert np.max(np.abs(probs - 4.0**-n)) < 1e-10
        for state in states:
            assert np.max(np.abs(state - expected)) < 1e-10


def test_mutual_info_worked_example():
    # |0> input, computational measurement: I = ln(2)/3 exactly
    vec = np.array([1.0, 0.0], dtype=complex)
    povm = [(0.5, np.array([1.0, 0.0], dtype=complex)),
            (0.5, np.array([0.0, 1.0], dtype=complex))]
    res = oracle.mutual_info_check(1, 0, vec, povm)
    assert res.bound == pytest.approx(1.0)
    assert res.info_nats == pytest.approx(np.log(2) / 3, abs=1e-12)
    assert res.satisfied
    # independent plain-loop entropy evaluation over the 6 channels
    cond = res.conditionals
    mean = cond.mean(axis=0)
    plain = 0.0
    for row in cond:
        for j, p in enumerate(row):
            if p > 0:
                plain += p * (np.log(p) - np.log(mean[j])) / len(cond)
    assert plain == pytest.approx(res.info_nats, abs=1e-12)


def test_mutual_info_bell_strategy():
    # Bell input + Bell measurement at n=k=1: I = ln 2, bound = 2
    vec = oracle.bell_state_vector(0, 1)
    povm = [(0.25, oracle.bell_state_vector(v, 1)) for v in range(4)]
    res = oracle.mutual_info_check(1, 1, vec, povm)
    assert res.bound == pytest.approx(2.0)
    assert res.info_nats == pytest.approx(np.log(2), abs=1e-12)


def test_mutual_info_random_strategies_obey_bound():
    for n, k in [(1, 0), (1, 1), (2, 0), (2, 2)]:
        rng = np.random.default_rng(10 * n + k)
        for _ in range(25):
            vec, povm = oracle.random_strategy(n, k, rng)
            res = oracle.mutual_info_check(n, k, vec, povm)
            assert res.info_nats <= res.bound + 1e-9
            closed = oracle.spike_conditionals_closed_form(n, k, vec, povm)
            assert np.max(np.abs(closed - res.conditionals)) < 1e-10


def test_mutual_info_povm_validation():
    vec = np.array([1.0, 0.0], dtype=complex)
    bad = [(0.9, np.array([1.0, 0.0], dtype=complex))]
    with pytest.raises(UsageError, match="identity"):
        oracle.mutual_info_check(1, 0, vec, bad)
    with pytest.raises(UsageError, match="normalized"):
        oracle.mutual_info_check(1, 0, 2 * vec,
                                 [(0.5, vec), (0.5, np.array([0, 1.0]))])


def test_dense_channel_validation():
    with pytest.raises(UsageError, match="trace preserving"):
        oracle.DenseChannel(1, (np.eye(2, dtype=complex) * 0.5,))
    ad = oracle.DenseChannel.amplitude_damping(0.3)
    rho = np.array([[0.2, 0.3], [0.3, 0.8]], dtype=complex)
    out = ad.apply(rho)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    assert out[0, 0].real == pytest.approx(0.2 + 0.3 * 0.8, abs=1e-12)


def test_amplitude_damping_twirl_eigenvalues():
    gamma = 0.1
    lam = oracle.DenseChannel.amplitude_damping(gamma).twirl_eigenvalues()
    root = np.sqrt(1 - gamma)
    # label order (I, X, Z, Y)
    assert np.allclose(lam, [1.0, root, 1 - gamma, root], atol=1e-12)


def test_ptm_of_pauli_channel_is_diagonal():
    rng = np.random.default_rng(6)
    ch = PauliChannel.random_dirichlet(2, rng)
    ptm = oracle.DenseChannel.from_pauli(ch).ptm()
    assert np.max(np.abs(ptm - np.diag(ch.eigenvalues))) < 1e-12


def test_alg2_noiseless_constant_is_one():
    for n in (1, 2):
        gate = oracle.DenseChannel.identity(n)
        prep = oracle.build_bell(0, n)
        povm = oracle.bell_projector_stack(n)
        for a in range(4**n):
            assert oracle.alg2_constant(n, gate, prep, povm, a) == pytest.approx(
                1.0, abs=1e-12)
            for m in (0, 1, 3):
                assert oracle.alg2_expectation_dense(
                    n, gate, prep, povm, a, m) == pytest.approx(1.0, abs=1e-12)


def test_alg2_pauli_closed_form_cross_path():
    rng = np.random.default_rng(7)
    n = 2
    gate_p = PauliChannel.random_dirichlet(n, rng, alpha=10.0)
    prep_p = PauliChannel.depolarizing(n, 0.06)
    meas_p = PauliChannel.depolarizing(n, 0.11)
    gate = oracle.DenseChannel.from_pauli(gate_p)
    prep = oracle.noisy_bell_state(n, oracle.DenseChannel.from_pauli(prep_p))
    povm = oracle.noisy_bell_povm(n, oracle.DenseChannel.from_pauli(meas_p))
    for a in rng.integers(0, 16, size=6):
        a = int(a)
        expected_const = prep_p.eigenvalue(a) * meas_p.eigenvalue(a) * \
            gate_p.eigenvalue(a)
        assert oracle.alg2_constant(n, gate, prep, povm, a) == pytest.approx(
            expected_const, abs=1e-10)
        for m in (0, 2, 4):
            closed = expected_const * gate_p.eigenvalue(a) ** m
            assert oracle.alg2_expectation_dense(
                n, gate, prep, povm, a, m) == pytest.approx(closed, abs=1e-10)


def test_alg2_amplitude_damping_brute_force():
    gamma = 0.1
    gate = oracle.DenseChannel.amplitude_damping(gamma)
    prep = oracle.build_bell(0, 1)
    povm = oracle.bell_projector_stack(1)
    lam_z = 1 - gamma
    z = parse_bits("Z", 1)
    a_z = oracle.alg2_constant(1, gate, prep, povm, z)
    for m in (0, 1, 2, 3, 4):
        brute = oracle.alg2_expectation_brute(1, gate, prep, povm, z, m)
        dense = oracle.alg2_expectation_dense(1, gate, prep, povm, z, m)
        assert brute == pytest.approx(dense, abs=1e-12)
        assert brute == pytest.approx(a_z * lam_z**m, abs=1e-12)


def test_capability_limits():
    with pytest.raises(CapabilityError):
        oracle.pauli_matrix(0, 7)
    with pytest.raises(CapabilityError):
        oracle.alg2_expectation_dense(
            1, oracle.DenseChannel.identity(1), oracle.build_bell(0, 1),
            oracle.bell_projector_stack(1), 0, 9)
    with pytest.raises(CapabilityError):
        oracle.alg2_expectation_brute(
            2, oracle.DenseChannel.identity(2), oracle.build_bell(0, 2),
            oracle.bell_projector_stack(2), 0, 8)


def test_density_checks():
    with pytest.raises(UsageError):
        oracle.check_density(np.array([[0.5, 0.6], [0.6, 0.5]]) * 1j)
    with pytest.raises(UsageError):
        oracle.check_density(np.diag([0.7, 0.7]))
    with pytest.raises(UsageError):
        oracle.check_density(np.diag([1.5, -0.5]))
