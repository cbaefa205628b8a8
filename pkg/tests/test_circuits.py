import math

import numpy as np
import pytest

from rcalab.circuits import (
    ChainState,
    ControlledAdd,
    PermutationGate,
    ReversibleNetwork,
    Swap,
    Toffoli,
    Translate,
    alternating_cnot_network,
    apply_layer,
    chain_mixing_time,
    check_finite_bound,
    evolve_chain_exact,
    network_from_json,
    network_to_json,
    worst_case_curve,
    worst_case_distance,
)
from rcalab.lattice import Alphabet
from rcalab.noise import additive_noise

Z2 = Alphabet((2,))
Z3 = Alphabet((3,))
Q91 = additive_noise(Z2, [0.9, 0.1])


def single_site_identity():
    return ReversibleNetwork(1, Z2, ((Translate(0, 0),),), "cycle")


def test_cnot_gate_semantics():
    net = ReversibleNetwork(2, Z2, ((ControlledAdd(0, 1),),), "cycle")
    perm = net.layer_permutation(0)
    # patterns encoded first site most significant: 10 -> 11, 11 -> 10
    assert perm[0b10] == 0b11
    assert perm[0b11] == 0b10
    assert perm[0b00] == 0b00 and perm[0b01] == 0b01


def test_gate_zoo_bijective():
    gates = [
        (Translate(0, 1), Z2, 3),
        (Swap(0, 2), Z2, 3),
        (Toffoli(0, 1, 2), Z2, 3),
        (PermutationGate((0, 1), (2, 0, 3, 1)), Z2, 3),
        (Translate(1, 2), Z3, 2),
        (ControlledAdd(0, 1), Z3, 2),
        (Toffoli(0, 1, 2), Z3, 3),
    ]
    for gate, alphabet, n in gates:
        net = ReversibleNetwork(n, alphabet, ((gate,),), "cycle")
        perm = net.layer_permutation(0)
        assert sorted(perm.tolist()) == list(range(alphabet.size ** n))


def test_toffoli_semantics():
    net = ReversibleNetwork(3, Z2, ((Toffoli(0, 1, 2),),), "cycle")
    perm = net.layer_permutation(0)
    assert perm[0b110] == 0b111
    assert perm[0b111] == 0b110
    assert perm[0b100] == 0b100


def test_permutation_gate_validation():
    with pytest.raises(ValueError):
        PermutationGate((0,), (0, 0))


def test_disjoint_sites_enforced():
    with pytest.raises(ValueError):
        ReversibleNetwork(2, Z2, ((ControlledAdd(0, 1), Translate(1, 1)),), "cycle")


def test_layer_preserves_entropy():
    rng = np.random.default_rng(0)
    net = alternating_cnot_network(4)
    state = ChainState(Z2, 4, rng.dirichlet(np.ones(16)))
    for li in (0, 1):
        out = apply_layer(state, net, li)
        assert out.entropy() == pytest.approx(state.entropy(), abs=1e-12)


def test_identity_layer_noop():
    state = ChainState.point_mass(Z2, 1, 1)
    out = apply_layer(state, single_site_identity(), 0)
    assert np.array_equal(out.probs, state.probs)


def test_single_site_closed_form():
    net = single_site_identity()
    for t in (0, 1, 3, 7):
        out = evolve_chain_exact(ChainState.point_mass(Z2, 1, 0), net, Q91, t)
        p1 = (1 - 0.8 ** t) / 2
        assert out.probs == pytest.approx([1 - p1, p1], abs=1e-14)
        assert out.t == t


def test_uniform_is_stationary():
    net = alternating_cnot_network(4)
    state = ChainState.uniform(Z2, 4)
    out = evolve_chain_exact(state, net, Q91, 5)
    assert np.abs(out.probs - 1 / 16).max() < 1e-14


def test_entropy_recursion_along_chain():
    # H(X^t) >= kappa |A| h_max + (1-kappa) H(X^{t-1}) at every step
    net = alternating_cnot_network(4)
    state = ChainState.point_mass(Z2, 4, 5)
    h_prev = state.entropy()
    for t in range(1, 12):
        state = evolve_chain_exact(state, net, Q91, 1)
        h = state.entropy()
        assert h >= 0.2 * 4 * math.log(2) + 0.8 * h_prev - 1e-12
        h_prev = h


def test_worst_case_distance_t0():
    for n in (1, 2, 3):
        net = alternating_cnot_network(max(n, 2))
        val, mode = worst_case_distance(net, Q91, 0)
        k = 2 ** max(n, 2)
        assert val == pytest.approx(1 - 1 / k)
        assert mode == "exact"


def test_single_site_distance_closed_form():
    net = single_site_identity()
    d_curve, xi_curve, mode = worst_case_curve(net, Q91, 10)
    for t in range(11):
        assert d_curve[t] == pytest.approx(0.8 ** t / 2, abs=1e-14)


def test_distance_non_increasing():
    net = alternating_cnot_network(6)
    d_curve, _, _ = worst_case_curve(net, Q91, 20)
    assert (np.diff(d_curve) <= 1e-12).all()


def test_chain_mixing_time_single_site():
    cm = chain_mixing_time(single_site_identity(), Q91, 0.1, horizon=20)
    assert cm.converged and cm.t_mix == 8
    cm0 = chain_mixing_time(single_site_identity(), Q91, 0.95, horizon=20)
    assert cm0.t_mix == 0
    # mixing time non-increasing in epsilon
    prev = None
    for eps in (0.02, 0.05, 0.1, 0.3):
        cm = chain_mixing_time(single_site_identity(), Q91, eps, horizon=40)
        if prev is not None:
            assert cm.t_mix <= prev
        prev = cm.t_mix


def test_check_finite_bound_example():
    net = alternating_cnot_network(4)
    rep = check_finite_bound(net, Q91, 10)
    assert rep.ok
    assert rep.rhs == pytest.approx(math.sqrt(math.log(2) / 2) * 2 * 0.8 ** 5, abs=1e-12)
    assert rep.params["xi_ok"]
    # t=0 vacuous for |A| >= 3
    rep0 = check_finite_bound(alternating_cnot_network(4), Q91, 0)
    assert rep0.rhs >= 1.0 and rep0.ok


def test_uniform_noise_mixes_in_one_step():
    uniform_noise = additive_noise(Z2, [0.5, 0.5])
    net = alternating_cnot_network(2)
    d_curve, _, _ = worst_case_curve(net, uniform_noise, 1)
    assert d_curve[1] == pytest.approx(0.0, abs=1e-14)


def test_commuting_gate_order():
    layer_ab = (ControlledAdd(0, 1), ControlledAdd(2, 3))
    layer_ba = (ControlledAdd(2, 3), ControlledAdd(0, 1))
    net1 = ReversibleNetwork(4, Z2, (layer_ab,), "cycle")
    net2 = ReversibleNetwork(4, Z2, (layer_ba,), "cycle")
    assert np.array_equal(net1.layer_permutation(0), net2.layer_permutation(0))


def test_schedules():
    layers = ((Translate(0, 1),), (ControlledAdd(0, 1),))
    fixed = ReversibleNetwork(2, Z2, layers, "fixed")
    assert fixed.layer_index_at(1) == 0 and fixed.layer_index_at(2) == 1
    with pytest.raises(ValueError):
        fixed.layer_index_at(3)
    cycle = ReversibleNetwork(2, Z2, layers, "cycle")
    assert [cycle.layer_index_at(t) for t in (1, 2, 3, 4)] == [0, 1, 0, 1]
    rand = ReversibleNetwork(2, Z2, layers, ("random", 99))
    seq1 = [rand.layer_index_at(t) for t in range(1, 30)]
    seq2 = [rand.layer_index_at(t) for t in range(1, 30)]
    assert seq1 == seq2
    assert set(seq1) == {0, 1}


def test_sampled_sup_mode_flag():
    net = alternating_cnot_network(8)
    val_exact, mode_exact = worst_case_distance(net, Q91, 3)
    val_sample, mode_sample = worst_case_distance(net, Q91, 3, exact_cap=4)
    assert mode_exact == "exact" and mode_sample == "sampled-lower-bound"
    assert val_sample <= val_exact + 1e-12


def test_network_json_roundtrip():
    net = ReversibleNetwork(
        3,
        Z2,
        (
            (Translate(0, 1), Swap(1, 2)),
            (Toffoli(0, 1, 2),),
            (PermutationGate((0, 1), (1, 0, 2, 3)),),
        ),
        ("random", 5),
    )
    doc = network_to_json(net)
    back = network_from_json(doc)
    assert network_to_json(back) == doc
    for li in range(3):
        assert np.array_equal(net.layer_permutation(li), back.layer_permutation(li))
