import json

import numpy as np
import pytest

from grac import equivalence as eq
from grac import rac
from grac import xor_game as xg


@pytest.mark.parametrize("n", range(2, 7))
def test_game_to_rac_index_strategy(n):
    r = eq.strategy_to_rac(xg.index_strategy(n), n)
    bias = rac.decode_bias(r)
    assert bias.average_case == pytest.approx(1 / np.sqrt(n), abs=1e-9)
    rep = rac.parity_report(r)
    assert rep.even_parity_oblivious


def test_game_to_rac_without_shared_bit():
    r = eq.strategy_to_rac(xg.index_strategy(3), 3, shared_bit=False)
    assert rac.decode_bias(r).average_case == pytest.approx(1 / np.sqrt(3), abs=1e-9)
    assert r.dim == xg.index_strategy(3).dims[1]


def test_game_to_rac_classical_strategy():
    game = xg.index_game(3)
    bias, strat = xg.classical_bias_bruteforce(game)
    r = eq.strategy_to_rac(strat.observables(), 3)
    assert rac.decode_bias(r).average_case == pytest.approx(bias, abs=1e-12)
    assert rac.parity_report(r).even_parity_oblivious


def test_conditional_states_normalisation():
    cond = eq.conditional_states(xg.index_strategy(3))
    traces = np.einsum("saii->sa", cond).real
    assert np.allclose(traces.sum(axis=1), 1)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("variant", ["rho", "sigma"])
def test_rac_to_game(n, variant):
    r = rac.build_rho_rac(n) if variant == "rho" else rac.build_sigma_rac(n)
    strat, fam = eq.rac_to_strategy(r)
    game_bias = xg.strategy_bias(xg.index_game(n), strat)
    assert game_bias == pytest.approx(rac.decode_bias(r).average_case, abs=1e-6)
    assert fam.reduced_state_error() <= 1e-8
    assert np.min(fam.fidelities()) >= 1 - 1e-8


def test_rac_to_game_of_composed_odd_rac_is_rejected():
    # compose leaks even parities, so no strategy can be built
    small = rac.compose(rac.build_sigma_rac(2), rac.build_sigma_rac(2))
    with pytest.raises(eq.NotEvenParityObliviousError):
        eq.rac_to_strategy(small)


def test_rac_to_game_rejects_leaky_and_oversized():
    with pytest.raises(eq.NotEvenParityObliviousError):
        eq.rac_to_strategy(rac.classical_basis_rac(2))
    with pytest.raises(ValueError):
        eq.rac_to_strategy(rac.build_sigma_rac(5))


def test_rac_to_game_rejects_non_projective():
    with pytest.raises(ValueError):
        eq.rac_to_strategy(rac.maximally_mixed_rac(2))


def test_round_trip_game_rac_game():
    n = 3
    r = eq.strategy_to_rac(xg.index_strategy(n), n)
    strat, _ = eq.rac_to_strategy(r)
    assert xg.strategy_bias(xg.index_game(n), strat) == pytest.approx(1 / np.sqrt(n), abs=1e-6)


def test_all_parities_hidden_check():
    assert eq.all_parities_hidden_check(np.stack([np.eye(2) / 2] * 4))
    assert not eq.all_parities_hidden_check(np.stack([np.eye(2) / 2, np.diag([1.0, 0.0])]))
    with pytest.raises(ValueError):
        eq.all_parities_hidden_check(np.stack([np.eye(2) / 2]))


def test_purify_reproduces_state():
    rng = np.random.default_rng(4)
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    m = eq.purify(rho)
    # rows index the purifying system
    assert np.allclose(m.T @ m.conj(), rho)


@pytest.mark.parametrize("n", range(2, 7))
def test_di_honest(n):
    prep = eq.di_prepare(n)
    assert eq.even_parity_nosignalling_check(n)
    assert rac.decode_bias(prep.rac).worst_case == pytest.approx(1 / np.sqrt(n), abs=1e-9)
    assert prep.leak.parity_oblivious


def test_di_mask_attack_leaks_only_odd():
    adv = eq.AdversaryModel(mask=(1, 2, 3))
    prep = eq.di_prepare(4, adv)
    assert prep.leak.per_subset[(1, 2, 3)] == pytest.approx(1.0, abs=1e-9)
    assert prep.leak.max_leak(lambda k: k >= 2 and k % 2 == 0) <= 1e-9
    assert prep.leak.even_parity_oblivious and not prep.leak.odd_parity_oblivious
    assert eq.even_parity_nosignalling_check(4, adv)


@pytest.mark.parametrize("constant", [0, 1])
def test_di_constant_and_no_d(constant):
    adv = eq.AdversaryModel(mask=(1,), constant=constant, uses_random_d=False)
    prep = eq.di_prepare(2, adv)
    # x'_1 = s_1 xor s_1 xor c = c always
    support = prep.rac.weights.reshape(2, 2).sum(axis=1)
    assert support[constant] == pytest.approx(1) and support[1 - constant] == pytest.approx(0)
    assert prep.leak.even_parity_oblivious


def test_di_function_adversary():
    adv = eq.AdversaryModel(function=lambda s: s[0] & s[1])
    prep = eq.di_prepare(3, adv)
    assert prep.leak.even_parity_oblivious
    assert eq.even_parity_nosignalling_check(3, adv)


def test_adversary_json(tmp_path):
    spec = {"rule": {"parity_mask": [1, 3], "constant": 1}, "use_d": False}
    path = tmp_path / "adv.json"
    path.write_text(json.dumps(spec))
    adv = eq.load_adversary(path)
    assert adv.mask == (1, 3) and adv.constant == 1 and not adv.uses_random_d
    assert adv.to_dict() == spec
    assert adv.outcome((1, 0, 1)) == 1
    assert eq.AdversaryModel.from_dict({"rule": "honest"}).honest
    with pytest.raises(ValueError):
        eq.AdversaryModel.from_dict({"rule": "guess"})
    with pytest.raises(ValueError):
        eq.AdversaryModel.from_dict({"rule": {"parity_mask": [1], "constant": 2}})
    with pytest.raises(ValueError):
        eq.AdversaryModel().outcome((0, 1))


def test_parity_outputting_strategy_leaks_odd_parity():
    s = xg.index_game(3)
    bits = np.array([[int(c) for c in a] for a in s.alice_inputs])
    rule = tuple(int(v) for v in bits[:, 0] ^ bits[:, 1] ^ bits[:, 2])
    r = eq.strategy_to_rac(xg.ClassicalStrategy((0, 0, 0), rule).observables(), 3)
    assert rac.parity_bias(r, (1, 2, 3)) == pytest.approx(1, abs=1e-12)
    assert rac.parity_report(r).even_parity_oblivious


def test_trivial_strategy_gives_useless_rac():
    ref = xg.index_strategy(3)
    triv = xg.GameStrategy(ref.shared_state, ref.dims, np.stack([np.eye(2)] * 8), ref.bob_obs)
    r = eq.strategy_to_rac(triv, 3)
    assert np.allclose(r.states, r.states[0])
    assert np.allclose(rac.decode_bias(r).per_bit, 0, atol=1e-12)


def test_sigma_family_hides_all_parities():
    r = rac.build_sigma_rac(3)
    symmetric = 0.5 * (r.states + r.states[::-1])
    assert eq.all_parities_hidden_check(symmetric)
    assert not eq.all_parities_hidden_check(r.states)
    assert not eq.all_parities_hidden_check(rac.classical_basis_rac(2).states)


@pytest.mark.parametrize(
    "n,mask,constant",
    [(n, m, c) for n in (2, 3, 4) for m, c in (((1,), 0), ((1, 2), 1), ((2, 3), 0)) if max(m) <= n],
)
def test_classical_adversaries_keep_even_parities(n, mask, constant):
    for use_d in (True, False):
        adv = eq.AdversaryModel(mask=mask, constant=constant, uses_random_d=use_d)
        assert eq.even_parity_nosignalling_check(n, adv)
