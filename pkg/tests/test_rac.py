import itertools
import json

import numpy as np
import pytest

from grac import rac
from grac.observables import alice_observable, bitstrings, build_family


def joint_tau(n: int) -> np.ndarray:
    """Bob's post-measurement states from an explicit simulation of the EPR state."""
    fam = build_family(n)
    d = fam.dim
    psi = np.eye(d).reshape(-1) / np.sqrt(d)
    joint = np.outer(psi, psi.conj())
    out = np.empty((2 ** n, 2, d, d), dtype=complex)
    for i, x in enumerate(bitstrings(n)):
        ax = alice_observable(fam, x)
        for a in (0, 1):
            proj = np.kron((np.eye(d) + (-1) ** a * ax) / 2, np.eye(d))
            post = (proj @ joint @ proj).reshape(d, d, d, d)
            bob = np.einsum("ijik->jk", post)
            out[i, a] = bob / np.trace(bob).real
    return out


def helstrom(states: np.ndarray, weights: np.ndarray, labels: np.ndarray) -> float:
    """Prior-weighted bias of guessing ``labels`` from the states."""
    diff = sum(w * (1 - 2 * l) * s for s, w, l in zip(states, weights, labels))
    return float(np.sum(np.linalg.svd(diff, compute_uv=False)))


@pytest.mark.parametrize("n", range(2, 7))
def test_tau_closed_form_matches_simulation(n):
    assert np.max(np.abs(rac.tau_states(n) - joint_tau(n))) <= 1e-10


@pytest.mark.parametrize("n", range(2, 9))
def test_sigma_rac_bias_and_dim(n):
    r = rac.build_sigma_rac(n)
    assert r.dim == 2 ** (n // 2)
    rep = rac.decode_bias(r)
    assert rep.worst_case == pytest.approx(1 / np.sqrt(n), abs=1e-12)
    assert rep.average_case == pytest.approx(1 / np.sqrt(n), abs=1e-12)


@pytest.mark.parametrize("n", range(2, 7))
def test_rho_rac_matches_sigma_bias(n):
    rho, sig = rac.build_rho_rac(n), rac.build_sigma_rac(n)
    assert rho.dim == 2 * sig.dim
    assert np.allclose(rac.decode_bias(rho).per_bit, rac.decode_bias(sig).per_bit, atol=1e-12)


@pytest.mark.parametrize("n", range(2, 7))
@pytest.mark.parametrize("variant", ["rho", "sigma"])
def test_parity_oblivious(n, variant):
    r = rac.build_rho_rac(n) if variant == "rho" else rac.build_sigma_rac(n)
    rep = rac.parity_report(r)
    assert rep.parity_oblivious and rep.even_parity_oblivious and rep.odd_parity_oblivious
    assert rep.max_leak() <= 1e-9


def test_parity_bias_matches_helstrom_oracle():
    r = rac.compose(rac.build_sigma_rac(3), rac.build_sigma_rac(2))
    for subset in [(1,), (1, 4), (2, 5), (1, 2, 4), (3, 4, 5)]:
        labels = rac.subset_parities(r.n, subset)
        assert rac.parity_bias(r, subset) == pytest.approx(helstrom(r.states, r.weights, labels), abs=1e-12)


def test_compose_example():
    half = rac.build_sigma_rac(3)
    r = rac.compose(half, half)
    assert r.n == 6 and r.dim == 4
    bias = rac.decode_bias(r)
    assert np.allclose(bias.per_bit, 1 / np.sqrt(3), atol=1e-12)
    assert bias.worst_case > 1 / np.sqrt(6)
    # parity of one bit from each half: product of the two single-bit biases
    assert rac.parity_bias(r, (1, 4)) == pytest.approx(1 / 3, abs=1e-12)
    rep = rac.parity_report(r)
    assert rep.odd_parity_oblivious
    assert not rep.even_parity_oblivious
    assert not rep.parity_oblivious


def test_hyperbit_sum_direct_oracle():
    half = rac.build_sigma_rac(3)
    r = rac.compose(half, half)
    direct = 0.0
    for k in range(1, 7):
        for subset in itertools.combinations(range(1, 7), k):
            labels = rac.subset_parities(6, subset)
            direct += helstrom(r.states, r.weights, labels) ** 2
    assert rac.hyperbit_sum(r) == pytest.approx(direct, abs=1e-10)
    assert rac.hyperbit_sum(r) == pytest.approx(3.0, abs=1e-10)
    assert rac.hyperbit_sum(rac.build_sigma_rac(5)) == pytest.approx(1.0, abs=1e-10)


def _relabel(r: rac.QuantumRac, perm: tuple[int, ...]) -> rac.QuantumRac:
    """Bit ``t`` of the new RAC is bit ``perm[t-1]`` of the old one."""
    bits = bitstrings(r.n)
    old_index = [rac.index_of(row[np.argsort(perm)]) for row in bits]
    # new x has x_new[t] = x_old[perm[t]]; old x is recovered by inverting
    states = r.states[old_index]
    decoders = r.decoders[[p - 1 for p in perm]]
    return rac.QuantumRac(r.n, states, decoders)


def test_relabel_invariance():
    r = rac.build_sigma_rac(4)
    perm = (3, 1, 4, 2)
    q = _relabel(r, perm)
    assert np.allclose(rac.decode_bias(q).per_bit, rac.decode_bias(r).per_bit)
    for subset in rac.all_subsets(4):
        mapped = tuple(perm[i - 1] for i in subset)
        assert rac.parity_bias(q, subset) == pytest.approx(rac.parity_bias(r, mapped), abs=1e-12)


def test_relabel_composed_leaks_move_with_bits():
    half = rac.build_sigma_rac(3)
    r = rac.compose(half, half)
    perm = (4, 2, 6, 1, 5, 3)
    q = _relabel(r, perm)
    for subset in [(1, 4), (1, 2), (3, 5)]:
        mapped = tuple(perm[i - 1] for i in subset)
        assert rac.parity_bias(q, subset) == pytest.approx(rac.parity_bias(r, mapped), abs=1e-12)


@pytest.mark.parametrize("w", [0.25, 0.5])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_noise_scales_bias(n, w):
    r = rac.build_sigma_rac(n)
    noisy = rac.QuantumRac(n, w * r.states + (1 - w) * np.eye(r.dim) / r.dim, r.decoders)
    assert np.allclose(rac.decode_bias(noisy).per_bit, w / np.sqrt(n), atol=1e-12)
    assert all(a <= b + 1e-12 for a, b in zip(rac.decode_bias(noisy).per_bit, rac.decode_bias(r).per_bit))
    assert rac.parity_report(noisy).parity_oblivious


def test_reference_racs():
    assert rac.decode_bias(rac.maximally_mixed_rac(3)).worst_case == pytest.approx(0)
    assert rac.parity_report(rac.maximally_mixed_rac(3)).parity_oblivious
    cl = rac.classical_basis_rac(3)
    assert rac.decode_bias(cl).worst_case == pytest.approx(1)
    assert rac.parity_bias(cl, (1, 2)) == pytest.approx(1)
    assert not rac.parity_report(cl).even_parity_oblivious


def test_validation_errors():
    r = rac.build_sigma_rac(2)
    with pytest.raises(ValueError):
        rac.QuantumRac(3, r.states, r.decoders)
    bad = r.states.copy()
    bad[0] = np.diag([1.5, -0.5])
    with pytest.raises(ValueError):
        rac.QuantumRac(2, bad, r.decoders)
    dec = r.decoders.copy()
    dec[0, 1] = dec[0, 0]
    with pytest.raises(ValueError):
        rac.QuantumRac(2, r.states, dec)
    with pytest.raises(ValueError):
        rac.QuantumRac(2, r.states, r.decoders, prior=np.array([0.5, 0.5, 0.5, -0.5]))


def test_exhaustive_cap(monkeypatch):
    r = rac.build_sigma_rac(4)
    with pytest.raises(ValueError):
        rac.parity_report(r, max_n=3)
    monkeypatch.setenv("GRAC_MAX_N", "3")
    with pytest.raises(ValueError):
        rac.parity_report(r)
    monkeypatch.setenv("GRAC_MAX_N", "4")
    assert rac.parity_report(r).parity_oblivious


def test_index_and_subset_helpers():
    assert rac.index_of("101") == 5
    assert rac.index_of([0, 1]) == 1
    assert rac.subset_parities(2, (1, 2)).tolist() == [0, 1, 1, 0]
    assert rac.all_subsets(3) == [(1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3)]
    assert rac.subset_key((3, 1)) == "1,3"
    with pytest.raises(ValueError):
        rac.subset_parities(3, (4,))


def test_reports_serialise():
    r = rac.build_sigma_rac(3)
    bias = json.loads(json.dumps(rac.decode_bias(r).to_dict()))
    assert bias["per_bit"]["2"] == pytest.approx(0.57735026919)
    par = json.loads(json.dumps(rac.parity_report(r).to_dict()))
    assert set(par["per_subset"]) == {"1", "2", "3", "1,2", "1,3", "2,3", "1,2,3"}
    assert par["flags"]["parity_oblivious"] is True


def test_state_lookup():
    r = rac.build_sigma_rac(3)
    assert np.array_equal(r.state("011"), r.states[3])


@pytest.mark.parametrize("mask", [0b0001, 0b1010, 0b1111])
def test_xor_mask_relabel_invariance(mask):
    half = rac.build_sigma_rac(2)
    for r in (rac.build_sigma_rac(4), rac.compose(half, half), rac.classical_basis_rac(4)):
        shifted = rac.QuantumRac(4, r.states[np.arange(16) ^ mask], r.decoders)
        for subset in rac.all_subsets(4):
            assert rac.parity_bias(shifted, subset) == pytest.approx(rac.parity_bias(r, subset), abs=1e-12)


@pytest.mark.parametrize("w", [0.25, 0.5])
def test_noise_never_increases_parity_bias(w):
    half = rac.build_sigma_rac(3)
    for r in (rac.compose(half, half), rac.classical_basis_rac(3)):
        noisy = rac.QuantumRac(r.n, w * r.states + (1 - w) * np.eye(r.dim) / r.dim, r.decoders)
        subsets = rac.all_subsets(r.n)
        assert np.all(rac.parity_biases(noisy, subsets) <= rac.parity_biases(r, subsets) + 1e-12)


def test_parity_examples():
    s3 = rac.build_sigma_rac(3)
    assert rac.parity_bias(s3, (1, 2)) <= 1e-9
    assert rac.parity_bias(s3, (2,)) == pytest.approx(1 / np.sqrt(3), abs=1e-12)
    assert rac.parity_bias(rac.build_rho_rac(2), (1, 2)) <= 1e-9
    mixed = rac.parity_report(rac.maximally_mixed_rac(3))
    assert max(mixed.per_subset.values()) == 0
    assert all(mixed.flags.values())
    assert rac.hyperbit_sum(rac.maximally_mixed_rac(3)) == 0


@pytest.mark.parametrize("n", range(2, 7))
def test_hyperbit_sum_sigma(n):
    assert rac.hyperbit_sum(rac.build_sigma_rac(n)) == pytest.approx(1.0, abs=1e-8)
