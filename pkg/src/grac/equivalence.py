"""Conversions between INDEX^n strategies and even-parity-oblivious RACs.

Game -> RAC
    Alice measures on input ``s`` and gets ``a``; Bob's conditional state is
    ``rho[s, a]``.  The code for ``x`` is ``(rho[x, 0] + rho[~x, 1]) / 2``.
    Alice's outcome is made uniform by XOR-ing it with a shared random bit
    ``d`` that Bob also holds (kept as a classical register on his side).

RAC -> game
    Each encoding is purified, the two purifications of ``rho_s`` and
    ``rho_~s`` are superposed behind a control qubit ``O`` to give
    ``|Omega_s>``, and Alice steers ``|Omega_0>`` into ``|Omega_s>`` with a
    unitary on ``O (x) A``.  This needs Bob's marginal of ``|Omega_s>`` to be
    independent of ``s``, which holds exactly when the RAC hides every even
    parity.

The device-independent preparation (:func:`di_prepare`) simulates Alice
preparing ``sigma_{x'}`` through an untrusted measurement device whose
outcome may be an arbitrary classical function of her string.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .observables import alice_observable, bitstrings, build_family
from .rac import (
    ParityReport,
    QuantumRac,
    all_subsets,
    bob_projectors,
    parity_report,
    subset_parities,
)
from .xor_game import GameStrategy

OMEGA_TOL = 1e-8
SUPPORT_TOL = 1e-12

_REG = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], dtype=complex)


class NotEvenParityObliviousError(ValueError):
    """The RAC leaks an even parity, so the game construction does not apply."""


class AlignmentError(RuntimeError):
    """Purifications could not be aligned to the required tolerance."""


# -- game -> RAC ------------------------------------------------------------

def _complement_index(n: int) -> np.ndarray:
    return (2 ** n - 1) - np.arange(2 ** n)


def conditional_states(strat: GameStrategy) -> np.ndarray:
    """Bob's unnormalised states ``omega[s, a]`` after Alice measures ``A_s``, shape (|S|, 2, dB, dB)."""
    da, db = strat.dims
    psi = strat.shared_state.reshape(da, db)
    eye = np.eye(da)
    out = []
    for obs in strat.alice_obs:
        row = []
        for sign in (1, -1):
            phi = ((eye + sign * obs) / 2) @ psi
            row.append(phi.T @ phi.conj())
        out.append(row)
    return np.array(out)


def _decoders_with_register(bob_proj: np.ndarray) -> np.ndarray:
    """Guess ``g`` when the measured bit XOR the register bit ``d`` equals ``g``."""
    out = np.empty((bob_proj.shape[0], 2) + (2 * bob_proj.shape[-1],) * 2, dtype=complex)
    for t, pair in enumerate(bob_proj):
        for g in (0, 1):
            out[t, g] = sum(linalg.kron(pair[g ^ d], _REG[d]) for d in (0, 1))
    return out


def strategy_to_rac(strat: GameStrategy, n: int, shared_bit: bool = True) -> QuantumRac:
    """Compile an INDEX^n strategy into an even-parity-oblivious RAC.

    With ``shared_bit`` (the default) Alice's output is XOR-ed with a
    uniform bit Bob also receives, so the encodings carry a 2-dim
    register.  Without it, Alice's outcome must already be uniform for
    every input.
    """
    if strat.alice_obs.shape[0] != 2 ** n or strat.bob_obs.shape[0] != n:
        raise ValueError(f"strategy must cover all 2**{n} Alice inputs and {n} Bob inputs")
    omega = conditional_states(strat)
    comp = _complement_index(n)
    db = strat.dims[1]
    eye = np.eye(db)
    bob_proj = np.array([[(eye + b) / 2, (eye - b) / 2] for b in strat.bob_obs])
    if shared_bit:
        # rho[s, a'] = sum_d omega[s, a' ^ d] (x) |d><d|
        rho = np.empty((2 ** n, 2, 2 * db, 2 * db), dtype=complex)
        for ap in (0, 1):
            rho[:, ap] = sum(
                np.einsum("xij,kl->xikjl", omega[:, ap ^ d], _REG[d]).reshape(-1, 2 * db, 2 * db)
                for d in (0, 1)
            )
        decoders = _decoders_with_register(bob_proj)
    else:
        probs = np.einsum("xaii->xa", omega).real
        if np.max(np.abs(probs - 0.5)) > 1e-9:
            raise ValueError("Alice's outcome is not uniform; use shared_bit=True")
        rho = 2 * omega
        decoders = bob_proj
    states = 0.5 * (rho[:, 0] + rho[comp, 1])
    return QuantumRac(n, states, decoders, label=f"game->rac{n}")


# -- RAC -> game ------------------------------------------------------------

def all_parities_hidden_check(encodings, tol: float = OMEGA_TOL) -> bool:
    """True iff every pair of encodings is within trace distance ``tol``."""
    enc = np.asarray(encodings, dtype=complex)
    if enc.ndim != 3 or enc.shape[0] < 2 or enc.shape[0] & (enc.shape[0] - 1):
        raise ValueError("expected a complete family over {0,1}^n with n >= 1")
    i, j = np.triu_indices(enc.shape[0], k=1)
    dist = 0.5 * linalg.trace_norms(enc[i] - enc[j])
    return bool(np.max(dist) <= tol)


def purify(rho: np.ndarray) -> np.ndarray:
    """Canonical purification as a (dA x dB) amplitude matrix with dA = dB.

    Row ``k`` is ``sqrt(lambda_k) v_k`` for the eigenpairs of ``rho``, so
    tracing out the rows gives back ``rho``.
    """
    w, v = linalg.eig_hermitian(rho)
    return np.sqrt(np.clip(w, 0.0, None))[:, None] * v.T


def _complete_unitary(cols: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a unitary; the extra columns come from
    Gram-Schmidt over the standard basis, in index order."""
    dim, r = cols.shape
    basis = [cols[:, k] for k in range(r)]
    for e in np.eye(dim, dtype=complex):
        if len(basis) == dim:
            break
        vec = e - sum(b * (b.conj() @ e) for b in basis)
        vec = vec - sum(b * (b.conj() @ vec) for b in basis)
        norm = np.linalg.norm(vec)
        if norm > 1e-6:
            basis.append(vec / norm)
    return np.stack(basis, axis=1)


def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh


@dataclass(frozen=True, eq=False)
class OmegaFamily:
    """``states[s]`` is ``|Omega_s>`` on O (x) A (x) B as a flat vector; ``unitaries[s]`` acts on O (x) A."""

    states: np.ndarray
    unitaries: np.ndarray
    dims: tuple[int, int]

    def amplitude(self, s: int) -> np.ndarray:
        return self.states[s].reshape(self.dims)

    def reduced_states(self) -> np.ndarray:
        m = self.states.reshape((-1,) + self.dims)
        return np.einsum("sij,sik->sjk", m, m.conj())

    def reduced_state_error(self) -> float:
        red = self.reduced_states()
        return float(0.5 * np.max(linalg.trace_norms(red - red[0])))

    def fidelities(self) -> np.ndarray:
        """``|<Omega_s| (U_s (x) I) |Omega_0>|`` for each s."""
        m0 = self.amplitude(0)
        return np.array(
            [abs(np.vdot(self.amplitude(s), u @ m0)) for s, u in enumerate(self.unitaries)]
        )


def omega_family(rac: QuantumRac) -> OmegaFamily:
    """Build ``|Omega_s>`` and the steering unitaries ``U_s``; raises if the marginals differ."""
    n = rac.n
    comp = _complement_index(n)
    purif = np.array([purify(r) for r in rac.states])
    da, db = purif.shape[1:]
    amps = np.concatenate([purif, purif[comp]], axis=1) / np.sqrt(2)
    fam_dims = (2 * da, db)

    bob_marginals = np.einsum("sij,sik->sjk", amps, amps.conj())
    if not all_parities_hidden_check(bob_marginals, tol=OMEGA_TOL):
        raise NotEvenParityObliviousError(
            "Bob's marginal of |Omega_s> depends on s; the RAC leaks an even parity"
        )

    gram = amps[0].conj().T @ amps[0]
    lam, w = linalg.eig_hermitian(gram)
    support = lam > SUPPORT_TOL * max(1.0, lam[0])
    wr = w[:, support]
    inv_sqrt = 1.0 / np.sqrt(lam[support])

    frames = []
    for m in amps:
        left = _polar((m @ wr) * inv_sqrt)
        frames.append(_complete_unitary(left))
    q0 = frames[0]
    unitaries = []
    for m, q in zip(amps, frames):
        u = q @ q0.conj().T
        ov = np.vdot(m, u @ amps[0])
        if abs(ov) > 0:
            u = u * (ov.conj() / abs(ov))
        unitaries.append(u)
    fam = OmegaFamily(amps.reshape(2 ** n, -1), np.array(unitaries), fam_dims)
    worst = 1.0 - float(np.min(fam.fidelities()))
    if worst > OMEGA_TOL:
        raise AlignmentError(f"steering unitary misses |Omega_s> by {worst:.3g}")
    return fam


def rac_to_strategy(rac: QuantumRac, max_n: int = 4) -> tuple[GameStrategy, OmegaFamily]:
    """Turn an even-parity-oblivious RAC with projective decoders into an INDEX^n strategy."""
    if rac.n > max_n:
        raise ValueError(f"rac_to_strategy is limited to n <= {max_n} (got {rac.n})")
    if rac.prior is not None and np.max(np.abs(rac.prior - 2.0 ** -rac.n)) > 1e-12:
        raise ValueError("the RAC must encode uniformly distributed strings")
    report = parity_report(rac, tol=OMEGA_TOL)
    if not report.even_parity_oblivious:
        leak = report.max_leak(lambda k: k >= 2 and k % 2 == 0)
        raise NotEvenParityObliviousError(f"RAC is not even-parity-oblivious (leak {leak:.3g})")
    bob = np.array([m[0] - m[1] for m in rac.decoders])
    for t, b in enumerate(bob, start=1):
        if np.max(np.abs(b @ b - np.eye(rac.dim))) > linalg.INVOLUTION_TOL:
            raise ValueError(f"decoder for bit {t} is not projective")

    fam = omega_family(rac)
    dOA = fam.dims[0]
    z_o = linalg.kron(np.diag([1.0, -1.0]), np.eye(dOA // 2))
    alice = np.array([u.conj().T @ z_o @ u for u in fam.unitaries])
    strat = GameStrategy(fam.states[0], fam.dims, alice, bob)
    return strat, fam


# -- device-independent preparation ----------------------------------------

@dataclass(frozen=True)
class AdversaryModel:
    """How Alice's (possibly untrusted) device produces her outcome bit.

    ``mask is None`` and ``function is None`` means the honest measurement
    of ``A_s``.  Otherwise the outcome is ``function(s)`` or, for a parity
    mask, ``s_M xor constant`` (mask indices 1-based).
    """

    mask: tuple[int, ...] | None = None
    constant: int = 0
    uses_random_d: bool = True
    function: Callable[[tuple[int, ...]], int] | None = None

    @property
    def honest(self) -> bool:
        return self.mask is None and self.function is None

    def outcome(self, s: Sequence[int]) -> int:
        if self.function is not None:
            return int(self.function(tuple(int(b) for b in s))) & 1
        if self.mask is None:
            raise ValueError("the honest model has no classical outcome rule")
        return (sum(int(s[i - 1]) for i in self.mask) + self.constant) % 2

    @classmethod
    def from_dict(cls, data: dict) -> "AdversaryModel":
        rule = data.get("rule", "honest")
        use_d = bool(data.get("use_d", True))
        if rule == "honest":
            return cls(uses_random_d=use_d)
        if isinstance(rule, dict) and "parity_mask" in rule:
            const = int(rule.get("constant", 0))
            if const not in (0, 1):
                raise ValueError("constant must be 0 or 1")
            return cls(tuple(int(i) for i in rule["parity_mask"]), const, use_d)
        raise ValueError(f"unrecognised adversary rule {rule!r}")

    def to_dict(self) -> dict:
        if self.function is not None:
            raise ValueError("function-based adversaries have no JSON form")
        rule = "honest" if self.mask is None else {"parity_mask": list(self.mask), "constant": self.constant}
        return {"rule": rule, "use_d": self.uses_random_d}


def load_adversary(path: str | Path) -> AdversaryModel:
    with open(path) as fh:
        return AdversaryModel.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class DiPreparation:
    rac: QuantumRac
    leak: ParityReport


def di_prepare(n: int, adversary: AdversaryModel | None = None, max_n: int | None = None) -> DiPreparation:
    """Simulate the preparation of ``sigma_{x'}`` through Alice's measurement device.

    Alice shares ``floor(n/2)`` EPR pairs with Bob, picks a uniform ``s``,
    obtains ``a`` from her device, optionally XORs a uniform bit ``d`` that
    Bob also receives, and sets ``x' = s xor (a xor d)``.  The returned RAC
    is indexed by ``x'`` with its actual (possibly non-uniform) prior; Bob's
    view is his half of the EPR pairs plus ``d`` when it is sent.
    """
    adversary = adversary or AdversaryModel()
    if n < 2:
        raise ValueError("need n >= 2")
    fam = build_family(n)
    dloc = fam.dim
    psi = linalg.max_entangled(dloc)
    joint = linalg.projector(psi)
    eye_a = np.eye(dloc)
    bits = bitstrings(n)
    ds = (0, 1) if adversary.uses_random_d else (0,)
    p_s = 2.0 ** -n
    p_d = 1.0 / len(ds)
    dim = 2 * dloc if adversary.uses_random_d else dloc

    weight = np.zeros((2 ** n, dim, dim), dtype=complex)
    prob = np.zeros(2 ** n)
    marginal = linalg.partial_trace(joint, (dloc, dloc), keep="B")
    for si, s in enumerate(bits):
        if adversary.honest:
            obs = alice_observable(fam, s)
            branches = []
            for a in (0, 1):
                proj = linalg.kron((eye_a + (1 - 2 * a) * obs) / 2, np.eye(dloc))
                post = proj @ joint @ proj
                branches.append((a, linalg.partial_trace(post, (dloc, dloc), keep="B")))
        else:
            branches = [(adversary.outcome(s), marginal)]
        for a, bob in branches:
            for d in ds:
                flip = a ^ d
                xi = si ^ ((2 ** n - 1) if flip else 0)
                view = linalg.kron(bob, _REG[d]) if adversary.uses_random_d else bob
                weight[xi] += p_s * p_d * view
                prob[xi] += p_s * p_d * np.trace(bob).real

    states = np.empty_like(weight)
    for xi in range(2 ** n):
        states[xi] = weight[xi] / prob[xi] if prob[xi] > 1e-15 else np.eye(dim) / dim
    prob = np.where(prob > 1e-15, prob, 0.0)
    prob = prob / prob.sum()
    proj = bob_projectors(n)
    decoders = _decoders_with_register(proj) if adversary.uses_random_d else proj
    rac = QuantumRac(n, states, decoders, prior=prob, label=f"di{n}")
    return DiPreparation(rac, parity_report(rac, max_n=max_n))


def even_parity_distances(rac: QuantumRac) -> dict[tuple[int, ...], float]:
    """Trace distance between Bob's states conditioned on ``x_S = 0`` and ``x_S = 1``
    for every even ``|S| >= 2``; ``inf`` when one of the values never occurs."""
    out = {}
    w = rac.weights
    for subset in all_subsets(rac.n):
        if len(subset) < 2 or len(subset) % 2:
            continue
        par = subset_parities(rac.n, subset)
        p0, p1 = w[par == 0].sum(), w[par == 1].sum()
        if p0 <= 0 or p1 <= 0:
            out[subset] = float("inf")
            continue
        r0 = np.einsum("x,xij->ij", w * (par == 0), rac.states) / p0
        r1 = np.einsum("x,xij->ij", w * (par == 1), rac.states) / p1
        out[subset] = linalg.trace_distance(r0, r1)
    return out


def even_parity_nosignalling_check(
    n: int, adversary: AdversaryModel | None = None, tol: float = OMEGA_TOL
) -> bool:
    prep = di_prepare(n, adversary)
    return all(v <= tol for v in even_parity_distances(prep.rac).values())
