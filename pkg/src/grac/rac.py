"""Quantum random access codes: construction, decoding bias, parity leakage.

A RAC here is a stack of encoding density matrices indexed by bitstrings
``x`` in lexicographic order (``x_1`` most significant), together with one
two-outcome decoding POVM per bit.  Bits and parity subsets are 1-based.

Two constructions are provided:

* :func:`build_rho_rac` -- Alice measures her halves of ``floor(n/2)`` EPR
  pairs with ``A_x`` and sends Bob the outcome ``a`` as a classical bit;
  Bob's state carries a diagonal 2-dim register holding ``a``.
* :func:`build_sigma_rac` -- the classical bit is removed by flipping every
  bit of ``x`` when ``a = -1``; the encoding lives on ``floor(n/2)`` qubits.

Parity leakage for a subset ``S`` is the Helstrom bias of distinguishing
the prior-weighted mixtures with ``x_S = 0`` and ``x_S = 1``.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .observables import alice_observables, bitstrings, bob_observable, build_family

DEFAULT_MAX_N = 10
PARITY_TOL = 1e-9
POVM_TOL = 1e-9


def max_exhaustive_n() -> int:
    """Cap on exhaustive subset scans; ``GRAC_MAX_N`` overrides the default."""
    raw = os.environ.get("GRAC_MAX_N")
    return int(raw) if raw else DEFAULT_MAX_N


@dataclass(frozen=True, eq=False)
class QuantumRac:
    """Encodings ``states[x]`` and decoders ``decoders[t-1, g]`` (POVM element for guess g).

    ``prior`` is the probability with which each ``x`` is prepared; ``None``
    means uniform.  Strings with zero prior keep a placeholder state.
    """

    n: int
    states: np.ndarray
    decoders: np.ndarray
    prior: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        decoders = np.asarray(self.decoders, dtype=complex)
        if states.ndim != 3 or states.shape[0] != 2 ** self.n:
            raise ValueError(f"expected 2**{self.n} encodings, got shape {states.shape}")
        d = states.shape[1]
        if states.shape[2] != d:
            raise ValueError("encodings must be square")
        if decoders.shape != (self.n, 2, d, d):
            raise ValueError(f"decoders must have shape {(self.n, 2, d, d)}, got {decoders.shape}")
        _check_states(states)
        _check_povms(decoders)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "decoders", decoders)
        if self.prior is not None:
            p = np.asarray(self.prior, dtype=float)
            if p.shape != (2 ** self.n,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                raise ValueError("prior must be a probability vector over all 2**n strings")
            object.__setattr__(self, "prior", p)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def weights(self) -> np.ndarray:
        if self.prior is None:
            return np.full(2 ** self.n, 2.0 ** -self.n)
        return self.prior

    def state(self, x: Sequence[int] | str) -> np.ndarray:
        return self.states[index_of(x)]


def _check_states(states: np.ndarray) -> None:
    herm = np.max(np.abs(states - np.swapaxes(states.conj(), 1, 2)), initial=0.0)
    if herm > 1e-10:
        raise ValueError(f"encoding is not Hermitian (deviation {herm:.3g})")
    traces = np.einsum("xii->x", states).real
    if np.max(np.abs(traces - 1), initial=0.0) > linalg.TRACE_TOL:
        raise ValueError("encoding trace differs from 1")
    if linalg.eigvals_hermitian(states)[:, -1].min() < -linalg.PSD_TOL:
        raise ValueError("encoding is not positive semidefinite")


def _check_povms(decoders: np.ndarray) -> None:
    d = decoders.shape[-1]
    if decoders.shape[0] == 0:
        return
    total = decoders.sum(axis=1)
    if np.max(np.abs(total - np.eye(d)), initial=0.0) > POVM_TOL:
        raise ValueError("decoder elements do not sum to the identity")
    flat = decoders.reshape(-1, d, d)
    if linalg.eigvals_hermitian(flat)[:, -1].min() < -POVM_TOL:
        raise ValueError("decoder element is not positive semidefinite")


def index_of(x: Sequence[int] | str) -> int:
    bits = [int(ch) for ch in x] if isinstance(x, str) else [int(b) for b in x]
    out = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"not a bitstring: {x!r}")
        out = 2 * out + b
    return out


def subset_parities(n: int, subset: Iterable[int]) -> np.ndarray:
    """``x_S`` for every x in lexicographic order."""
    cols = _subset_columns(n, subset)
    return bitstrings(n)[:, cols].sum(axis=1) % 2


def _subset_columns(n: int, subset: Iterable[int]) -> list[int]:
    s = sorted(set(int(i) for i in subset))
    if not s:
        raise ValueError("parity subset must be non-empty")
    if s[0] < 1 or s[-1] > n:
        raise ValueError(f"subset {s} not within 1..{n}")
    return [i - 1 for i in s]


def all_subsets(n: int) -> list[tuple[int, ...]]:
    """Non-empty subsets of 1..n ordered by size, then lexicographically."""
    return [c for k in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), k)]


# -- constructions ----------------------------------------------------------

def tau_states(n: int) -> np.ndarray:
    """Bob's post-measurement states, shape (2**n, 2, d, d).

    ``tau[x, a'] = (I + (-1)^{a'} A_x^T) / d``; outcome bit ``a' = 0`` is the
    +1 eigenvalue.  Each outcome occurs with probability exactly 1/2 because
    ``A_x`` is traceless.
    """
    fam = build_family(n)
    d = fam.dim
    at = np.swapaxes(alice_observables(fam), 1, 2)
    eye = np.eye(d)
    return np.stack([(eye + at) / d, (eye - at) / d], axis=1)


def bob_projectors(n: int) -> np.ndarray:
    """``[(I + B_t)/2, (I - B_t)/2]`` for t = 1..n, shape (n, 2, d, d)."""
    fam = build_family(n)
    eye = np.eye(fam.dim)
    out = []
    for t in range(1, n + 1):
        b = bob_observable(fam, t)
        out.append([(eye + b) / 2, (eye - b) / 2])
    return np.array(out, dtype=complex)


def build_rho_rac(n: int) -> QuantumRac:
    """EPR-based RAC with the outcome bit sent as a classical register."""
    tau = tau_states(n)
    reg = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], dtype=complex)
    states = 0.5 * (
        np.einsum("xij,kl->xikjl", tau[:, 0], reg[0]) + np.einsum("xij,kl->xikjl", tau[:, 1], reg[1])
    )
    d = tau.shape[-1]
    states = states.reshape(2 ** n, 2 * d, 2 * d)
    # guess 0 iff (B_t outcome) * (register sign) = +1
    zreg = np.diag([1.0, -1.0])
    decoders = []
    for t in range(1, n + 1):
        b = bob_observable(build_family(n), t)
        m0 = 0.5 * (np.eye(2 * d) + linalg.kron(b, zreg))
        decoders.append([m0, np.eye(2 * d) - m0])
    return QuantumRac(n, states, np.array(decoders), label=f"rho{n}")


def build_sigma_rac(n: int) -> QuantumRac:
    """RAC on ``floor(n/2)`` qubits: ``sigma_x = (tau[x,0] + tau[~x,1]) / 2``."""
    tau = tau_states(n)
    complement = (2 ** n - 1) - np.arange(2 ** n)
    states = 0.5 * (tau[:, 0] + tau[complement, 1])
    return QuantumRac(n, states, bob_projectors(n), label=f"sigma{n}")


def maximally_mixed_rac(n: int, d: int = 2) -> QuantumRac:
    """Every encoding is ``I/d``; decoders guess by a fair coin."""
    states = np.broadcast_to(np.eye(d) / d, (2 ** n, d, d)).copy()
    decoders = np.broadcast_to(np.eye(d) / 2, (n, 2, d, d)).copy()
    return QuantumRac(n, states, decoders, label=f"mixed{n}")


def classical_basis_rac(n: int) -> QuantumRac:
    """``rho_x = |x><x|`` read out in the computational basis."""
    dim = 2 ** n
    states = np.zeros((dim, dim, dim), dtype=complex)
    states[np.arange(dim), np.arange(dim), np.arange(dim)] = 1.0
    bits = bitstrings(n)
    decoders = np.zeros((n, 2, dim, dim), dtype=complex)
    for t in range(n):
        for g in (0, 1):
            decoders[t, g] = np.diag((bits[:, t] == g).astype(float))
    return QuantumRac(n, states, decoders, label=f"classical{n}")


def compose(a: QuantumRac, b: QuantumRac) -> QuantumRac:
    """Encode the concatenation ``x = (x_a, x_b)`` as ``rho_a[x_a] (x) rho_b[x_b]``."""
    da, db = a.dim, b.dim
    states = np.einsum("xij,ykl->xyikjl", a.states, b.states).reshape(
        2 ** (a.n + b.n), da * db, da * db
    )
    eye_a, eye_b = np.eye(da), np.eye(db)
    decoders = [[linalg.kron(m, eye_b) for m in pair] for pair in a.decoders]
    decoders += [[linalg.kron(eye_a, m) for m in pair] for pair in b.decoders]
    prior = None
    if a.prior is not None or b.prior is not None:
        prior = np.outer(a.weights, b.weights).reshape(-1)
    label = f"{a.label}+{b.label}" if a.label or b.label else ""
    return QuantumRac(a.n + b.n, states, np.array(decoders), prior=prior, label=label)


# -- bias -------------------------------------------------------------------

def _fmt(v: float) -> float:
    return float(f"{v:.12g}")


@dataclass(frozen=True)
class BiasReport:
    n: int
    per_bit: tuple[float, ...]

    @property
    def worst_case(self) -> float:
        return min(self.per_bit)

    @property
    def average_case(self) -> float:
        return float(np.mean(self.per_bit))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "per_bit": {str(t): _fmt(a) for t, a in enumerate(self.per_bit, start=1)},
            "worst_case": _fmt(self.worst_case),
            "average_case": _fmt(self.average_case),
        }


def success_probabilities(rac: QuantumRac) -> np.ndarray:
    """``Pr[guess x_t correctly | x]``, shape (2**n, n)."""
    probs = np.einsum("tgij,xji->xtg", rac.decoders, rac.states).real
    bits = bitstrings(rac.n)
    return np.take_along_axis(probs, bits[:, :, None], axis=2)[:, :, 0]


def decode_bias(rac: QuantumRac) -> BiasReport:
    success = rac.weights @ success_probabilities(rac)
    return BiasReport(rac.n, tuple(float(2 * p - 1) for p in success))


# -- parity leakage ---------------------------------------------------------

def parity_difference(rac: QuantumRac, subset: Iterable[int]) -> np.ndarray:
    """``sum_x p(x) (-1)^{x_S} rho_x``; its trace norm is the Helstrom bias for ``x_S``."""
    signs = 1 - 2 * subset_parities(rac.n, subset)
    return np.einsum("x,xij->ij", rac.weights * signs, rac.states)


def parity_bias(rac: QuantumRac, subset: Iterable[int]) -> float:
    return linalg.trace_norm(parity_difference(rac, subset))


def parity_biases(rac: QuantumRac, subsets: Sequence[Iterable[int]]) -> np.ndarray:
    subsets = list(subsets)
    if not subsets:
        return np.zeros(0)
    signs = np.stack([1 - 2 * subset_parities(rac.n, s) for s in subsets])
    diffs = np.einsum("sx,xij->sij", signs * rac.weights, rac.states)
    return linalg.trace_norms(diffs)


def subset_key(subset: Iterable[int]) -> str:
    return ",".join(str(i) for i in sorted(subset))


@dataclass(frozen=True)
class ParityReport:
    n: int
    per_subset: dict[tuple[int, ...], float]
    tol: float = PARITY_TOL
    flags: dict[str, bool] = field(init=False)

    def __post_init__(self):
        def clean(pred):
            return all(v <= self.tol for s, v in self.per_subset.items() if pred(len(s)))

        object.__setattr__(
            self,
            "flags",
            {
                "parity_oblivious": clean(lambda k: k >= 2),
                "even_parity_oblivious": clean(lambda k: k >= 2 and k % 2 == 0),
                "odd_parity_oblivious": clean(lambda k: k >= 3 and k % 2 == 1),
            },
        )

    @property
    def parity_oblivious(self) -> bool:
        return self.flags["parity_oblivious"]

    @property
    def even_parity_oblivious(self) -> bool:
        return self.flags["even_parity_oblivious"]

    @property
    def odd_parity_oblivious(self) -> bool:
        return self.flags["odd_parity_oblivious"]

    def max_leak(self, pred=lambda k: k >= 2) -> float:
        vals = [v for s, v in self.per_subset.items() if pred(len(s))]
        return max(vals, default=0.0)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "per_subset": {subset_key(s): _fmt(v) for s, v in self.per_subset.items()},
            "flags": dict(self.flags),
            "tolerance": self.tol,
        }


def _require_exhaustive(n: int, max_n: int | None) -> None:
    cap = max_exhaustive_n() if max_n is None else max_n
    if n > cap:
        raise ValueError(
            f"exhaustive subset scan for n={n} exceeds the cap {cap}; "
            "pass max_n or set GRAC_MAX_N to override"
        )


def parity_report(rac: QuantumRac, tol: float = PARITY_TOL, max_n: int | None = None) -> ParityReport:
    _require_exhaustive(rac.n, max_n)
    subsets = all_subsets(rac.n)
    vals = parity_biases(rac, subsets)
    # Helstrom biases are in [0, 1]; clip rounding noise only
    vals = np.clip(vals, 0.0, 1.0)
    return ParityReport(rac.n, dict(zip(subsets, (float(v) for v in vals))), tol=tol)


def hyperbit_sum(rac: QuantumRac, max_n: int | None = None) -> float:
    """Sum of squared parity biases over every non-empty subset."""
    _require_exhaustive(rac.n, max_n)
    vals = parity_biases(rac, all_subsets(rac.n))
    return float(np.sum(vals ** 2))
