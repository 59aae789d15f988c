"""Recursive family of pairwise anticommuting +/-1 observables.

For n >= 2 the family ``G_1..G_n`` acts on ``floor(n/2)`` qubits::

    n = 2:      (X, Y)
    n = 3:      (X, Y, Z)
    n even:     G_i = G'_i (x) X for the n-1 family, plus I (x) Y
    n odd >= 5: G_i = G'_i (x) X for the n-2 family, plus I (x) Y, I (x) Z

Alice's encoding observable for a bitstring ``x`` is the normalised signed
sum ``A_x = sum_i (-1)^{x_i} G_i / sqrt(n)`` and Bob's decoding observable
for bit ``t`` is ``B_t = G_t^T``.  Bit indices ``t`` are 1-based.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import linalg

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

for _m in (I2, X, Y, Z):
    _m.setflags(write=False)


@dataclass(frozen=True)
class ObservableFamily:
    n: int
    members: tuple[np.ndarray, ...]

    @property
    def qubits(self) -> int:
        return self.n // 2

    @property
    def dim(self) -> int:
        return 2 ** self.qubits

    def __getitem__(self, t: int) -> np.ndarray:
        return self.members[t - 1]

    def anticommutation_error(self) -> float:
        """Max entry of ``{G_i, G_j} - 2 delta_ij I`` over all pairs."""
        eye = np.eye(self.dim)
        worst = 0.0
        for i, gi in enumerate(self.members):
            for j, gj in enumerate(self.members):
                target = 2 * eye if i == j else 0
                worst = max(worst, float(np.max(np.abs(gi @ gj + gj @ gi - target))))
        return worst


def _recurse(n: int) -> list[np.ndarray]:
    if n == 2:
        return [X, Y]
    if n == 3:
        return [X, Y, Z]
    if n % 2 == 0:
        prev = _recurse(n - 1)
        eye = np.eye(prev[0].shape[0])
        return [linalg.kron(g, X) for g in prev] + [linalg.kron(eye, Y)]
    prev = _recurse(n - 2)
    eye = np.eye(prev[0].shape[0])
    return [linalg.kron(g, X) for g in prev] + [linalg.kron(eye, Y), linalg.kron(eye, Z)]


@lru_cache(maxsize=None)
def build_family(n: int) -> ObservableFamily:
    """Anticommuting family for ``n`` bits; cached per ``n``."""
    if n < 2:
        raise ValueError(f"need n >= 2 encoded bits, got {n}")
    members = _recurse(n)
    for g in members:
        g.setflags(write=False)
    return ObservableFamily(n=n, members=tuple(members))


def _bits(x: Sequence[int] | str, n: int) -> np.ndarray:
    if isinstance(x, str):
        x = [int(ch) for ch in x]
    b = np.asarray(x, dtype=int)
    if b.shape != (n,) or not np.all((b == 0) | (b == 1)):
        raise ValueError(f"expected a bitstring of length {n}, got {x!r}")
    return b


def alice_observable(fam: ObservableFamily, x: Sequence[int] | str) -> np.ndarray:
    signs = 1 - 2 * _bits(x, fam.n)
    return sum(s * g for s, g in zip(signs, fam.members)) / np.sqrt(fam.n)


def alice_observables(fam: ObservableFamily) -> np.ndarray:
    """``A_x`` for every x in lexicographic order, shape (2**n, d, d)."""
    signs = 1 - 2 * bitstrings(fam.n)
    stack = np.stack(fam.members)
    return np.einsum("xi,ijk->xjk", signs, stack) / np.sqrt(fam.n)


def bob_observable(fam: ObservableFamily, t: int) -> np.ndarray:
    if not 1 <= t <= fam.n:
        raise ValueError(f"bit index t={t} outside 1..{fam.n}")
    return fam[t].T.copy()


def correlation(fam: ObservableFamily, x: Sequence[int] | str, t: int) -> float:
    """``<psi| A_x (x) B_t |psi>`` on the maximally entangled state of local dim d."""
    psi = linalg.max_entangled(fam.dim)
    op = linalg.kron(alice_observable(fam, x), bob_observable(fam, t))
    return float(np.real(psi.conj() @ op @ psi))


def bitstrings(n: int) -> np.ndarray:
    """All n-bit strings as rows, lexicographic (x_1 most significant)."""
    idx = np.arange(2 ** n)
    return (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1


def pauli_label(m: np.ndarray, qubits: int) -> str:
    """Pauli-string label of ``m`` if it is a tensor product of I/X/Y/Z, else '?'."""
    names = {"I": I2, "X": X, "Y": Y, "Z": Z}
    for combo in itertools.product(names, repeat=qubits):
        if np.allclose(m, linalg.kron_all(*(names[c] for c in combo))):
            return "".join(combo)
    return "?"


def correlation_table(fam: ObservableFamily) -> np.ndarray:
    """``<psi| A_x (x) B_t |psi>`` for all x and t, shape (2**n, n).

    Uses ``<psi| A (x) B |psi> = tr(A B^T) / d`` on the maximally entangled state.
    """
    a = alice_observables(fam)
    g = np.stack(fam.members)
    return np.einsum("xij,tji->xt", a, g).real / fam.dim


def family_checks(fam: ObservableFamily, tol: float = linalg.INVOLUTION_TOL) -> dict:
    """Anticommutation, tracelessness and correlation errors of the family."""
    eye = np.eye(fam.dim)
    trace_err = max(abs(np.trace(g)) for g in fam.members)
    herm_err = max(float(np.max(np.abs(g - g.conj().T))) for g in fam.members)
    square_err = max(float(np.max(np.abs(g @ g - eye))) for g in fam.members)
    target = (1 - 2 * bitstrings(fam.n)) / np.sqrt(fam.n)
    corr_err = float(np.max(np.abs(correlation_table(fam) - target)))
    errors = {
        "anticommutation": fam.anticommutation_error(),
        "hermitian": herm_err,
        "involution": square_err,
        "traceless": float(trace_err),
        "correlation": corr_err,
    }
    return {"errors": errors, "tolerance": tol, "passed": all(v <= tol for v in errors.values())}
