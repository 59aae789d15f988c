"""XOR games, their classical bias and their quantum bias via semidefinite programming.

A game is stored as two dense ``|S| x |T|`` arrays: the input distribution
``p(s, t)`` and the sign ``(-1)^{w(s,t)}`` of the required XOR of the
answers.  With +/-1 valued strategies ``a_s`` and ``b_t`` the bias is
``sum_{s,t} p(s,t) sign(s,t) a_s b_t``; the cost matrix is
``A = p * sign`` and the SDP works with ``B = 1/2 [[0, A], [A^T, 0]]``.

The quantum bias is

    max <B, X>   s.t.  diag(X) = e, X psd      (primal)
    min <e, y>   s.t.  Diag(y) - B psd         (dual)

:func:`sdp_solve` maximises the primal over unit-norm Gram factors and
then builds a feasible dual point from the stationarity multipliers, so
every returned solution carries a certified upper bound.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import linalg
from .observables import alice_observables, bitstrings, bob_observable, build_family

DIST_TOL = 1e-12
DUAL_FEAS_TOL = 1e-8
ACCEPT_GAP = 1e-6
BRUTE_FORCE_MAX_T = 20
EXACT_RATIONAL_MAX_N = 64


@dataclass(frozen=True, eq=False)
class XorGame:
    alice_inputs: tuple
    bob_inputs: tuple
    distribution: np.ndarray
    sign: np.ndarray
    name: str = ""

    def __post_init__(self):
        shape = (len(self.alice_inputs), len(self.bob_inputs))
        p = np.asarray(self.distribution, dtype=float)
        sg = np.asarray(self.sign, dtype=float)
        if p.shape != shape or sg.shape != shape:
            raise ValueError(f"distribution and sign must both have shape {shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > DIST_TOL:
            raise ValueError("distribution must be non-negative and sum to 1")
        if not np.all(np.abs(sg) == 1):
            raise ValueError("sign entries must be +1 or -1")
        object.__setattr__(self, "alice_inputs", tuple(self.alice_inputs))
        object.__setattr__(self, "bob_inputs", tuple(self.bob_inputs))
        object.__setattr__(self, "distribution", p)
        object.__setattr__(self, "sign", sg)

    @property
    def cost(self) -> np.ndarray:
        """``A[s, t] = p(s, t) * sign(s, t)``."""
        return self.distribution * self.sign

    def to_dict(self) -> dict:
        return {
            "alice_inputs": list(self.alice_inputs),
            "bob_inputs": list(self.bob_inputs),
            "distribution": self.distribution.tolist(),
            "sign": self.sign.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "XorGame":
        missing = {"alice_inputs", "bob_inputs", "distribution", "sign"} - set(data)
        if missing:
            raise ValueError(f"game spec is missing keys: {sorted(missing)}")
        return cls(
            tuple(data["alice_inputs"]),
            tuple(data["bob_inputs"]),
            np.asarray(data["distribution"], dtype=float),
            np.asarray(data["sign"], dtype=float),
            name=name or data.get("name", ""),
        )


def index_game(n: int) -> XorGame:
    """INDEX^n: Alice gets s in {0,1}^n, Bob gets t in 1..n, win iff a xor b = s_t."""
    if n < 1:
        raise ValueError("INDEX needs n >= 1")
    bits = bitstrings(n)
    alice = tuple("".join(map(str, row)) for row in bits)
    dist = np.full((2 ** n, n), 1.0 / (n * 2 ** n))
    return XorGame(alice, tuple(range(1, n + 1)), dist, 1 - 2 * bits, name=f"index:{n}")


def chsh_game() -> XorGame:
    s = np.array([0, 1])
    sign = 1 - 2 * np.outer(s, s)
    return XorGame((0, 1), (0, 1), np.full((2, 2), 0.25), sign, name="chsh")


def game_from_name(name: str) -> XorGame:
    """Built-in games: ``"chsh"`` or ``"index:N"``."""
    if name == "chsh":
        return chsh_game()
    if name.startswith("index:"):
        return index_game(int(name.split(":", 1)[1]))
    raise ValueError(f"unknown built-in game {name!r}")


def load_game(path: str | Path) -> XorGame:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, str):
        return game_from_name(data)
    return XorGame.from_dict(data, name=Path(path).stem)


class GameMatrix(NamedTuple):
    A: np.ndarray
    B: np.ndarray


def game_matrix(game: XorGame) -> GameMatrix:
    a = game.cost
    ns, nt = a.shape
    b = np.zeros((ns + nt, ns + nt))
    b[:ns, ns:] = a / 2
    b[ns:, :ns] = a.T / 2
    return GameMatrix(a, b)


# -- classical bias ---------------------------------------------------------

@dataclass(frozen=True)
class ClassicalStrategy:
    bob_answers: tuple[int, ...]
    alice_rule: tuple[int, ...]

    def observables(self) -> "GameStrategy":
        """The same strategy as 1-dimensional +/-1 observables on a trivial state."""
        alice = np.array([[[1 - 2 * a]] for a in self.alice_rule], dtype=complex)
        bob = np.array([[[1 - 2 * b]] for b in self.bob_answers], dtype=complex)
        return GameStrategy(np.ones(1, dtype=complex), (1, 1), alice, bob)


def _binom_mean_deviation(n: int) -> Fraction:
    return Fraction(sum(math.comb(n, k) * abs(n - 2 * k) for k in range(n + 1)), 2 * 2 ** n)


def mean_deviation(n: int) -> float:
    """``E_s | |s|_H - n/2 |`` for uniform s in {0,1}^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= EXACT_RATIONAL_MAX_N:
        return float(_binom_mean_deviation(n))
    log2n = n * math.log(2.0)
    terms = (
        math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) - log2n)
        * abs(n / 2 - k)
        for k in range(n + 1)
    )
    return math.fsum(terms)


def classical_bias_exact(n: int, exact: bool = False) -> float | Fraction:
    """Optimal classical INDEX^n bias ``(2/n) E_s | n/2 - |s|_H |``.

    ``exact=True`` returns a :class:`~fractions.Fraction` (only for
    ``n <= 64``).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if exact:
        if n > EXACT_RATIONAL_MAX_N:
            raise ValueError(f"exact rational result only for n <= {EXACT_RATIONAL_MAX_N}")
        return Fraction(2, n) * _binom_mean_deviation(n)
    return 2.0 / n * mean_deviation(n)


def mean_deviation_check(n: int) -> tuple[float, float]:
    """Exact binomial mean deviation and its ``sqrt(n / 2 pi)`` approximation."""
    return mean_deviation(n), math.sqrt(n / (2 * math.pi))


def bob_strategy_biases(game: XorGame, chunk: int = 4096) -> np.ndarray:
    """Bias of every deterministic Bob strategy with Alice best-responding.

    Entry ``k`` corresponds to Bob's answer string ``b`` whose binary
    expansion (``b_1`` most significant) is ``k``.
    """
    a = game.cost
    nt = a.shape[1]
    if nt > BRUTE_FORCE_MAX_T:
        raise ValueError(f"brute force limited to |T| <= {BRUTE_FORCE_MAX_T}, got {nt}")
    total = 2 ** nt
    out = np.empty(total)
    shifts = np.arange(nt - 1, -1, -1)
    for start in range(0, total, chunk):
        ks = np.arange(start, min(total, start + chunk))
        bob = 1 - 2 * ((ks[:, None] >> shifts) & 1)
        out[start : start + len(ks)] = np.abs(bob @ a.T).sum(axis=1)
    return out


def classical_bias_bruteforce(game: XorGame) -> tuple[float, ClassicalStrategy]:
    """Maximise over deterministic strategies; Alice answers 0 on ties."""
    biases = bob_strategy_biases(game)
    k = int(np.argmax(biases))
    nt = len(game.bob_inputs)
    b_bits = tuple(int(c) for c in format(k, f"0{nt}b")) if nt else ()
    bob = 1 - 2 * np.array(b_bits, dtype=float)
    lean = game.cost @ bob
    alice = tuple(0 if v >= 0 else 1 for v in lean)
    return float(biases[k]), ClassicalStrategy(b_bits, alice)


# -- quantum strategies -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class GameStrategy:
    """Shared pure state on ``dims = (dA, dB)`` plus +/-1 observables per input."""

    shared_state: np.ndarray
    dims: tuple[int, int]
    alice_obs: np.ndarray
    bob_obs: np.ndarray

    def __post_init__(self):
        psi = linalg.check_pure(self.shared_state)
        da, db = self.dims
        if psi.shape != (da * db,):
            raise ValueError(f"state of length {psi.shape[0]} does not match dims {self.dims}")
        alice = np.asarray(self.alice_obs, dtype=complex)
        bob = np.asarray(self.bob_obs, dtype=complex)
        if alice.shape[1:] != (da, da) or bob.shape[1:] != (db, db):
            raise ValueError("observable dimensions do not match the shared state")
        for m in (*alice, *bob):
            linalg.check_dichotomic(m)
        object.__setattr__(self, "shared_state", psi)
        object.__setattr__(self, "alice_obs", alice)
        object.__setattr__(self, "bob_obs", bob)

    def correlations(self) -> np.ndarray:
        """``<psi| A_s (x) B_t |psi>`` for every (s, t)."""
        da, db = self.dims
        psi = self.shared_state.reshape(da, db)
        left = np.einsum("sik,kl->sil", self.alice_obs, psi)
        right = np.einsum("ij,tjl->til", psi.conj(), self.bob_obs)
        return np.einsum("sil,til->st", left, right).real


def strategy_bias(game: XorGame, strat: GameStrategy) -> float:
    corr = strat.correlations()
    if corr.shape != game.cost.shape:
        raise ValueError(f"strategy covers {corr.shape} inputs, game has {game.cost.shape}")
    return float(np.sum(game.cost * corr))


def index_strategy(n: int) -> GameStrategy:
    """EPR-pair strategy for INDEX^n: Alice measures ``A_s``, Bob measures ``B_t``."""
    fam = build_family(n)
    bob = np.array([bob_observable(fam, t) for t in range(1, n + 1)])
    return GameStrategy(linalg.max_entangled(fam.dim), (fam.dim, fam.dim), alice_observables(fam), bob)


# -- SDP --------------------------------------------------------------------

class DualCheck(NamedTuple):
    feasible: bool
    objective: float
    min_eig: float


def verify_dual_certificate(game: XorGame, y: Sequence[float], tol: float = DUAL_FEAS_TOL) -> DualCheck:
    """Check ``Diag(y) >= B``; when feasible, ``sum(y)`` upper-bounds the quantum bias."""
    b = game_matrix(game).B
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (b.shape[0],):
        raise ValueError(f"dual vector must have length |S|+|T| = {b.shape[0]}, got {y.shape[0]}")
    lam = linalg.min_eigenvalue(np.diag(y) - b)
    return DualCheck(lam >= -tol, float(y.sum()), lam)


@dataclass(frozen=True, eq=False)
class SdpSolution:
    gram_factor: np.ndarray
    primal_value: float
    dual_y: np.ndarray | None = None
    dual_value: float | None = None
    certificate_min_eig: float | None = None
    sweeps: int = 0
    converged: bool = True

    @property
    def gap(self) -> float | None:
        if self.dual_value is None:
            return None
        return self.dual_value - self.primal_value

    @property
    def certified(self) -> bool:
        return self.gap is not None and self.gap <= ACCEPT_GAP

    @property
    def value(self) -> float | tuple[float, float]:
        """The accepted value, or the (lower, upper) interval when the gap stays open."""
        if self.certified or self.dual_value is None:
            return self.primal_value
        return (self.primal_value, self.dual_value)


def primal_objective(game: XorGame, gram_factor: np.ndarray) -> float:
    a = game.cost
    ns = a.shape[0]
    v = np.asarray(gram_factor)
    return float(np.sum(a * (v[:ns] @ v[ns:].T)))


def _normalize_rows(g: np.ndarray, old: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return np.where(norms > 0, g / np.where(norms > 0, norms, 1.0), old)


def sdp_solve(
    game: XorGame,
    rank: int | None = None,
    seed: int = 0,
    max_sweeps: int = 100_000,
    tol: float = 1e-12,
) -> SdpSolution:
    """Low-rank coordinate ascent on the primal, certified by a dual point.

    Each row ``v_r`` of the Gram factor is replaced by the normalised
    ``sum_r' B[r, r'] v_r'``.  ``B`` is bipartite (no S-S or T-T terms), so
    updating all Alice rows and then all Bob rows is the same as a cyclic
    sweep in that order.  Sweeps stop when the objective gain drops below
    ``tol`` or after ``max_sweeps``; in either case the primal value is a
    valid lower bound.

    The dual point is built from the row multipliers ``y_r = v_r . (B V)_r``
    shifted up by the most negative eigenvalue of ``Diag(y) - B``, which
    makes it feasible by construction.
    """
    a = game.cost
    ns, nt = a.shape
    rank = nt + 2 if rank is None else rank
    if rank < 2:
        raise ValueError("rank must be >= 2")
    rng = np.random.default_rng(seed)
    v = _normalize_rows(rng.standard_normal((ns + nt, rank)), np.zeros((ns + nt, rank)))
    vs, vt = v[:ns], v[ns:]
    value = float(np.sum(a * (vs @ vt.T)))
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        vs = _normalize_rows(a @ vt, vs)
        vt = _normalize_rows(a.T @ vs, vt)
        new = float(np.sum(a * (vs @ vt.T)))
        gain = new - value
        value = new
        if gain < tol:
            converged = True
            break
    v = np.vstack([vs, vt])

    b = game_matrix(game).B
    y = np.einsum("ij,ij->i", v, b @ v)
    lam = linalg.min_eigenvalue(np.diag(y) - b)
    shift = max(0.0, -lam)
    y = y + shift
    cert = linalg.min_eigenvalue(np.diag(y) - b)
    return SdpSolution(
        gram_factor=v,
        primal_value=value,
        dual_y=y,
        dual_value=float(y.sum()),
        certificate_min_eig=cert,
        sweeps=sweeps,
        converged=converged,
    )


def explicit_primal(n: int) -> SdpSolution:
    """Explicit rank-n feasible point ``X = Y Y^T`` with ``Y = [sqrt(n) 2^n A ; I]``."""
    game = index_game(n)
    a = game.cost
    y = np.vstack([math.sqrt(n) * 2 ** n * a, np.eye(n)])
    diag = np.einsum("ij,ij->i", y, y)
    if np.max(np.abs(diag - 1)) > 1e-12:
        raise AssertionError("explicit primal point violates diag(X) = e")
    value = primal_objective(game, y)
    if abs(value - 1 / math.sqrt(n)) > 1e-12:
        raise AssertionError(f"explicit primal value {value} differs from 1/sqrt(n)")
    return SdpSolution(gram_factor=y, primal_value=value)


class ExplicitDual(NamedTuple):
    y: np.ndarray
    objective: float
    min_eig: float


def explicit_dual(n: int, u_scale: float = 1.0, v_scale: float = 1.0) -> ExplicitDual:
    """Dual point ``y = (u e_S, v e_T)`` with ``u = 1/(2 sqrt(n) 2^n)``, ``v = 1/(2 n sqrt(n))``.

    The scale factors exist to probe tightness: ``u*v`` sits exactly on the
    feasibility boundary ``1 / (4 n^2 2^n)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = u_scale / (2 * math.sqrt(n) * 2 ** n)
    v = v_scale / (2 * n * math.sqrt(n))
    y = np.concatenate([np.full(2 ** n, u), np.full(n, v)])
    check = verify_dual_certificate(index_game(n), y)
    return ExplicitDual(y, check.objective, check.min_eig)
