"""Verification workbench for parity-oblivious quantum random access codes and the INDEX XOR game."""
from .equivalence import (
    AdversaryModel,
    NotEvenParityObliviousError,
    di_prepare,
    even_parity_nosignalling_check,
    rac_to_strategy,
    strategy_to_rac,
)
from .observables import build_family, alice_observable, bob_observable
from .rac import (
    QuantumRac,
    build_rho_rac,
    build_sigma_rac,
    compose,
    decode_bias,
    parity_bias,
    parity_report,
)
from .xor_game import (
    XorGame,
    classical_bias_bruteforce,
    classical_bias_exact,
    index_game,
    explicit_dual,
    explicit_primal,
    sdp_solve,
)

__version__ = "0.1.0"
