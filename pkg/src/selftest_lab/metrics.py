"""State-dependent diagnostics of pure strategies.

Two scalar figures of merit aggregate per-element tables by maximum:

* support defect - the state-weighted commutator norm ``||[Pi, E]||_sigma`` of
  each element with the projection onto the local support of the state;
* projectivity defect - ``sqrt(<1 - E, E>_sigma)`` measuring how far each
  element is from idempotent as witnessed by the state.

Both vanish on full-rank-and-projective strategies and are invariant under
attaching product ancillas and conjugating by local unitaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, schmidt
from .errors import DimensionMismatch, InvalidPovm
from .games import Strategy

# <1-E, E>_sigma below this signals an invalid POVM rather than roundoff
NEGATIVE_DUST = -1e-10
# positive values below this are double-precision dust from exactly
# idempotent elements and are reported as 0 (they would otherwise surface
# as ~1e-8 after the square root)
DUST_FLOOR = 1e-13


def state_dependent_norm(x, sigma) -> float:
    """``sqrt(tr[X* X sigma])`` for a density operator sigma."""
    x = linalg.as_complex(x)
    sigma = linalg.require_square(sigma)
    if x.shape != sigma.shape:
        raise DimensionMismatch("operator and state dimensions differ")
    val = float(np.real(np.trace(x.conj().T @ x @ sigma)))
    return float(np.sqrt(max(val, 0.0)))


def state_overlap(x, y, sigma) -> complex:
    """``<X, Y>_sigma = tr[X* Y sigma]``."""
    x = linalg.as_complex(x)
    y = linalg.as_complex(y)
    return complex(np.trace(x.conj().T @ y @ sigma))


def _clip_or_raise(value: float, what: str) -> float:
    if value < NEGATIVE_DUST:
        raise InvalidPovm(f"{what} is {value:.3e} < {NEGATIVE_DUST}; element is not a valid POVM effect")
    return max(value, 0.0)


def _support_table(families, pi, psi, dims, side):
    """Per-element ``||[Pi, E]||_sigma``.

    Uses the identity ``||[Pi, E]||^2_sigma = <psi|(E^2 - E Pi E) (x) 1|psi>``
    in its factored form ``|| ((1 - Pi) E (x) 1)|psi> ||``, which stays
    accurate near zero (no cancellation under the square root).
    """
    comp = linalg.identity(pi.shape[0]) - pi
    out = []
    for fam in families:
        row = []
        for e in fam:
            op = comp @ linalg.as_complex(e)
            ops = (op, None) if side == "A" else (None, op)
            row.append(float(np.linalg.norm(linalg.apply_factors(psi, dims, ops))))
        out.append(tuple(row))
    return tuple(out)


def _overlap_table(families, sigma):
    """Per-element ``<1 - E, E>_sigma`` (real, clipped at zero)."""
    dim = sigma.shape[0]
    eye = linalg.identity(dim)
    out = []
    for fam in families:
        row = []
        for e in fam:
            e = linalg.as_complex(e)
            val = _clip_or_raise(
                float(np.real(np.trace((eye - e) @ e @ sigma))), "<1-E, E>"
            )
            row.append(val if val >= DUST_FLOOR else 0.0)
        out.append(tuple(row))
    return tuple(out)


@dataclass(frozen=True)
class StrategyMetrics:
    support_eps: float
    projective_eps: float
    alice_commutator_norms: tuple[tuple[float, ...], ...]
    bob_commutator_norms: tuple[tuple[float, ...], ...]
    alice_overlaps: tuple[tuple[float, ...], ...]
    bob_overlaps: tuple[tuple[float, ...], ...]


def strategy_metrics(s: Strategy, rank_tol: float = schmidt.RANK_TOL) -> StrategyMetrics:
    """All per-element tables plus the two aggregate defects of a pure strategy."""
    psi = s.pure_state()
    sd = schmidt.schmidt_decompose(psi, s.dims, rank_tol=rank_tol)
    pi_a, pi_b = schmidt.local_supports(sd)
    sigma_a, sigma_b = schmidt.marginals(s)
    a_comm = _support_table(s.alice, pi_a, psi, s.dims, "A")
    b_comm = _support_table(s.bob, pi_b, psi, s.dims, "B")
    a_over = _overlap_table(s.alice, sigma_a)
    b_over = _overlap_table(s.bob, sigma_b)
    support_eps = max((x for t in a_comm + b_comm for x in t), default=0.0)
    projective_eps = float(
        np.sqrt(max((x for t in a_over + b_over for x in t), default=0.0))
    )
    return StrategyMetrics(
        support_eps=support_eps,
        projective_eps=projective_eps,
        alice_commutator_norms=a_comm,
        bob_commutator_norms=b_comm,
        alice_overlaps=a_over,
        bob_overlaps=b_over,
    )


def support_preserving_eps(s: Strategy, rank_tol: float = schmidt.RANK_TOL) -> float:
    """Max over all elements of the support-commutator norm; 0 for full rank."""
    return strategy_metrics(s, rank_tol=rank_tol).support_eps


def projective_eps(s: Strategy) -> float:
    """Max over elements of ``sqrt(<1-E, E>_sigma)``; 0 need not mean projective."""
    return strategy_metrics(s).projective_eps


def hat_operators(s: Strategy, rank_tol: float = schmidt.RANK_TOL):
    """Swap each element to the other side through the state.

    For Alice's ``E`` the returned operator ``hat(E)`` acts on Bob's space and
    satisfies ``|| (E (x) 1)|psi> - (1 (x) hat(E))|psi> || = ||[Pi_A, E]||_sigma``.
    Built as ``lambda E^T lambda^{-1}`` in the Schmidt bases, using only the
    retained coefficients; the result is zero off the support.
    """
    psi = s.pure_state()
    sd = schmidt.schmidt_decompose(psi, s.dims, rank_tol=rank_tol)
    lam = sd.coefficients
    left, right = sd.left, sd.right

    def hat_of(e, from_left: bool) -> np.ndarray:
        if from_left:
            core = left.conj().T @ e @ left  # element in the e-basis
            swapped = (lam[:, None] * core.T) / lam[None, :]
            return right @ swapped @ right.conj().T
        core = right.conj().T @ e @ right
        swapped = (lam[:, None] * core.T) / lam[None, :]
        return left @ swapped @ left.conj().T

    alice_hats = tuple(tuple(hat_of(e, True) for e in fam) for fam in s.alice)
    bob_hats = tuple(tuple(hat_of(e, False) for e in fam) for fam in s.bob)
    return alice_hats, bob_hats
