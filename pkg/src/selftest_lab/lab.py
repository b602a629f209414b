"""Worked examples and quantitative diagnostics: CHSH, the trine extension,
Bell functionals, eigengap overlap bounds, effective measurements, operator
moments, and the rank-deficiency pencil.

Question and outcome conventions for the bundled strategies: Alice question 0
measures Z, question 1 measures X; Bob question 0 measures (X+Z)/sqrt(2),
question 1 measures (Z-X)/sqrt(2), and (in the extended strategy) question 2
is the trine POVM.  Outcome 0 of a binary question is the +1 eigenprojector
of its observable.  With these orderings the two Bell functionals evaluate to
(2*sqrt(2), 1) on the extended strategy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, naimark
from .errors import (
    DegenerateTopEigenvalue,
    DimensionMismatch,
    InvalidState,
    LabError,
)
from .games import NonlocalGame, Strategy

X = naimark.PAULI_X
Z = naimark.PAULI_Z

CHSH_QUANTUM_VALUE = (2.0 + np.sqrt(2.0)) / 4.0
"""Largest eigenvalue of the CHSH game operator for the canonical qubit
measurements (Tsirelson's bound in game form); supplied as a constant because
computing optimal game values is out of scope."""

CLUSTER_TOL = 1e-9  # eigenvalues within this of each other count as one level


def _projector_pair(observable: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(+1, -1) eigenprojectors of a qubit observable with spectrum {+1, -1}."""
    plus = (linalg.identity(2) + observable) / 2.0
    return plus, linalg.identity(2) - plus


def bell_state() -> np.ndarray:
    v = np.zeros(4, dtype=np.complex128)
    v[0] = v[3] = 1.0 / np.sqrt(2.0)
    return v


def chsh_game() -> NonlocalGame:
    """Uniform questions; win iff the answers satisfy a XOR b = s AND t."""
    pi = np.full((2, 2), 0.25)
    pred = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for t in range(2):
            for a in range(2):
                for b in range(2):
                    pred[s, t, a, b] = 1.0 if (a ^ b) == (s & t) else 0.0
    return NonlocalGame(pi=pi, predicate=pred)


def canonical_chsh() -> Strategy:
    """The maximally entangled qubit strategy reaching the CHSH quantum value."""
    h_obs = (X + Z) / np.sqrt(2.0)
    k_obs = (Z - X) / np.sqrt(2.0)
    return Strategy(
        state=bell_state(),
        dims=(2, 2),
        alice=[_projector_pair(Z), _projector_pair(X)],
        bob=[_projector_pair(h_obs), _projector_pair(k_obs)],
    )


def trine_strategy() -> Strategy:
    """Canonical CHSH plus a third Bob question measuring the trine POVM."""
    base = canonical_chsh()
    return Strategy(
        state=base.state,
        dims=base.dims,
        alice=base.alice,
        bob=list(base.bob) + [naimark.trine_povm()],
    )


@dataclass(frozen=True)
class BetaValues:
    beta0: float
    beta1: float


def _observable(family) -> np.ndarray:
    return linalg.as_complex(family[0]) - linalg.as_complex(family[1])


def _pair_expectation(s: Strategy, op_a: np.ndarray, op_b: np.ndarray) -> float:
    if s.is_pure:
        val = np.vdot(s.state, linalg.apply_factors(s.state, s.dims, (op_a, op_b)))
    else:
        val = np.trace(np.kron(op_a, op_b) @ s.state)
    return float(np.real(val))


def beta_functionals(s: Strategy) -> BetaValues:
    """The two Bell functionals of the CHSH+trine scenario.

    ``beta0`` is the CHSH combination of the four binary questions using
    observables ``E_0 - E_1`` per question; ``beta1`` pairs Alice's
    observables with the elements of Bob's three-outcome question as
    ``A0 F0 - (A0/2 - sqrt(3)A1/2) F1 - (A0/2 + sqrt(3)A1/2) F2``.
    """
    if len(s.alice) != 2 or any(len(f) != 2 for f in s.alice):
        raise DimensionMismatch("expected two binary Alice questions")
    if len(s.bob) != 3 or len(s.bob[0]) != 2 or len(s.bob[1]) != 2 or len(s.bob[2]) != 3:
        raise DimensionMismatch("expected two binary Bob questions plus one trine-like question")
    a0, a1 = _observable(s.alice[0]), _observable(s.alice[1])
    b0, b1 = _observable(s.bob[0]), _observable(s.bob[1])
    f0, f1, f2 = s.bob[2]
    beta0 = (
        _pair_expectation(s, a0, b0)
        + _pair_expectation(s, a0, b1)
        + _pair_expectation(s, a1, b0)
        - _pair_expectation(s, a1, b1)
    )
    r3 = np.sqrt(3.0)
    beta1 = (
        _pair_expectation(s, a0, f0)
        - 0.5 * _pair_expectation(s, a0, f1)
        + (r3 / 2.0) * _pair_expectation(s, a1, f1)
        - 0.5 * _pair_expectation(s, a0, f2)
        - (r3 / 2.0) * _pair_expectation(s, a1, f2)
    )
    return BetaValues(beta0=beta0, beta1=beta1)


@dataclass(frozen=True)
class EigengapReport:
    """Spectral gap data and the candidate's overlap with the top level.

    ``state_bound = sqrt(2 - 2 sqrt(p0))`` is the exact distance from the
    candidate to the best product ``canonical (x) aux``; when the candidate is
    ``delta``-optimal it is bounded by ``sqrt(2 delta / gap)``.
    """

    lambda0: float
    lambda1: float
    gap: float
    top_multiplicity: int
    p0: float
    state_bound: float


def eigengap_analysis(w, canonical_psi, candidate, delta_eff: float) -> EigengapReport:
    """Overlap-vs-gap analysis of a candidate state against a game operator.

    ``candidate`` may live on an extension ``H_W (x) H_aux`` (operator factor
    first); ``p0`` is then the squared norm of its component along the
    canonical state.  Raises when the top eigenvalue is degenerate at the
    clustering tolerance or when ``canonical_psi`` does not span the top
    eigenspace.
    """
    spec = linalg.hermitian_eig(linalg.as_complex(w))
    evals = spec.eigenvalues
    lam0 = float(evals[0])
    mult = int(np.count_nonzero(evals > lam0 - CLUSTER_TOL))
    if mult > 1:
        raise DegenerateTopEigenvalue(
            f"top eigenvalue has multiplicity {mult} at tolerance {CLUSTER_TOL}"
        )
    lam1 = float(evals[1]) if evals.size > 1 else lam0
    gap = lam0 - lam1
    canonical = linalg.as_complex(canonical_psi)
    canonical = canonical / np.linalg.norm(canonical)
    if abs(np.vdot(spec.eigenvectors[:, 0], canonical)) < 1.0 - 1e-9:
        raise InvalidState("canonical state does not span the top eigenspace")
    cand = linalg.as_complex(candidate)
    cand = cand / np.linalg.norm(cand)
    d_w = evals.size
    if cand.size % d_w != 0:
        raise DimensionMismatch("candidate does not factor over the operator space")
    k = cand.size // d_w
    component = canonical.conj() @ cand.reshape(d_w, k)
    p0 = float(np.real(np.vdot(component, component)))
    p0 = min(max(p0, 0.0), 1.0)
    state_bound = float(np.sqrt(max(0.0, 2.0 - 2.0 * np.sqrt(p0))))
    energy = float(
        np.real(np.vdot(cand, linalg.apply_factors(cand, (d_w, k), (linalg.as_complex(w), None))))
    )
    if gap > 0 and energy >= lam0 - delta_eff - 1e-12:
        if p0 < 1.0 - delta_eff / gap - 1e-9:
            raise LabError("overlap bound violated; inconsistent spectral data")
    return EigengapReport(
        lambda0=lam0,
        lambda1=lam1,
        gap=gap,
        top_multiplicity=mult,
        p0=p0,
        state_bound=state_bound,
    )


def _numerical_rank(m: np.ndarray, rel_tol: float = 1e-8) -> int:
    sing = np.linalg.svd(m, compute_uv=False)
    if sing.size == 0 or sing[0] == 0.0:
        return 0
    return int(np.count_nonzero(sing > rel_tol * sing[0]))


def rank_deficient_combination(phi, psi, d: int):
    """A combination ``phi + x0 psi`` with Schmidt rank below ``d``.

    Reshapes both (possibly unnormalized) vectors on ``C^d (x) C^d`` to d-by-d
    matrices and solves ``det(M_phi + x M_psi) = 0`` through the eigenvalues
    of ``-M_psi^{-1} M_phi``, swapping roles when ``M_psi`` is singular.  When
    ``M_phi`` is itself singular, ``x0 = 0`` already works; in the swapped
    case with no finite root the returned combination is ``psi`` alone and
    ``x0`` is infinite.  Returns ``(x0, normalized state, schmidt rank)``.
    """
    phi = linalg.as_complex(phi)
    psi = linalg.as_complex(psi)
    if phi.size != d * d or psi.size != d * d:
        raise DimensionMismatch(f"vectors must live on C^{d} (x) C^{d}")
    m_phi = phi.reshape(d, d)
    m_psi = psi.reshape(d, d)

    def finish(x0: complex, vec: np.ndarray):
        vec = vec / np.linalg.norm(vec)
        rank = _numerical_rank(vec.reshape(d, d))
        return x0, vec, rank

    if _numerical_rank(m_phi) < d:
        return finish(0.0 + 0.0j, phi)
    if _numerical_rank(m_psi) == d:
        roots = np.linalg.eigvals(-np.linalg.solve(m_psi, m_phi))
        candidates = sorted(roots, key=lambda z: (abs(z), z.real, z.imag))
    else:
        # det(M_psi + y M_phi) = 0 at nonzero y gives x0 = 1/y
        roots = np.linalg.eigvals(-np.linalg.solve(m_phi, m_psi))
        finite = [1.0 / y for y in roots if abs(y) > 1e-12]
        if not finite:
            return finish(complex(np.inf), psi)
        candidates = sorted(finite, key=lambda z: (abs(z), z.real, z.imag))
    best = None
    for x0 in candidates:
        vec = phi + x0 * psi
        m = vec.reshape(d, d)
        sing = np.linalg.svd(m, compute_uv=False)
        ratio = sing[-1] / sing[0] if sing[0] > 0 else 0.0
        if best is None or ratio < best[0]:
            best = (ratio, x0, vec)
    _, x0, vec = best
    return finish(complex(x0), vec)


def effective_measurement(elements, u, dims: tuple[int, int], sigma) -> list[np.ndarray]:
    """Compress measurement elements through an isometry and an ancilla state.

    ``u`` maps the space of the elements into ``H_target (x) H_anc`` with
    ``dims = (d_target, d_anc)``; ``sigma`` is a density operator on the
    ancilla factor.  Returns

        G_j = tr_anc[(1 (x) sqrt(sigma)) U F_j U* (1 (x) sqrt(sigma))].
    """
    u = linalg.as_complex(u)
    d_t, d_anc = (int(dims[0]), int(dims[1]))
    if u.shape[0] != d_t * d_anc:
        raise DimensionMismatch("isometry codomain does not match dims")
    sigma = linalg.require_square(sigma)
    if sigma.shape[0] != d_anc:
        raise DimensionMismatch("sigma must act on the ancilla factor")
    sand = np.kron(linalg.identity(d_t), linalg.psd_sqrt(sigma))
    out = []
    for f in elements:
        f = linalg.as_complex(f)
        big = sand @ (u @ f @ u.conj().T) @ sand
        out.append(linalg.partial_trace(big, (d_t, d_anc), "A"))
    return out


def higher_order_moment(s: Strategy, alice_word, bob_word) -> complex:
    """State expectation of ordered products of measurement elements.

    Words are sequences of ``(question, answer)`` pairs; each player's
    operators multiply left to right in word order.  Length-1 words on both
    sides reduce to a correlation entry.
    """
    d_a, d_b = s.dims

    def product(families, word, dim):
        op = linalg.identity(dim)
        for q, a in word:
            if not (0 <= q < len(families)) or not (0 <= a < len(families[q])):
                raise LabError(f"word letter ({q}, {a}) is out of range")
            op = op @ families[q][a]
        return op

    op_a = product(s.alice, alice_word, d_a)
    op_b = product(s.bob, bob_word, d_b)
    if s.is_pure:
        return complex(np.vdot(s.state, linalg.apply_factors(s.state, s.dims, (op_a, op_b))))
    return complex(np.trace(np.kron(op_a, op_b) @ s.state))


def minimal_dilation_strategies() -> tuple[Strategy, Strategy]:
    """Two projective dilations of the trine strategy with distinct moments.

    Both embed the shared state as ``(1 (x) V)`` into C^2 (x) C^3 and dilate
    all Bob families projectively; they differ only in which outcome of Bob's
    second question absorbs the off-range defect ``1 - V V*``.  They induce
    the same correlation but different higher-order moments: the word
    ``[(2,0), (1,1), (2,0)]`` on Bob evaluates to (4-sqrt(2))/18 on the first
    and (2-sqrt(2))/18 on the second.
    """
    dil = naimark.minimal_trine_dilation()
    v = dil.isometry
    base = trine_strategy()
    psi = linalg.apply_factors(base.state, base.dims, (None, v))
    fam_h, fam_k, fam_m = dil.pvms
    complement = linalg.identity(3) - v @ v.conj().T
    fam_k_alt = (fam_k[0] + complement, fam_k[1] - complement)
    s1 = Strategy(state=psi, dims=(2, 3), alice=base.alice, bob=(fam_h, fam_k, fam_m))
    s2 = Strategy(state=psi, dims=(2, 3), alice=base.alice, bob=(fam_h, fam_k_alt, fam_m))
    return s1, s2


def seesaw_state(g: NonlocalGame, s: Strategy) -> tuple[np.ndarray, float]:
    """Best state for fixed measurements: top eigenvector of the game operator."""
    from .games import game_operator

    spec = linalg.hermitian_eig(game_operator(g, s))
    return spec.eigenvectors[:, 0].copy(), float(spec.eigenvalues[0])


def perturb_state(psi, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Mix a normalized vector toward a random direction and renormalize."""
    psi = linalg.as_complex(psi)
    direction = rng.normal(size=psi.size) + 1j * rng.normal(size=psi.size)
    direction = direction / np.linalg.norm(direction)
    out = psi + magnitude * direction
    return out / np.linalg.norm(out)


def _reproject_family(family, magnitude: float, rng: np.random.Generator):
    """Perturb each element by a random Hermitian direction, clip to PSD, and
    renormalize the family with T^{-1/2} E T^{-1/2} so it sums to identity."""
    d = family[0].shape[0]
    perturbed = []
    for e in family:
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = (g + g.conj().T) / 2.0
        h = h / np.linalg.norm(h)
        m = linalg.as_complex(e) + magnitude * h
        evals, evecs = np.linalg.eigh((m + m.conj().T) / 2.0)
        perturbed.append((evecs * np.clip(evals, 0.0, None)) @ evecs.conj().T)
    total = sum(perturbed)
    evals, evecs = np.linalg.eigh((total + total.conj().T) / 2.0)
    inv_root = (evecs * (1.0 / np.sqrt(np.clip(evals, 1e-12, None)))) @ evecs.conj().T
    return [inv_root @ e @ inv_root for e in perturbed]


def perturb_strategy(s: Strategy, magnitude: float, seed: int) -> Strategy:
    """Seeded random perturbation that stays a valid strategy.

    Magnitude 0 returns the strategy unchanged.  The state is mixed toward a
    random direction; every measurement element is shifted by a random
    Hermitian direction and the family reprojected to an exactly complete
    POVM.  Deterministic for a fixed seed.
    """
    if not 0.0 <= magnitude <= 1.0:
        raise InvalidState("magnitude must lie in [0, 1]")
    if magnitude == 0.0:
        return s
    rng = np.random.default_rng(seed)
    if s.is_pure:
        state = perturb_state(s.state, magnitude, rng)
    else:
        d = s.state.shape[0]
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        noise = g @ g.conj().T
        noise = noise / np.real(np.trace(noise))
        state = (1.0 - magnitude) * s.state + magnitude * noise
    alice = [_reproject_family(fam, magnitude, rng) for fam in s.alice]
    bob = [_reproject_family(fam, magnitude, rng) for fam in s.bob]
    return Strategy(state=state, dims=s.dims, alice=alice, bob=bob)


def robustness_constant(g: NonlocalGame) -> float:
    """Game-dependent constant relating dilation error to optimality loss.

    Computed as ``2 (sum_{s,t} pi(s,t) sum_{a,b} V(a,b|s,t)) max(|A|, |B|)``
    with the answer-set sizes as the final factor; surfaced explicitly and
    never folded into reported bounds.
    """
    n_a, n_b = g.shape[2], g.shape[3]
    weight = float(np.sum(g.pi[:, :, None, None] * g.predicate))
    return 2.0 * weight * max(n_a, n_b)
