"""Local dilation residuals between strategies under three checkable forms.

A witness consists of local isometries ``U_A : H_A -> H_A~ (x) H_A^`` and
``U_B : H_B -> H_B~ (x) H_B^`` (target factor first) plus an auxiliary state
on the hat spaces (times the purifier for mixed sources).  The vector-form
residual of each measurement row is

    || (U_A (x) U_B (x) 1_P) (E (x) 1 (x) 1_P) |psi>  -  perm(row~ (x) aux) ||

and the reported epsilon is the maximum over the state row and all element
rows.  The matrix and extraction forms are alternative conditions checked by
:func:`matrix_form_residual` and :func:`extraction_residual`; converters
between exact witnesses of the different forms are provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg, naimark, schmidt
from .errors import DimensionMismatch, FullRankRequired, WitnessMismatch
from .games import Strategy


@dataclass(frozen=True)
class DilationWitness:
    """Local isometries with declared factorizations and an auxiliary state.

    ``dims_a = (d_target, d_hat)`` factorizes the codomain of ``u_a`` with the
    target factor first; same for Bob.  ``aux`` lives on hat_A (x) hat_B, with
    an extra trailing purifier factor when the witness certifies a dilation of
    a mixed-state strategy.
    """

    u_a: np.ndarray
    u_b: np.ndarray
    dims_a: tuple[int, int]
    dims_b: tuple[int, int]
    aux: np.ndarray

    def __post_init__(self):
        u_a = linalg.require_finite(self.u_a, "U_A")
        u_b = linalg.require_finite(self.u_b, "U_B")
        aux = linalg.require_finite(self.aux, "aux")
        dims_a = (int(self.dims_a[0]), int(self.dims_a[1]))
        dims_b = (int(self.dims_b[0]), int(self.dims_b[1]))
        for u, dims, name in ((u_a, dims_a, "U_A"), (u_b, dims_b, "U_B")):
            if u.ndim != 2 or u.shape[0] != dims[0] * dims[1]:
                raise WitnessMismatch(
                    f"{name} has shape {u.shape}, expected {dims[0] * dims[1]} rows"
                )
            defect = linalg.frobenius(u.conj().T @ u - linalg.identity(u.shape[1]))
            if defect > 1e-12 * max(1.0, u.shape[1]):
                raise WitnessMismatch(f"{name} is not an isometry (defect {defect:.3e})")
        if aux.ndim != 1 or abs(np.linalg.norm(aux) - 1.0) > 1e-12:
            raise WitnessMismatch("aux must be a normalized vector")
        if aux.size % (dims_a[1] * dims_b[1]) != 0:
            raise WitnessMismatch("aux size is not a multiple of the hat dimensions")
        for name, val in (("u_a", u_a), ("u_b", u_b), ("aux", aux)):
            arr = val.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "dims_a", dims_a)
        object.__setattr__(self, "dims_b", dims_b)

    @property
    def purifier_dim(self) -> int:
        return self.aux.size // (self.dims_a[1] * self.dims_b[1])


@dataclass(frozen=True)
class ResidualReport:
    """State row, per-element rows, and their maximum."""

    state_residual: float
    alice_residuals: tuple[tuple[float, ...], ...]
    bob_residuals: tuple[tuple[float, ...], ...]
    eps: float


def _haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _target_vector(row_target: np.ndarray, aux: np.ndarray, dims) -> np.ndarray:
    """Reorder (target (x) aux) into the (A~ A^ B~ B^ P) factor order."""
    d_ta, d_ha, d_tb, d_hb, d_p = dims
    full = np.kron(row_target, aux)
    return linalg.permute_systems(
        full, (d_ta, d_tb, d_ha, d_hb, d_p), (0, 2, 1, 3, 4)
    )


def dilation_residuals(
    src: Strategy,
    dst: Strategy,
    w: DilationWitness,
    purification_probes: int = 0,
    seed: int = 0,
) -> ResidualReport:
    """Vector-form residuals certifying ``src`` dilates to ``dst`` via ``w``.

    ``dst`` must be pure.  A mixed ``src`` is purified spectrally, the
    isometries act as ``U (x) 1_P``, and ``w.aux`` must include the purifier
    factor.  With ``purification_probes > 0`` the check is repeated under
    random unitaries on the purifier (rotating the probe state and ``aux``
    together) and the row-wise maxima are reported; exact witnesses are
    insensitive to the probes.
    """
    if w.dims_a[0] != dst.dims[0] or w.dims_b[0] != dst.dims[1]:
        raise WitnessMismatch("witness target factors do not match dst dimensions")
    if w.u_a.shape[1] != src.dims[0] or w.u_b.shape[1] != src.dims[1]:
        raise WitnessMismatch("witness domains do not match src dimensions")
    if len(src.alice) != len(dst.alice) or len(src.bob) != len(dst.bob):
        raise DimensionMismatch("src and dst must share question sets")
    psi_dst = dst.pure_state()
    if src.is_pure:
        psi = src.state
        d_p = 1
    else:
        psi = schmidt.purify(src.state)
        d_p = psi.size // (src.dims[0] * src.dims[1])
    if w.purifier_dim != d_p:
        raise WitnessMismatch(
            f"aux purifier factor is {w.purifier_dim}, purification needs {d_p}"
        )
    d_a, d_b = src.dims
    dims5 = (w.dims_a[0], w.dims_a[1], w.dims_b[0], w.dims_b[1], d_p)

    def run(psi_probe: np.ndarray, aux_probe: np.ndarray):
        def row(e_a, e_b, t_a, t_b) -> float:
            lhs = linalg.apply_factors(psi_probe, (d_a, d_b, d_p), (e_a, e_b, None))
            lhs = linalg.apply_factors(lhs, (d_a, d_b, d_p), (w.u_a, w.u_b, None))
            tgt_row = linalg.apply_factors(psi_dst, dst.dims, (t_a, t_b))
            rhs = _target_vector(tgt_row, aux_probe, dims5)
            return float(np.linalg.norm(lhs - rhs))

        state_res = row(None, None, None, None)
        alice_rows = tuple(
            tuple(row(src.alice[q][a], None, dst.alice[q][a], None)
                  for a in range(len(src.alice[q])))
            for q in range(len(src.alice))
        )
        bob_rows = tuple(
            tuple(row(None, src.bob[q][b], None, dst.bob[q][b])
                  for b in range(len(src.bob[q])))
            for q in range(len(src.bob))
        )
        return state_res, alice_rows, bob_rows

    state_res, alice_rows, bob_rows = run(psi, w.aux)
    if purification_probes > 0 and d_p > 1:
        rng = np.random.default_rng(seed)
        hat_total = w.dims_a[1] * w.dims_b[1]
        for _ in range(purification_probes):
            r = _haar_unitary(d_p, rng)
            psi_k = linalg.apply_factors(psi, (d_a, d_b, d_p), (None, None, r))
            aux_k = linalg.apply_factors(w.aux, (hat_total, d_p), (None, r))
            s_k, a_k, b_k = run(psi_k, aux_k)
            state_res = max(state_res, s_k)
            alice_rows = tuple(
                tuple(max(x, y) for x, y in zip(t1, t2))
                for t1, t2 in zip(alice_rows, a_k)
            )
            bob_rows = tuple(
                tuple(max(x, y) for x, y in zip(t1, t2))
                for t1, t2 in zip(bob_rows, b_k)
            )
    eps = max(
        [state_res]
        + [x for t in alice_rows for x in t]
        + [x for t in bob_rows for x in t]
    )
    return ResidualReport(
        state_residual=state_res,
        alice_residuals=alice_rows,
        bob_residuals=bob_rows,
        eps=eps,
    )


def scalar_aux() -> np.ndarray:
    return np.ones(1, dtype=np.complex128)


def restriction_embedding(s: Strategy, rank_tol: float = schmidt.RANK_TOL) -> DilationWitness:
    """Witness embedding the restriction of ``s`` back into ``s``.

    Certifies ``restrict(s) -> s`` with trivial ancillas at epsilon bounded by
    the support defect of ``s``.
    """
    _, u_a, u_b = schmidt.restrict(s, rank_tol=rank_tol)
    return DilationWitness(
        u_a=u_a, u_b=u_b, dims_a=(s.dims[0], 1), dims_b=(s.dims[1], 1), aux=scalar_aux()
    )


def naimark_embedding(s: Strategy) -> DilationWitness:
    """Witness embedding ``s`` into its constructed Naimark dilation.

    Certifies ``s -> naimark_strategy(s)`` with trivial ancillas at epsilon
    bounded by the projectivity defect of ``s``.
    """
    dilated, v_a, v_b = naimark.naimark_strategy(s)
    return DilationWitness(
        u_a=v_a,
        u_b=v_b,
        dims_a=(dilated.dims[0], 1),
        dims_b=(dilated.dims[1], 1),
        aux=scalar_aux(),
    )


def _complete_isometry(v: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full unitary by Gram-Schmidt on e_k."""
    n, m = v.shape
    cols = [v[:, i].copy() for i in range(m)]
    for k in range(n):
        if len(cols) == n:
            break
        cand = linalg.basis_state(n, k)
        for c in cols:
            cand = cand - c * np.vdot(c, cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-7:
            cols.append(cand / norm)
    if len(cols) != n:
        raise WitnessMismatch("failed to complete isometry to a unitary")
    return np.column_stack(cols)


def _pad_map(n_prime: int, m: int, n_blocks: int) -> np.ndarray:
    """Isometry C^{n'} -> C^m (x) C^q sending the first m basis vectors to
    e_k (x) e_0 and the rest injectively into the remaining product basis."""
    q = n_blocks
    out = np.zeros((m * q, n_prime), dtype=np.complex128)
    for k in range(min(m, n_prime)):
        out[k * q, k] = 1.0
    spare = [(i, j) for j in range(1, q) for i in range(m)]
    for idx, k in enumerate(range(m, n_prime)):
        i, j = spare[idx]
        out[i * q + j, k] = 1.0
    return out


def reverse_witness(src: Strategy, dst: Strategy, w: DilationWitness) -> DilationWitness:
    """Turn a product-ancilla witness for ``src -> dst`` into one for ``dst -> src``.

    Requires ``w.aux`` to be a product state across the hat factors (no
    purifier part).  The construction pads each side to the smallest common
    block size, so every per-row residual is preserved exactly.
    """
    if w.purifier_dim != 1:
        raise WitnessMismatch("reverse construction applies to pure-source witnesses only")
    d_ha, d_hb = w.dims_a[1], w.dims_b[1]
    aux = w.aux.reshape(d_ha, d_hb)
    u_svd, sing, vh = np.linalg.svd(aux)
    if sing.size > 1 and sing[1] > 1e-9:
        raise WitnessMismatch("aux is entangled across the hat factors")
    # rank-1 SVD reconstructs aux as sing[0] * kron(u0, vh0) with sing[0] ~ 1
    aux_a = u_svd[:, 0]
    aux_b = vh[0, :]

    m_a, m_b = src.dims
    lcm = math.lcm(m_a, m_b)
    need = max(w.u_a.shape[0], w.u_b.shape[0])
    n_pp = lcm * math.ceil(need / lcm)

    def one_side(u, d_target, d_hat, aux_vec, m):
        n_prime = u.shape[0]
        iota = np.kron(linalg.identity(d_target), aux_vec.reshape(-1, 1))  # v -> v (x) aux
        u_ext = _complete_isometry(u)
        pad = _pad_map(n_prime, m, n_pp // m)
        return pad @ u_ext.conj().T @ iota

    v_a = one_side(w.u_a, w.dims_a[0], d_ha, aux_a, m_a)
    v_b = one_side(w.u_b, w.dims_b[0], d_hb, aux_b, m_b)
    q_a, q_b = n_pp // m_a, n_pp // m_b
    aux_back = np.kron(linalg.basis_state(q_a, 0), linalg.basis_state(q_b, 0))
    return DilationWitness(
        u_a=v_a, u_b=v_b, dims_a=(m_a, q_a), dims_b=(m_b, q_b), aux=aux_back
    )


def compose_witnesses(w_xy: DilationWitness, w_yz: DilationWitness) -> DilationWitness:
    """Chain witnesses: if X -> Y at eps1 and Y -> Z at eps2 then X -> Z at eps1+eps2."""
    d_ta1, d_ha1 = w_xy.dims_a
    d_tb1, d_hb1 = w_xy.dims_b
    d_ta2, d_ha2 = w_yz.dims_a
    d_tb2, d_hb2 = w_yz.dims_b
    if w_yz.u_a.shape[1] != d_ta1 or w_yz.u_b.shape[1] != d_tb1:
        raise WitnessMismatch("witnesses do not chain: middle dimensions differ")
    if w_xy.purifier_dim != 1 or w_yz.purifier_dim != 1:
        raise WitnessMismatch("composition implemented for pure-source witnesses")
    u_a = np.kron(w_yz.u_a, linalg.identity(d_ha1)) @ w_xy.u_a
    u_b = np.kron(w_yz.u_b, linalg.identity(d_hb1)) @ w_xy.u_b
    aux = linalg.permute_systems(
        np.kron(w_yz.aux, w_xy.aux),
        (d_ha2, d_hb2, d_ha1, d_hb1),
        (0, 2, 1, 3),
    )
    return DilationWitness(
        u_a=u_a,
        u_b=u_b,
        dims_a=(d_ta2, d_ha2 * d_ha1),
        dims_b=(d_tb2, d_hb2 * d_hb1),
        aux=aux,
    )


def matrix_form_residual(
    src: Strategy,
    dst: Strategy,
    u_a,
    u_b,
    dims_a: tuple[int, int],
    dims_b: tuple[int, int],
    sigma_aux,
) -> float:
    """Max Frobenius defect of ``U (E (x) F) rho U* = (E~ (x) F~) |psi~><psi~| (x) sigma``.

    ``sigma_aux`` is a density operator on the hat factors.  Zero within
    1e-10 exactly when the matrix-form dilation condition holds for this
    isometry and auxiliary state.
    """
    psi_dst = dst.pure_state()
    u_a = linalg.as_complex(u_a)
    u_b = linalg.as_complex(u_b)
    sigma_aux = linalg.require_square(sigma_aux)
    d_ta, d_ha = dims_a
    d_tb, d_hb = dims_b
    if sigma_aux.shape[0] != d_ha * d_hb:
        raise DimensionMismatch("sigma_aux does not match the hat dimensions")
    rho = src.density()
    u = np.kron(u_a, u_b)
    tilde = np.outer(psi_dst, psi_dst.conj())
    worst = 0.0
    for qs in range(len(src.alice)):
        for a in range(len(src.alice[qs])):
            for qt in range(len(src.bob)):
                for b in range(len(src.bob[qt])):
                    lhs = u @ np.kron(src.alice[qs][a], src.bob[qt][b]) @ rho @ u.conj().T
                    lhs = linalg.permute_systems(
                        lhs, (d_ta, d_ha, d_tb, d_hb), (0, 2, 1, 3)
                    )
                    rhs = np.kron(
                        np.kron(dst.alice[qs][a], dst.bob[qt][b]) @ tilde, sigma_aux
                    )
                    worst = max(worst, linalg.frobenius(lhs - rhs))
    return worst


def extraction_residual(src: Strategy, dst: Strategy, u_a, u_b) -> float:
    """Residual of the unitary-extraction dilation condition on full-rank pairs.

    Checks ``U psi = psi~ (x) aux`` (aux recovered by projecting onto ``psi~``)
    and ``U E U* = E~ (x) 1`` in Frobenius norm for every element; returns the
    maximum.  Both strategies must be pure and full-rank and ``U_A, U_B``
    square unitaries compatible with the factorizations.
    """
    psi = src.pure_state()
    psi_dst = dst.pure_state()
    for st, name in ((src, "src"), (dst, "dst")):
        sd = schmidt.schmidt_decompose(st.pure_state(), st.dims)
        if sd.rank != min(st.dims) or st.dims[0] != st.dims[1]:
            raise FullRankRequired(f"{name} strategy is not full-Schmidt-rank")
    u_a = linalg.as_complex(u_a)
    u_b = linalg.as_complex(u_b)
    d_a, d_b = src.dims
    if u_a.shape != (d_a, d_a) or u_b.shape != (d_b, d_b):
        raise WitnessMismatch("extraction witnesses must be square unitaries")
    if d_a % dst.dims[0] or d_b % dst.dims[1]:
        raise WitnessMismatch("target dimension does not divide source dimension")
    d_ha = d_a // dst.dims[0]
    d_hb = d_b // dst.dims[1]
    rotated = linalg.apply_factors(psi, src.dims, (u_a, u_b))
    # recover aux as the psi~-component of U psi
    m = linalg.permute_systems(
        rotated, (dst.dims[0], d_ha, dst.dims[1], d_hb), (0, 2, 1, 3)
    ).reshape(dst.dims[0] * dst.dims[1], d_ha * d_hb)
    aux = psi_dst.conj() @ m
    norm = np.linalg.norm(aux)
    if norm < 1e-6:
        raise WitnessMismatch("rotated state has no component along the target state")
    aux = aux / norm
    target = linalg.permute_systems(
        np.kron(psi_dst, aux), (dst.dims[0], dst.dims[1], d_ha, d_hb), (0, 2, 1, 3)
    )
    worst = float(np.linalg.norm(rotated - target))
    for fams, dst_fams, u, d_hat in (
        (src.alice, dst.alice, u_a, d_ha),
        (src.bob, dst.bob, u_b, d_hb),
    ):
        eye_hat = linalg.identity(d_hat)
        for fam, dst_fam in zip(fams, dst_fams, strict=True):
            for e, e_dst in zip(fam, dst_fam, strict=True):
                lhs = u @ e @ u.conj().T
                worst = max(worst, linalg.frobenius(lhs - np.kron(e_dst, eye_hat)))
    return worst


def vector_witness_from_matrix_form(
    src: Strategy, dst: Strategy, u_a, u_b, dims_a, dims_b
) -> DilationWitness:
    """Recover a vector-form witness from matrix-form-exact data.

    The auxiliary state is read off as the ``psi~``-component of the rotated
    (purified) source state; exact when the matrix-form condition holds.
    """
    psi_dst = dst.pure_state()
    if src.is_pure:
        psi = src.state
        d_p = 1
    else:
        psi = schmidt.purify(src.state)
        d_p = psi.size // (src.dims[0] * src.dims[1])
    d_ta, d_ha = dims_a
    d_tb, d_hb = dims_b
    rotated = linalg.apply_factors(
        psi, (src.dims[0], src.dims[1], d_p), (linalg.as_complex(u_a), linalg.as_complex(u_b), None)
    )
    m = linalg.permute_systems(
        rotated, (d_ta, d_ha, d_tb, d_hb, d_p), (0, 2, 1, 3, 4)
    ).reshape(d_ta * d_tb, d_ha * d_hb * d_p)
    aux = psi_dst.conj() @ m
    norm = np.linalg.norm(aux)
    if norm < 1e-6:
        raise WitnessMismatch("rotated state has no component along the target state")
    return DilationWitness(
        u_a=u_a, u_b=u_b, dims_a=dims_a, dims_b=dims_b, aux=aux / norm
    )


def matrix_aux_from_vector(w: DilationWitness) -> np.ndarray:
    """Matrix-form auxiliary state: trace the purifier out of ``|aux><aux|``."""
    hat = w.dims_a[1] * w.dims_b[1]
    rho = np.outer(w.aux, w.aux.conj())
    return linalg.partial_trace(rho, (hat, w.purifier_dim), "A")


def extraction_witness_from_vector(
    src: Strategy, dst: Strategy, w: DilationWitness
) -> tuple[np.ndarray, np.ndarray]:
    """Compress an exact vector-form witness between full-rank strategies to unitaries.

    Splits ``aux`` in its Schmidt bases and cuts each isometry down to the
    support, which the dilation condition makes unitary.
    """
    if w.purifier_dim != 1:
        raise WitnessMismatch("extraction form applies to pure sources only")
    sd = schmidt.schmidt_decompose(w.aux, (w.dims_a[1], w.dims_b[1]))
    t_a, t_b = sd.left, sd.right
    w_a = np.kron(linalg.identity(w.dims_a[0]), t_a.conj().T) @ w.u_a
    w_b = np.kron(linalg.identity(w.dims_b[0]), t_b.conj().T) @ w.u_b
    if w_a.shape[0] != w_a.shape[1] or w_b.shape[0] != w_b.shape[1]:
        raise FullRankRequired(
            "compressed witnesses are not square; strategies are not full-rank-compatible"
        )
    return w_a, w_b


def vector_witness_from_extraction(
    src: Strategy, dst: Strategy, u_a, u_b
) -> DilationWitness:
    """Wrap extraction unitaries as a vector-form witness, recovering aux."""
    u_a = linalg.as_complex(u_a)
    u_b = linalg.as_complex(u_b)
    d_ha = src.dims[0] // dst.dims[0]
    d_hb = src.dims[1] // dst.dims[1]
    psi_dst = dst.pure_state()
    rotated = linalg.apply_factors(src.pure_state(), src.dims, (u_a, u_b))
    m = linalg.permute_systems(
        rotated, (dst.dims[0], d_ha, dst.dims[1], d_hb), (0, 2, 1, 3)
    ).reshape(dst.dims[0] * dst.dims[1], d_ha * d_hb)
    aux = psi_dst.conj() @ m
    norm = np.linalg.norm(aux)
    if norm < 1e-6:
        raise WitnessMismatch("rotated state has no component along the target state")
    return DilationWitness(
        u_a=u_a,
        u_b=u_b,
        dims_a=(dst.dims[0], d_ha),
        dims_b=(dst.dims[1], d_hb),
        aux=aux / norm,
    )
