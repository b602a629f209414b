"""Naimark dilation of POVM families and of pure strategies.

The iterative construction dilates any finite list of POVM families on one
space to simultaneous projective families on ``C^d (x) C^{m_1} (x) ...``,
one ancilla factor per family.  When re-embedding already-dilated families,
the identity defect ``1 - V V*`` is absorbed into outcome index 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, InvalidPovm
from .games import Strategy

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class NaimarkDilation:
    """Projective families on the dilated space plus the embedding isometry.

    Invariants: ``V* V = 1`` on the source space, every element of ``pvms``
    is a projection, each family sums to the identity, and the compressions
    ``V* P V`` reproduce the source POVM elements.
    """

    pvms: tuple[tuple[np.ndarray, ...], ...]
    isometry: np.ndarray
    dims: tuple[int, int]


def _check_povm(family, dim: int | None = None, tol: float = linalg.DEFAULT_TOL):
    family = [linalg.as_complex(e) for e in family]
    if not family:
        raise InvalidPovm("a POVM needs at least one element")
    d = family[0].shape[0]
    if dim is not None and d != dim:
        raise DimensionMismatch(f"family acts on dimension {d}, expected {dim}")
    total = np.zeros((d, d), dtype=np.complex128)
    for e in family:
        e = linalg.require_square(e)
        if e.shape[0] != d:
            raise DimensionMismatch("POVM elements have inconsistent dimensions")
        if not linalg.is_psd(e, tol):
            raise InvalidPovm("POVM element is not positive semidefinite")
        total = total + e
    if linalg.frobenius(total - linalg.identity(d)) > tol * d:
        raise InvalidPovm("POVM does not sum to the identity")
    return family, d


def naimark_family(povms) -> NaimarkDilation:
    """Dilate a list of POVM families on a common space simultaneously.

    Applies the single-family construction once per family: the new family's
    elements are pushed forward through the accumulated isometry ``V1`` (the
    identity defect joining outcome 0), the square-root embedding ``V2`` maps
    into one extra ancilla factor, and previously built projective families
    are re-embedded as ``V2 Q V2*`` with ``1 - V2 V2*`` added at outcome 0.
    """
    povms = list(povms)
    if not povms:
        raise InvalidPovm("need at least one POVM family")
    _, d = _check_povm(povms[0])
    for fam in povms[1:]:
        _check_povm(fam, dim=d)

    dim_now = d
    v_total = linalg.identity(d)
    built: list[list[np.ndarray]] = []
    for family in povms:
        family = [linalg.as_complex(e) for e in family]
        m = len(family)
        eye_now = linalg.identity(dim_now)
        pushed = [v_total @ e @ v_total.conj().T for e in family]
        pushed[0] = pushed[0] + (eye_now - v_total @ v_total.conj().T)
        # v2: phi -> sum_j sqrt(pushed_j) phi (x) e_j, an isometry into dim_now*m
        v2 = np.zeros((dim_now * m, dim_now), dtype=np.complex128)
        v2_view = v2.reshape(dim_now, m, dim_now)
        for j in range(m):
            v2_view[:, j, :] = linalg.psd_sqrt(pushed[j])
        dim_next = dim_now * m
        eye_next = linalg.identity(dim_next)
        re_embedded: list[list[np.ndarray]] = []
        for q in built:
            fam_new = [v2 @ p @ v2.conj().T for p in q]
            fam_new[0] = fam_new[0] + (eye_next - v2 @ v2.conj().T)
            re_embedded.append(fam_new)
        new_fam = []
        for j in range(m):
            proj = np.zeros((m, m), dtype=np.complex128)
            proj[j, j] = 1.0
            new_fam.append(np.kron(linalg.identity(dim_now), proj))
        re_embedded.append(new_fam)
        built = re_embedded
        v_total = v2 @ v_total
        dim_now = dim_next
    return NaimarkDilation(
        pvms=tuple(tuple(fam) for fam in built),
        isometry=v_total,
        dims=(d, dim_now),
    )


def naimark_single(povm) -> NaimarkDilation:
    """Dilate one POVM; the dilated space is ``C^d (x) C^m``."""
    return naimark_family([povm])


def naimark_strategy(s: Strategy) -> tuple[Strategy, np.ndarray, np.ndarray]:
    """Dilate both players' families; the state is embedded as ``(V_A (x) V_B) psi``.

    The returned strategy is projective and produces the same correlation as
    the input.
    """
    psi = s.pure_state()
    dil_a = naimark_family(s.alice)
    dil_b = naimark_family(s.bob)
    v_a, v_b = dil_a.isometry, dil_b.isometry
    psi_new = linalg.apply_factors(psi, s.dims, (v_a, v_b))
    dilated = Strategy(
        state=psi_new,
        dims=(dil_a.dims[1], dil_b.dims[1]),
        alice=dil_a.pvms,
        bob=dil_b.pvms,
    )
    return dilated, v_a, v_b


def trine_povm() -> list[np.ndarray]:
    """The three-outcome qubit POVM with effects (1/3)(1 + n.sigma) on a trine.

    The last element is defined as the completeness complement so the family
    sums to the identity exactly in floating point.
    """
    eye = linalg.identity(2)
    m0 = (eye + PAULI_Z) / 3.0
    m1 = (eye - PAULI_Z / 2.0 + (np.sqrt(3.0) / 2.0) * PAULI_X) / 3.0
    m2 = eye - m0 - m1
    return [m0, m1, m2]


def trine_projector_vectors() -> list[np.ndarray]:
    """The rank-1 directions on C^3 whose projectors compress to the trine."""
    e0 = np.array([np.sqrt(2.0), 0.0, 1.0], dtype=np.complex128) / np.sqrt(3.0)
    e1 = np.array([-1.0, -np.sqrt(3.0), np.sqrt(2.0)], dtype=np.complex128) / np.sqrt(6.0)
    e2 = np.array([-1.0, np.sqrt(3.0), np.sqrt(2.0)], dtype=np.complex128) / np.sqrt(6.0)
    return [e0, e1, e2]


def minimal_trine_dilation() -> NaimarkDilation:
    """Minimal simultaneous dilation of Bob's three canonical families to C^3.

    ``V`` is the canonical embedding C^2 -> C^3.  The trine becomes the three
    rank-1 projectors onto the vectors of :func:`trine_projector_vectors`;
    each binary family is extended projectively, with the off-range defect
    ``1 - V V*`` joining the +1-eigenprojector of the underlying observable.
    Family order matches the Bob questions of the canonical CHSH+trine
    strategy: (X+Z)/sqrt(2) first, (Z-X)/sqrt(2) second, trine third.
    """
    v = np.zeros((3, 2), dtype=np.complex128)
    v[0, 0] = 1.0
    v[1, 1] = 1.0
    eye3 = linalg.identity(3)
    complement = eye3 - v @ v.conj().T

    h_obs = (PAULI_X + PAULI_Z) / np.sqrt(2.0)
    k_obs = (PAULI_Z - PAULI_X) / np.sqrt(2.0)
    h_plus = (linalg.identity(2) + h_obs) / 2.0
    k_plus = (linalg.identity(2) + k_obs) / 2.0
    # k_minus is the +1-eigenprojector of (X-Z)/sqrt(2); the complement rides
    # on the +1 side of each observable as written in the dilated basis
    fam_h = (v @ h_plus @ v.conj().T + complement, v @ (linalg.identity(2) - h_plus) @ v.conj().T)
    fam_k = (v @ k_plus @ v.conj().T, v @ (linalg.identity(2) - k_plus) @ v.conj().T + complement)
    fam_m = tuple(np.outer(e, e.conj()) for e in trine_projector_vectors())
    return NaimarkDilation(pvms=(fam_h, fam_k, fam_m), isometry=v, dims=(2, 3))


@dataclass(frozen=True)
class DilationCheck:
    """Defect tables from verifying a claimed Naimark dilation."""

    tol: float
    isometry_defect: float
    element_defects: tuple[tuple[float, ...], ...]
    projection_defects: tuple[tuple[float, ...], ...]
    completeness_defects: tuple[float, ...]
    passed: bool


def verify_dilation(povms, d: NaimarkDilation, tol: float = 1e-10) -> DilationCheck:
    """Check ``R = V* P V``, projectivity, and completeness of a dilation."""
    v = d.isometry
    iso_defect = linalg.frobenius(v.conj().T @ v - linalg.identity(v.shape[1]))
    eye_big = linalg.identity(v.shape[0])
    element_defects = []
    projection_defects = []
    completeness = []
    for family, dilated in zip(povms, d.pvms, strict=True):
        row_el = []
        row_pr = []
        total = np.zeros_like(eye_big)
        for r, p in zip(family, dilated, strict=True):
            r = linalg.as_complex(r)
            p = linalg.as_complex(p)
            row_el.append(linalg.frobenius(r - v.conj().T @ p @ v))
            row_pr.append(linalg.projector_defect(p))
            total = total + p
        completeness.append(linalg.frobenius(total - eye_big))
        element_defects.append(tuple(row_el))
        projection_defects.append(tuple(row_pr))
    worst = max(
        [iso_defect]
        + [x for t in element_defects for x in t]
        + [x for t in projection_defects for x in t]
        + completeness
    )
    return DilationCheck(
        tol=tol,
        isometry_defect=iso_defect,
        element_defects=tuple(element_defects),
        projection_defects=tuple(projection_defects),
        completeness_defects=tuple(completeness),
        passed=bool(worst <= tol),
    )
