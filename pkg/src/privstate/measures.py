"""Entanglement and key quantifiers.

The chain checked here is ``E_N >= E_D``, ``DW rate <= K_D <= E_r`` and
``E_r <= S(rho || dephased rho)`` whenever the dephased state is separable.
For the antisymmetric Werner state the literature values ``E_c = 1`` and
``E_r^inf = log2((d + 2)/d)`` are quoted, not computed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import BlockFormError, block_to_dense, dense_to_block, hiding_pair, require_dim
from .tensor_core import (
    ALICE,
    BOB,
    DenseState,
    LayoutError,
    partial_transpose,
    partial_transpose_operator,
    relative_entropy,
    trace_norm,
    von_neumann_entropy,
)
from .twisting import CcqEnsemble, apply_twist, ccq_state, untwist_from_x

PPT_TOL = 1e-10


def _bob_transpose(s: DenseState) -> np.ndarray:
    parties = set(s.layout.parties)
    if not parties & ALICE or not parties & BOB:
        raise LayoutError("state needs factors on both sides of the A|B cut")
    return partial_transpose(s, BOB)


def min_pt_eigenvalue(s: DenseState) -> float:
    return float(np.linalg.eigvalsh(_bob_transpose(s))[0])


def is_ppt(s: DenseState) -> bool:
    return min_pt_eigenvalue(s) >= -PPT_TOL


def log_negativity(s: DenseState) -> float:
    """``log2 ||rho^Gamma||_1`` across the Alice|Bob cut."""
    return max(0.0, float(np.log2(trace_norm(_bob_transpose(s)))))


def en_example1_closed(d: int) -> float:
    if d < 2:
        raise ValueError("d must be >= 2")
    return float(np.log2((d + 1) / d))


def en_hiding_closed(d: int, l: int) -> float:
    """``||tau0^Gamma - tau1^Gamma||_1`` for the Werner hiding pair."""
    hp = hiding_pair(d, l)
    bob = hp.tau0.layout.indices_of(BOB)
    dims = hp.tau0.layout.dims
    diff = partial_transpose_operator(hp.tau0.matrix - hp.tau1.matrix, dims, bob)
    return trace_norm(diff)


def dephase_key(s: DenseState) -> DenseState:
    """Drop every AB off-diagonal block (computational basis)."""
    k = s.layout.dims[0] * s.layout.dims[1]
    n = s.dim // k
    blocks = s.matrix.reshape(k, n, k, n)
    out = np.zeros_like(blocks)
    for a in range(k):
        out[a, :, a, :] = blocks[a, :, a, :]
    return s.with_matrix(out.reshape(s.dim, s.dim))


def ree_dephasing_bound(s: DenseState) -> float:
    """``S(rho || Delta rho) = S(Delta rho) - S(rho)`` in bits.

    Upper-bounds the relative entropy of entanglement when the key-dephased
    state is separable, as for every family built in :mod:`privstate.states`.
    """
    dense_to_block(s)
    return max(0.0, von_neumann_entropy(dephase_key(s)) - von_neumann_entropy(s))


def ree_dephasing_direct(s: DenseState) -> float:
    """Same bound evaluated as a relative entropy rather than an entropy gap."""
    return relative_entropy(s, dephase_key(s))


def _shannon(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log2(p)))


def dw_rate(e: CcqEnsemble) -> float:
    """One-way Devetak-Winter rate ``I(A:B) - I(A:E)``, floored at zero.

    Eve's Holevo information is taken about Alice's outcome, i.e. over the
    ensemble ``{p(a), sum_b p(b|a) rho_E^{ab}}``.
    """
    pj = e.joint()
    mutual = _shannon(pj.sum(axis=1)) + _shannon(pj.sum(axis=0)) - _shannon(pj)
    dim = e.eve_states[0].shape[0]
    avg = np.zeros((dim, dim), dtype=complex)
    by_alice: dict[int, np.ndarray] = {}
    for ((a, _), p), rho in zip(e.outcomes, e.eve_states):
        avg += p * rho
        by_alice[a] = by_alice.get(a, 0) + p * rho
    cond = 0.0
    for a, m in by_alice.items():
        pa = float(np.trace(m).real)
        cond += pa * von_neumann_entropy(m / pa)
    holevo = von_neumann_entropy(avg) - cond
    return max(0.0, mutual - holevo)


def untwisted_ccq(s: DenseState) -> CcqEnsemble:
    """ccq ensemble of ``s`` after the polar-decomposition untwisting."""
    bs = dense_to_block(s)
    return ccq_state(apply_twist(s, untwist_from_x(bs)))


@dataclass
class MeasureReport:
    name: str
    value: float | None
    method: str  # "closed_form", "dense" or "bound"
    tolerance: float
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "method": self.method,
                "tolerance": self.tolerance, "note": self.note}


def measure_suite(s: DenseState) -> list[MeasureReport]:
    """PPT flag, log-negativity, dephasing bound and DW rate of one state."""
    require_dim(s.dim, "measure suite")
    out = [
        MeasureReport("is_ppt", float(is_ppt(s)), "dense", PPT_TOL),
        MeasureReport("log_negativity", log_negativity(s), "dense", 1e-9),
    ]
    try:
        bound = ree_dephasing_bound(s)
        rate = dw_rate(untwisted_ccq(s))
    except (BlockFormError, LayoutError) as exc:
        out.append(MeasureReport("ree_dephasing_bound", None, "bound", 1e-9, f"absent: {exc}"))
        out.append(MeasureReport("dw_rate", None, "bound", 1e-9, f"absent: {exc}"))
        return out
    out.append(MeasureReport("ree_dephasing_bound", bound, "bound", 1e-9))
    out.append(MeasureReport("dw_rate", rate, "bound", 1e-9))
    if rate > bound + 1e-9:
        raise AssertionError(f"DW rate {rate} exceeds relative-entropy bound {bound}")
    return out
