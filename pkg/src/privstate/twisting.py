"""Controlled-unitary twisting, the measured ccq ensemble, and privacy checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import unitary_group

from .states import BlockKeyState, dense_to_block, matrix_from_json, matrix_to_json
from .tensor_core import (
    DenseState,
    FactorLayout,
    fidelity,
    polar_decompose,
    purification_vector,
    trace_norm,
)

UNITARY_TOL = 1e-10


def _is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return u.ndim == 2 and u.shape[0] == u.shape[1] and \
        np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol


@dataclass(frozen=True, eq=False)
class Twist:
    """``sum_ij |ij><ij| (x) U_ij`` with ``i, j`` ranging over ``key_dim`` labels.

    Pairs missing from ``blocks`` act as the identity.
    """

    key_dim: int
    shield_dim: int
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (i, j), u in self.blocks.items():
            if not (0 <= i < self.key_dim and 0 <= j < self.key_dim):
                raise ValueError(f"key label ({i},{j}) outside 0..{self.key_dim - 1}")
            u = np.asarray(u, dtype=complex)
            if u.shape != (self.shield_dim, self.shield_dim):
                raise ValueError(f"block ({i},{j}) has shape {u.shape}, expected shield dim {self.shield_dim}")
            if not _is_unitary(u):
                raise ValueError(f"block ({i},{j}) is not unitary")
            clean[(int(i), int(j))] = u
        object.__setattr__(self, "blocks", clean)

    def block(self, i: int, j: int) -> np.ndarray:
        u = self.blocks.get((i, j))
        return np.eye(self.shield_dim, dtype=complex) if u is None else u

    def stacked(self) -> np.ndarray:
        """Blocks as an array indexed by flattened key label ``i*key_dim + j``."""
        k = self.key_dim
        return np.stack([self.block(i, j) for i in range(k) for j in range(k)])

    def matrix(self) -> np.ndarray:
        k2, s = self.key_dim ** 2, self.shield_dim
        u = np.zeros((k2 * s, k2 * s), dtype=complex)
        for a, blk in enumerate(self.stacked()):
            u[a * s:(a + 1) * s, a * s:(a + 1) * s] = blk
        return u

    def inverse(self) -> "Twist":
        return Twist(self.key_dim, self.shield_dim,
                     {ij: u.conj().T for ij, u in self.blocks.items()})

    def to_json(self) -> dict:
        return {"key_dim": self.key_dim, "shield_dim": self.shield_dim,
                "blocks": {f"{i},{j}": matrix_to_json(u) for (i, j), u in sorted(self.blocks.items())}}

    @classmethod
    def from_json(cls, doc: dict) -> "Twist":
        blocks = {}
        for key, enc in doc["blocks"].items():
            i, j = (int(t) for t in key.split(","))
            blocks[(i, j)] = matrix_from_json(enc)
        return cls(int(doc["key_dim"]), int(doc["shield_dim"]), blocks)


def identity_twist(key_dim: int, shield_dim: int) -> Twist:
    return Twist(key_dim, shield_dim, {})


def random_twist(key_dim: int, shield_dim: int, rng, diagonal: bool = True) -> Twist:
    """Haar-random blocks; only ``(i, i)`` pairs when ``diagonal``."""
    rng = np.random.default_rng(rng)
    pairs = [(i, i) for i in range(key_dim)] if diagonal else \
        [(i, j) for i in range(key_dim) for j in range(key_dim)]
    if shield_dim == 1:
        blocks = {ij: np.exp(2j * np.pi * rng.random()) * np.eye(1) for ij in pairs}
    else:
        blocks = {ij: unitary_group.rvs(shield_dim, random_state=rng) for ij in pairs}
    return Twist(key_dim, shield_dim, blocks)


def _split_key(layout: FactorLayout) -> tuple[int, int]:
    if layout.parties[:2] != ("A", "B") or layout.dims[0] != layout.dims[1]:
        raise ValueError("layout must begin with equal-dimension key factors A, B")
    k = layout.dims[0]
    return k, layout.total_dim // (k * k)


def apply_twist(s: DenseState, t: Twist) -> DenseState:
    k, sdim = _split_key(s.layout)
    if k != t.key_dim or sdim != t.shield_dim:
        raise ValueError(f"twist dims ({t.key_dim}, {t.shield_dim}) do not match state ({k}, {sdim})")
    u = t.stacked()
    blocks = s.matrix.reshape(k * k, sdim, k * k, sdim)
    # U_a B_ab U_b^dagger as batched matmuls over the key labels
    left = np.matmul(u[:, None], blocks.transpose(0, 2, 1, 3))
    out = np.matmul(left, u.conj().transpose(0, 2, 1)[None])
    return s.with_matrix(out.transpose(0, 2, 1, 3).reshape(s.dim, s.dim))


@dataclass(frozen=True, eq=False)
class CcqEnsemble:
    """AB computational-basis outcomes with Eve's conditional states.

    Outcomes with probability below ``1e-14`` are dropped.
    """

    outcomes: list
    eve_states: list
    key_dim: int

    def prob(self, i: int, j: int) -> float:
        for (lab, p) in self.outcomes:
            if lab == (i, j):
                return p
        return 0.0

    def eve(self, i: int, j: int) -> np.ndarray | None:
        for (lab, _), rho in zip(self.outcomes, self.eve_states):
            if lab == (i, j):
                return rho
        return None

    def joint(self) -> np.ndarray:
        pj = np.zeros((self.key_dim, self.key_dim))
        for (i, j), p in self.outcomes:
            pj[i, j] = p
        return pj


def _ccq_from_purification(w: np.ndarray, k: int) -> CcqEnsemble:
    rank = w.shape[1]
    w = w.reshape(k, k, -1, rank)
    outcomes, eve = [], []
    for i in range(k):
        for j in range(k):
            wij = w[i, j]
            p = float(np.sum(np.abs(wij) ** 2))
            if p <= 1e-14:
                continue
            rho = wij.T @ wij.conj() / p
            outcomes.append(((i, j), p))
            eve.append(0.5 * (rho + rho.conj().T))
    return CcqEnsemble(outcomes, eve, k)


def ccq_state(s: DenseState, purification: np.ndarray | None = None) -> CcqEnsemble:
    """Measure AB of the purified state; Eve keeps the purifying system.

    ``purification`` is an optional ``(dim, rank)`` array whose columns
    purify ``s``; when omitted, the spectral purification is used.
    """
    k, _ = _split_key(s.layout)
    w = purification_vector(s)[0] if purification is None else purification
    return _ccq_from_purification(w, k)


def _twist_purification(w: np.ndarray, t: Twist) -> np.ndarray:
    k2 = t.key_dim ** 2
    blocks = w.reshape(k2, t.shield_dim, -1)
    return np.einsum("axy,ayr->axr", t.stacked(), blocks).reshape(w.shape)


def check_lemma1(s: DenseState, t: Twist) -> float:
    """Largest change of the measured ensemble caused by twisting.

    One purification of ``s`` is twisted in place, so both ensembles share
    Eve's system; the result is the largest outcome-probability shift plus the
    largest trace distance between matching conditional states.
    """
    k, sdim = _split_key(s.layout)
    if k != t.key_dim or sdim != t.shield_dim:
        raise ValueError("twist does not match the state's key/shield dimensions")
    w, _ = purification_vector(s)
    before = _ccq_from_purification(w, k)
    after = _ccq_from_purification(_twist_purification(w, t), k)
    labels = {lab for lab, _ in before.outcomes} | {lab for lab, _ in after.outcomes}
    dp, dist = 0.0, 0.0
    for lab in labels:
        dp = max(dp, abs(before.prob(*lab) - after.prob(*lab)))
        r0, r1 = before.eve(*lab), after.eve(*lab)
        if r0 is not None and r1 is not None:
            dist = max(dist, 0.5 * trace_norm(r0 - r1))
    return dp + dist


class SecurityIdentity(NamedTuple):
    norm_x: float
    p0: float
    p1: float
    fid: float
    residual: float


def security_identity(s: DenseState) -> SecurityIdentity:
    """Compare the corner trace norm with ``sqrt(p0 p1) F(rho0_E, rho1_E)``."""
    bs = dense_to_block(s)
    norm_x = trace_norm(bs.x)
    e = ccq_state(s)
    p0, p1 = e.prob(0, 0), e.prob(1, 1)
    r0, r1 = e.eve(0, 0), e.eve(1, 1)
    fid = fidelity(r0, r1) if r0 is not None and r1 is not None else 0.0
    return SecurityIdentity(norm_x, p0, p1, fid, abs(norm_x - np.sqrt(p0 * p1) * fid))


def untwist_from_x(bs: BlockKeyState) -> Twist:
    """Twist making the corner block's trace equal its trace norm."""
    w, _ = polar_decompose(bs.x)
    return Twist(2, bs.shield_dim, {(1, 1): w})


@dataclass
class PrivacyReport:
    passed: bool
    failures: list
    offdiag_max: float
    key_bias: float
    fidelity_deficit: float
    corner_gap: float | None = None  # 1/2 - ||x||, two-qubit keys only

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        if self.passed:
            return "private-state: PASS"
        return "private-state: FAIL (" + "; ".join(self.failures) + ")"


def verify_private_state(s: DenseState, tol: float = 1e-9) -> PrivacyReport:
    """Operational privacy test: perfect correlation, uniform key, blind Eve."""
    k, sdim = _split_key(s.layout)
    if k & (k - 1):
        raise ValueError(f"key dimension {k} is not a power of two")
    blocks = s.matrix.reshape(k, k, sdim, k, k, sdim)
    mask = np.ones((k, k, k, k), dtype=bool)
    for i in range(k):
        for j in range(k):
            mask[i, i, j, j] = False
    offdiag = float(np.max(np.abs(blocks.transpose(0, 1, 3, 4, 2, 5)[mask]), initial=0.0))

    e = ccq_state(s)
    probs = np.array([e.prob(i, i) for i in range(k)])
    bias = float(np.max(np.abs(probs - 1.0 / k)))
    deficit = 1.0
    eves = [e.eve(i, i) for i in range(k)]
    if all(r is not None for r in eves):
        fids = [fidelity(eves[a], eves[b]) for a in range(k) for b in range(a + 1, k)]
        deficit = 1.0 - min(fids) if fids else 0.0

    failures = []
    if offdiag > tol:
        failures.append(f"key not perfectly correlated (off-diagonal block {offdiag:.3e})")
    if bias > tol:
        failures.append(f"key not uniform (bias {bias:.3e})")
    if deficit > tol:
        failures.append(f"Eve's states distinguishable (fidelity deficit {deficit:.3e})")
    gap = None
    if k == 2:
        x = blocks[0, 0, :, 1, 1, :]
        gap = 0.5 - trace_norm(x)
    return PrivacyReport(not failures, failures, offdiag, bias, deficit, gap)
