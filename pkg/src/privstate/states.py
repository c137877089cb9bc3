"""Constructors for the key-carrying state families.

Dense states use the canonical factor order ``A, B, A'_1..A'_l, B'_1..B'_l``.
States whose key part is a pair of qubits and whose only AB coherence sits
between ``|00>`` and ``|11>`` also have a five-block form, :class:`BlockKeyState`.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .tensor_core import (
    DenseState,
    FactorLayout,
    check_state,
    ket_projector,
    permute_operator,
    trace_norm,
)

if TYPE_CHECKING:
    from .twisting import Twist

DEFAULT_DIM_CAP = 4096
KEY_LAYOUT = FactorLayout((2, 2), ("A", "B"))
# AB basis order 00, 01, 10, 11
KEY_LABELS = ("00", "01", "10", "11")
_ALLOWED_BLOCKS = {(0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0)}


class DimensionCapError(ValueError):
    """A dense representation would exceed the configured dimension cap."""


def dim_cap() -> int:
    """Dense dimension cap, overridable with ``PRIVSTATE_DIM_CAP``."""
    raw = os.environ.get("PRIVSTATE_DIM_CAP")
    return int(raw) if raw else DEFAULT_DIM_CAP


def require_dim(total: int, what: str = "state") -> None:
    cap = dim_cap()
    if total > cap:
        raise DimensionCapError(
            f"{what} needs dense dimension {total}, above the cap {cap} "
            "(set PRIVSTATE_DIM_CAP to raise it)")


def shield_layout(d: int, l: int) -> FactorLayout:
    return FactorLayout((d,) * (2 * l), ("A'",) * l + ("B'",) * l)


def canonical_perm(parties) -> list[int]:
    """Stable permutation bringing factors into A, B, A', B', E order."""
    rank = {"A": 0, "B": 1, "A'": 2, "B'": 3, "E": 4}
    return sorted(range(len(parties)), key=lambda k: rank[parties[k]])


def _check_d(d: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError(f"local dimension d must be an integer >= 2, got {d}")


def _check_l(l: int) -> None:
    if int(l) != l or l < 1:
        raise ValueError(f"number of copies l must be an integer >= 1, got {l}")


def max_entangled_vector(d: int) -> np.ndarray:
    v = np.zeros(d * d, dtype=complex)
    v[[i * d + i for i in range(d)]] = 1.0 / np.sqrt(d)
    return v


def max_entangled(d: int) -> DenseState:
    _check_d(d)
    return DenseState(ket_projector(max_entangled_vector(d)), FactorLayout((d, d), ("A", "B")))


def bell_state(sign: int = +1) -> np.ndarray:
    """Projector onto (|00> + sign |11>)/sqrt(2)."""
    v = np.array([1, 0, 0, sign], dtype=complex) / np.sqrt(2)
    return ket_projector(v)


def swap_operator(d: int) -> np.ndarray:
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[i * d + j, j * d + i] = 1.0
    return f


def werner_extreme(d: int, kind: str) -> DenseState:
    """Normalised projector onto the symmetric (``"sym"``) or antisymmetric subspace."""
    _check_d(d)
    eye = np.eye(d * d)
    flip = swap_operator(d)
    if kind == "sym":
        m = (eye + flip) / (d * (d + 1))
    elif kind == "asym":
        m = (eye - flip) / (d * (d - 1))
    else:
        raise ValueError(f"kind must be 'sym' or 'asym', got {kind!r}")
    return DenseState(m, FactorLayout((d, d), ("A'", "B'")))


@dataclass(frozen=True, eq=False)
class HidingPair:
    tau0: DenseState
    tau1: DenseState
    d: int
    l: int


def _power_on_shield(pair: np.ndarray, d: int, l: int) -> np.ndarray:
    """``pair`` on l interleaved d x d copies, reordered to A'..A' B'..B'."""
    m = np.ones((1, 1), dtype=complex)
    for _ in range(l):
        m = np.kron(m, pair)
    # interleaved factor 2k is A'_k, 2k+1 is B'_k
    perm = [2 * k for k in range(l)] + [2 * k + 1 for k in range(l)]
    return permute_operator(m, [d] * (2 * l), perm)


def hiding_pair(d: int, l: int) -> HidingPair:
    _check_d(d)
    _check_l(l)
    require_dim(d ** (2 * l), "hiding pair")
    rs = werner_extreme(d, "sym").matrix
    ra = werner_extreme(d, "asym").matrix
    layout = shield_layout(d, l)
    tau0 = DenseState(_power_on_shield(rs, d, l), layout)
    tau1 = DenseState(_power_on_shield((rs + ra) / 2, d, l), layout)
    return HidingPair(tau0, tau1, int(d), int(l))


def private_state(m: int, twist: "Twist", shield: DenseState) -> DenseState:
    """``U (psi+_{2^m} x shield) U^dagger`` for a twisting unitary ``U``."""
    from .twisting import apply_twist

    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    k = 2 ** m
    require_dim(k * k * shield.dim, "private state")
    if twist.key_dim != k or twist.shield_dim != shield.dim:
        raise ValueError(
            f"twist acts on key dim {twist.key_dim} and shield dim {twist.shield_dim}; "
            f"state needs {k} and {shield.dim}")
    key = DenseState(ket_projector(max_entangled_vector(k)), FactorLayout((k, k), ("A", "B")))
    base = DenseState(np.kron(key.matrix, shield.matrix), key.layout + shield.layout)
    return apply_twist(base, twist)


def _flagged_bell_mixture(p: float, flag_plus: DenseState, flag_minus: DenseState) -> DenseState:
    mat = p * np.kron(bell_state(+1), flag_plus.matrix) + (1 - p) * np.kron(bell_state(-1), flag_minus.matrix)
    return DenseState(mat, KEY_LAYOUT + flag_plus.layout)


def example1_state(d: int, p: float | None = None) -> DenseState:
    """Bell states flagged by the two extreme Werner states.

    ``p`` defaults to ``(1 + 1/d)/2``.
    """
    _check_d(d)
    if p is None:
        p = (1 + 1 / d) / 2
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    require_dim(4 * d * d, "example1 state")
    return _flagged_bell_mixture(p, werner_extreme(d, "sym"), werner_extreme(d, "asym"))


def example2_state(d: int, l: int) -> DenseState:
    """Equal mixture of psi+ flagged by tau0 and psi- flagged by tau1."""
    _check_d(d)
    _check_l(l)
    require_dim(4 * d ** (2 * l), "example2 state")
    hp = hiding_pair(d, l)
    return _flagged_bell_mixture(0.5, hp.tau0, hp.tau1)


@dataclass(frozen=True, eq=False)
class BlockKeyState:
    """Five shield-space blocks of a key-correlated two-qubit-key state.

    ``d00..d11`` sit on the AB diagonal, ``x`` is the ``(00, 11)`` corner and
    ``x^dagger`` the ``(11, 00)`` corner.
    """

    d00: np.ndarray
    d01: np.ndarray
    d10: np.ndarray
    d11: np.ndarray
    x: np.ndarray
    shield_layout: FactorLayout

    def __post_init__(self):
        s = self.shield_layout.total_dim
        for name in ("d00", "d01", "d10", "d11", "x"):
            blk = np.array(getattr(self, name), dtype=complex)
            if blk.shape != (s, s):
                raise ValueError(f"block {name} has shape {blk.shape}, shield dimension is {s}")
            blk.setflags(write=False)
            object.__setattr__(self, name, blk)
        tr = self.trace
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"block state has trace {tr!r}, expected 1")

    @property
    def shield_dim(self) -> int:
        return self.shield_layout.total_dim

    @property
    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in (self.d00, self.d01, self.d10, self.d11)))

    @property
    def norm_x(self) -> float:
        return trace_norm(self.x)

    def check(self, tol: float = 1e-10) -> None:
        """Raise if the dense expansion is not PSD or the corner bound fails."""
        p0 = np.trace(self.d00).real
        p1 = np.trace(self.d11).real
        if self.norm_x > np.sqrt(max(p0 * p1, 0.0)) + tol:
            raise ValueError("corner block violates the 2x2 positivity bound")
        check_state(block_to_dense(self), tol)


def raw_key_state(p: float, d: int, l: int) -> BlockKeyState:
    """Hiding-state key with bit errors at rate ``1 - 2p``."""
    if not 0 < p <= 0.5:
        raise ValueError(f"p must lie in (0, 1/2], got {p}")
    hp = hiding_pair(d, l)
    t0, t1 = hp.tau0.matrix, hp.tau1.matrix
    diag = (p / 2) * (t0 + t1)
    flip = (0.5 - p) * t0
    return BlockKeyState(diag, flip, flip.copy(), diag.copy(), (p / 2) * (t1 - t0), hp.tau0.layout)


def block_to_dense(bs: BlockKeyState) -> DenseState:
    s = bs.shield_dim
    require_dim(4 * s, "block state expansion")
    m = np.zeros((4 * s, 4 * s), dtype=complex)
    for k, blk in enumerate((bs.d00, bs.d01, bs.d10, bs.d11)):
        m[k * s:(k + 1) * s, k * s:(k + 1) * s] = blk
    m[0:s, 3 * s:] = bs.x
    m[3 * s:, 0:s] = bs.x.conj().T
    return DenseState(m, KEY_LAYOUT + bs.shield_layout)


class BlockFormError(ValueError):
    """State is not in key-correlated block form."""


def _key_blocks(s: DenseState) -> tuple[np.ndarray, int]:
    dims = s.layout.dims
    if s.layout.parties[:2] != ("A", "B") or dims[:2] != (2, 2):
        raise BlockFormError("state must start with qubit factors A, B")
    n = s.dim // 4
    return s.matrix.reshape(4, n, 4, n).transpose(0, 2, 1, 3), n


def dense_to_block(s: DenseState, tol: float = 1e-10) -> BlockKeyState:
    blocks, n = _key_blocks(s)
    for i in range(4):
        for j in range(4):
            if (i, j) in _ALLOWED_BLOCKS:
                continue
            dev = float(np.max(np.abs(blocks[i, j])))
            if dev > tol:
                raise BlockFormError(
                    f"AB block ({KEY_LABELS[i]},{KEY_LABELS[j]}) is nonzero (max |entry| {dev:.3e})")
    shield = FactorLayout(s.layout.dims[2:], s.layout.parties[2:])
    return BlockKeyState(blocks[0, 0].copy(), blocks[1, 1].copy(), blocks[2, 2].copy(),
                         blocks[3, 3].copy(), blocks[0, 3].copy(), shield)


# -- JSON encodings ---------------------------------------------------------

def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"rows": m.shape[0], "cols": m.shape[1],
            "real_entries": m.real.ravel().tolist(), "imag_entries": m.imag.ravel().tolist()}


def matrix_from_json(doc: dict) -> np.ndarray:
    re = np.asarray(doc["real_entries"], dtype=float)
    im = np.asarray(doc["imag_entries"], dtype=float)
    rows = doc.get("rows")
    if rows is None:
        rows = int(round(np.sqrt(re.size)))
    cols = doc.get("cols", re.size // rows)
    return (re + 1j * im).reshape(rows, cols)


def state_to_json(s: DenseState) -> dict:
    doc = s.layout.to_dict()
    m = s.matrix
    doc["real_entries"] = m.real.ravel().tolist()
    doc["imag_entries"] = m.imag.ravel().tolist()
    return doc


def state_from_json(doc: dict) -> DenseState:
    layout = FactorLayout(tuple(doc["dims"]), tuple(doc["parties"]))
    n = layout.total_dim
    m = (np.asarray(doc["real_entries"], float) + 1j * np.asarray(doc["imag_entries"], float)).reshape(n, n)
    return DenseState(m, layout)


def block_to_json(bs: BlockKeyState) -> dict:
    doc = {"shield": bs.shield_layout.to_dict()}
    for name in ("d00", "d01", "d10", "d11", "x"):
        doc[name] = matrix_to_json(getattr(bs, name))
    return doc


def block_from_json(doc: dict) -> BlockKeyState:
    layout = FactorLayout(tuple(doc["shield"]["dims"]), tuple(doc["shield"]["parties"]))
    parts = {name: matrix_from_json(doc[name]) for name in ("d00", "d01", "d10", "d11", "x")}
    return BlockKeyState(shield_layout=layout, **parts)


def random_density(n: int, rng, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix (test utility)."""
    rng = np.random.default_rng(rng)
    g = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_block_state(shield: FactorLayout, rng, error_weight: float | None = None) -> BlockKeyState:
    """Random key-correlated block state on the given shield (test utility)."""
    rng = np.random.default_rng(rng)
    s = shield.total_dim
    w = rng.uniform(0.0, 0.5) if error_weight is None else error_weight
    corr = random_density(2 * s, rng) * (1 - w)
    d01 = random_density(s, rng) * (w * rng.uniform(0.2, 0.8))
    d10 = random_density(s, rng) * (w - np.trace(d01).real)
    return BlockKeyState(corr[:s, :s], d01, d10, corr[s:, s:], corr[:s, s:], shield)
