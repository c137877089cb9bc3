"""Dense linear algebra over labelled tensor factors.

Every operator is a plain ``numpy.ndarray``; a :class:`DenseState` pairs a
density matrix with a :class:`FactorLayout` that records the dimension and
owning party of each tensor factor.  Entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PARTIES = ("A", "B", "A'", "B'", "E")

#: eigenvalues below this are treated as exact zeros before taking logs
EIG_CUTOFF = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

ALICE = frozenset({"A", "A'"})
BOB = frozenset({"B", "B'"})


class LayoutError(ValueError):
    """Raised when factor dimensions or party labels are inconsistent."""


@dataclass(frozen=True)
class FactorLayout:
    dims: tuple[int, ...]
    parties: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "parties", tuple(self.parties))
        if len(self.dims) != len(self.parties):
            raise LayoutError("every factor needs exactly one party label")
        if any(d < 1 for d in self.dims):
            raise LayoutError(f"factor dimensions must be positive: {self.dims}")
        bad = [p for p in self.parties if p not in PARTIES]
        if bad:
            raise LayoutError(f"unknown party labels {bad}; allowed {PARTIES}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def __len__(self):
        return len(self.dims)

    def indices_of(self, parties: Iterable[str]) -> list[int]:
        wanted = set(parties)
        return [k for k, p in enumerate(self.parties) if p in wanted]

    def __add__(self, other: "FactorLayout") -> "FactorLayout":
        return FactorLayout(self.dims + other.dims, self.parties + other.parties)

    def select(self, keep: Sequence[int]) -> "FactorLayout":
        return FactorLayout(tuple(self.dims[k] for k in keep),
                            tuple(self.parties[k] for k in keep))

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "parties": list(self.parties)}


@dataclass(frozen=True, eq=False)
class DenseState:
    """Density matrix with an explicit factor layout.

    Construction checks shape, Hermiticity and unit trace.  Positivity is an
    eigenvalue computation and is left to :func:`check_state`.
    """

    matrix: np.ndarray
    layout: FactorLayout

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise LayoutError(f"matrix shape {m.shape} does not match layout dimension {n}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix has trace {tr!r}, expected 1")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def with_matrix(self, matrix: np.ndarray) -> "DenseState":
        return DenseState(matrix, self.layout)


def check_state(s: DenseState, tol: float = PSD_TOL) -> None:
    """Raise ``ValueError`` if ``s`` has an eigenvalue below ``-tol``."""
    lam = np.linalg.eigvalsh(s.matrix)
    if lam[0] < -tol:
        raise ValueError(f"state is not positive semidefinite (min eigenvalue {lam[0]:.3e})")


def ket_projector(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    return np.outer(v, v.conj())


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def tensor(*states: DenseState) -> DenseState:
    """Tensor product of states, concatenating their layouts."""
    mat = np.ones((1, 1), dtype=complex)
    layout = FactorLayout((), ())
    for s in states:
        mat = np.kron(mat, s.matrix)
        layout = layout + s.layout
    return DenseState(mat, layout)


def _check_perm(perm: Sequence[int], n: int) -> list[int]:
    perm = [int(k) for k in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} factor indices")
    return perm


def permute_operator(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator: new factor ``k`` is old factor ``perm[k]``."""
    dims = list(dims)
    k = len(dims)
    perm = _check_perm(perm, k)
    n = int(np.prod(dims, dtype=np.int64)) if dims else 1
    t = np.asarray(m).reshape(dims + dims)
    t = t.transpose(perm + [p + k for p in perm])
    return t.reshape(n, n)


def permute_factors(s: DenseState, perm: Sequence[int]) -> DenseState:
    perm = _check_perm(perm, len(s.layout))
    out = permute_operator(s.matrix, s.layout.dims, perm)
    return DenseState(out, s.layout.select(perm))


def partial_trace_operator(m: np.ndarray, dims: Sequence[int], discard: Iterable[int]) -> np.ndarray:
    dims = list(dims)
    k = len(dims)
    discard = set(int(i) for i in discard)
    keep = [i for i in range(k) if i not in discard]
    row = list(range(k))
    col = [i + k if i in keep else i for i in range(k)]
    out = keep + [i + k for i in keep]
    t = np.asarray(m).reshape(dims + dims)
    res = np.einsum(t, row + col, out)
    n = int(np.prod([dims[i] for i in keep], dtype=np.int64)) if keep else 1
    return res.reshape(n, n)


def partial_trace(s: DenseState, discard: Iterable[int]) -> DenseState:
    """Trace out the factors at the given indices."""
    discard = set(int(i) for i in discard)
    k = len(s.layout)
    if not discard:
        raise ValueError("nothing to discard")
    if not discard < set(range(k)):
        raise ValueError("discard must be a proper subset of the factor indices")
    keep = [i for i in range(k) if i not in discard]
    red = partial_trace_operator(s.matrix, s.layout.dims, discard)
    return DenseState(red, s.layout.select(keep))


def partial_transpose_operator(m: np.ndarray, dims: Sequence[int], factors: Iterable[int]) -> np.ndarray:
    dims = list(dims)
    k = len(dims)
    axes = list(range(2 * k))
    for i in set(factors):
        axes[i], axes[i + k] = axes[i + k], axes[i]
    n = int(np.prod(dims, dtype=np.int64)) if dims else 1
    return np.asarray(m).reshape(dims + dims).transpose(axes).reshape(n, n)


def partial_transpose(s: DenseState, parties: Iterable[str]) -> np.ndarray:
    """Transpose every factor owned by one of ``parties``."""
    parties = set(parties)
    if not parties:
        raise ValueError("no parties given")
    unknown = parties - set(PARTIES)
    if unknown:
        raise LayoutError(f"unknown party labels {sorted(unknown)}")
    idx = s.layout.indices_of(parties)
    return partial_transpose_operator(s.matrix, s.layout.dims, idx)


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order with matching eigenvector columns."""
    m = np.asarray(m)
    if not is_hermitian(m, tol=HERMITIAN_TOL * max(1.0, np.max(np.abs(m), initial=0.0))):
        raise ValueError("matrix is not Hermitian")
    lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    return lam[::-1], vec[:, ::-1]


def trace_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.shape[0] == m.shape[1] and is_hermitian(m, tol=1e-12):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    lam = np.clip(lam, 0.0, None)
    return (vec * np.sqrt(lam)) @ vec.conj().T


def fidelity(r: DenseState | np.ndarray, s: DenseState | np.ndarray) -> float:
    """Root fidelity ``Tr|sqrt(r) sqrt(s)|`` (not squared)."""
    a = r.matrix if isinstance(r, DenseState) else np.asarray(r)
    b = s.matrix if isinstance(s, DenseState) else np.asarray(s)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    f = float(np.sum(np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)))
    return min(max(f, 0.0), 1.0)


def _entropy_from_eigs(lam: np.ndarray) -> float:
    lam = lam[lam > EIG_CUTOFF]
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(r: DenseState | np.ndarray) -> float:
    m = r.matrix if isinstance(r, DenseState) else np.asarray(r)
    return _entropy_from_eigs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))


def relative_entropy(r: DenseState | np.ndarray, s: DenseState | np.ndarray) -> float:
    """``Tr r (log2 r - log2 s)``, or ``inf`` when supp r is not inside supp s."""
    a = r.matrix if isinstance(r, DenseState) else np.asarray(r)
    b = s.matrix if isinstance(s, DenseState) else np.asarray(s)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    la, va = np.linalg.eigh(0.5 * (a + a.conj().T))
    lb, vb = np.linalg.eigh(0.5 * (b + b.conj().T))
    on_a = la > EIG_CUTOFF
    on_b = lb > EIG_CUTOFF
    # weight of r outside the support of s
    overlap = np.abs(vb[:, ~on_b].conj().T @ va[:, on_a]) ** 2
    if overlap.size and float(np.sum(overlap @ la[on_a])) > 1e-10:
        return float("inf")
    la_on = la[on_a]
    first = float(np.sum(la_on * np.log2(la_on)))
    # Tr r log s = sum_ij la_i |<a_i|b_j>|^2 log lb_j over the support of s
    w = np.abs(vb[:, on_b].conj().T @ va[:, on_a]) ** 2
    second = float(np.log2(lb[on_b]) @ w @ la_on)
    return max(first - second, 0.0)


def polar_decompose(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left polar decomposition ``x = W P`` with ``W`` unitary and ``P >= 0``.

    On the kernel of ``x`` the unitary is the closest isometry onto the
    orthogonal complement of the range, which is the identity whenever the
    two subspaces coincide (normal ``x``).
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("polar decomposition needs a square matrix")
    n = x.shape[0]
    u, sv, vh = np.linalg.svd(x)
    v = vh.conj().T
    scale = max(1.0, float(sv.max(initial=0.0)))
    on = sv > 1e-12 * scale
    positive = (v * sv) @ v.conj().T
    w = u[:, on] @ vh[on]
    if not np.all(on):
        k = v[:, ~on]
        # orthonormal basis of range(x)^perp
        rperp = u[:, ~on]
        a, _, bh = np.linalg.svd(rperp.conj().T @ k)
        w = w + rperp @ (a @ bh) @ k.conj().T
    return w, 0.5 * (positive + positive.conj().T)


def purification_vector(r: DenseState) -> tuple[np.ndarray, int]:
    """Column-stacked purification ``sum_k sqrt(l_k) |v_k>|k>``.

    Returns the vector reshaped as ``(dim, rank)`` together with the rank.
    """
    lam, vec = np.linalg.eigh(r.matrix)
    on = lam > EIG_CUTOFF
    if not np.any(on):
        raise ValueError("state has no eigenvalue above the cutoff")
    lam = lam[on][::-1]
    vec = vec[:, on][:, ::-1]
    lam = lam / lam.sum()
    return vec * np.sqrt(lam), int(on.sum())


def purify(r: DenseState) -> DenseState:
    """Pure state on the original factors plus one appended ``E`` factor."""
    w, rank = purification_vector(r)
    psi = w.reshape(-1)
    return DenseState(ket_projector(psi), r.layout + FactorLayout((rank,), ("E",)))
