"""Recurrence distillation without twirling, applied to the raw hiding-state key.

Two representations are kept side by side: the five-block algebra, which
scales, and a brute-force dense simulation used as an oracle.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .measures import is_ppt, log_negativity, dw_rate, untwisted_ccq
from .states import (
    BlockKeyState,
    DimensionCapError,
    block_to_dense,
    canonical_perm,
    raw_key_state,
    require_dim,
)
from .tensor_core import DenseState, FactorLayout, permute_operator

CSV_FIELDS = ("p", "d", "l", "n", "ppt_condition", "norm_x", "en_bound", "dw_rate")


@dataclass(frozen=True)
class ProtocolParams:
    p: float
    d: int
    l: int
    n: int = 1

    def __post_init__(self):
        if not 0 < self.p <= 0.5:
            raise ValueError(f"p must lie in (0, 1/2], got {self.p}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if int(self.l) != self.l or self.l < 1:
            raise ValueError(f"l must be an integer >= 1, got {self.l}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")

    @property
    def dense_dim(self) -> int:
        return 4 * self.d ** (2 * self.l * self.n)


@dataclass
class SweepRecord:
    params: ProtocolParams
    ppt_condition: bool
    norm_x: float
    en_bound: float | None = None
    dw_rate: float | None = None
    is_ppt: bool | None = None
    note: str = ""

    def row(self) -> dict:
        return {"p": self.params.p, "d": self.params.d, "l": self.params.l, "n": self.params.n,
                "ppt_condition": self.ppt_condition, "norm_x": self.norm_x,
                "en_bound": self.en_bound, "dw_rate": self.dw_rate}


def _reorder_shield(blocks, layout: FactorLayout):
    perm = canonical_perm(layout.parties)
    return [permute_operator(b, layout.dims, perm) for b in blocks], layout.select(perm)


def recurrence_step_block(a: BlockKeyState, b: BlockKeyState) -> tuple[BlockKeyState, float]:
    """One postselected two-copy step on the block representation.

    Copy ``a`` keeps its key; copy ``b`` is the CNOT target that gets measured.
    Keeping agreeing outcomes sums the target's two equal-parity branches.
    """
    if not set(a.shield_layout.parties + b.shield_layout.parties) <= {"A'", "B'"}:
        raise ValueError("shield layouts of the two copies are incompatible")
    same = b.d00 + b.d11
    flip = b.d01 + b.d10
    blocks = [np.kron(a.d00, same), np.kron(a.d01, flip), np.kron(a.d10, flip),
              np.kron(a.d11, same), np.kron(a.x, b.x + b.x.conj().T)]
    success = float(sum(np.trace(m).real for m in blocks[:4]))
    if success <= 0:
        raise ValueError("postselection never succeeds for these inputs")
    blocks, layout = _reorder_shield([m / success for m in blocks], a.shield_layout + b.shield_layout)
    return BlockKeyState(*blocks, shield_layout=layout), success


def _cnot_permutation(dims: list[int], pairs: list[tuple[int, int]]) -> np.ndarray:
    """Index map ``new -> old`` for bit-flip CNOTs given as (control, target) factor pairs."""
    digits = np.indices(dims).reshape(len(dims), -1)
    old = digits.copy()
    for c, t in pairs:
        old[t] = (digits[t] + digits[c]) % 2
    return np.ravel_multi_index(tuple(old), dims)


def recurrence_step_dense(a: DenseState, b: DenseState) -> tuple[DenseState, float]:
    """Brute-force bilateral CNOT, target measurement and postselection."""
    for s in (a, b):
        if s.layout.parties[:2] != ("A", "B") or s.layout.dims[:2] != (2, 2):
            raise ValueError("both inputs need qubit key factors A, B first")
    require_dim(a.dim * b.dim, "two-copy dense recurrence")
    dims = list(a.layout.dims + b.layout.dims)
    ka = len(a.layout)
    a1, b1, a2, b2 = 0, 1, ka, ka + 1
    rho = np.kron(a.matrix, b.matrix)
    src = _cnot_permutation(dims, [(a1, a2), (b1, b2)])
    rho = rho[np.ix_(src, src)]

    digits = np.indices(dims).reshape(len(dims), -1)
    out = 0
    for t in (0, 1):
        keep = np.flatnonzero((digits[a2] == t) & (digits[b2] == t))
        out = out + rho[np.ix_(keep, keep)]
    success = float(np.trace(out).real)
    kept = [k for k in range(len(dims)) if k not in (a2, b2)]
    layout = (a.layout + b.layout).select(kept)
    perm = canonical_perm(layout.parties)
    out = permute_operator(out / success, layout.dims, perm)
    return DenseState(out, layout.select(perm)), success


def n_copy_closed_form(params: ProtocolParams) -> BlockKeyState:
    """Blocks of the raw key state raised to the n-th tensor power, normalised by N."""
    require_dim(params.dense_dim, "n-copy state")
    p, n = params.p, params.n
    one = raw_key_state(p, params.d, params.l)
    norm = 2 * p ** n + 2 * (0.5 - p) ** n
    powers = []
    for blk in (one.d00, one.d01, one.d10, one.d11, one.x):
        m = np.ones((1, 1))
        for _ in range(n):
            m = np.kron(m, blk)
        powers.append(m / norm)
    layout = FactorLayout(one.shield_layout.dims * n, one.shield_layout.parties * n)
    blocks, layout = _reorder_shield(powers, layout)
    return BlockKeyState(*blocks, shield_layout=layout)


def n_copy_iterated(params: ProtocolParams) -> tuple[BlockKeyState, float]:
    """Pump ``n - 1`` fresh copies into one target via repeated two-copy steps.

    Returns the state and the overall success probability.
    """
    require_dim(params.dense_dim, "n-copy state")
    one = raw_key_state(params.p, params.d, params.l)
    state, total = one, 1.0
    for _ in range(params.n - 1):
        state, prob = recurrence_step_block(state, one)
        total *= prob
    return state, total


def off_diag_norm(params: ProtocolParams) -> float:
    p, l, n = params.p, params.l, params.n
    ratio = (1 - 2 * p) / (2 * p)
    return 0.5 * (1 - 2.0 ** -l) ** n / (1 + ratio ** n)


def norm_x_dense(params: ProtocolParams) -> float:
    return n_copy_closed_form(params).norm_x


def ppt_condition(p: float, d: int, l: int) -> bool:
    """Sufficient PPT condition for the raw key state."""
    return p <= 1 / 3 and ((1 - p) / p) ** (1 / l) * (d - 1) >= d - 1e-12


def feasible_params(p: float, l: int) -> int | None:
    """Smallest ``d >= 2`` meeting :func:`ppt_condition`, or ``None``."""
    if not 0 < p <= 0.5:
        raise ValueError(f"p must lie in (0, 1/2], got {p}")
    if p > 1 / 3:
        return None
    c = ((1 - p) / p) ** (1 / l)
    if c <= 1:
        return None
    d = max(2, math.floor(c / (c - 1)) - 1)
    while not ppt_condition(p, d, l):
        d += 1
    return d


def run_pipeline(params: ProtocolParams) -> SweepRecord:
    """PPT flag and closed-form corner norm always; dense measures when within the cap."""
    rec = SweepRecord(params, ppt_condition(params.p, params.d, params.l), off_diag_norm(params))
    try:
        bs = n_copy_closed_form(params)
    except DimensionCapError as exc:
        rec.note = f"dense stages skipped: {exc}"
        return rec
    state = block_to_dense(bs)
    rec.is_ppt = is_ppt(state)
    rec.en_bound = log_negativity(state)
    rec.dw_rate = dw_rate(untwisted_ccq(state))
    return rec


def sweep(grid, jobs: int = 1) -> list[SweepRecord]:
    """Evaluate records in grid order; ``jobs > 1`` uses a process pool."""
    grid = list(grid)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_pipeline, grid))
    return [run_pipeline(g) for g in grid]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        row = r.row()
        w.writerow([_fmt(row[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def records_to_json(records) -> str:
    return json.dumps([r.row() for r in records], indent=2) + "\n"


def records_from_csv(text: str) -> list[dict]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        rec = {}
        for k in CSV_FIELDS:
            v = row[k]
            if k in ("d", "l", "n"):
                rec[k] = int(v)
            elif k == "ppt_condition":
                rec[k] = v == "true"
            else:
                rec[k] = float(v) if v != "" else None
        out.append(rec)
    return out
