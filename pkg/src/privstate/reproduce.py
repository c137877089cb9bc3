"""Reproduction reports: closed form vs numeric value for each headline claim."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from . import measures, protocol, states, twisting
from .tensor_core import FactorLayout, trace_norm

TARGETS = ("eq13", "ppt_condition", "lemma1", "en_example1", "en_example2",
           "security_identity", "theorem2_chain")
REPORT_FIELDS = ("item", "closed_form", "numeric", "deviation", "tolerance", "status")


@dataclass
class Row:
    item: str
    closed_form: float
    numeric: float
    deviation: float
    tolerance: float
    passed: bool

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _match(item, closed, numeric, tol) -> Row:
    dev = abs(closed - numeric)
    return Row(item, float(closed), float(numeric), float(dev), tol, dev <= tol)


def _eq13(rng) -> list[Row]:
    rows = []
    for p in (0.25, 0.3, 1 / 3):
        for l in (1, 2):
            for n in (1, 2):
                pr = protocol.ProtocolParams(p, 2, l, n)
                rows.append(_match(f"p={p:.6g} d=2 l={l} n={n}",
                                   protocol.off_diag_norm(pr), protocol.norm_x_dense(pr), 1e-9))
    return rows


def _ppt_condition(rng) -> list[Row]:
    rows = []
    grid = [(p, d, l) for p in (0.1, 0.2, 1 / 3) for d in (2, 3) for l in (1, 2)] + [(0.3, 2, 1)]
    for p, d, l in grid:
        if not protocol.ppt_condition(p, d, l) or 4 * d ** (2 * l) > states.dim_cap():
            continue
        dense = states.block_to_dense(states.raw_key_state(p, d, l))
        lam = measures.min_pt_eigenvalue(dense)
        # closed form: condition holds, so the spectrum must be nonnegative
        rows.append(Row(f"min PT eigenvalue p={p:.6g} d={d} l={l}", 0.0, lam,
                        max(0.0, -lam), 1e-10, lam >= -1e-10))
        rows.append(_match(f"log-negativity p={p:.6g} d={d} l={l}", 0.0,
                           measures.log_negativity(dense), 1e-9))
    return rows


def _lemma1(rng) -> list[Row]:
    rows = []
    cases = [("example1 d=2", states.example1_state(2)),
             ("raw p=1/3 d=2 l=1", states.block_to_dense(states.raw_key_state(1 / 3, 2, 1)))]
    for name, s in cases:
        sdim = s.dim // 4
        for k in range(20):
            t = twisting.random_twist(2, sdim, rng)
            rows.append(_match(f"{name} twist {k}", 0.0, twisting.check_lemma1(s, t), 1e-9))
    return rows


def _en_example1(rng) -> list[Row]:
    return [_match(f"d={d}", measures.en_example1_closed(d),
                   measures.log_negativity(states.example1_state(d)), 1e-9) for d in (2, 3, 4)]


def _en_example2(rng) -> list[Row]:
    rows = []
    for l in (1, 2):
        hp = states.hiding_pair(2, l)
        gap = measures.en_hiding_closed(2, l)
        en = measures.log_negativity(states.example2_state(2, l))
        rows.append(_match(f"E_N vs ||tau0^G - tau1^G|| l={l}", gap, en, 1e-9))
        rows.append(_match(f"E_N vs log2(1 + ||tau0^G - tau1^G||/2) l={l}",
                           float(np.log2(1 + gap / 2)), en, 1e-9))
        rows.append(_match(f"||tau1 - tau0|| l={l}", 2 - 2.0 ** (1 - l),
                           trace_norm(hp.tau1.matrix - hp.tau0.matrix), 1e-9))
    return rows


def constructed_block_states(rng) -> list[tuple[str, states.BlockKeyState]]:
    out = [(f"raw p={p:.6g} d={d} l={l}", states.raw_key_state(p, d, l))
           for p, d, l in ((1 / 3, 2, 1), (0.3, 2, 1), (0.5, 2, 1), (0.2, 2, 2), (1 / 3, 3, 1))]
    out.append(("n-copy p=1/3 d=2 l=1 n=2",
                protocol.n_copy_closed_form(protocol.ProtocolParams(1 / 3, 2, 1, 2))))
    out.append(("example1 d=2", states.dense_to_block(states.example1_state(2))))
    out.append(("example1 d=3", states.dense_to_block(states.example1_state(3))))
    out.append(("example2 d=2 l=1", states.dense_to_block(states.example2_state(2, 1))))
    out.append(("example2 d=2 l=2", states.dense_to_block(states.example2_state(2, 2))))
    shield = states.werner_extreme(2, "sym")
    gamma = states.private_state(1, twisting.random_twist(2, 4, rng), shield)
    out.append(("twisted gamma_1", states.dense_to_block(gamma)))
    return out


def _security_identity(rng) -> list[Row]:
    rows = []
    items = constructed_block_states(rng)
    layout = FactorLayout((2, 2), ("A'", "B'"))
    items += [(f"random block {k}", states.random_block_state(layout, rng)) for k in range(20)]
    for name, bs in items:
        si = twisting.security_identity(states.block_to_dense(bs))
        rows.append(_match(name, si.norm_x, np.sqrt(si.p0 * si.p1) * si.fid, 1e-9))
    return rows


def theorem2_states(rng):
    """Constructed states whose key-dephased form is separable."""
    out = [(f"raw p={p:.6g} d=2 l=1", states.block_to_dense(states.raw_key_state(p, 2, 1)))
           for p in (1 / 3, 0.3)]
    out += [(f"example1 d={d}", states.example1_state(d)) for d in (2, 3, 4)]
    out += [(f"example2 d=2 l={l}", states.example2_state(2, l)) for l in (1, 2)]
    shield = states.werner_extreme(2, "sym")
    out.append(("strict gamma_1", states.private_state(1, twisting.random_twist(2, 4, rng), shield)))
    return out


def _theorem2_chain(rng) -> list[Row]:
    rows = []
    for name, s in theorem2_states(rng):
        bound = measures.ree_dephasing_bound(s)
        rate = measures.dw_rate(measures.untwisted_ccq(s))
        rows.append(Row(f"dw <= bound: {name}", bound, rate, rate - bound, 1e-9, rate <= bound + 1e-9))
        if name == "strict gamma_1":
            rows.append(_match("strict gamma_1 dw = 1", 1.0, rate, 1e-9))
            rows.append(Row("strict gamma_1 bound >= 1", 1.0, bound, max(0.0, 1.0 - bound),
                            1e-9, bound >= 1 - 1e-9))
    return rows


_RUNNERS = {
    "eq13": _eq13,
    "ppt_condition": _ppt_condition,
    "lemma1": _lemma1,
    "en_example1": _en_example1,
    "en_example2": _en_example2,
    "security_identity": _security_identity,
    "theorem2_chain": _theorem2_chain,
}


def reproduce(target: str, seed: int = 0) -> list[Row]:
    if target not in _RUNNERS:
        raise ValueError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
    return _RUNNERS[target](np.random.default_rng(seed))


def _f(v: float) -> str:
    return format(float(v), ".17g")


def report_csv(target: str, seed: int, rows: list[Row]) -> str:
    buf = io.StringIO()
    buf.write(f"# target={target} seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for r in rows:
        w.writerow([r.item, _f(r.closed_form), _f(r.numeric), _f(r.deviation), _f(r.tolerance), r.status])
    return buf.getvalue()


def report_json(target: str, seed: int, rows: list[Row]) -> str:
    doc = {"target": target, "seed": seed,
           "rows": [{"item": r.item, "closed_form": r.closed_form, "numeric": r.numeric,
                     "deviation": r.deviation, "tolerance": r.tolerance, "status": r.status}
                    for r in rows]}
    return json.dumps(doc, indent=2) + "\n"
