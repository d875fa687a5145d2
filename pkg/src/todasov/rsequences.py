"""Residue bookkeeping sequences R_{a,s} for shifting Mellin-Barnes contours.

Given r_s = x_{N-s} - x_{N-s+1} (s = 1..N-1), cells R_{a,s} with
1 <= a <= N-s, 0 <= s <= N-1 are filled from s = N-1 down to s = 0.  For each
cell let k be the top of the run of zero cells directly above it (k = s when
the cell above is nonzero or absent) and S = r_k + ... + r_s:

* s >= 1: S <= 0 forces R = S; S > 0 branches into R in {0, S};
* s = 0:  R = 0 when k = 0, otherwise R = r_k + ... + r_1.

Rows a are filled independently of each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import DegenerateInput

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class RSequence:
    r: tuple
    entries: tuple  # sorted ((a, s), value) pairs

    @property
    def n(self) -> int:
        return len(self.r) + 1

    def as_dict(self) -> dict:
        return dict(self.entries)

    def __getitem__(self, key):
        return self.as_dict()[key]

    def omega(self, a: int, sign: int = 0) -> set:
        """{s >= 1 : R_{a,s} = 0} (sign 0) or {s >= 1 : sign * R_{a,s} > 0}."""
        d = self.as_dict()
        cells = [s for s in range(1, self.n - a + 1)]
        if sign == 0:
            return {s for s in cells if d[(a, s)] == 0}
        return {s for s in cells if sign * d[(a, s)] > 0}


def partial_sum(r, top: int, bottom: int) -> float:
    """r_top + ... + r_bottom with 1-based indices (top >= bottom)."""
    return float(sum(r[bottom - 1: top]))


def check_generic(r) -> None:
    m = len(r)
    for lo in range(1, m + 1):
        for hi in range(lo, m + 1):
            if abs(partial_sum(r, hi, lo)) < DEGENERATE_TOL:
                raise DegenerateInput(f"partial sum r_{hi}+...+r_{lo} vanishes")


def run_top(row: dict, s: int, top: int) -> int:
    """Highest k with R_{s+1} = ... = R_k = 0, or s when R_{s+1} is nonzero/absent."""
    k = s
    while k + 1 <= top and row.get(k + 1) == 0:
        k += 1
    return k


def _row_sequences(r, a: int):
    n = len(r) + 1
    top = n - a
    rows = [{}]
    for s in range(top, -1, -1):
        nxt = []
        for row in rows:
            k = run_top(row, s, top)
            if s == 0:
                nxt.append({**row, 0: 0.0 if k == 0 else partial_sum(r, k, 1)})
                continue
            total = partial_sum(r, k, s)
            if total <= 0:
                nxt.append({**row, s: total})
            else:
                nxt.append({**row, s: 0.0})
                nxt.append({**row, s: total})
        rows = nxt
    return rows


def _assemble(r, per_row):
    out = set()
    for combo in itertools.product(*per_row):
        entries = tuple(sorted(((a, s), v) for a, row in enumerate(combo, start=1)
                               for s, v in row.items()))
        out.add(RSequence(tuple(r), entries))
    return out


def enumerate_r_sequences(r) -> set:
    """All sequences produced by the branching algorithm."""
    r = tuple(float(v) for v in r)
    check_generic(r)
    n = len(r) + 1
    return _assemble(r, [_row_sequences(r, a) for a in range(1, n + 1)])


def _row_ok(r, a: int, row: dict) -> bool:
    top = len(r) + 1 - a
    for s in range(top, -1, -1):
        k = run_top(row, s, top)
        v = row[s]
        if s == 0:
            want = 0.0 if k == 0 else partial_sum(r, k, 1)
            if v != want:
                return False
            continue
        total = partial_sum(r, k, s)
        if total <= 0 and v != total:
            return False
        if total > 0 and v not in (0.0, total):
            return False
    return True


def brute_force_r_sequences(r) -> set:
    """Generate-and-filter oracle: every cell takes 0 or any contiguous sum
    ending at its index, and only assignments obeying the rules survive."""
    r = tuple(float(v) for v in r)
    check_generic(r)
    n = len(r) + 1
    per_row = []
    for a in range(1, n + 1):
        top = n - a
        choices = []
        for s in range(top, -1, -1):
            lo = max(s, 1)
            opts = {0.0} | {partial_sum(r, k, lo) for k in range(lo, n)}
            choices.append(sorted(opts))
        rows = []
        for values in itertools.product(*choices):
            row = {s: v for s, v in zip(range(top, -1, -1), values)}
            if _row_ok(r, a, row):
                rows.append(row)
        per_row.append(rows)
    return _assemble(r, per_row)


def check_invariants(seq: RSequence) -> bool:
    """Rows 1..N-1 are not identically zero; every nonzero entry is a
    contiguous partial sum ending at its own index (at 1 for s = 0)."""
    n = seq.n
    d = seq.as_dict()
    for a in range(1, n):
        if all(d[(a, s)] == 0 for s in range(0, n - a + 1)):
            return False
    for (a, s), v in d.items():
        if v == 0:
            continue
        lo = max(s, 1)
        if not any(v == partial_sum(seq.r, k, lo) for k in range(lo, n)):
            return False
    return True
