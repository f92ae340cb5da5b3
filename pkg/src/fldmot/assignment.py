"""Optimal bipartite assignment over rectangular cost matrices.

The core is a classic Kuhn-Munkres solver on a square matrix; rectangular
inputs are padded with a sentinel of (max entry + 1) so that surplus rows or
columns absorb the padding at a constant cost offset.  On top of the raw
solve, a refinement pass makes tie-breaking deterministic: among all optimal
assignments the lexicographically smallest pair list is returned.  The
refinement fixes pairs row by row, trying smaller columns than the incumbent
and accepting one only when a sub-solve proves the total still reaches the
optimum; candidate columns are pruned to dual-tight edges, so the pass costs
nothing when the optimum is unique.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidCostError

# tolerance for "same total cost" and for dual tightness; totals are computed
# with math.fsum so genuinely equal optima compare equal to the last bit
_REL_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    pairs: list[tuple[int, int]]
    total_cost: float


def _pairs_total(costs: np.ndarray, pairs) -> float:
    return math.fsum(costs[r, c] for r, c in pairs)


def _solve_square(sq: np.ndarray, zero_tol: float):
    row_to_col, u, v = _kernels.munkres_square(sq, zero_tol)
    return row_to_col, u, v


def _subproblem_best(sq, rows, cols, zero_tol):
    """Optimal total over the square subproblem restricted to rows x cols."""
    if len(rows) == 0:
        return 0.0, {}
    sub = np.ascontiguousarray(sq[np.ix_(rows, cols)])
    r2c, _, _ = _solve_square(sub, zero_tol)
    mapping = {rows[i]: cols[r2c[i]] for i in range(len(rows))}
    total = math.fsum(sq[r, c] for r, c in mapping.items())
    return total, mapping


def solve(costs) -> Assignment:
    """Minimum-cost assignment of size min(m, n).

    total_cost is minimal over all injective row-to-column mappings of that
    size; among optima the lexicographically smallest pair list (sorted by
    row, then column) is returned.  Raises InvalidCostError on non-finite
    entries.
    """
    cm = np.asarray(costs, dtype=np.float64)
    if cm.ndim != 2:
        raise InvalidCostError(f"cost matrix must be 2-D, got shape {cm.shape}")
    m, n = cm.shape
    if m == 0 or n == 0:
        return Assignment([], 0.0)
    if not np.isfinite(cm).all():
        bad = np.argwhere(~np.isfinite(cm))[0]
        raise InvalidCostError(f"non-finite cost at ({bad[0]}, {bad[1]})")

    nsq = max(m, n)
    sentinel = float(cm.max()) + 1.0
    sq = np.full((nsq, nsq), sentinel, dtype=np.float64)
    sq[:m, :n] = cm
    scale = 1.0 + float(np.abs(sq).max())
    zero_tol = 1e-12 * scale
    cost_tol = _REL_TOL * scale

    row_to_col, u, v = _solve_square(sq, zero_tol)
    incumbent = {r: int(row_to_col[r]) for r in range(nsq)}
    avail_rows = list(range(nsq))
    avail_cols = list(range(nsq))
    fixed: list[tuple[int, int]] = []

    for r in range(m):
        c_inc = incumbent[r]
        # columns worth trying: real, available, smaller than the incumbent
        # (or any real column when the incumbent drops this row), and tight
        # w.r.t. the optimal duals of the full problem
        limit = c_inc if c_inc < n else n
        rest_total = math.fsum(
            sq[rr, incumbent[rr]] for rr in avail_rows if rr != r
        )
        target = rest_total + sq[r, c_inc]
        chosen = c_inc
        rows_minus = [rr for rr in avail_rows if rr != r]
        for c in avail_cols:
            if c >= limit:
                break
            if sq[r, c] - u[r] - v[c] > cost_tol:
                continue
            cols_minus = [cc for cc in avail_cols if cc != c]
            z_sub, mapping = _subproblem_best(sq, rows_minus, cols_minus, zero_tol)
            if abs((sq[r, c] + z_sub) - target) <= cost_tol:
                chosen = c
                incumbent = mapping
                incumbent[r] = c
                break
        if chosen < n:
            fixed.append((r, chosen))
        avail_rows.remove(r)
        avail_cols.remove(chosen)
        del incumbent[r]

    pairs = sorted(fixed)
    return Assignment(pairs, _pairs_total(cm, pairs))
