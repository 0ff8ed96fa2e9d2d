"""Export the layout-ordering problem as a CPLEX-LP integer program.

The model mirrors the path formulation solved by the subset DP: binaries
``d_i_j`` mark that set ``j`` sits immediately after set ``i``, integers
``g_i`` give memory positions, and big-M rows tie the two together in both
directions.  Auxiliary binaries ``s_i_j`` select which side of the forbidden
``g_j - g_i = 1`` gap a non-adjacent pair falls on, and ``b_i_j`` orient each
pair so positions stay distinct.  ``M = n + 1`` exceeds any position
difference, which keeps every relaxed row inactive.

The exporter exists for cross-checking against off-the-shelf MILP solvers;
nothing in the pipeline consumes the text back.
"""
from __future__ import annotations

from .layout import WeightMatrix


def _term(coef: int, var: str, first: bool) -> str:
    sign = "" if first and coef >= 0 else ("+ " if coef >= 0 else "- ")
    mag = abs(coef)
    return f"{sign}{mag} {var}"


def export_ilp(wm: WeightMatrix, name: str = "layout-order") -> str:
    n = wm.n
    if n == 0:
        raise ValueError("cannot export an empty instance")
    w = wm.w
    big_m = n + 1
    lines: list[str] = [f"\\ {name}: adjacency model over {n} output sets, M={big_m}"]

    obj_terms = [
        _term(w[i][j], f"d_{i}_{j}", not k)
        for k, (i, j) in enumerate(
            (i, j) for i in range(n) for j in range(n) if i != j and w[i][j] > 0
        )
    ]
    lines.append("Maximize")
    lines.append(" obj: " + (" ".join(obj_terms) if obj_terms else f"0 g_{0}"))
    lines.append("Subject To")

    for i in range(n):
        lines.append(f" diag_{i}: d_{i}_{i} = 0")
    for i in range(n):
        terms = " + ".join(f"d_{i}_{j}" for j in range(n) if j != i)
        if terms:
            lines.append(f" succ_{i}: {terms} <= 1")
    for j in range(n):
        terms = " + ".join(f"d_{i}_{j}" for i in range(n) if i != j)
        if terms:
            lines.append(f" pred_{j}: {terms} <= 1")
    count_terms = " + ".join(f"d_{i}_{j}" for i in range(n) for j in range(n) if i != j)
    lines.append(f" count: {count_terms if count_terms else f'0 g_{0}'} = {n - 1}")

    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d, s = f"d_{i}_{j}", f"s_{i}_{j}"
            lines.append(f" adjfwd_lo_{i}_{j}: g_{j} - g_{i} - {big_m} {d} >= {1 - big_m}")
            lines.append(f" adjfwd_hi_{i}_{j}: g_{j} - g_{i} + {big_m} {d} <= {1 + big_m}")
            lines.append(f" adjbwd_lo_{i}_{j}: g_{j} - g_{i} - {big_m} {s} + {big_m} {d} >= {2 - big_m}")
            lines.append(f" adjbwd_hi_{i}_{j}: g_{j} - g_{i} - {big_m} {s} - {big_m} {d} <= 0")
    for i in range(n):
        for j in range(i + 1, n):
            b = f"b_{i}_{j}"
            lines.append(f" dist_lo_{i}_{j}: g_{i} - g_{j} + {big_m} {b} >= 1")
            lines.append(f" dist_hi_{i}_{j}: g_{j} - g_{i} - {big_m} {b} >= {1 - big_m}")

    lines.append("Bounds")
    for i in range(n):
        lines.append(f" 0 <= g_{i} <= {n - 1}")
    lines.append("Generals")
    lines.append(" " + " ".join(f"g_{i}" for i in range(n)))
    lines.append("Binaries")
    binaries = [f"d_{i}_{j}" for i in range(n) for j in range(n)]
    binaries += [f"s_{i}_{j}" for i in range(n) for j in range(n) if i != j]
    binaries += [f"b_{i}_{j}" for i in range(n) for j in range(i + 1, n)]
    lines.append(" " + " ".join(binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"
