#!/usr/bin/env python3
"""LP-file solver adapter backed by scipy.optimize.milp (HiGHS).

Usage: highs_lp_solve.py MODEL.lp OUT.sol TIME_LIMIT_SECONDS

Reads the restricted CPLEX-LP subset written by the stlts LP writer
(sections Maximize/Minimize, Subject To, Bounds, Binaries, End) and writes
a solution file:

    OPTIMAL | FEASIBLE | INFEASIBLE | TIMELIMIT | UNBOUNDED | ERROR
    <var> <value>
    ...
"""

import os
import re
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp


def tokenize_expr(text):
    """Yields (coef, var) pairs from 'a x + b y - c z'."""
    toks = text.replace("+", " + ").replace("-", " - ").split()
    # re-join exponent signs broken by the replace above: '1e' '-' '05'
    fixed = []
    i = 0
    while i < len(toks):
        t = toks[i]
        if (
            i + 2 < len(toks)
            and (t[-1] in "eE")
            and re.fullmatch(r"[0-9.]*[0-9][eE]", t)
            and toks[i + 1] in "+-"
            and re.fullmatch(r"[0-9]+", toks[i + 2])
        ):
            fixed.append(t + toks[i + 1] + toks[i + 2])
            i += 3
        else:
            fixed.append(t)
            i += 1
    toks = fixed
    sign = 1.0
    coef = None
    for t in toks:
        if t == "+":
            sign = 1.0
            continue
        if t == "-":
            sign = -sign if coef is None else sign
            if coef is None:
                sign = -1.0
            continue
        try:
            v = float(t)
            coef = sign * v
            sign = 1.0
            continue
        except ValueError:
            pass
        c = coef if coef is not None else sign
        yield (c, t)
        coef = None
        sign = 1.0


def parse_lp(path):
    obj_sense = 1.0  # minimize
    obj = {}
    rows = []  # (terms dict, sense, rhs)
    bounds = {}
    binaries = set()
    section = None
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    i = 0
    while i < len(lines):
        ln = lines[i]
        low = ln.lower()
        if low.startswith("maximize"):
            obj_sense = -1.0
            section = "obj"
            i += 1
            continue
        if low.startswith("minimize"):
            obj_sense = 1.0
            section = "obj"
            i += 1
            continue
        if low.startswith("subject to"):
            section = "st"
            i += 1
            continue
        if low.startswith("bounds"):
            section = "bounds"
            i += 1
            continue
        if low.startswith("binaries") or low.startswith("binary"):
            section = "bin"
            i += 1
            continue
        if low.startswith("end"):
            break
        if section == "obj":
            body = ln.split(":", 1)[1] if ":" in ln else ln
            for c, v in tokenize_expr(body):
                obj[v] = obj.get(v, 0.0) + c
        elif section == "st":
            body = ln.split(":", 1)[1] if ":" in ln else ln
            m = re.search(r"(<=|>=|=)", body)
            if not m:
                raise ValueError("constraint without sense: " + ln)
            sense = m.group(1)
            lhs, rhs = body.split(sense, 1)
            terms = {}
            for c, v in tokenize_expr(lhs):
                terms[v] = terms.get(v, 0.0) + c
            rows.append((terms, sense, float(rhs)))
        elif section == "bounds":
            m = re.match(r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)", ln)
            if not m:
                raise ValueError("unsupported bound line: " + ln)
            bounds[m.group(2)] = (float(m.group(1)), float(m.group(3)))
        elif section == "bin":
            binaries.add(ln.split()[0])
        i += 1
    return obj_sense, obj, rows, bounds, binaries


def main():
    if len(sys.argv) < 4:
        print(__doc__, file=sys.stderr)
        return 2
    lp_path, out_path, time_limit = sys.argv[1], sys.argv[2], float(sys.argv[3])

    obj_sense, obj, rows, bounds, binaries = parse_lp(lp_path)

    names = []
    seen = set()
    for source in (obj.keys(), *[r[0].keys() for r in rows], bounds.keys(), binaries):
        for v in source:
            if v not in seen:
                seen.add(v)
                names.append(v)
    idx = {v: k for k, v in enumerate(names)}
    n = len(names)

    c = np.zeros(n)
    for v, k in obj.items():
        c[idx[v]] = obj_sense * k

    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    for v, (a, b) in bounds.items():
        lb[idx[v]], ub[idx[v]] = a, b
    integrality = np.zeros(n)
    for v in binaries:
        j = idx[v]
        integrality[j] = 1
        lb[j] = max(lb[j], 0.0) if np.isfinite(lb[j]) else 0.0
        ub[j] = min(ub[j], 1.0) if np.isfinite(ub[j]) else 1.0

    cons = None
    if rows:
        data, ri, ci = [], [], []
        clo = np.empty(len(rows))
        chi = np.empty(len(rows))
        for r, (terms, sense, rhs) in enumerate(rows):
            for v, k in terms.items():
                data.append(k)
                ri.append(r)
                ci.append(idx[v])
            if sense == "<=":
                clo[r], chi[r] = -np.inf, rhs
            elif sense == ">=":
                clo[r], chi[r] = rhs, np.inf
            else:
                clo[r], chi[r] = rhs, rhs
        A = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        cons = LinearConstraint(A, clo, chi)

    res = milp(
        c,
        constraints=cons,
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options={
            "time_limit": time_limit,
            "mip_rel_gap": float(os.environ.get("STLTS_MIP_GAP", "1e-4")),
        },
    )

    with open(out_path, "w") as f:
        if res.status == 0:
            f.write("OPTIMAL\n")
        elif res.status == 1:
            f.write("TIMELIMIT\n")
        elif res.status == 2:
            f.write("INFEASIBLE\n")
        elif res.status == 3:
            f.write("UNBOUNDED\n")
        else:
            f.write("ERROR " + str(res.message) + "\n")
        if res.x is not None:
            for v in names:
                f.write("%s %.17g\n" % (v, res.x[idx[v]]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
