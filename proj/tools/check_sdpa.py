#!/usr/bin/env python3
"""Re-solve a sparse SDPA file with an independent solver and print the optimum.

Usage: check_sdpa.py FILE
Prints two lines: problem status and optimal value.
"""
import sys

import numpy as np
import cvxpy as cp


def parse(path):
    lines = []
    with open(path) as f:
        for ln in f:
            ln = ln.strip()
            if not ln or ln.startswith("*") or ln.startswith('"'):
                continue
            lines.append(ln)
    m = int(lines[0].split()[0])
    nb = int(lines[1].split()[0])
    strip = str.maketrans(",(){}", "     ")
    sizes = [int(tok) for tok in lines[2].translate(strip).split()][:nb]
    c = np.array([float(t) for t in lines[3].translate(strip).split()])
    assert len(c) == m, "objective length mismatch"
    entries = []
    for ln in lines[4:]:
        t = ln.split()
        entries.append((int(t[0]), int(t[1]), int(t[2]), int(t[3]), float(t[4])))
    return m, sizes, c, entries


def main():
    m, sizes, c, entries = parse(sys.argv[1])
    F = {}
    for mat, blk, i, j, v in entries:
        key = (mat, blk)
        if key not in F:
            n = abs(sizes[blk - 1])
            F[key] = np.zeros((n, n))
        F[key][i - 1, j - 1] = v
        F[key][j - 1, i - 1] = v

    x = cp.Variable(m)
    cons = []
    for b, size in enumerate(sizes, start=1):
        n = abs(size)
        acc = cp.Constant(-F.get((0, b), np.zeros((n, n))))
        for i in range(m):
            if (i + 1, b) in F:
                acc = acc + x[i] * F[(i + 1, b)]
        if size < 0:
            cons.append(cp.diag(acc) >= 0)
        else:
            cons.append(acc >> 0)

    prob = cp.Problem(cp.Minimize(c @ x), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except Exception:
        prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    print(prob.status)
    print(prob.value)


if __name__ == "__main__":
    main()
