#!/usr/bin/env python3
"""Solve one LP per fixed-binary candidate.

usage: enumerate_lp.py model.lp candidates.txt out.txt

candidates.txt: first line lists column names; every further line holds one
value per listed column. Those columns are fixed, every other column keeps its
bounds, integrality is dropped. out.txt gets one line per candidate: the
objective, or "infeasible".
"""

import sys

import highspy


def main():
    lp_path, cand_path, out_path = sys.argv[1:4]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    if h.readModel(lp_path) == highspy.HighsStatus.kError:
        print("cannot read " + lp_path, file=sys.stderr)
        return 1
    lp = h.getLp()
    index = {n: j for j, n in enumerate(lp.col_names_)}
    for j, kind in enumerate(lp.integrality_):
        if kind != highspy.HighsVarType.kContinuous:
            h.changeColIntegrality(j, highspy.HighsVarType.kContinuous)
    with open(cand_path) as f:
        names = f.readline().split()
        cols = [index[n] for n in names]
        rows = [line.split() for line in f if line.strip()]
    out = []
    for row in rows:
        h.clearSolver()
        for j, v in zip(cols, row):
            x = float(v)
            h.changeColBounds(j, x, x)
        h.run()
        if h.getModelStatus() == highspy.HighsModelStatus.kOptimal:
            out.append(repr(float(h.getInfo().objective_function_value)))
        else:
            out.append("infeasible")
    with open(out_path, "w") as f:
        f.write("\n".join(out) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
