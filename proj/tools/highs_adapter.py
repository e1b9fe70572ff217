#!/usr/bin/env python3
"""Solve an LP-format MILP with HiGHS and write normalized solution text.

Output lines:
  # status <optimal|feasible_gap|infeasible|unbounded|time_limit|error>
  # objective <value>
  # gap <relative gap>
  <column name> <value>      (one per column, when a solution exists)

With --polish, integer columns are fixed at their rounded values and the
continuous part is re-solved with tight tolerances before writing.
"""

import argparse
import sys

import highspy


def parse_args():
    ap = argparse.ArgumentParser()
    ap.add_argument("lp")
    ap.add_argument("solution")
    ap.add_argument("--gap", type=float, default=0.01)
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--polish", action="store_true")
    return ap.parse_args()


def write(path, status, objective=None, gap=None, names=None, values=None):
    with open(path, "w") as f:
        f.write(f"# status {status}\n")
        if objective is not None:
            f.write(f"# objective {float(objective)!r}\n")
        if gap is not None:
            f.write(f"# gap {float(gap)!r}\n")
        if names is not None:
            for n, v in zip(names, values):
                f.write(f"{n} {float(v)!r}\n")


def polish(h, values):
    """Fix integers, re-solve the LP, return improved values or None."""
    lp = h.getLp()
    integrality = list(lp.integrality_)
    if not integrality:
        return None
    p = highspy.Highs()
    p.setOptionValue("output_flag", False)
    p.setOptionValue("primal_feasibility_tolerance", 1e-10)
    p.setOptionValue("dual_feasibility_tolerance", 1e-10)
    p.setOptionValue("threads", 1)
    p.passModel(lp)
    cont = highspy.HighsVarType.kContinuous
    for j, kind in enumerate(integrality):
        if kind != cont:
            r = float(round(values[j]))
            p.changeColIntegrality(j, cont)
            p.changeColBounds(j, r, r)
    p.run()
    if p.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        return None
    return list(p.getSolution().col_value)


def main():
    args = parse_args()
    h = highspy.Highs()
    h.setOptionValue("log_to_console", True)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("threads", args.threads)
    h.setOptionValue("random_seed", args.seed)
    if h.readModel(args.lp) == highspy.HighsStatus.kError:
        write(args.solution, "error")
        print("HiGHS could not read the model", file=sys.stderr)
        return 4

    lp = h.getLp()
    is_mip = any(k != highspy.HighsVarType.kContinuous for k in lp.integrality_)
    if not is_mip:
        h.setOptionValue("primal_feasibility_tolerance", 1e-10)
        h.setOptionValue("dual_feasibility_tolerance", 1e-10)

    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    info = h.getInfo()
    has_solution = info.primal_solution_status == 2  # feasible
    names = list(lp.col_names_)
    gap = float(info.mip_gap) if is_mip else 0.0

    if ms == S.kOptimal:
        status = "optimal"
    elif ms == S.kInfeasible:
        status = "infeasible"
    elif ms in (S.kUnbounded, S.kUnboundedOrInfeasible):
        status = "unbounded"
    elif ms == S.kTimeLimit:
        status = "feasible_gap" if has_solution else "time_limit"
    elif has_solution:
        status = "feasible_gap"
    else:
        status = "error"

    if not has_solution or status in ("infeasible", "unbounded", "error"):
        write(args.solution, status)
        return 0

    values = list(h.getSolution().col_value)
    if args.polish and is_mip:
        better = polish(h, values)
        if better is not None:
            values = better
    cost = list(lp.col_cost_)
    objective = float(lp.offset_) + sum(c * v for c, v in zip(cost, values))
    write(args.solution, status, objective, gap, names, values)
    return 0


if __name__ == "__main__":
    sys.exit(main())
