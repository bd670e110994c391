#!/usr/bin/env python3
"""Solve an LP-format model with SCIP and write `status`, `objective` and
`name value` lines.

usage: scip_solve.py MODEL PARAMS SOLUTION
"""
import sys

from pyscipopt import Model

STATUS = {
    "optimal": "optimal",
    "infeasible": "infeasible",
    "unbounded": "unbounded",
    "inforunbd": "infeasible",
}


def main(model_path, params_path, solution_path):
    m = Model()
    m.hideOutput()
    m.readParams(params_path)
    m.readProblem(model_path)
    m.optimize()
    raw = m.getStatus()
    status = STATUS.get(raw)
    if status is None:
        status = "feasible" if m.getNSols() > 0 else "limit"
    with open(solution_path, "w") as out:
        out.write(f"status {status}\n")
        if status in ("optimal", "feasible"):
            sol = m.getBestSol()
            out.write(f"objective {m.getObjVal()!r}\n")
            for v in m.getVars(transformed=False):
                out.write(f"{v.name} {m.getSolVal(sol, v)!r}\n")
    print(f"scip status {raw}, nodes {m.getNNodes()}, time {m.getSolvingTime():.3f}s")


if __name__ == "__main__":
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    main(*sys.argv[1:])
