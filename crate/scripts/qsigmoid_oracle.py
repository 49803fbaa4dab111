#!/usr/bin/env python3
"""Multistart reference optimum for a quadratic-sigmoid instance.

Reads the JSON printed by `cargo run --example qsigmoid_instance`, runs SLSQP
from uniformly random starts in the box and writes the best feasible point.

    cargo run -q --example qsigmoid_instance -- 10 2 0 > /tmp/inst.json
    python3 scripts/qsigmoid_oracle.py /tmp/inst.json \
        crates/core/tests/data/qsigmoid_n10_m2_s0.json
"""

import argparse
import json

import numpy as np
from scipy.optimize import minimize


def constraints(inst):
    """Constraints as `h(x) >= 0` callables with gradients, for SLSQP."""
    m = inst["m"]
    out = []
    for i in range(m):
        a = np.array(inst["a"][i])
        d = np.array(inst["d"][i])
        f = inst["f"][i]

        def q(x, a=a, d=d, f=f):
            return x @ a @ x + d @ x + f, 2 * a @ x + d

        if i < m // 2:
            # sigmoid(Q) <= 0.5  <=>  Q <= 0
            def h(x, q=q):
                return -q(x)[0]

            def dh(x, q=q):
                return -q(x)[1]
        else:
            # Q sigmoid(Q) >= -0.5
            def h(x, q=q):
                v, _ = q(x)
                return v / (1 + np.exp(-v)) + 0.5

            def dh(x, q=q):
                v, g = q(x)
                s = 1 / (1 + np.exp(-v))
                return (s + v * s * (1 - s)) * g

        out.append((h, dh, i < m // 2))
    return out


def violation(x, inst, cons):
    worst = 0.0
    for h, _, sigmoid_form in cons:
        if sigmoid_form:
            # measured on the original form sigmoid(Q) - 0.5
            v = 1 / (1 + np.exp(h(x))) - 0.5
        else:
            v = -h(x)
        worst = max(worst, v)
    return worst


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("instance")
    ap.add_argument("out")
    ap.add_argument("--restarts", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    inst = json.load(open(args.instance))
    n = inst["n"]
    c = np.array(inst["c"])
    cons = constraints(inst)
    scipy_cons = [{"type": "ineq", "fun": h, "jac": dh} for h, dh, _ in cons]
    bounds = [(-2.0, 2.0)] * n
    rng = np.random.default_rng(args.seed)

    best, best_x, feasible_runs = np.inf, None, 0
    for _ in range(args.restarts):
        x0 = rng.uniform(-2, 2, n)
        r = minimize(lambda x: c @ x, x0, jac=lambda x: c, method="SLSQP",
                     bounds=bounds, constraints=scipy_cons,
                     options={"maxiter": 500, "ftol": 1e-12})
        x = np.clip(r.x, -2, 2)
        if violation(x, inst, cons) <= 1e-6:
            feasible_runs += 1
            if c @ x < best:
                best, best_x = float(c @ x), x
    if best_x is None:
        raise SystemExit("no feasible restart")

    json.dump({
        "n": n, "m": inst["m"], "seed": inst["seed"],
        "restarts": args.restarts, "feasible_restarts": feasible_runs,
        "objective": best, "x": best_x.tolist(),
        "max_violation": violation(best_x, inst, cons),
    }, open(args.out, "w"), indent=2)
    print(f"best {best:.6f} from {feasible_runs}/{args.restarts} feasible restarts")


if __name__ == "__main__":
    main()
