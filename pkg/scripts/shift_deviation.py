"""How far the two-term parameter-shift estimate is from the exact gradient, per gate family.

Samples random problems and random parameter points, and reports the largest
|shift - adjoint| seen for each family. Mixing rotations and phase penalties
come out at rounding level; rule gates do not.
"""

import argparse
import math

import numpy as np

from qcrm.circuit import compile_problem, initial_state
from qcrm.gates import AND, OR
from qcrm.problem import ConstraintSpec, ProblemSpec, RuleSpec
from qcrm.train import shift_deviation


def random_problem(rng, n):
    names = [f"P{i}" for i in range(n)]
    rules, excl = [], []
    for _ in range(int(rng.integers(1, n + 1))):
        perm = [names[i] for i in rng.permutation(n)]
        k = int(rng.integers(1, n))
        rules.append(RuleSpec(tuple(perm[:k]), perm[k], str(rng.choice([AND, OR]))))
    for _ in range(int(rng.integers(1, 3))):
        perm = [names[i] for i in rng.permutation(n)]
        excl.append(ConstraintSpec(tuple(perm[:int(rng.integers(2, n + 1))])))
    priors = {p: float(rng.uniform(0.05, 0.95)) for p in names}
    targets = {p: int(rng.integers(2)) for p in names}
    return ProblemSpec(names, priors, rules, excl, int(rng.integers(1, 4)), targets)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    worst: dict[str, float] = {}
    for _ in range(args.samples):
        p = random_problem(rng, int(rng.integers(2, 6)))
        prog, params = compile_problem(p)
        params = params.with_values(rng.uniform(-math.pi, math.pi, len(params)))
        dev = np.abs(shift_deviation(prog, params, initial_state(p), p.target_indices()))
        for g in prog.gates:
            worst[g.family] = max(worst.get(g.family, 0.0), float(dev[g.param]))
    print("family,max_abs_deviation")
    for fam in ("ry", "rz", "phase", "rule"):
        print(f"{fam},{worst.get(fam, float('nan')):.3e}")


if __name__ == "__main__":
    main()
