"""Smoke test for the attrition_py extension.

Build first with `maturin develop --release` inside crates/py, then run
`python python/smoke_test.py` from the repository root.
"""

import math
import os
import sys
import tempfile

import attrition_py as ap

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        sys.exit(1)


def toy(tmp):
    model = ap.LinearModel(0.65, [0.02, 0.03, 0.05])
    catalog = os.path.join(tmp, "toy.toml")
    with open(catalog, "w") as f:
        f.write("meta_cost = 500\n")
        for name in model.feature_names:
            f.write(f'\n[[action]]\nname = "raise {name}"\nfeature = "{name}"\ndelta = 1.0\n')
    return model, catalog


def main():
    check(ap.discretize(0.655) == 65, "discretize")
    check(ap.apply_action([1.0, 2.0], 1, 5.0, (0.0, 4.0)) == [1.0, 4.0], "apply_action clamps")
    check(ap.plan_cost("500.00", 3) == "1500.00", "plan cost")

    q = ap.QTable(["a", "b"], 0.8)
    new = q.update(50, 0, 1.0, 51, 1, 0.5, 0.1)
    check(math.isclose(new, 0.5), "sarsa update")
    try:
        q.get(500, 0)
        check(False, "out-of-range bin raises")
    except ap.AttritionError:
        check(True, "out-of-range bin raises")

    with tempfile.TemporaryDirectory() as tmp:
        lin, catalog = toy(tmp)
        start = [0.0] * len(lin.feature_names)
        check(math.isclose(lin.calculate_s(start), 0.65), "linear state")
        best = ap.shortest_plan(lin, start, catalog, 0.75)
        check(best is not None and best["length"] == 2, "oracle finds a 2-step plan")
        found = ap.plan(lin, start, catalog, 0.75, seed=7)
        check(found["reached"], "planner reaches the target")
        check(found["total_cost"] == ap.plan_cost("500.00", found["length"]), "total cost")

        model = ap.Model.train(
            os.path.join(DATA, "ibm_hr_attrition.csv"),
            os.path.join(DATA, "schema.toml"),
            seed=42,
            epochs=30,
        )
        check(len(model.feature_names) == 27, "27 features")
        metrics = model.evaluate(os.path.join(DATA, "ibm_hr_attrition.csv"), holdout=True)
        check(metrics["rows"] == 294, "holdout rows")
        x = model.employee_features(os.path.join(DATA, "ibm_hr_attrition.csv"), "1821")
        s = model.calculate_s(x)
        check(0.0 <= s <= 1.0, f"S for employee 1821 = {s:.4f}")
        path = os.path.join(tmp, "model.json")
        model.save(path)
        check(ap.Model.load(path).calculate_s(x) == s, "save/load round trip")
        try:
            ap.Model.load(os.path.join(tmp, "missing.json"))
            check(False, "missing file raises OSError")
        except OSError:
            check(True, "missing file raises OSError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
