"""Independent evaluation of the fixture bundles at the golden points used by
the acceptance check. Prints one line per (dataset, model, point)."""

import json
import sys
from pathlib import Path

POINTS = {
    "d1": [(300, 3, 1), (820, 5, 0), (1300, 10, 1), (5000, 20, 0)],
    "d2": [(100, 5), (500, 10), (1300, 40), (9000, 100)],
    "d3": [(300, 3, 1, 0), (900, 20, 0, 1), (1300, 60, 0, 0), (7000, 300, 1, 0)],
}


def degree(term, x):
    p = term["params"]
    if term["type"] == "trimf":
        a, b, c = p
        if x == b:
            return 1.0
        if x < a or x > c:
            return 0.0
        return (x - a) / (b - a) if x < b else (c - x) / (c - b)
    a, b, c, d = p
    if b <= x <= c:
        return 1.0
    if x < a or x > d:
        return 0.0
    return (x - a) / (b - a) if x < b else (d - x) / (d - c)


def strength(model, rule, x):
    out = None
    for var, label, xi in zip(model["inputs"], rule["if"], x):
        if label is None:
            continue
        d = degree(next(t for t in var["terms"] if t["label"] == label), xi)
        if out is None:
            out = d
        elif model["config"]["and_method"] == "min":
            out = min(out, d)
        else:
            out *= d
    return out * rule.get("weight", 1.0)


def infer(model, x):
    if model["kind"] == "mamdani":
        out = model["output"]
        lo, hi = out["range"]
        n = model["config"]["resolution"]
        level = {t["label"]: 0.0 for t in out["terms"]}
        for r in model["rules"]:
            lab = r["then"]["term"]
            level[lab] = max(level[lab], strength(model, r, x))
        num = den = 0.0
        for k in range(n):
            s = lo + (k + 0.5) * (hi - lo) / n
            mu = max(min(level[t["label"]], degree(t, s)) for t in out["terms"])
            num += s * mu
            den += mu
        return num / den
    num = den = 0.0
    for r in model["rules"]:
        w = strength(model, r, x)
        if "const" in r["then"]:
            y = r["then"]["const"]
        else:
            c = r["then"]["linear"]
            y = c[-1] + sum(ci * xi for ci, xi in zip(c[:-1], x))
        num += w * y
        den += w
    return num / den


def main(root):
    for i in (1, 2, 3):
        bundle = json.loads((Path(root) / f"dataset{i}.json").read_text())
        ds = bundle["dataset"]
        for name in ("mamdani", "sugeno0", "sugeno1"):
            for x in POINTS[ds]:
                print(f"{ds} {name} {x} {infer(bundle['models'][name], x):.12f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
