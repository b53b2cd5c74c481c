"""Smoke tests for the python bindings (run against the cmake-built module)."""

import json
import sys

import shopsched


def check(name, ok):
    status = "ok" if ok else "FAIL"
    print(f"  {status} {name}")
    return ok


def main():
    ok = True

    text = shopsched.generate("gbrt01")
    shape = shopsched.validate(text)
    ok &= check("generate+validate shape", shape["jobs"] == 6 and shape["tasks"] == 14)

    sim = shopsched.simulate(text)
    ok &= check("simulate makespan positive", sim["metrics"]["makespan"] > 0)
    ok &= check(
        "schedule csv header",
        sim["schedule_csv"].splitlines()[0] == "job,task,kind,station,worker,start,end",
    )
    ok &= check("simulated schedule feasible", shopsched.check(text, sim["schedule_csv"]) == [])

    gantt = json.loads(sim["gantt_json"])
    ok &= check("gantt lane per station", len(gantt["lanes"]) == shape["stations"])

    result = shopsched.solve(text, "gasa", budget=120, seed=5)
    ok &= check("solve stays within budget", result["evaluations"] <= 120)
    ok &= check("solve feasible", shopsched.check(text, result["schedule_csv"]) == [])
    ok &= check("solve trajectory nonempty", len(result["trajectory"]) >= 1)

    again = shopsched.solve(text, "gasa", budget=120, seed=5)
    ok &= check("solve deterministic", again["schedule_csv"] == result["schedule_csv"])

    milp = shopsched.export_milp(text)
    ok &= check("milp has rows", sum(milp["rows_per_family"].values()) > 0)
    ok &= check("milp text ends properly", milp["lp_text"].rstrip().endswith("End"))

    code, out, err = shopsched.cli(["generate", "--preset", "gbrt02", "--out", "/tmp/_smoke_instance.json"])
    ok &= check("cli generate exit 0", code == 0 and "3 jobs" in out)

    code, out, err = shopsched.cli(["generate", "--preset", "nope", "--out", "/tmp/_smoke_bad.json"])
    ok &= check("cli unknown preset exit 2", code == 2)

    if not ok:
        sys.exit(1)
    print("python smoke: all checks passed")


if __name__ == "__main__":
    main()
