# Copyright 2026 The nessrate Authors
# SPDX-License-Identifier: Apache-2.0
"""Smoke test for the _nessrate extension.

Uses an installed module when available, otherwise builds the cdylib with
cargo and loads it from a temporary directory.
"""

import importlib
import json
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        return importlib.import_module("_nessrate")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "nessrate-python"], cwd=ROOT, check=True
    )
    lib = os.path.join(ROOT, "target", "release", "lib_nessrate.so")
    stage = tempfile.mkdtemp(prefix="nessrate-py-")
    shutil.copy(lib, os.path.join(stage, "_nessrate.so"))
    sys.path.insert(0, stage)
    return importlib.import_module("_nessrate")


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    m = load()
    checks = []

    v = m.VSystem()
    k = v.rates()
    k21, k12 = v.analytic_rates()
    checks.append(("k21 vs closed form", close(k.get("2", "1"), k21, 1e-8)))
    checks.append(("k12 vs closed form", close(k.get("1", "2"), k12, 1e-8)))
    checks.append(("column sums", k.column_sum_residue() < 1e-12))
    direct = v.rates(route="direct")
    checks.append(("routes agree", k.relative_difference(direct) < 1e-8))
    slow = sorted(abs(e.real) for e in k.eigenvalues())[1]
    checks.append(("slow eigenvalue", close(slow, 2.57e-9, 0.01)))

    ness = v.ness()
    checks.append(("ness trace", abs(sum(ness["populations"]) - 1.0) < 1e-12))
    g = v.rates(partition="grouped")
    checks.append(("grouped names", g.names == ["A", "2"]))

    p = v.params
    gs = p["Gamma_C1"] + p["Gamma_C2"] + p["Gamma_Df"] + p["Gamma_Db"]
    checks.append(("beta", close(v.beta(), m.beta(p["J"], gs, p["eps_2"] - p["eps_1"]), 1e-12)))

    ts = v.timescales()
    checks.append(("timescales ordered", ts["t1"] > ts["t2"] > 0))

    # two-level thermal pair: detailed balance k_up / k_down = n / (n + 1)
    lower = [[0, 1], [0, 0]]
    net = m.Network(["a", "b"], [[0, 0], [0, 1.0]], [(lower, 1e-3, 0.25)])
    kn = net.rates()
    checks.append(("two-level balance", close(kn.get("b", "a") / kn.get("a", "b"), 0.2, 1e-10)))

    sb = m.SpinBoson()
    checks.append(("spin-boson desk dim", sb.dim == 36))
    s = sb.rates()
    checks.append(("spin-boson rates positive", s.get("R", "L") > 0 and s.get("L", "R") > 0))

    with tempfile.TemporaryDirectory() as out:
        manifest = json.loads(m.run("rates", {"output_dir": out, "vsystem.J": 2e-3}))
        checks.append(("runner manifest", manifest["task"] == "rates"))
        checks.append(("runner csv", os.path.exists(os.path.join(out, "rates.csv"))))

    try:
        m.VSystem(not_a_key=1.0)
        checks.append(("unknown key rejected", False))
    except ValueError:
        checks.append(("unknown key rejected", True))

    ok = True
    for name, passed in checks:
        ok &= bool(passed)
        print(("PASS " if passed else "FAIL ") + name)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
