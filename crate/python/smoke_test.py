"""Smoke test for the emhd_cascade extension module.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import math
import tempfile

import emhd_cascade as ec


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    if not ok:
        raise SystemExit(1)


a = ec.solve_root(2.0)
check("root", abs(a - 1.5936242600) < 1e-9 and ec.root_residual(2.0, a) < 1e-12, f"a = {a:.10f}")
check("holder exponent", abs(ec.predicted_holder_exponent(2.0, 0.1) - 0.2311) < 1e-3)

n = 1024
xs = [2 * math.pi * i / n for i in range(n)]
h = ec.hilbert_periodic([math.cos(x) for x in xs])
check("hilbert cos -> sin", max(abs(v - math.sin(x)) for v, x in zip(h, xs)) < 1e-12)
rhs = ec.direct_rhs([math.sin(x) for x in xs])
check("rhs(sin) = 1.5 sin 2x", max(abs(v - 1.5 * math.sin(2 * x)) for v, x in zip(rhs, xs)) < 1e-10)

p = ec.Params(n=30)
traj = ec.integrate_cascade(p, t_end=-2.0)
fit = traj.rate_fit()
check("rate fit", abs(fit["slope"] + 1) < 0.05 and fit["band_ratio"] <= 10, f"slope {fit['slope']:.4f}")
check("ratio monotonicity", traj.ratio_monotonicity()["pass"])
check("trajectory csv", traj.to_csv().startswith("t,x_0,x_1"))

try:
    ec.Params(A=5.0)
    check("invalid params rejected", False)
except ValueError as e:
    check("invalid params rejected", "Ar^{1/2}" in str(e))

atlas = ec.Atlas.initial(ec.Params(n=16, r=0.05))
tail = atlas.tail_report()
check("tail ratio", abs(tail["fitted_ratio"] / tail["predicted_ratio"] - 1) < 0.1)
vals = atlas.evaluate([0.5, 1.0, 1.02], 0)
check("atlas evaluate", len(vals) == 3 and all(math.isfinite(v) for v in vals))

rows = ec.selfsim_feasibility([0.0, 1.0, 4.0], ec.Params())
check("self-similar ansatz infeasible", all(not r["feasible"] for r in rows))

with tempfile.TemporaryDirectory() as d:
    atlas.write_checkpoint(d)
    back = ec.Atlas.read_checkpoint(d)
    check("checkpoint round trip", back.evaluate([1.0], 3) == atlas.evaluate([1.0], 3))
    manifest = ec.run('mode = "root"\n[params]\nA = 3.0\n', out=d + "/run")
    check("run", manifest["exit_code"] == 0 and manifest["status"] == "pass", manifest["run_id"])

print("smoke test passed")
