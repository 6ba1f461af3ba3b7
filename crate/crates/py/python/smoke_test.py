"""Smoke test for the `jie` extension module.

Build the library first (`cargo build -p jie-py`), then run
`python3 crates/py/python/smoke_test.py`. Set JIE_LIB to load a specific
shared object instead of searching target/.
"""

import importlib.util
import math
import os
import shutil
import sys
import sysconfig
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[3]


def load_jie():
    candidates = [os.environ.get("JIE_LIB")] if os.environ.get("JIE_LIB") else [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libjie.so", "libjie.dylib", "jie.dll")
    ]
    lib = next((Path(c) for c in candidates if c and Path(c).exists()), None)
    if lib is None:
        sys.exit("libjie not found; run `cargo build -p jie-py` first")
    # the interpreter only imports files named like extension modules
    tmp = Path(tempfile.mkdtemp())
    dest = tmp / ("jie" + sysconfig.get_config_var("EXT_SUFFIX"))
    shutil.copy(lib, dest)
    spec = importlib.util.spec_from_file_location("jie", dest)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}".rstrip())
    if not ok:
        check.failed = True


check.failed = False


def main():
    jie = load_jie()

    # dataset round trip through the y,x1..xp layout
    rng = np.random.default_rng(1)
    x = np.column_stack([np.ones(200), rng.normal(size=(200, 2))])
    beta = np.array([0.3, 1.0, -0.7])
    y = (rng.uniform(size=200) < 1 / (1 + np.exp(-x @ beta))).astype(float)
    data = jie.Dataset(y.tolist(), x.tolist())
    back = jie.Dataset.from_csv(data.to_csv())
    check("dataset csv round trip", back.n == 200 and back.p == 3 and np.array_equal(np.array(back.x), x))

    # OLS against numpy least squares
    yl = x @ beta + rng.normal(size=200)
    ols = jie.fit("ols", jie.Dataset(yl.tolist(), x.tolist()))
    ref = np.linalg.lstsq(x, yl, rcond=None)[0]
    check("ols matches lstsq", np.allclose(ols.theta, ref, atol=1e-10), f"status={ols.status}")

    # logistic MLE satisfies its score equation
    mle = jie.fit("mle-logistic", data)
    mu = 1 / (1 + np.exp(-x @ np.array(mle.theta)))
    check("logistic score ~ 0", np.abs(x.T @ (y - mu)).max() < 1e-6)

    # synthetic affine model: noiseless IB lands on the closed-form root
    m = [[0.3, 0.1, 0.0], [0.0, 0.2, 0.1], [0.1, 0.0, 0.3]]
    s = [0.5, -0.3, 0.2]
    model = jie.SyntheticBiasModel(m, s)
    theta0 = np.array([1.0, -0.5, 2.0])
    pi_obs = model.expected(theta0.tolist())
    res = model.solve(pi_obs, jie.IBConfig(h=10), seed=3)
    root = np.linalg.solve(np.eye(3) + np.array(m), np.array(pi_obs) - np.array(s))
    check("affine IB root", res.converged and np.allclose(res.theta_hat, root, atol=1e-5),
          res.summary_line())
    check("affine_solution", np.allclose(model.affine_solution(pi_obs), root, atol=1e-12))
    b = np.array(model.estimate_b(theta0.tolist(), 10, 1e-3))
    check("estimate_b = I + M", np.allclose(b, np.eye(3) + np.array(m), atol=1e-8))
    header = res.trace_csv().splitlines()[0]
    check("trace header", header == "k,residual,theta_1,theta_2,theta_3", header)

    # covariance inflation closed form
    sig = np.array([[1.0, 0.2], [0.2, 2.0]])
    bb = np.array([[1.5, 0.1], [0.0, 0.8]])
    bi = np.linalg.inv(bb)
    xi = np.array(jie.xi_h(bb.tolist(), sig.tolist(), 4))
    check("xi_h closed form", np.allclose(xi, 1.25 * bi @ sig @ bi.T, atol=1e-12))

    # JIE on a regression model
    fit, ib = jie.solve_jie("mle-logistic", data, "logistic", jie.IBConfig(h=20, stall_window=10), seed=5)
    check("solve_jie logistic", len(ib.theta_hat) == 3 and all(map(math.isfinite, ib.theta_hat)),
          ib.summary_line())

    # errors surface as Python exceptions
    try:
        jie.fit("no-such-estimator", data)
        check("unknown estimator raises", False)
    except ValueError:
        check("unknown estimator raises", True)
    try:
        jie.validate_config('study = "logistic"\nn = 10\n')
        check("bad config raises", False)
    except ValueError as e:
        check("bad config raises", "theta0" in str(e) or "p" in str(e), str(e).splitlines()[0])

    # a short study from a bundled preset
    check("presets listed", "desk-synthetic" in jie.preset_names())
    report = jie.run_study("desk-synthetic", replications=50, workers=1)
    rows = [r for r in report.summary() if r[0] == "jie-identity"]
    check("study summary", len(rows) == 3 and all(abs(r[2]) < 4 * r[4] for r in rows),
          f"{rows[0][1:]}")
    out = Path(tempfile.mkdtemp())
    written = report.write(str(out))
    check("study outputs", (out / "summary.csv").exists() and len(written) >= 3)

    sys.exit(1 if check.failed else 0)


if __name__ == "__main__":
    main()
