"""Smoke test for the `vmfp` extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
then run:
    python python/smoke_test.py
"""

import math
import tempfile
import json
import os

import vmfp

SMALL = """
[grid]
n1 = 8
n2 = 8
nv = 8

[time]
t_final = 0.02
dt = 0.01
sample_every = 1

[sweep]
eps = [0.4, 0.2]
"""


def main():
    cfg = vmfp.ScenarioConfig(SMALL)
    assert cfg.steps == 2, cfg.steps
    assert "n1 = 8" in cfg.to_toml()
    assert cfg.with_eps(0.2).eps == 0.2

    p = vmfp.PlasmaParams(eps=0.5)
    assert p.as_dict()["eps"] == 0.5
    try:
        vmfp.PlasmaParams(eps=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative eps accepted")

    assert vmfp.h(1.0) == 0.0
    lhs, rhs = vmfp.csiszar_kullback([1.0, 2.0], [1.5, 1.5])
    assert lhs <= rhs

    st = vmfp.KineticStepper(cfg)
    m0 = st.mass()
    st.strang_step(0.01)
    assert st.gauss_residual() < 1e-10
    st.picard_cycle(0.01)
    assert abs(st.mass() - m0) < 1e-10 * m0
    assert st.min_value() > 0.0
    rho = st.density()
    assert len(rho) == 8 and len(rho[0]) == 8
    data, shape = st.distribution()
    assert len(data) == math.prod(shape)

    lim = vmfp.LimitSolver(cfg)
    lm = lim.mass()
    lim.step(0.01)
    assert abs(lim.mass() - lm) < 1e-12 * lm

    recs = vmfp.run_kinetic(cfg, eps=0.4, mode="strang")
    assert len(recs) == 3 and recs[-1]["t"] == 0.02
    assert all(math.isfinite(v) for r in recs for v in r.values())
    assert len(vmfp.run_limit(cfg)) == 3

    with tempfile.TemporaryDirectory() as d:
        path = vmfp.run_sweep(cfg, d)
        with open(path) as fh:
            manifest = json.load(fh)
        assert manifest["complete"]
        assert os.path.exists(os.path.join(d, "limit", "records.csv"))

    print("vmfp", vmfp.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
