"""Smoke test for the coflow extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o target/wheels
    pip install --force-reinstall target/wheels/coflow-*.whl
"""

import json
import os
import tempfile

import coflow


def main():
    cfg = coflow.GeneratorConfig(devices=20, coflows=6, flows=2, sources=2, seed=7)
    inst = coflow.Instance.generate(cfg)
    print(inst)
    assert inst.num_coflows == 6 and inst.num_flows == 12

    again = coflow.Instance.from_json(inst.to_json())
    assert again.to_json() == inst.to_json()

    results = {}
    for name in coflow.schedulers():
        sched = coflow.solve(inst, name, seed=1)
        assert coflow.validate(sched) == [], (name, sched.violations())
        assert abs(sum(sched.cct) - sched.sum_cct) < 1e-9
        results[name] = sched.sum_cct
    print({k: round(v, 4) for k, v in results.items()})
    assert results["SCASA"] <= results["CFLS"]
    assert results["SCASA_FLORD"] <= results["SCASA"]
    assert results["FLORD"] <= results["FLS"]

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "schedule.json")
        best = coflow.solve(inst, "scasa_flord")
        best.save(path)
        with open(path) as f:
            assert json.load(f)["format"] == "coflow-schedule"
        loaded = coflow.load_schedule(inst, path)
        assert loaded.sum_cct == best.sum_cct

    lp = coflow.export_milp(inst)
    assert lp.startswith("\\") and lp.rstrip().endswith("End")

    rows = coflow.run_sweep(
        "sources", values=[1, 2], iterations=2, base=cfg, schedulers=["CFLS", "SCASA"]
    )
    assert len(rows) == 4 and all(r["n"] == 2 for r in rows)
    print("smoke test passed")


if __name__ == "__main__":
    main()
