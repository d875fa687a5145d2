import numpy as np

from todasov import bench, gammaplex


def test_run_rows_and_restores_backend():
    before = gammaplex.BACKEND
    rows = bench.run(repeat=1, size=1000)
    assert gammaplex.BACKEND == before
    names = [r["workload"] for r in rows]
    assert names == ["loggamma_array", "phi_mb_n3"]
    for r in rows:
        assert r["numpy_s"] > 0
        if "compiled" in gammaplex.available_backends():
            assert r["compiled_s"] > 0 and r["speedup"] > 0


def test_workloads_agree_across_backends():
    # both backends must compute the same thing, else the timing is meaningless
    out = {}
    before = gammaplex.BACKEND
    try:
        for b in gammaplex.available_backends():
            gammaplex.set_backend(b)
            out[b] = {k: np.asarray(getattr(fn(), "value", fn())) for k, fn in bench.workloads(500).items()}
    finally:
        gammaplex.set_backend(before)
    ref = out["numpy"]
    for b, vals in out.items():
        for k in vals:
            assert np.allclose(vals[k], ref[k], rtol=1e-11, atol=1e-13)
