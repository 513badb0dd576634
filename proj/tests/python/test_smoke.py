"""Smoke test for the python bindings: exercises one operation per module."""

import math
import os
import sys
import tempfile

import lwpd


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    # codebook: the 8x4 base construction and its distance law
    cb = lwpd.build_code(8, 4, 2)
    assert cb.params.n == 8 and cb.params.k == 4 and cb.params.t == 2
    assert cb.signs[0] == [1, 1, 0, 0]
    assert cb.signs[1] == [1, -1, 0, 0]
    assert close(cb.scale(), 1.0 / math.sqrt(2.0))
    rep = lwpd.analyze_distance(cb)
    assert close(rep.min_distance, math.pi / 3)
    assert close(rep.gap_ratio, 1.0 / 3.0)
    assert lwpd.weight_distribution(cb) == {2: 8}
    assert lwpd.check_coverage(8, 3, 5, 24)

    # assignment: block layout and a scatter plan
    layout = lwpd.partition_gradient([4, 3], cb.params, "data-only")
    assert layout.param_count == 15 and layout.block_dim == 15
    plan = lwpd.scatter_plan(cb, layout, 1, 0)
    assert plan.entries == [(0, 1), (1, -1)]
    asg = lwpd.assign_data(cb, 400)
    assert asg[0] == [0, 1]

    # learner: dataset, model, gradient consistency
    ds = lwpd.gen_mixture(3, 3, 4, 400, 4.0, 1.0, 7)
    assert ds.train_count == 320 and ds.classes == 3
    model = lwpd.make_model("logistic", [4, 3], 1)
    train = lwpd.train_slice(ds)
    g = lwpd.full_gradient(model, train)
    assert len(g) == len(model.w) == 15
    res = lwpd.coded_task(model, cb, layout, 0, 0, lwpd.partitions_slice(ds, 4, [0, 1]))
    g0 = lwpd.block_gradient(model, layout, 0, lwpd.partition_slice(ds, 4, 0))
    g1 = lwpd.block_gradient(model, layout, 1, lwpd.partition_slice(ds, 4, 1))
    assert all(close(v, a + b, 1e-12) for v, a, b in zip(res.v, g0, g1))
    assert res.floats_communicated == layout.block_dim + 4

    # harness config and a short end-to-end run
    cfg = lwpd.parse_config_text(
        "scheme = lwpd\nn = 8\nk = 4\nt = 2\nlr = 0.05\ntime_budget = 0.5\n"
        "records = 400\nclasses = 3\ndim = 4\nstraggler_prob = 0.2\n"
        "straggler_factor = 5\nrate = 50\nseed = 3\n"
    )
    lwpd.validate_config(cfg)
    rows, counters = lwpd.run_scheme(cfg)
    assert counters.updates > 0
    assert counters.decode_mults == 0
    assert len(rows) == 21  # default eval_interval is time_budget / 20
    assert rows[-1].test_loss < rows[0].test_loss

    # simulator internals: tape determinism and gc decode identity
    tape = lwpd.DelayTape(5, 0.3, 20.0)
    d1, d2 = tape.draw(2, 9), tape.draw(2, 9)
    assert d1.straggler == d2.straggler and d1.jitter == d2.jitter
    code = lwpd.gc_encode_matrix(8, 1, 99)
    coeffs, mults = lwpd.gc_decode_coeffs(code, list(range(1, 8)))
    recon = [sum(coeffs[i] * code[w][p] for i, w in enumerate(range(1, 8))) for p in range(8)]
    assert all(close(r, 1.0, 1e-8) for r in recon)
    assert mults > 0

    # report rendering stays pure
    out1 = lwpd.render_report(rows, False)
    out2 = lwpd.render_report(rows, False)
    assert out1.table == out2.table and out1.svg == out2.svg
    assert "<polyline" in out1.svg

    # metrics round trip through a temp file
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "m.csv")
        lwpd.save_metrics_csv(rows, path)
        back = lwpd.load_metrics_csv(path)
        assert len(back) == len(rows)
        assert back[0].scheme == "lwpd"

    print("python smoke: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
