"""Smoke test for the clsm_py extension.

Build with `cargo build -p clsm-python --release`, then run
`python3 crates/python/python/smoke_test.py [path/to/libclsm_py.so]`.
"""

import importlib
import os
import shutil
import sys
import tempfile

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", ".."))


def find_library():
    if len(sys.argv) > 1:
        return sys.argv[1]
    for profile in ("release", "debug"):
        path = os.path.join(ROOT, "target", profile, "libclsm_py.so")
        if os.path.exists(path):
            return path
    sys.exit("libclsm_py.so not found; build the clsm-python crate first")


def load_module(workdir):
    shutil.copy(find_library(), os.path.join(workdir, "clsm_py.so"))
    sys.path.insert(0, workdir)
    return importlib.import_module("clsm_py")


def main():
    with tempfile.TemporaryDirectory() as workdir:
        clsm = load_module(workdir)

        graph, behaviors, theta_true = clsm.simulate(
            60, 2, 10, selections_mean=8.0, seed=3, beta=0.4, alpha_precision=0.2
        )
        assert graph.num_nodes == 60 and behaviors.vocab_size == 10
        assert len(theta_true) == 60

        config = clsm.FitConfig(2, seed=1)
        assert config.rel_tol == 1e-8 and config.alpha_precision == 1.0
        model, report = clsm.fit(graph, behaviors, config)
        trace = report.elbo_trace
        assert all(b - a >= -1e-9 for a, b in zip(trace, trace[1:]))
        assert model.num_topics == 2 and len(model.theta_hat) == 60
        for row in model.theta_hat:
            assert abs(sum(row) - 1.0) < 1e-9
        mae = clsm.topic_recovery_mae(theta_true, model.theta_hat)
        print(f"fit: {report.iterations} sweeps, converged={report.converged}, MAE={mae:.4f}")

        path = os.path.join(workdir, "model.clsm")
        model.save(path)
        again = clsm.Model.load(path)
        assert again.theta_hat == model.theta_hat and again.beta_hat == model.beta_hat

        theta = model.fold_in_from_attributes([0, 0, 3])
        assert abs(sum(theta) - 1.0) < 1e-9
        theta = model.fold_in_from_links(graph.neighbors(0))
        assert abs(sum(theta) - 1.0) < 1e-9
        assert 0.0 < model.link_probability(0, 1) < 1.0
        assert abs(sum(model.attribute_distribution(0)) - 1.0) < 1e-9

        assert clsm.auc([0.9, 0.8], [0.1, 0.2]) == 1.0
        assert clsm.average_rank_score([0, 1, 2], [0.9, 0.5, 0.1], [0]) == 1.0

        rows = clsm.cross_validate(graph, behaviors, "links", [2], repeats=1, max_iterations=50)
        assert len(rows) == 2 * 5 and {r["metric"] for r in rows} == {"auc", "avg_rank"}
        print(f"cv: {len(rows)} rows, first {rows[0]}")

        try:
            clsm.Graph(3, [(1, 1)])
        except clsm.ClsmError as e:
            print(f"self-loop rejected: {e}")
        else:
            raise AssertionError("self-loop accepted")

        print("smoke test passed")


if __name__ == "__main__":
    main()
