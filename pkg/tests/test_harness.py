import numpy as np
import pytest

from mtsubmod.core import ContractError, Mode, ProblemSet
from mtsubmod.graphs import parse_graph, random_gnp_graph, write_edge_list
from mtsubmod.gsemo import RunConfig, run
from mtsubmod.harness import (
    DEFAULT_CHECKPOINTS,
    RAW_HEADER,
    RESULTS_HEADER,
    ExperimentConfig,
    aggregate,
    build_problem_constraints,
    format_raw_csv,
    format_results_csv,
    parse_config,
    read_raw_csv,
    run_experiment,
    run_seed,
    write_outputs,
)
from mtsubmod.objectives import CoverageObjective


@pytest.fixture(scope="module")
def toy_graph_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("graphs") / "toy.edges"
    write_edge_list(random_gnp_graph(36, 0.12, seed=44), path)
    return path


def toy_config(graph_file, **overrides):
    kwargs = dict(
        graphs=(str(graph_file),),
        regime="unit",
        bounds=(2, 6),
        checkpoints=(500, 1500),
        repetitions=3,
        seed=2718,
        modes="both",
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


class TestConfig:
    def test_parse_round_trip(self, tmp_path, toy_graph_file):
        text = (
            f"# demo\ngraph = {toy_graph_file}\nregime = random-linear\n"
            "bounds = 1, 12\ncheckpoints = 1000, 2000\nrepetitions = 5\n"
            "seed = 42\nmodes = classical\nresample_weights = false\n"
        )
        path = tmp_path / "exp.cfg"
        path.write_text(text)
        cfg = parse_config(path)
        assert cfg.regime == "random-linear"
        assert cfg.bounds == (1, 12)
        assert cfg.repetitions == 5
        assert cfg.modes == "classical"
        assert cfg.resample_weights is False

    def test_defaults(self, tmp_path, toy_graph_file):
        path = tmp_path / "exp.cfg"
        path.write_text(f"graph = {toy_graph_file}\nregime = unit\nbounds = 3\n")
        cfg = parse_config(path)
        assert cfg.checkpoints == DEFAULT_CHECKPOINTS
        assert cfg.repetitions == 30
        assert cfg.modes == "both"

    def test_missing_key(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("regime = unit\nbounds = 3\n")
        with pytest.raises(ContractError, match="graph"):
            parse_config(path)

    def test_validation(self, toy_graph_file):
        with pytest.raises(ContractError):
            toy_config(toy_graph_file, bounds=())
        with pytest.raises(ContractError):
            toy_config(toy_graph_file, regime="nope")
        with pytest.raises(ContractError):
            toy_config(toy_graph_file, repetitions=0)
        with pytest.raises(ContractError):
            toy_config(toy_graph_file, modes="fancy")


class TestProtocol:
    def test_budget_fairness(self, toy_graph_file):
        # classical: k runs x G_max each; multitasking: one run x k*G_max
        cfg = toy_config(toy_graph_file)
        k = cfg.k
        assert k * cfg.budget == k * max(cfg.checkpoints)

    def test_run_produces_complete_records(self, toy_graph_file):
        cfg = toy_config(toy_graph_file)
        rows, raw = run_experiment(cfg)
        # per mode: reps x problems x checkpoints
        expected = 2 * cfg.repetitions * cfg.k * len(cfg.checkpoints)
        assert len(raw) == expected
        assert len(rows) == cfg.k * len(cfg.checkpoints)
        for r in rows:
            assert r.verdict in ("+*", "-*", "=")

    def test_single_repetition_emits_no_verdict(self, toy_graph_file):
        cfg = toy_config(toy_graph_file, repetitions=1)
        rows, raw = run_experiment(cfg)
        assert all(r.verdict == "" for r in rows)
        assert all(r.H is None and r.p is None for r in rows)
        classical = [r for r in raw if r.mode == "classical"]
        multitask = [r for r in raw if r.mode == "multitasking"]
        assert len(classical) == cfg.k * len(cfg.checkpoints)
        assert len(multitask) == cfg.k * len(cfg.checkpoints)

    def test_classical_only_mode(self, toy_graph_file):
        cfg = toy_config(toy_graph_file, modes="classical")
        rows, raw = run_experiment(cfg)
        assert {r.mode for r in raw} == {"classical"}
        assert all(r.mean_multitask is None for r in rows)
        assert all(r.verdict == "" for r in rows)

    def test_checkpoint_consistency(self, toy_graph_file):
        # a checkpoint value equals what a fresh run with that exact budget returns
        cfg = toy_config(toy_graph_file)
        _, raw = run_experiment(cfg)
        graph = parse_graph(toy_graph_file)
        objective = CoverageObjective.from_graph(graph)
        gid = "toy"
        constraints = build_problem_constraints(graph, cfg, gid, repetition=1)
        i = 1
        seed = run_seed(cfg.seed, gid, cfg.regime, cfg.bounds, 1, i)
        ps = ProblemSet(objective=objective, constraints=(constraints[i],),
                        mode=Mode.CLASSICAL)
        short = RunConfig(budget=500, seed=seed, checkpoints=(500,))
        _, trace = run(ps, short)
        row = next(
            r for r in raw
            if r.mode == "classical" and r.repetition == 1
            and r.problem == i + 1 and r.generations == 500
        )
        assert row.best_f == trace.best_f[0, 0]
        assert row.cost == trace.best_cost[0, 0]

    def test_weights_shared_between_modes_and_resampled_per_rep(self, toy_graph_file):
        cfg = toy_config(toy_graph_file, regime="random-linear")
        graph = parse_graph(toy_graph_file)
        c0 = build_problem_constraints(graph, cfg, "toy", repetition=0)
        c0_again = build_problem_constraints(graph, cfg, "toy", repetition=0)
        c1 = build_problem_constraints(graph, cfg, "toy", repetition=1)
        assert np.array_equal(c0[0].weights, c0_again[0].weights)
        assert not np.array_equal(c0[0].weights, c1[0].weights)
        # distinct problems get distinct vectors
        assert not np.array_equal(c0[0].weights, c0[1].weights)
        fixed = toy_config(toy_graph_file, regime="random-linear",
                           resample_weights=False)
        f0 = build_problem_constraints(graph, fixed, "toy", repetition=0)
        f1 = build_problem_constraints(graph, fixed, "toy", repetition=1)
        assert np.array_equal(f0[0].weights, f1[0].weights)

    def test_parallel_matches_inline(self, toy_graph_file):
        cfg = toy_config(toy_graph_file, repetitions=2)
        rows1, raw1 = run_experiment(cfg, workers=1)
        rows2, raw2 = run_experiment(cfg, workers=2)
        assert raw1 == raw2
        assert rows1 == rows2

    def test_failed_run_aborts_whole_experiment(self, toy_graph_file, monkeypatch):
        # partial results must never be aggregated silently
        import mtsubmod.harness as harness_mod

        original = harness_mod._execute_task
        calls = {"n": 0}

        def flaky(task):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("synthetic run failure")
            return original(task)

        monkeypatch.setattr(harness_mod, "_execute_task", flaky)
        cfg = toy_config(toy_graph_file, repetitions=2)
        with pytest.raises(RuntimeError, match="synthetic run failure"):
            run_experiment(cfg)

    def test_incomplete_raw_records_rejected_at_aggregation(self, toy_graph_file):
        cfg = toy_config(toy_graph_file, repetitions=2)
        _, raw = run_experiment(cfg)
        truncated = [r for i, r in enumerate(raw) if i != 0]
        with pytest.raises(ContractError, match="repetitions"):
            aggregate(truncated, expected_reps=cfg.repetitions)


class TestOutputs:
    def test_results_header_and_formatting(self, toy_graph_file, tmp_path):
        cfg = toy_config(toy_graph_file)
        rows, raw = run_experiment(cfg)
        write_outputs(tmp_path, cfg, rows, raw)
        results = (tmp_path / "results.csv").read_text().splitlines()
        assert results[0] == RESULTS_HEADER
        # means carry one decimal, raw best_f uses 12 significant digits
        assert results[1].split(",")[4].count(".") == 1
        rawlines = (tmp_path / "raw_runs.csv").read_text().splitlines()
        assert rawlines[0] == RAW_HEADER
        meta = (tmp_path / "meta.txt").read_text()
        assert "splitmix64" in meta
        assert "sample standard deviation" in meta

    def test_raw_round_trip(self, toy_graph_file, tmp_path):
        cfg = toy_config(toy_graph_file, repetitions=2)
        rows, raw = run_experiment(cfg)
        write_outputs(tmp_path, cfg, rows, raw)
        back = read_raw_csv(tmp_path / "raw_runs.csv")
        assert back == raw
        assert aggregate(back) == aggregate(raw)
        assert format_results_csv(aggregate(back)) == format_results_csv(rows)

    def test_reproducible_bytes(self, toy_graph_file, tmp_path):
        cfg = toy_config(toy_graph_file, regime="random-linear", repetitions=2)
        rows1, raw1 = run_experiment(cfg)
        rows2, raw2 = run_experiment(cfg, workers=2)
        a, b = tmp_path / "a", tmp_path / "b"
        write_outputs(a, cfg, rows1, raw1)
        write_outputs(b, cfg, rows2, raw2)
        assert (a / "raw_runs.csv").read_bytes() == (b / "raw_runs.csv").read_bytes()
        assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
