import random
import statistics

import pytest

from mergeplan.engine import TrialConfig, read_log, replay
from mergeplan.experiments import (
    Condition,
    ConditionGrid,
    SUMMARY_COLUMNS,
    export_summaries,
    metric_samples,
    oscillation_count,
    parse_summaries,
    read_outcomes,
    run_batch,
    sample_trial,
    summarize_condition,
)
from mergeplan.model import Side
from mergeplan.planner import PlannerConfig

from test_engine import synthetic_log

CHEAP_PLANNER = PlannerConfig(alpha=0.5, horizon=3.0, time_budget=1e9,
                              max_expansions=60)


def small_grid(**kwargs) -> ConditionGrid:
    defaults = dict(road_lengths=(100.0,), alphas=(0.2, 0.8),
                    trials_per_condition=2, base_seed=7)
    defaults.update(kwargs)
    return ConditionGrid(**defaults)


class TestGrid:
    def test_default_grid_is_twelve_conditions(self):
        assert len(ConditionGrid().conditions()) == 12

    def test_condition_order_is_road_major(self):
        grid = ConditionGrid(road_lengths=(100.0, 200.0), alphas=(0.0, 1.0))
        assert grid.conditions() == [
            Condition(100.0, 0.0), Condition(100.0, 1.0),
            Condition(200.0, 0.0), Condition(200.0, 1.0),
        ]

    def test_validation(self):
        with pytest.raises(ValueError):
            ConditionGrid(alphas=())
        with pytest.raises(ValueError):
            ConditionGrid(trials_per_condition=0)


class TestSampleTrial:
    def test_deterministic_given_seed(self):
        cond = Condition(200.0, 0.4)
        a = sample_trial(cond, random.Random(11), seed=11)
        b = sample_trial(cond, random.Random(11), seed=11)
        assert a == b

    def test_condition_fields_applied(self):
        cfg = sample_trial(Condition(100.0, 0.8), random.Random(0), seed=5)
        assert cfg.road.road_length == 100.0
        assert cfg.planner.alpha == 0.8
        assert cfg.planner.rng_seed == 5
        assert cfg.seed == 5
        assert cfg.v0_human == 15.0
        # double merge wiring
        assert cfg.road.goal_lane_robot == cfg.start_lane_human
        assert cfg.road.goal_lane_human == cfg.start_lane_robot

    def test_speed_distribution(self):
        rng = random.Random(99)
        cond = Condition(200.0, 0.6)
        speeds = []
        lanes = []
        for _ in range(10000):
            cfg = sample_trial(cond, rng)
            speeds.append(cfg.v0_robot)
            lanes.append(cfg.start_lane_human)
        assert statistics.fmean(speeds) == pytest.approx(15.0, abs=0.1)
        assert statistics.stdev(speeds) == pytest.approx(3.0, abs=0.1)
        assert statistics.fmean(lanes) == pytest.approx(0.5, abs=0.02)

    def test_speed_clamped_into_bounds(self):
        rng = random.Random(1)
        for _ in range(3000):
            cfg = sample_trial(Condition(100.0, 0.0), rng)
            assert 0.0 <= cfg.v0_robot <= 30.0


class TestOscillation:
    def test_monotone_merge_has_none(self):
        log = synthetic_log([2.0, 2.6, 3.2, 3.8, 4.4, 5.0, 5.0, 5.0])
        assert oscillation_count(log, Side.HUMAN) == 0

    def test_zigzag_counts_sign_changes(self):
        log = synthetic_log([2.0, 3.0, 2.0, 3.0])
        assert oscillation_count(log, Side.HUMAN) == 2

    def test_zero_deltas_ignored(self):
        log = synthetic_log([2.0, 3.0, 3.0, 3.0, 2.0])
        assert oscillation_count(log, Side.HUMAN) == 1


class TestRunBatch:
    def test_one_trial_per_condition_yields_grid_size(self, tmp_path):
        grid = ConditionGrid(road_lengths=(100.0,),
                             alphas=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
                             trials_per_condition=1, base_seed=3)
        results, summaries = run_batch(grid, "constant", planner=CHEAP_PLANNER,
                                       out_dir=tmp_path)
        assert len(results) == 6
        assert len(summaries) == 6
        assert (tmp_path / "summary.csv").exists()
        assert (tmp_path / "outcomes.jsonl").exists()

    def test_batch_deterministic_and_logs_replay(self, tmp_path):
        grid = small_grid()
        run_batch(grid, "constant", planner=CHEAP_PLANNER,
                  out_dir=tmp_path / "a")
        run_batch(grid, "constant", planner=CHEAP_PLANNER,
                  out_dir=tmp_path / "b")
        csv_a = (tmp_path / "a" / "summary.csv").read_bytes()
        csv_b = (tmp_path / "b" / "summary.csv").read_bytes()
        assert csv_a == csv_b
        logs = sorted((tmp_path / "a").glob("road*.jsonl"))
        assert len(logs) == 4
        for path in logs:
            replay(read_log(path))

    def test_policy_failure_recorded_not_raised(self, tmp_path):
        grid = small_grid(trials_per_condition=1)
        results, summaries = run_batch(grid, "remote", planner=CHEAP_PLANNER)
        # remote without a mailbox is a config error: recorded per trial
        assert all(r.outcome.error is not None for r in results)
        assert all(s.n == 1 for s in summaries)


class TestSummaries:
    def test_csv_headers_exact(self):
        text = export_summaries([])
        assert text.splitlines()[0] == ",".join(SUMMARY_COLUMNS)
        assert text.splitlines()[0] == (
            "road_length,alpha,n,hv_failure_rate,av_failure_rate,"
            "hv_merge_time_mean,hv_merge_time_se,av_merge_time_mean,"
            "av_merge_time_se,hv_reward_mean,av_reward_mean,hv_osc_mean,"
            "av_osc_mean"
        )

    def test_round_trip(self, tmp_path):
        grid = small_grid()
        _, summaries = run_batch(grid, "constant", planner=CHEAP_PLANNER)
        text = export_summaries(summaries)
        parsed = parse_summaries(text)
        assert len(parsed) == len(summaries)
        for a, b in zip(summaries, parsed):
            assert a.road_length == b.road_length
            assert a.alpha == b.alpha
            assert a.n == b.n
            assert a.hv_failure_rate == b.hv_failure_rate
            assert a.av_merge_time_mean == b.av_merge_time_mean
            assert a.hv_osc_mean == b.hv_osc_mean

    def test_empty_condition_row(self):
        summary = summarize_condition(Condition(100.0, 0.4), [])
        text = export_summaries([summary])
        row = text.splitlines()[1]
        assert row == "100.0,0.4,0,,,,,,,,,,"

    def test_aggregation_matches_recompute(self):
        grid = small_grid(trials_per_condition=3)
        results, summaries = run_batch(grid, "constant", planner=CHEAP_PLANNER)
        for summary in summaries:
            cond = Condition(summary.road_length, summary.alpha)
            mine = [r for r in results if r.condition == cond]
            assert summary.n == len(mine)
            failures = sum(1 for r in mine if not r.outcome.merged_robot)
            assert summary.av_failure_rate == failures / len(mine)
            rewards = [r.outcome.total_r_H for r in mine]
            assert summary.hv_reward_mean == sum(rewards) / len(rewards)


class TestOutcomesIO:
    def test_round_trip_and_metric_extraction(self, tmp_path):
        grid = small_grid()
        results, _ = run_batch(grid, "constant", planner=CHEAP_PLANNER,
                               out_dir=tmp_path)
        rows = read_outcomes(tmp_path / "outcomes.jsonl")
        assert len(rows) == len(results)
        rewards = metric_samples(rows, "reward", "robot", {"alpha": 0.2})
        assert len(rewards) == 2
        merges = metric_samples(rows, "merge_time", "human", {"alpha": 0.2})
        # constant-velocity human never merges
        assert merges == []
        osc = metric_samples(rows, "oscillation", "robot",
                             {"alpha": 0.2, "road_length": 100.0})
        assert len(osc) == 2
        with pytest.raises(ValueError):
            metric_samples(rows, "steering", "robot", {})
        with pytest.raises(ValueError):
            metric_samples(rows, "reward", "both", {})
