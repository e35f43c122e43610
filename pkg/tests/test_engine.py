import numpy as np
import pytest
from _replay import ei_closed_form, replay

from sane import benchmarks
from sane.engine import (
    VANILLA,
    SaneConfig,
    aggregate,
    half_schedule,
    initial_design,
    predicted_raw_map,
    prepare_box,
    run,
    run_seed_sweep,
)
from sane.errors import ConfigError
from sane.gate import HARD, RELAXED
from sane.problem import BlackBox, ParameterSpace, branin_neg
from sane.report import format_trace_csv, trace_header, trace_rows
from sane.surrogate import fit_gp


def _csv(trace):
    return format_trace_csv(trace_header(trace.dim), trace_rows(trace))


def _bumps_1d(res=41):
    space = ParameterSpace(((0.0, 1.0),), res)
    return BlackBox(space, lambda x: float(np.exp(-((x[0] - 0.3) ** 2) / 0.01) + 0.5 * np.exp(-((x[0] - 0.8) ** 2) / 0.005)))


@pytest.fixture(scope="module")
def branin_trace():
    return run(SaneConfig(iterations=20, seed=1), branin_neg(20))


def _labels(cfg, name):
    box = benchmarks.build(name)
    cands, idx = initial_design(cfg, box)
    return box, [(cands[j], lab) for j, lab in zip(idx, benchmarks.labeler(name)(cands[idx]))]


class TestConfig:
    @pytest.mark.parametrize("kwargs,key", [
        (dict(iterations=-1), "N"), (dict(check_interval=0), "n"), (dict(init_count=1), "init_count"),
        (dict(init_method="sobol"), "init_method"), (dict(mode="ucb"), "mode"), (dict(gate="soft"), "gate"),
        (dict(refit_every=0), "refit_every"), (dict(direction="up"), "direction"),
        (dict(iterations=4, switch=(0, 1)), "switch"), (dict(iterations=2, switch=(0, 2)), "switch"),
    ])
    def test_validation(self, kwargs, key):
        with pytest.raises(ConfigError) as exc:
            SaneConfig(**kwargs)
        assert exc.value.key == key

    def test_half_schedule(self):
        assert half_schedule(50)[:25] == (0,) * 25
        assert half_schedule(50)[25:] == (1,) * 25
        assert half_schedule(4, 1) == (0, 1, 1, 1)


class TestRun:
    def test_zero_iterations(self):
        t = run(SaneConfig(iterations=0), branin_neg(10))
        assert t.records == [] and len(t.archive) == 10
        assert all(s.iteration == 0 for s in t.archive)

    def test_counts(self, branin_trace):
        t = branin_trace
        assert len(t.records) == 20 and len(t.archive) == 30
        assert len({s.candidate for s in t.archive}) == 30
        assert [r.iteration for r in t.records] == list(range(1, 21))

    def test_first_focus_is_best_initial(self, branin_trace):
        init = [s for s in branin_trace.archive if s.iteration == 0]
        assert branin_trace.foci[0].archive_index == max(init, key=lambda s: (s.internal, -s.index)).index

    def test_roi_checks_every_n(self, branin_trace):
        assert [e.iteration for e in branin_trace.roi_events] == [5, 10, 15, 20]

    def test_determinism(self):
        cfg = SaneConfig(iterations=12, seed=4, init_method="lhs")
        a, b = run(cfg, branin_neg(15)), run(cfg, branin_neg(15))
        assert _csv(a) == _csv(b)
        assert [e for e in a.roi_events] == [e for e in b.roi_events]

    def test_seed_changes_run(self):
        a = run(SaneConfig(iterations=3, seed=1), branin_neg(15))
        b = run(SaneConfig(iterations=3, seed=2), branin_neg(15))
        assert _csv(a) != _csv(b)

    def test_replay(self, branin_trace):
        assert replay(branin_trace) == []

    def test_recorded_ei_closed_form(self):
        cfg = SaneConfig(iterations=4, seed=2)
        t = run(cfg, branin_neg(12))
        for rec in t.records:
            prefix = [t.archive[i] for i in range(t.init_count + rec.iteration - 1)]
            m = fit_gp([s.norm for s in prefix], [s.internal for s in prefix], cfg.kernel, cfg.fit,
                       seed=[cfg.seed, 0, rec.iteration])
            mean, var = m.predict_batch(t.candidates_norm[rec.scores.indices])
            y_best = max(s.internal for s in prefix)
            for k in range(0, len(mean), 17):
                want = ei_closed_form(mean[k], var[k], y_best, cfg.acq.xi)
                assert rec.scores.ei[k] == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_vanilla_matches_reference_loop(self):
        box = _bumps_1d()
        cfg = SaneConfig(iterations=10, mode=VANILLA, seed=3)
        t = run(cfg, box)
        cands = box.candidates()
        norm = box.space.to_norm(cands)
        _, idx = initial_design(cfg, box)
        X = [norm[j] for j in idx]
        y = [box(cands[j]) for j in idx]
        taken = set(idx)
        chosen = []
        for i in range(1, 11):
            m = fit_gp(np.array(X), np.array(y), cfg.kernel, cfg.fit, seed=[cfg.seed, 0, i])
            best_j, best_v = None, -1.0
            for j in range(len(cands)):
                if j in taken:
                    continue
                p = m.predict(norm[j])
                v = ei_closed_form(p.mean, p.variance, max(y), cfg.acq.xi)
                if v > best_v:
                    best_j, best_v = j, v
            taken.add(best_j)
            chosen.append(best_j)
            X.append(norm[best_j])
            y.append(box(cands[best_j]))
        assert [r.candidate for r in t.records] == chosen
        assert all(r.branch == "ei" for r in t.records) and t.roi_events == []

    def test_minimize_equals_negated_maximize(self):
        cfg = SaneConfig(iterations=8, seed=6)
        a = run(cfg, branin_neg(15))
        b = run(cfg, branin_neg(15).negated())
        assert b.direction != a.direction
        assert [r.candidate for r in a.records] == [r.candidate for r in b.records]
        assert [r.raw for r in a.records] == [-r.raw for r in b.records]

    def test_direction_override(self):
        box = branin_neg(10)
        t = run(SaneConfig(iterations=2, direction="minimize"), box)
        assert t.direction == "minimize"
        assert t.best_raw() == min(s.raw for s in t.archive)

    def test_exhaustion_recorded(self):
        box = _bumps_1d(12)
        t = run(SaneConfig(iterations=5, init_count=10), box)
        assert t.early_stop == 3 and len(t.records) == 2 and len(t.archive) == 12

    def test_grid_resolution_override(self):
        cfg = SaneConfig(iterations=0, grid_resolution=7)
        assert prepare_box(cfg, branin_neg()).candidates().shape == (49, 2)

    def test_best_so_far_monotone(self, branin_trace):
        curve = branin_trace.best_so_far()
        assert len(curve) == 21 and all(b >= a for a, b in zip(curve, curve[1:]))

    def test_predicted_map(self, branin_trace):
        pred = predicted_raw_map(branin_trace)
        assert pred.shape == (400,)
        assert np.all(np.isfinite(pred))


class TestGated:
    def test_requires_labels(self):
        with pytest.raises(ConfigError) as exc:
            run(SaneConfig(iterations=1, gate=HARD), benchmarks.build("fake-optima-1d"))
        assert exc.value.key == "labels"

    def test_single_class(self):
        cfg = SaneConfig(iterations=1, gate=HARD)
        box, labels = _labels(cfg, "fake-optima-1d")
        with pytest.raises(ConfigError):
            run(cfg, box, [(x, "good") for x, _ in labels])

    def test_unknown_location(self):
        cfg = SaneConfig(iterations=1, gate=HARD)
        box, labels = _labels(cfg, "fake-optima-1d")
        with pytest.raises(ConfigError):
            run(cfg, box, labels + [(np.array([0.123456]), "bad")])

    def test_relaxed_invariant(self):
        cfg = SaneConfig(iterations=50, gate=RELAXED, seed=2)
        box, labels = _labels(cfg, "fake-optima-1d")
        t = run(cfg, box, labels)
        assert t.final_gate is t.initial_gate
        np.testing.assert_array_equal(t.final_gate.mean_map(t.candidates_norm),
                                      t.initial_gate.mean_map(t.candidates_norm))
        assert [e.n_train for e in t.gate_events] == [t.initial_gate.n_train]

    def test_hard_grows_each_iteration(self):
        cfg = SaneConfig(iterations=6, gate=HARD, seed=2)
        box, labels = _labels(cfg, "fake-optima-1d")
        t = run(cfg, box, labels)
        n0 = t.initial_gate.n_train
        assert [e.n_train for e in t.gate_events] == list(range(n0, n0 + 7))
        assert replay(t) == []

    def test_vanilla_ignores_gate(self):
        cfg = SaneConfig(iterations=3, gate=HARD, mode=VANILLA)
        t = run(cfg, benchmarks.build("fake-optima-1d"))
        assert t.initial_gate is None and all(r.c_bar is None for r in t.records)


class TestSweep:
    def test_single_seed(self):
        cfg = SaneConfig(iterations=3)
        res = run_seed_sweep(cfg, branin_neg(12), [5])
        for k, v in res.metrics[5].items():
            if v is not None:
                assert res.aggregates[f"mean_{k}"] == v

    def test_order_independent(self):
        cfg = SaneConfig(iterations=3)
        a = run_seed_sweep(cfg, branin_neg(12), [1, 2, 3])
        b = run_seed_sweep(cfg, branin_neg(12), [3, 1, 2])
        assert a.aggregates == b.aggregates

    def test_empty(self):
        with pytest.raises(ConfigError):
            run_seed_sweep(SaneConfig(), branin_neg(12), [])

    def test_aggregate_median(self):
        agg = aggregate({0: {"a": 1.0}, 1: {"a": 5.0}, 2: {"a": 3.0, "b": None}})
        assert agg["mean_a"] == 3.0 and agg["median_a"] == 3.0 and "mean_b" not in agg

    def test_labeler_sweep(self):
        cfg = SaneConfig(iterations=2, gate=HARD)
        res = run_seed_sweep(cfg, benchmarks.build("fake-optima-1d"), [0, 1],
                             labeler=benchmarks.labeler("fake-optima-1d"))
        assert all(t.final_gate is not None for t in res.traces.values())
