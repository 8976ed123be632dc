import dataclasses
import math

import pytest

from coordsim.coding import (BinnedSchemeConfig, DecoderLimits,
                             DirectSchemeConfig, ErrorCase)
from coordsim.harness import (ExperimentAborted, ExperimentConfig,
                              ExperimentStats, check_delta_coordination,
                              run_experiment, sweep)
from coordsim.probkit import CondPmf, Pmf, compose_markov, mutual_information
from coordsim.source import SourceConfig


def direct_config(n=40, L=1, trials=50, seed=11, rate=None, epsilon=0.3,
                  budget=20_000):
    p0 = Pmf.uniform(2)
    obs = CondPmf.binary_flip(0.4)
    triple = compose_markov(p0, obs, CondPmf.binary_flip(0.4))
    if rate is None:
        rate = mutual_information(triple.pair_marginal(1, 2).probs) + 0.06
    scheme = DirectSchemeConfig(rates=(rate,) * L, slacks=(0.12,) * L,
                                epsilon=epsilon, triple=triple)
    return ExperimentConfig(source=SourceConfig(p0=p0, obs_channel=obs, L=L, n=n),
                            scheme=scheme, trials=trials, seed=seed, delta=0.1,
                            search_budget=budget)


def binned_config(n=6, L=2, trials=30, seed=5, epsilon=0.5,
                  limits=DecoderLimits()):
    p0 = Pmf.uniform(2)
    obs = CondPmf.binary_flip(0.2)
    triple = compose_markov(p0, obs, CondPmf.binary_flip(0.3))
    scheme = BinnedSchemeConfig(rate_bin=math.log(4.3) / n, slack_bin=0.0,
                                rate_word=math.log(2.6) / n, slack_word=0.0,
                                epsilon=epsilon, triple=triple)
    return ExperimentConfig(source=SourceConfig(p0=p0, obs_channel=obs, L=L, n=n),
                            scheme=scheme, trials=trials, seed=seed, delta=0.3,
                            decoder_limits=limits)


def strip_timing(stats: ExperimentStats) -> ExperimentStats:
    return dataclasses.replace(stats, wall_time=0.0,
                               error_case_counts=dict(stats.error_case_counts))


class TestRunExperiment:
    def test_counts_sum_to_trials(self):
        stats = run_experiment(direct_config(trials=40))
        assert sum(stats.error_case_counts.values()) == 40
        assert stats.trials == 40
        assert 0.0 <= stats.mean_tv <= 1.0
        assert stats.q50 <= stats.q90 <= stats.q99

    def test_deterministic_across_worker_counts(self):
        cfg = direct_config(trials=48)
        solo = strip_timing(run_experiment(cfg, workers=1))
        quad = strip_timing(run_experiment(cfg, workers=4))
        assert solo == quad

    def test_binned_scheme_runs(self):
        stats = run_experiment(binned_config())
        assert stats.trials == 30
        assert stats.decoder_aborts == 0

    def test_rate_zero_forces_encoder_failures(self):
        cfg = direct_config(rate=0.0, trials=30, epsilon=0.12)
        scheme = dataclasses.replace(cfg.scheme, slacks=(0.0,))
        cfg = dataclasses.replace(cfg, scheme=scheme)
        stats = run_experiment(cfg)
        assert stats.error_case_counts[ErrorCase.B.value] + \
            stats.error_case_counts[ErrorCase.A.value] == 30

    def test_identity_channels_coordinate_by_copying(self):
        # noiseless observation and identity auxiliary channel: whenever the
        # action sequence itself is typical, encoding finds a near-copy and
        # the trial succeeds; nothing can fail at the decoder or final check
        p0 = Pmf.uniform(2)
        ident = CondPmf.identity(2)
        triple = compose_markov(p0, ident, ident)
        scheme = DirectSchemeConfig(rates=(math.log(2) + 0.1,), slacks=(0.1,),
                                    epsilon=0.8, triple=triple)
        cfg = ExperimentConfig(
            source=SourceConfig(p0=p0, obs_channel=ident, L=1, n=12),
            scheme=scheme, trials=40, seed=99, delta=0.4)
        stats = run_experiment(cfg)
        counts = stats.error_case_counts
        assert counts[ErrorCase.B.value] == 0
        assert counts[ErrorCase.D.value] == 0
        assert counts[ErrorCase.NONE.value] > 0
        assert counts[ErrorCase.NONE.value] + counts[ErrorCase.A.value] == 40
        assert stats.q50 <= scheme.epsilon / 2

    def test_decoder_abort_raises(self):
        cfg = binned_config(limits=DecoderLimits(max_candidates=1))
        with pytest.raises(ExperimentAborted):
            run_experiment(cfg)

    def test_abort_fraction_tolerates_and_reports(self):
        # encoder-failure trials never reach the decoder, so they complete and
        # the tolerated aborts are reported alongside them
        cfg = dataclasses.replace(binned_config(limits=DecoderLimits(max_candidates=1)),
                                  abort_fraction=1.0)
        stats = run_experiment(cfg)
        assert stats.decoder_aborts > 0
        assert stats.trials + stats.decoder_aborts == 30
        assert sum(stats.error_case_counts.values()) == stats.trials

    def test_validation(self):
        with pytest.raises(ValueError):
            direct_config(trials=0)
        cfg = direct_config()
        with pytest.raises(ValueError):
            dataclasses.replace(cfg, delta=-0.5)
        with pytest.raises(ValueError):
            dataclasses.replace(cfg, scheme=dataclasses.replace(
                cfg.scheme, rates=(0.1, 0.2)))


class TestStats:
    def test_counts_must_sum(self):
        with pytest.raises(ValueError):
            ExperimentStats(mean_tv=0.1, q50=0.1, q90=0.1, q99=0.1,
                            error_case_counts={"none": 3}, trials=4,
                            wall_time=0.0, budget_hits=0, tv_stderr=0.0)

    def test_case_fraction(self):
        stats = ExperimentStats(mean_tv=0.1, q50=0.1, q90=0.1, q99=0.1,
                                error_case_counts={"none": 3, "B": 1}, trials=4,
                                wall_time=0.0, budget_hits=0, tv_stderr=0.0)
        assert stats.case_fraction("B") == 0.25
        assert stats.case_fraction("Ca") == 0.0


class TestDeltaVerdict:
    def _stats(self, mean, stderr):
        return ExperimentStats(mean_tv=mean, q50=mean, q90=mean, q99=mean,
                               error_case_counts={"none": 100}, trials=100,
                               wall_time=0.0, budget_hits=0, tv_stderr=stderr)

    def test_zero_mean_passes_any_radius(self):
        assert check_delta_coordination(self._stats(0.0, 0.0), 0.0) == "pass"

    def test_large_mean_fails_small_radius(self):
        assert check_delta_coordination(self._stats(0.5, 0.0), 0.1) == "fail"

    def test_straddling_band_fails_conservatively(self):
        verdict = check_delta_coordination(self._stats(0.09, 0.01), 0.1)
        assert verdict == "fail"
        assert check_delta_coordination(self._stats(0.09, 0.001), 0.1) == "pass"


class TestSweep:
    def test_single_cell_matches_run_experiment(self):
        cfg = direct_config(trials=30)
        cells = sweep(cfg, n_list=[40], L_list=[1], delta_list=[0.1])
        assert len(cells) == 1
        assert strip_timing(cells[0].stats) == strip_timing(run_experiment(cfg))

    def test_grid_cardinality_and_order(self):
        cfg = direct_config(trials=10)
        cells = sweep(cfg, n_list=[20, 40], L_list=[1, 2], delta_list=[0.1, 0.3])
        assert len(cells) == 8
        assert [c.key[:2] for c in cells][:4] == [(20, 1), (20, 1), (20, 2), (20, 2)]

    def test_rates_broadcast_per_agent_count(self):
        cfg = direct_config(trials=10)
        cells = sweep(cfg, n_list=[20], L_list=[3], delta_list=[0.1])
        assert cells[0].rates == cfg.scheme.rates

    def test_rates_grid(self):
        cfg = direct_config(trials=10)
        cells = sweep(cfg, n_list=[20], L_list=[1], delta_list=[0.1],
                      rates_list=[(0.1,), (0.4,)])
        assert [c.rates for c in cells] == [(0.1,), (0.4,)]
        # a bigger codebook can only improve the median fidelity here
        assert cells[1].stats.q50 <= cells[0].stats.q50 + 0.25

    def test_resume_reproduces_full_run(self):
        cfg = direct_config(trials=20)
        full = sweep(cfg, n_list=[20, 30], L_list=[1], delta_list=[0.1])
        partial = sweep(cfg, n_list=[20], L_list=[1], delta_list=[0.1])
        completed = {cell.key: cell for cell in partial}
        resumed = sweep(cfg, n_list=[20, 30], L_list=[1], delta_list=[0.1],
                        completed=completed)
        assert [c.key for c in resumed] == [c.key for c in full]
        for a, b in zip(resumed, full):
            assert strip_timing(a.stats) == strip_timing(b.stats)
        assert resumed[0] is partial[0]
