import math

import numpy as np
import pytest

from eigenwave.eigen import ChannelDims
from eigenwave.montecarlo import (
    McEstimate,
    SimConfig,
    _merge,
    estimate_outage,
    estimate_stream_metrics,
    rng_for_chunk,
    sample_eigenvalues,
    sample_realization,
    simulate,
    thread_count,
)
from eigenwave import _kernels
from eigenwave.atp import atp_traditional, individual_op
from eigenwave.policy import StreamSpec, derive_params

DIMS36 = ChannelDims(3, 6)


def _specs(ber=1e-4):
    return [StreamSpec(i, ber, oe=1.0) for i in (1, 2, 3)]


class TestSampling:
    def test_siso_gain_is_unit_exponential(self):
        lam = sample_eigenvalues(ChannelDims(1, 1), 200_000, rng_for_chunk(1, 0))[:, 0]
        assert abs(lam.mean() - 1.0) < 5 / math.sqrt(lam.size)
        assert abs(lam.var() - 1.0) < 0.03

    def test_trace_mean(self):
        # E tr(H^H H) = n_t n_r
        lam = sample_eigenvalues(DIMS36, 50_000, rng_for_chunk(2, 0))
        tr = lam.sum(axis=1)
        assert abs(tr.mean() - 18.0) < 5 * tr.std() / math.sqrt(tr.size)

    def test_sorted_and_nonnegative(self):
        lam = sample_eigenvalues(ChannelDims(4, 4), 5_000, rng_for_chunk(3, 0))
        assert lam.shape == (5_000, 4)
        assert np.all(np.diff(lam, axis=1) <= 0.0)
        assert np.all(lam >= 0.0)

    @pytest.mark.parametrize("nt, nr", [(3, 6), (6, 3), (2, 2)])
    def test_realization_consistent(self, nt, nr):
        real = sample_realization(ChannelDims(nt, nr), rng_for_chunk(4, 0))
        assert real.matrix.shape == (nr, nt)
        sv = np.linalg.svd(real.matrix, compute_uv=False)
        np.testing.assert_allclose(real.eigenvalues, sv ** 2, rtol=1e-10, atol=1e-12)

    def test_trace_is_frobenius_norm(self):
        rng = rng_for_chunk(6, 0)
        for dims in (ChannelDims(3, 6), ChannelDims(4, 2)):
            for _ in range(20):
                real = sample_realization(dims, rng)
                frob = np.sum(np.abs(real.matrix) ** 2)
                assert real.eigenvalues.sum() == pytest.approx(frob, rel=1e-9)

    def test_chunk_streams_are_keyed(self):
        a = rng_for_chunk(42, 0).standard_normal(4)
        b = rng_for_chunk(42, 0).standard_normal(4)
        c = rng_for_chunk(42, 1).standard_normal(4)
        d = rng_for_chunk(43, 0).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, d)


class TestConfig:
    def test_chunking(self):
        cfg = SimConfig(DIMS36, _specs(), samples=1000, chunk_size=300)
        assert cfg.n_chunks == 4
        assert SimConfig(DIMS36, _specs(), samples=10, chunk_size=300).chunk_size == 10

    @pytest.mark.parametrize("kw", [
        {"samples": 0}, {"chunk_size": 0}, {"seed": -1}, {"policy_kind": "greedy"}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SimConfig(DIMS36, _specs(), **kw)

    def test_stream_out_of_range(self):
        with pytest.raises(ValueError):
            SimConfig(ChannelDims(2, 4), _specs())

    def test_thread_hint(self, monkeypatch):
        monkeypatch.delenv("EIGENWAVE_THREADS", raising=False)
        assert thread_count() == 1
        monkeypatch.setenv("EIGENWAVE_THREADS", "4")
        assert thread_count() == 4
        monkeypatch.setenv("EIGENWAVE_THREADS", "lots")
        assert thread_count() == 1
        monkeypatch.setenv("EIGENWAVE_THREADS", "0")
        assert thread_count() == 1


class TestEstimates:
    def test_z_score(self):
        est = McEstimate(1.2, 0.1, 100)
        assert est.z_score(1.0) == pytest.approx(2.0)
        assert est.z_score(1.0, std_error=0.2) == pytest.approx(1.0)
        assert McEstimate(1.0, 0.0, 1).z_score(1.0) == 0.0
        assert McEstimate(1.0, 0.0, 1).z_score(0.0) == math.inf

    def test_merge_matches_single_pass(self):
        rng = np.random.default_rng(0)
        lam = rng.gamma(4.0, size=5000)
        prm = (0.5, 2.0, 0.25, 9.0, 8.0, 1.0, 2.0, True)
        whole = _kernels.accumulate_stream_numpy(lam, *prm)
        merged = _kernels.accumulate_stream_numpy(lam[:1234], *prm)
        for lo, hi in ((1234, 3000), (3000, 5000)):
            merged = _merge(merged, _kernels.accumulate_stream_numpy(lam[lo:hi], *prm))
        np.testing.assert_allclose(merged, whole, rtol=1e-11)

    def test_merge_empty_transmit_side(self):
        prm = (10.0, 20.0, 0.5, 9.0, 8.0, 1.0, 2.0, False)
        a = _kernels.accumulate_stream_numpy(np.array([0.1, 0.2]), *prm)
        b = _kernels.accumulate_stream_numpy(np.array([11.0, 30.0]), *prm)
        out = _merge(a, b)
        assert out[4] == 2 and out[5] == b[5]


class TestSimulate:
    def test_single_sample(self):
        res = simulate(SimConfig(DIMS36, _specs(), samples=1, seed=9))
        for s in res.streams:
            assert s.outage.count == 1
            assert s.atp.std_error == 0.0

    def test_deterministic(self):
        cfg = SimConfig(DIMS36, _specs(), "dynamic", samples=20_000, seed=11, chunk_size=3_000)
        a = simulate(cfg)
        b = simulate(cfg)
        assert a.streams == b.streams

    def test_thread_count_does_not_change_result(self):
        cfg = SimConfig(DIMS36, _specs(), "traditional", samples=30_000, seed=5, chunk_size=2_500)
        one = simulate(cfg, threads=1)
        many = simulate(cfg, threads=4)
        assert one.streams == many.streams

    def test_seed_changes_result(self):
        a = simulate(SimConfig(DIMS36, _specs(), samples=5_000, seed=1))
        b = simulate(SimConfig(DIMS36, _specs(), samples=5_000, seed=2))
        assert a.streams != b.streams

    def test_records_backend(self):
        res = simulate(SimConfig(DIMS36, _specs(), samples=10))
        assert res.backend == _kernels.BACKEND

    def test_closure_small(self):
        specs = _specs(1e-3)
        cfg = SimConfig(DIMS36, specs, samples=100_000, seed=13)
        res = simulate(cfg)
        for spec, prm, s in zip(specs, res.params, res.streams):
            atp = atp_traditional(DIMS36, spec, prm).total
            assert abs(s.atp.z_score(atp)) < 4
            op = individual_op(DIMS36, spec.stream, prm.lambda_out)
            se = math.sqrt(op * (1 - op) / s.outage.count)
            assert abs(s.outage.z_score(op, se)) < 4
            assert s.cond_ber.count + round(s.outage.mean * s.outage.count) == cfg.samples
            assert s.transmit_freq.mean == pytest.approx(1 - s.outage.mean)

    def test_siso_outage_frequency(self):
        cfg = SimConfig(ChannelDims(1, 1), [StreamSpec(1, 1e-6, oe=1.0)], samples=200_000, seed=8)
        est = estimate_outage(cfg)[0]
        assert abs(est.z_score(0.1, math.sqrt(0.09 / est.count))) < 3

    @pytest.mark.slow
    def test_siso_atp_closure(self):
        spec = StreamSpec(1, 1e-6, lambda_out=0.10536)
        cfg = SimConfig(ChannelDims(1, 1), [spec], samples=1_000_000, seed=42)
        res = simulate(cfg)
        atp = atp_traditional(ChannelDims(1, 1), spec, res.params[0]).total
        assert abs(res.streams[0].atp.z_score(atp)) < 3

    def test_wrappers(self):
        cfg = SimConfig(ChannelDims(2, 3), [StreamSpec(2, 1e-3, oe=1.0)], samples=2_000)
        assert estimate_outage(cfg)[0] == simulate(cfg).streams[0].outage
        assert estimate_stream_metrics(cfg)[0].stream == 2

    def test_explicit_params(self):
        specs = _specs()
        params = [derive_params(DIMS36, s) for s in specs]
        cfg = SimConfig(DIMS36, specs, samples=3_000)
        assert simulate(cfg, params=params).streams == simulate(cfg).streams
