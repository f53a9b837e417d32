"""Matched filter, energy accumulation, and measurement assembly tests."""

import numpy as np
import pytest

from beamalign.channel import ChannelRealization, PathParams, SystemConfig, angle_grid
from beamalign.receiver import (
    accumulate_energy,
    assemble_measurements,
    collect_probe,
    dump_batch,
    ground_truth_gamma,
    matched_filter,
    noise_floor,
    sensing_matrix,
    sensing_row,
)
from beamalign.signaling import (
    BeamCodebook,
    PowerConfig,
    SignalConfig,
    gen_codebook,
    gen_pn,
)


def _fixed_realization(paths, slots=1):
    n = len(paths)
    return ChannelRealization(
        paths=list(paths),
        rho=np.ones((slots, n), dtype=complex),
        phase0=np.zeros((slots, n)),
        coherence_slots=slots,
    )


def _grid_path(m, n, m_idx, n_idx, gamma=1.0, eta=1.0, delay_s=0.0, speed=0.0):
    return PathParams(
        gamma=gamma,
        eta=eta,
        aoa_rad=float(angle_grid(n)[n_idx]),
        aod_rad=float(angle_grid(m)[m_idx]),
        delay_s=delay_s,
        rel_speed_mps=speed,
    )


class TestMatchedFilter:
    def test_pn_peak_and_sidelobes(self):
        pn = gen_pn(1, 64, np.random.default_rng(0)).chips[0]
        corr_taps = 80
        rx = np.zeros(corr_taps + 63, dtype=complex)
        rx[:64] = pn
        out = matched_filter(rx, pn)
        assert out.size == corr_taps
        assert out[0].real == pytest.approx(64.0)
        # off-peak values are exactly the aperiodic autocorrelation at positive lags
        full_acf = np.correlate(pn, pn, mode="full")
        np.testing.assert_allclose(out[1:64].real, full_acf[64:], atol=1e-12)
        assert np.abs(out[1:]).max() == pytest.approx(np.abs(full_acf[64:]).max())

    def test_zero_input(self):
        pn = gen_pn(1, 16, np.random.default_rng(1)).chips[0]
        out = matched_filter(np.zeros(40, dtype=complex), pn)
        assert np.all(out == 0)

    def test_doppler_rotated_peak_matches_geometric_sum(self):
        n_c = 64
        t_c = 1.0 / 1.76e9
        nu = 0.25 / (n_c * t_c)  # quarter-cycle rotation across the sequence
        pn = gen_pn(1, n_c, np.random.default_rng(2)).chips[0]
        ramp = np.exp(2j * np.pi * nu * np.arange(1, n_c + 1) * t_c)
        rx = np.zeros(2 * n_c - 1, dtype=complex)
        rx[:n_c] = pn * ramp
        peak = matched_filter(rx, pn)[0]
        expected = np.sum(ramp)
        assert abs(peak - expected) < 1e-9
        assert abs(peak) < n_c

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            matched_filter(np.zeros(8), np.ones(16))


class TestAccumulateEnergy:
    def test_zero(self):
        assert accumulate_energy(np.zeros(10, dtype=complex)) == 0.0

    def test_known_vector(self):
        v = np.array([3.0, 4.0j, 0.0])
        assert accumulate_energy(v) == pytest.approx(25.0)

    def test_noiseless_on_grid_closed_form(self):
        # probed supports containing the path give exactly Pdim |rho|^2 MN/(ku kv) Nc^2
        m = n = 8
        system = SystemConfig(m, n, 1, 1, 70e9, 1.76e9)
        signal = SignalConfig(32, 1.76e9, 1, 2, corr_taps=32)
        path = _grid_path(m, n, 5, 3)
        real = _fixed_realization([path], slots=2)
        pn = gen_pn(1, 32, np.random.default_rng(3))
        power = PowerConfig(p_tot_w=4.0, noise_psd=0.0)
        kappa_u, kappa_v = 2, 2
        probed = BeamCodebook(
            bs_supports=np.array([[[5, 1]], [[0, 2]]]),
            ue_supports=np.array([[[3, 6]], [[1, 2]]]),
            bs_size=m,
            ue_size=n,
        )
        probe = collect_probe(
            real, pn, probed, power, system, signal, np.random.default_rng(0), ideal_streams=True
        )
        expected = (
            power.p_dim(system, signal) * m * n * signal.n_chips**2 / (kappa_u * kappa_v)
        )
        assert probe.batch.q[0] == pytest.approx(expected, rel=1e-12)
        assert probe.batch.q[1] == pytest.approx(0.0, abs=1e-30)

    def test_noise_only_mean_matches_floor(self):
        # P = 0: empirical mean of q equals corr_taps * N0 * Rx(0) well within 5%
        m = n = 4
        system = SystemConfig(m, n, 1, 1, 70e9, 1.76e9)
        signal = SignalConfig(64, 1.76e9, 1000, 1, corr_taps=70)
        path = _grid_path(m, n, 0, 0)
        real = _fixed_realization([path])
        pn = gen_pn(1, 64, np.random.default_rng(4))
        cb = gen_codebook(m, 1, n, 1, 1, 2, 2, np.random.default_rng(5))
        power = PowerConfig(p_tot_w=0.0, noise_psd=2.5e-20)
        probe = collect_probe(real, pn, cb, power, system, signal, np.random.default_rng(6))
        floor = noise_floor(signal, power)
        assert floor == pytest.approx(70 * 2.5e-20 * 64)
        assert probe.batch.q[0] == pytest.approx(floor, rel=0.05)


class TestAverageSlot:
    def test_single_subslot_identity(self):
        from beamalign.receiver import average_slot

        v = np.array([[1.0, 2.0]])
        np.testing.assert_array_equal(average_slot(v), v[0])

    def test_constant_inputs(self):
        from beamalign.receiver import average_slot

        v = np.full((16, 3), 2.5)
        np.testing.assert_allclose(average_slot(v), 2.5)

    def test_variance_shrinks_like_one_over_s(self):
        from beamalign.receiver import average_slot

        rng = np.random.default_rng(7)
        reps = 4000
        variances = []
        sizes = [1, 4, 16, 64]
        for s in sizes:
            draws = rng.exponential(1.0, size=(s, reps))
            variances.append(np.var(average_slot(draws)))
        slope = np.polyfit(np.log(sizes), np.log(variances), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.15)


class TestAssembly:
    def test_unit_kappa_rows_are_basis_vectors(self):
        cb = BeamCodebook(
            bs_supports=np.array([[[2]], [[0]]]),
            ue_supports=np.array([[[1]], [[3]]]),
            bs_size=4,
            ue_size=4,
        )
        b = sensing_matrix(cb)
        assert b.shape == (2, 16)
        np.testing.assert_array_equal(b.sum(axis=1), [1.0, 1.0])
        # column-major (ue, bs) vectorization: cell (n=1, m=2) -> column 2*4+1
        assert b[0, 2 * 4 + 1] == 1.0

    def test_reference_row_weight(self):
        # kappa_u=6 x kappa_v=5 over a 10x10 grid: every row weighs 30
        rng = np.random.default_rng(8)
        cb = gen_codebook(10, 1, 10, 1, 4, kappa_u=6, kappa_v=5, rng=rng)
        b = sensing_matrix(cb)
        np.testing.assert_array_equal(b.sum(axis=1), np.full(4, 30.0))

    def test_row_order_is_slot_major_then_bs_then_ue(self):
        rng = np.random.default_rng(9)
        cb = gen_codebook(6, 2, 6, 2, 3, 2, 2, rng)
        b = sensing_matrix(cb)
        row = 1 * 2 * 2 + 0 * 2 + 1  # slot 1, bs chain 0, ue chain 1
        np.testing.assert_array_equal(
            b[row], sensing_row(cb.bs_supports[1, 0], cb.ue_supports[1, 1], 6, 6)
        )

    def test_vec_convention_roundtrip(self):
        # b' vec(Gamma) with column-major vec equals the probed-cell sum
        rng = np.random.default_rng(10)
        gamma = rng.random((5, 7))
        sup_u = np.array([1, 4])
        sup_v = np.array([0, 2, 3])
        row = sensing_row(sup_u, sup_v, 7, 5)
        direct = gamma[np.ix_(sup_v, sup_u)].sum()
        assert row @ gamma.reshape(-1, order="F") == pytest.approx(direct)

    def test_noiseless_oracle_linear_model(self):
        # ideal streams, nu=0, distinct delays: q - floor == B vec(Gamma_true)
        m = n = 8
        system = SystemConfig(m, n, 2, 2, 70e9, 1.76e9)
        t_c = 1.0 / 1.76e9
        signal = SignalConfig(32, 1.76e9, 4, 12, corr_taps=40)
        paths = [
            _grid_path(m, n, 2, 6, gamma=1.0, eta=1e12),
            _grid_path(m, n, 5, 1, gamma=0.5, eta=1e12, delay_s=4 * t_c),
        ]
        rng = np.random.default_rng(11)
        real = ChannelRealization(
            paths=paths,
            rho=np.tile([np.sqrt(1.0), np.sqrt(0.5)], (12, 1)).astype(complex),
            phase0=np.random.default_rng(12).random((12, 2)),
            coherence_slots=1,
        )
        pn = gen_pn(2, 32, rng)
        cb = gen_codebook(m, 2, n, 2, 12, 3, 3, rng)
        power = PowerConfig(p_tot_w=2.0, noise_psd=0.0)
        probe = collect_probe(real, pn, cb, power, system, signal, rng, ideal_streams=True)
        gamma_true = ground_truth_gamma(real, power, system, signal, 3, 3)
        predicted = probe.batch.b @ gamma_true.reshape(-1, order="F")
        err = np.linalg.norm(probe.batch.q - predicted) / np.linalg.norm(predicted)
        assert err < 1e-9

    def test_unbiased_under_noise(self):
        # mean(q) over noise realizations approaches B vec(Gamma) + floor
        m = n = 4
        system = SystemConfig(m, n, 1, 1, 70e9, 1.76e9)
        signal = SignalConfig(16, 1.76e9, 64, 1, corr_taps=16)
        paths = [_grid_path(m, n, 1, 2, gamma=1.0, eta=1e12)]
        real = _fixed_realization(paths)
        pn = gen_pn(1, 16, np.random.default_rng(13))
        cb = BeamCodebook(
            bs_supports=np.array([[[1, 3]]]), ue_supports=np.array([[[0, 2]]]),
            bs_size=m, ue_size=n,
        )
        power = PowerConfig(p_tot_w=1e-4, noise_psd=1e-9)
        rng = np.random.default_rng(14)
        qs = [
            collect_probe(real, pn, cb, power, system, signal, rng, ideal_streams=True).batch.q[0]
            for _ in range(400)
        ]
        gamma_true = ground_truth_gamma(real, power, system, signal, 2, 2)
        floor = noise_floor(signal, power)
        expected = float(
            (sensing_matrix(cb) @ gamma_true.reshape(-1, order="F"))[0] + floor
        )
        assert np.mean(qs) == pytest.approx(expected, rel=0.02)

    def test_energy_scales_quadratically_with_gain(self):
        # real correlation mode: doubling all path gains quadruples q - floor
        m = n = 8
        system = SystemConfig(m, n, 2, 1, 70e9, 1.76e9)
        signal = SignalConfig(32, 1.76e9, 1, 2, corr_taps=40)
        t_c = 1.0 / 1.76e9
        paths = [
            _grid_path(m, n, 2, 6),
            PathParams(1.0, 1.0, 0.31, -0.7, 5 * t_c, 0.0),
        ]
        pn = gen_pn(2, 32, np.random.default_rng(15))
        cb = gen_codebook(m, 2, n, 1, 2, 3, 3, np.random.default_rng(16))
        power = PowerConfig(p_tot_w=1.0, noise_psd=0.0)
        rng = np.random.default_rng(17)
        rho = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        phase = rng.random((2, 2))

        def run(scale):
            real = ChannelRealization(
                paths=paths, rho=scale * rho, phase0=phase, coherence_slots=1
            )
            return collect_probe(real, pn, cb, power, system, signal, np.random.default_rng(0)).batch.q

        base = run(1.0)
        assert np.all(base >= 0)  # energies are non-negative by construction
        np.testing.assert_allclose(run(2.0), 4.0 * base, rtol=1e-10)

    def test_row_weight_invariant(self):
        rng = np.random.default_rng(18)
        cb = gen_codebook(16, 3, 12, 2, 6, 5, 4, rng)
        b = sensing_matrix(cb)
        np.testing.assert_array_equal(b.sum(axis=1), np.full(b.shape[0], 20.0))


class TestGroundTruthGamma:
    def test_single_los_single_cell(self):
        m = n = 8
        system = SystemConfig(m, n, 2, 2, 70e9, 1.76e9)
        signal = SignalConfig(64, 1.76e9, 1, 1, corr_taps=64)
        real = _fixed_realization([_grid_path(m, n, 3, 5, gamma=0.7, eta=1e12)])
        power = PowerConfig(p_tot_w=3.0, noise_psd=0.0)
        gamma = ground_truth_gamma(real, power, system, signal, 4, 2)
        nz = np.argwhere(gamma > 1e-9 * gamma.max())
        assert nz.shape == (1, 2)
        assert tuple(nz[0]) == (5, 3)
        expected = power.p_dim(system, signal) * 0.7 * m * n * 64**2 / (4 * 2)
        assert gamma[5, 3] == pytest.approx(expected, rel=1e-12)

    def test_two_equal_paths_two_equal_cells(self):
        m = n = 8
        system = SystemConfig(m, n, 1, 1, 70e9, 1.76e9)
        signal = SignalConfig(32, 1.76e9, 1, 1, corr_taps=32)
        real = _fixed_realization(
            [_grid_path(m, n, 1, 2, gamma=0.4), _grid_path(m, n, 6, 5, gamma=0.4)]
        )
        power = PowerConfig(p_tot_w=1.0, noise_psd=0.0)
        gamma = ground_truth_gamma(real, power, system, signal, 1, 1)
        assert gamma[2, 1] == pytest.approx(gamma[5, 6], rel=1e-12)
        assert (gamma > 1e-9 * gamma.max()).sum() == 2


class TestDump:
    def test_dump_batch_files(self, tmp_path):
        cb = BeamCodebook(
            bs_supports=np.array([[[0, 1]]]), ue_supports=np.array([[[1]]]), bs_size=3, ue_size=2
        )
        batch = assemble_measurements(np.ones((1, 1, 1)), cb, floor=0.5)
        files = dump_batch(batch, tmp_path / "probe")
        assert all(f.exists() for f in files)
        text = files[0].read_text()
        assert text.startswith("%%MatrixMarket")
        assert "1 2 1.0" in text  # row 1, col 2 (cell n=1, m=0) is probed
