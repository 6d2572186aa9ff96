import numpy as np
from django.test import SimpleTestCase
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    GeometryError,
    NumericalError,
)
from signal_core.stft import Spectrogram, StftConfig, istft, stft


def relative_error(estimate, reference):
    return np.linalg.norm(estimate - reference) / np.linalg.norm(reference)


class StftConfigTest(SimpleTestCase):
    def test_defaults_give_129_frequency_bins(self):
        assert StftConfig().n_freqs == 129

    def test_defaults_are_32_ms_windows_with_8_ms_hops(self):
        cfg = StftConfig()
        assert cfg.win_ms == 32.0 and cfg.hop_ms == 8.0

    def test_from_ms_matches_the_default_geometry(self):
        assert StftConfig.from_ms(32, 8, 8000) == StftConfig()

    def test_hop_must_divide_the_window(self):
        with self.assertRaises(ConfigurationError):
            StftConfig(hop=100)

    def test_fft_size_cannot_be_shorter_than_the_window(self):
        with self.assertRaises(ConfigurationError):
            StftConfig(fft_size=128)

    def test_unknown_window_kinds_are_rejected(self):
        with self.assertRaises(ConfigurationError):
            StftConfig(window="hamming")

    def test_window_pair_satisfies_constant_overlap_add(self):
        cfg = StftConfig()
        product = cfg.analysis_window * cfg.synthesis_window
        folded = product.reshape(-1, cfg.hop).sum(axis=0)
        np.testing.assert_allclose(folded, 1.0, atol=1e-12)

    def test_frame_count_depends_only_on_length(self):
        cfg = StftConfig()
        rng = np.random.default_rng(0)
        a = stft(rng.standard_normal(5000), cfg)
        b = stft(np.zeros(5000), cfg)
        assert a.n_frames == b.n_frames == cfg.n_frames(5000)


class StftTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = StftConfig()
        cls.rng = np.random.default_rng(1234)

    def test_zero_input_gives_an_all_zero_spectrogram(self):
        spec = stft(np.zeros(8000), self.cfg)
        assert not np.any(spec.data)

    def test_256_samples_give_129_bins_per_frame(self):
        spec = stft(self.rng.standard_normal(256), self.cfg)
        assert spec.data.shape[-1] == 129

    def test_1khz_sinusoid_peaks_at_bin_32(self):
        n = np.arange(8000)
        spec = stft(np.sin(2 * np.pi * 1000 * n / 8000), self.cfg)
        interior = np.abs(spec.data[8:-8])
        assert np.all(np.argmax(interior, axis=-1) == 32)

    def test_stft_is_linear(self):
        x = self.rng.standard_normal(3000)
        y = self.rng.standard_normal(3000)
        combined = stft(2.5 * x - 0.75 * y, self.cfg).data
        separate = 2.5 * stft(x, self.cfg).data - 0.75 * stft(y, self.cfg).data
        np.testing.assert_allclose(combined, separate, atol=1e-10)

    def test_multichannel_input_keeps_the_leading_axis(self):
        spec = stft(self.rng.standard_normal((3, 2000)), self.cfg)
        assert spec.data.shape == (3, self.cfg.n_frames(2000), 129)

    def test_stft_is_deterministic(self):
        x = self.rng.standard_normal(4000)
        np.testing.assert_array_equal(
            stft(x, self.cfg).data, stft(x, self.cfg).data
        )

    def test_empty_audio_is_rejected(self):
        with self.assertRaises(DegenerateInputError):
            stft(np.zeros(0), self.cfg)

    def test_spectrogram_rejects_non_finite_entries(self):
        data = np.zeros((4, 129), dtype=complex)
        data[1, 3] = np.nan
        with self.assertRaises(NumericalError):
            Spectrogram(data=data, config=self.cfg)

    def test_spectrogram_converts_to_a_plain_array(self):
        spec = stft(self.rng.standard_normal(600), self.cfg)
        assert np.asarray(spec) is spec.data


class IstftTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = StftConfig()

    def test_round_trip_of_100_random_signals(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            x = rng.standard_normal(rng.integers(4000, 16001))
            y = istft(stft(x, self.cfg), out_len=len(x))
            assert relative_error(y, x) < 1e-6

    def test_round_trip_of_one_second_of_white_noise(self):
        x = np.random.default_rng(5).standard_normal(8000)
        y = istft(stft(x, self.cfg), out_len=8000)
        assert relative_error(y, x) < 1e-6

    def test_round_trip_keeps_an_odd_length_exactly(self):
        rng = np.random.default_rng(9)
        x = np.cumsum(rng.standard_normal(12345)) * 0.01
        y = istft(stft(x, self.cfg), out_len=12345)
        assert y.shape == (12345,)
        assert relative_error(y, x) < 1e-6

    def test_round_trip_with_zero_padded_fft(self):
        cfg = StftConfig(fft_size=512)
        x = np.random.default_rng(3).standard_normal(2000)
        y = istft(stft(x, cfg), out_len=2000)
        assert relative_error(y, x) < 1e-6

    def test_round_trip_of_multichannel_audio(self):
        x = np.random.default_rng(4).standard_normal((2, 3000))
        y = istft(stft(x, self.cfg), out_len=3000)
        assert relative_error(y, x) < 1e-6

    def test_all_zero_spectrogram_gives_silence(self):
        data = np.zeros((40, 129), dtype=complex)
        assert not np.any(istft(data, self.cfg))

    def test_default_length_covers_the_input(self):
        spec = stft(np.ones(1000), self.cfg)
        assert istft(spec).shape[-1] >= 1000

    def test_mismatched_bins_are_rejected(self):
        with self.assertRaises(GeometryError):
            istft(np.zeros((10, 65), dtype=complex), self.cfg)

    def test_requesting_more_samples_than_frames_hold_is_rejected(self):
        spec = stft(np.ones(1000), self.cfg)
        with self.assertRaises(GeometryError):
            istft(spec, out_len=100000)

    def test_raw_arrays_need_a_config(self):
        with self.assertRaises(ConfigurationError):
            istft(np.zeros((10, 129), dtype=complex))
