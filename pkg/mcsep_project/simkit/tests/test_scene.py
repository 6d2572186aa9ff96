import numpy as np
from django.test import SimpleTestCase
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    GeometryError,
)
from signal_core.stft import StftConfig, stft
from simkit.factories import SceneTruthFactory, SimSceneFactory
from simkit.scene import SimScene, random_scene, render, rir_envelope


class RenderTest(SimpleTestCase):
    def test_unit_impulse_rir_gives_the_dry_source_back(self):
        scene = SimSceneFactory(n_speakers=1, n_mics=1, anechoic=True)
        truth = render(scene)
        np.testing.assert_allclose(
            truth.images[0, 0], scene.dry[0], atol=1e-12
        )

    def test_mixture_is_exactly_the_sum_of_images_without_noise(self):
        truth = SceneTruthFactory(scene__n_speakers=2, scene__n_mics=2)
        residual = truth.mixtures - truth.images.sum(axis=0)
        assert not np.any(residual)

    def test_mixture_minus_noise_matches_the_images_with_noise(self):
        truth = SceneTruthFactory(scene__noisy=True)
        np.testing.assert_allclose(
            truth.mixtures - truth.noise,
            truth.images.sum(axis=0),
            atol=1e-12,
        )

    def test_noise_is_scaled_to_the_requested_snr(self):
        truth = SceneTruthFactory(scene__noise_snr_db=25.0)
        clean = truth.images.sum(axis=0)
        snr = 10 * np.log10(
            np.sum(clean**2, axis=-1) / np.sum(truth.noise**2, axis=-1)
        )
        np.testing.assert_allclose(snr, 25.0, atol=0.1)

    def test_images_hold_the_full_linear_convolution(self):
        scene = SimSceneFactory(rir_len=50)
        truth = render(scene)
        assert truth.images.shape == (2, 3, scene.n_samples + 49)
        np.testing.assert_allclose(
            truth.images[1, 2],
            np.convolve(scene.dry[1], scene.rirs[1][2]),
            atol=1e-12,
        )

    def test_mixture_additivity_carries_over_to_the_stft_domain(self):
        truth = SceneTruthFactory(scene__noisy=True)
        cfg = StftConfig()
        mixture = stft(truth.mixtures, cfg).data
        parts = stft(truth.images, cfg).data.sum(axis=0)
        parts += stft(truth.noise, cfg).data
        np.testing.assert_allclose(mixture, parts, atol=1e-10)

    def test_rendering_is_deterministic(self):
        scene = SimSceneFactory(noisy=True)
        np.testing.assert_array_equal(
            render(scene).mixtures, render(scene).mixtures
        )

    def test_reference_images_are_the_mic_1_images(self):
        truth = SceneTruthFactory()
        np.testing.assert_array_equal(
            truth.reference_images, truth.images[:, 0]
        )


class SimSceneTest(SimpleTestCase):
    def test_empty_dry_sources_are_rejected(self):
        with self.assertRaises(DegenerateInputError):
            SimScene(dry=np.zeros((1, 0)), rirs=((np.ones(1),),))

    def test_zero_length_rirs_are_rejected(self):
        with self.assertRaises(DegenerateInputError):
            SimScene(dry=np.ones((1, 10)), rirs=((np.zeros(0),),))

    def test_each_speaker_needs_one_rir_per_mic(self):
        with self.assertRaises(GeometryError):
            SimScene(
                dry=np.ones((2, 10)),
                rirs=((np.ones(1), np.ones(1)), (np.ones(1),)),
            )

    def test_direct_path_must_sit_within_max_delay(self):
        late = np.zeros(20)
        late[15] = 1.0
        with self.assertRaises(ConfigurationError):
            SimScene(dry=np.ones((1, 10)), rirs=((late,),), max_delay=4)


class RandomSceneTest(SimpleTestCase):
    def test_zero_decay_and_one_tap_give_an_anechoic_scene(self):
        scene = random_scene(2, 3, seed=1, rir_len=1, decay_ms=0, max_delay=0)
        for per_mic in scene.rirs:
            for rir in per_mic:
                np.testing.assert_array_equal(rir, [1.0])

    def test_same_seed_gives_identical_scenes(self):
        a = random_scene(2, 4, seed=11, rir_len=64, decay_ms=5, max_delay=4)
        b = random_scene(2, 4, seed=11, rir_len=64, decay_ms=5, max_delay=4)
        np.testing.assert_array_equal(a.dry, b.dry)
        for rirs_a, rirs_b in zip(a.rirs, b.rirs):
            for rir_a, rir_b in zip(rirs_a, rirs_b):
                np.testing.assert_array_equal(rir_a, rir_b)

    def test_different_seeds_give_different_sources(self):
        a = random_scene(1, 1, seed=1, rir_len=1, decay_ms=0, max_delay=0)
        b = random_scene(1, 1, seed=2, rir_len=1, decay_ms=0, max_delay=0)
        assert not np.allclose(a.dry, b.dry)

    def test_envelope_drops_60_db_after_three_decay_spans(self):
        envelope = rir_envelope(3000, 0, decay_ms=100, sample_rate=8000)
        drop = 20 * np.log10(envelope[2400] / envelope[0])
        assert abs(drop + 60) < 1e-9

    def test_direct_path_delays_stay_within_max_delay(self):
        scene = random_scene(
            3, 4, seed=5, rir_len=100, decay_ms=5, max_delay=7
        )
        for per_mic in scene.rirs:
            for rir in per_mic:
                assert rir[np.argmax(rir != 0)] == 1.0
                assert np.argmax(rir != 0) <= 7

    def test_reference_mic_gets_the_smallest_delay(self):
        scene = SimSceneFactory(n_mics=6, max_delay=30, reference_closest=True)
        for per_mic in scene.rirs:
            onsets = [np.argmax(rir != 0) for rir in per_mic]
            assert onsets[0] == min(onsets)

    def test_tap_grid_keeps_only_grid_taps(self):
        scene = SimSceneFactory(hop_aligned=True)
        for per_mic in scene.rirs:
            for rir in per_mic:
                assert not np.any(rir[np.arange(len(rir)) % 64 != 0])

    def test_direct_reference_leaves_a_single_tap_at_mic_1(self):
        scene = SimSceneFactory(hop_aligned=True)
        for per_mic in scene.rirs:
            assert np.count_nonzero(per_mic[0]) == 1

    def test_synthetic_sources_are_non_stationary(self):
        scene = SimSceneFactory(n_samples=8000)
        frames = scene.dry[0].reshape(-1, 400)
        levels = 10 * np.log10(np.mean(frames**2, axis=1))
        assert levels.max() - levels.min() > 10

    def test_user_supplied_sources_are_used_verbatim(self):
        dry = np.random.default_rng(0).standard_normal((2, 500))
        scene = random_scene(2, 3, 0, 16, 2.0, 2, dry=dry)
        np.testing.assert_array_equal(scene.dry, dry)

    def test_user_supplied_sources_must_match_the_speaker_count(self):
        with self.assertRaises(GeometryError):
            random_scene(3, 3, 0, 16, 2.0, 2, dry=np.ones((2, 500)))

    def test_rir_len_must_be_positive(self):
        with self.assertRaises(ConfigurationError):
            random_scene(1, 1, 0, rir_len=0, decay_ms=1, max_delay=0)

    def test_at_least_one_mic_is_required(self):
        with self.assertRaises(ConfigurationError):
            random_scene(2, 0, 0, rir_len=4, decay_ms=1, max_delay=0)
