import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from fcp.filters import FcpConfig, RelativeFilterBank, estimate_filterbank
from losses.loss import (
    LossBreakdown,
    LossVariant,
    LossWeights,
    combined_loss,
    estimate_variant_filters,
    isms_loss,
    isms_per_mic,
    mc_loss,
    mc_loss_all_filtered,
    mc_loss_ref_unfiltered,
    tf_abs_loss,
)
from mcsep_project.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    GeometryError,
)
from signal_core.stft import stft
from simkit.factories import SceneTruthFactory

SHORT_FCP = FcpConfig(past_taps=3, future_taps=0)


def spectra(truth):
    """Mixtures (P, T, F), images (C, P, T, F) and mic-1 images (C, T, F)."""

    mixtures = stft(truth.mixtures).data
    images = stft(truth.images).data
    return mixtures, images, images[:, 0]


def swap_bands(images, rng):
    """Exchange speakers 1 and 2 in a random half of the frequency bins."""

    n_freqs = images.shape[-1]
    bins = rng.choice(n_freqs, size=n_freqs // 2, replace=False)
    swapped = images.copy()
    swapped[..., bins] = images[::-1][..., bins]
    return swapped


class LossVariantTest(SimpleTestCase):
    def test_reference_unfiltered_defaults_to_one_future_tap(self):
        cfg = LossVariant.REFERENCE_UNFILTERED.default_fcp
        assert (cfg.past_taps, cfg.future_taps) == (19, 1)

    def test_all_filtered_defaults_to_causal_filters(self):
        cfg = LossVariant.ALL_FILTERED.default_fcp
        assert (cfg.past_taps, cfg.future_taps) == (19, 0)

    def test_variants_parse_from_their_cli_names(self):
        assert LossVariant("all-filtered") is LossVariant.ALL_FILTERED
        variant = LossVariant("ref-unfiltered")
        assert variant is LossVariant.REFERENCE_UNFILTERED


class LossWeightsTest(SimpleTestCase):
    def test_default_weights(self):
        weights = LossWeights()
        assert weights.gamma == settings.LOSS_WEIGHTS["gamma"]
        np.testing.assert_array_equal(weights.alpha_for(4), np.ones(4))

    def test_negative_gamma_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            LossWeights(gamma=-0.1)

    def test_all_zero_alpha_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            LossWeights(alpha=(0.0, 0.0))

    def test_alpha_must_match_the_mic_count(self):
        with self.assertRaises(GeometryError):
            LossWeights(alpha=(1.0, 2.0)).alpha_for(3)


class LossBreakdownTest(SimpleTestCase):
    def test_combined_is_mc_plus_gamma_isms(self):
        breakdown = LossBreakdown(
            mc_per_mic=np.array([0.1, 0.2, 0.3]),
            isms_per_mic=np.array([1.0, 1.5, 2.0]),
            gamma=1.0,
        )
        assert abs(breakdown.combined - (0.6 + 4.5)) < 1e-12

    def test_missing_isms_counts_as_zero(self):
        breakdown = LossBreakdown(mc_per_mic=np.array([0.5, 0.25]), gamma=2)
        assert breakdown.isms_total == 0
        assert breakdown.combined == breakdown.mc_total == 0.75


class TfAbsLossTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        rng = np.random.default_rng(0)
        cls.y = rng.standard_normal((40, 9)) + 1j * rng.standard_normal(
            (40, 9)
        )

    def test_identical_estimate_has_zero_loss(self):
        assert tf_abs_loss(self.y, self.y.copy()) == 0.0

    def test_single_bin_matches_hand_arithmetic(self):
        y = np.array([[3 + 4j]])
        assert abs(tf_abs_loss(y, np.zeros_like(y)) - 2.4) < 1e-12

    def test_zero_estimate_is_bounded_by_the_per_bin_extremes(self):
        loss = tf_abs_loss(self.y, np.zeros_like(self.y))
        direct = np.sum(
            np.abs(self.y.real) + np.abs(self.y.imag) + np.abs(self.y)
        ) / np.sum(np.abs(self.y))
        assert abs(loss - direct) < 1e-12
        assert 2.0 <= loss <= 1 + np.sqrt(2)

    def test_loss_is_positive_for_any_other_estimate(self):
        other = self.y.copy()
        other[3, 4] += 1e-3
        assert tf_abs_loss(self.y, other) > 0

    def test_all_zero_target_is_degenerate(self):
        with self.assertRaises(DegenerateInputError):
            tf_abs_loss(np.zeros((4, 3)), np.ones((4, 3)))

    def test_mismatched_shapes_are_rejected(self):
        with self.assertRaises(GeometryError):
            tf_abs_loss(self.y, self.y[:-1])


class ReferenceUnfilteredLossTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.truth = SceneTruthFactory(scene__hop_aligned=True, scene__seed=11)
        cls.mixtures, cls.images, cls.oracle = spectra(cls.truth)

    def bank(self, zhats):
        return estimate_variant_filters(
            self.mixtures, zhats, LossVariant.REFERENCE_UNFILTERED, SHORT_FCP
        )

    def test_single_speaker_mixture_estimate_zeroes_the_mic_1_term(self):
        zhats = self.mixtures[:1]
        breakdown = mc_loss_ref_unfiltered(
            self.mixtures, zhats, self.bank(zhats)
        )
        assert breakdown.mc_per_mic[0] == 0.0
        assert np.all(breakdown.mc_per_mic[1:] > 0)

    def test_oracle_estimates_beat_swapped_and_merged_ones(self):
        oracle = mc_loss_ref_unfiltered(
            self.mixtures, self.oracle, self.bank(self.oracle)
        ).mc_total
        swapped = swap_bands(self.oracle, np.random.default_rng(1))
        merged = np.stack([self.mixtures[0], np.zeros_like(self.mixtures[0])])
        for zhats in (merged, self.mixtures[:1].repeat(2, axis=0) / 2):
            loss = mc_loss_ref_unfiltered(
                self.mixtures, zhats, self.bank(zhats)
            ).mc_total
            assert oracle < loss
        # frequency-wise swaps keep per-bin filters, so MC cannot see them
        loss = mc_loss_ref_unfiltered(
            self.mixtures, swapped, self.bank(swapped)
        ).mc_total
        assert abs(loss - oracle) < 1e-9 * oracle

    def test_doubling_alpha_doubles_that_mic_only(self):
        bank = self.bank(self.oracle)
        base = mc_loss_ref_unfiltered(self.mixtures, self.oracle, bank)
        doubled = mc_loss_ref_unfiltered(
            self.mixtures,
            self.oracle,
            bank,
            LossWeights(alpha=(1.0, 2.0, 1.0)),
        )
        np.testing.assert_allclose(
            doubled.mc_per_mic, base.mc_per_mic * [1, 2, 1], rtol=1e-12
        )

    def test_bank_without_the_reference_mic_is_accepted(self):
        bank = self.bank(self.oracle)
        short = RelativeFilterBank(filters=bank.filters[1:], config=SHORT_FCP)
        full = mc_loss_ref_unfiltered(self.mixtures, self.oracle, bank)
        partial = mc_loss_ref_unfiltered(self.mixtures, self.oracle, short)
        np.testing.assert_allclose(partial.mc_per_mic, full.mc_per_mic)

    def test_mic_1_filters_of_the_bank_are_ignored(self):
        bank = estimate_filterbank(self.oracle, self.mixtures, SHORT_FCP)
        breakdown = mc_loss_ref_unfiltered(self.mixtures, self.oracle, bank)
        summed = self.oracle.sum(axis=0)
        expected = tf_abs_loss(self.mixtures[0], summed)
        assert abs(breakdown.mc_per_mic[0] - expected) < 1e-12

    def test_bank_of_the_wrong_size_is_rejected(self):
        bank = RelativeFilterBank.identity(5, 2, 129, SHORT_FCP)
        with self.assertRaises(GeometryError):
            mc_loss_ref_unfiltered(self.mixtures, self.oracle, bank)

    def test_estimates_must_match_the_mixture_frames(self):
        bank = self.bank(self.oracle)
        with self.assertRaises(GeometryError):
            mc_loss_ref_unfiltered(self.mixtures, self.oracle[:, 1:], bank)


class AllFilteredLossTest(SimpleTestCase):
    def test_single_speaker_oracle_estimate_has_near_zero_loss(self):
        truth = SceneTruthFactory(
            scene__hop_aligned=True, scene__n_speakers=1, scene__seed=4
        )
        mixtures, _, oracle = spectra(truth)
        breakdown, bank = mc_loss_all_filtered(mixtures, oracle, SHORT_FCP)
        assert breakdown.mc_total < 1e-3
        assert bank.n_mics == truth.n_mics

    def test_returned_bank_reproduces_the_loss(self):
        truth = SceneTruthFactory(scene__hop_aligned=True, scene__seed=5)
        mixtures, _, oracle = spectra(truth)
        breakdown, bank = mc_loss_all_filtered(mixtures, oracle, SHORT_FCP)
        again = mc_loss(
            mixtures, oracle, LossVariant.ALL_FILTERED, filterbank=bank
        )
        assert again.mc_total == breakdown.mc_total

    def test_loss_is_symmetric_in_speaker_labels(self):
        truth = SceneTruthFactory(scene__hop_aligned=True, scene__seed=6)
        mixtures, _, oracle = spectra(truth)
        forward, _ = mc_loss_all_filtered(mixtures, oracle, SHORT_FCP)
        backward, _ = mc_loss_all_filtered(mixtures, oracle[::-1], SHORT_FCP)
        assert abs(forward.mc_total - backward.mc_total) < 1e-12

    def test_mixture_copies_lose_to_oracle_estimates(self):
        wins = 0
        for seed in range(10):
            truth = SceneTruthFactory(

                scene__hop_aligned=True, scene__seed=seed

            )
            mixtures, _, oracle = spectra(truth)
            copies = np.stack([mixtures[0], mixtures[0]]) / 2
            good, _ = mc_loss_all_filtered(mixtures, oracle, SHORT_FCP)
            bad, _ = mc_loss_all_filtered(mixtures, copies, SHORT_FCP)
            wins += bad.mc_total > good.mc_total
        assert wins >= 9


class IsmsLossTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.truth = SceneTruthFactory(scene__seed=21)
        cls.mixtures, cls.images, _ = spectra(cls.truth)
        cls.fcp_images = cls.images.transpose(1, 0, 2, 3)

    def test_mixture_as_the_only_estimate_gives_one_per_mic(self):
        per_mic = isms_per_mic(self.mixtures[:, None], self.mixtures)
        np.testing.assert_allclose(per_mic, np.ones(self.truth.n_mics))

    def test_flat_frames_scatter_nothing(self):
        flat = np.ones_like(self.fcp_images)
        assert isms_loss(flat, self.mixtures) == 0.0

    def test_invariant_to_a_common_scale(self):
        base = isms_loss(self.fcp_images, self.mixtures)
        scaled = isms_loss(3.0 * self.fcp_images, 3.0 * self.mixtures)
        assert abs(scaled - base) < 1e-9 * base

    def test_alpha_weights_each_mic(self):
        weights = LossWeights(alpha=(0.0, 1.0, 0.5))
        base = isms_per_mic(self.fcp_images, self.mixtures)
        weighted = isms_per_mic(self.fcp_images, self.mixtures, weights)
        np.testing.assert_allclose(weighted, base * [0.0, 1.0, 0.5])

    def test_frequency_swaps_increase_scattering(self):
        rng = np.random.default_rng(0)
        worse = 0
        for seed in range(10):
            truth = SceneTruthFactory(scene__seed=100 + seed)
            mixtures, images, _ = spectra(truth)
            fcp_images = images.transpose(1, 0, 2, 3)
            swapped = swap_bands(images, rng).transpose(1, 0, 2, 3)
            worse += isms_loss(swapped, mixtures) > isms_loss(
                fcp_images, mixtures
            )
        assert worse >= 9

    def test_constant_mixture_is_degenerate(self):
        mixtures = np.ones((1, 10, 5), dtype=complex)
        with self.assertRaises(DegenerateInputError):
            isms_loss(np.ones((1, 2, 10, 5)), mixtures)

    def test_images_must_be_four_dimensional(self):
        with self.assertRaises(GeometryError):
            isms_loss(self.mixtures, self.mixtures)


class CombinedLossTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.truth = SceneTruthFactory(scene__hop_aligned=True, scene__seed=31)
        cls.mixtures, _, cls.oracle = spectra(cls.truth)

    def test_zero_gamma_leaves_only_mixture_consistency(self):
        breakdown = combined_loss(
            self.mixtures,
            self.oracle,
            fcp_cfg=SHORT_FCP,
            weights=LossWeights(gamma=0.0),
        )
        assert breakdown.isms_total > 0
        assert breakdown.combined == breakdown.mc_total

    def test_combined_equals_the_separately_computed_parts(self):
        weights = LossWeights(gamma=1.0)
        breakdown = combined_loss(
            self.mixtures, self.oracle, fcp_cfg=SHORT_FCP, weights=weights
        )
        mc = mc_loss(self.mixtures, self.oracle, fcp_cfg=SHORT_FCP)
        images = mc.filters.images(self.oracle)
        isms = isms_loss(images, self.mixtures, weights)
        assert abs(breakdown.combined - (mc.mc_total + isms)) < 1e-12

    def test_reference_image_of_the_unfiltered_variant_is_the_estimate(self):
        breakdown = combined_loss(
            self.mixtures, self.oracle, fcp_cfg=SHORT_FCP
        )
        images = breakdown.filters.images(self.oracle)
        np.testing.assert_allclose(images[0], self.oracle)

    def test_oracle_ranks_below_frequency_permuted_estimates(self):
        rng = np.random.default_rng(3)
        ranked = 0
        for seed in range(5):
            truth = SceneTruthFactory(

                scene__hop_aligned=True, scene__seed=seed

            )
            mixtures, _, oracle = spectra(truth)
            swapped = swap_bands(oracle, rng)
            ranked += all(
                combined_loss(
                    mixtures,
                    oracle,
                    variant,
                    SHORT_FCP,
                    LossWeights(gamma=gamma),
                ).combined
                < combined_loss(
                    mixtures,
                    swapped,
                    variant,
                    SHORT_FCP,
                    LossWeights(gamma=gamma),
                ).combined
                for gamma in settings.GAMMA_SWEEP
                for variant in LossVariant
            )
        assert ranked >= 4
