import itertools

import numpy as np
from align.speakers import pit_speaker_permutation
from django.test import SimpleTestCase
from mcsep_project.exceptions import ConfigurationError, GeometryError
from metrics.measures import CEILING, si_sdr, snr


class PitSpeakerPermutationTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.rng = np.random.default_rng(0)
        cls.references = cls.rng.standard_normal((4, 800))

    def test_shuffled_references_are_put_back(self):
        order = [2, 0, 3, 1]
        perm, values = pit_speaker_permutation(
            self.references[order], self.references
        )
        np.testing.assert_array_equal(
            np.asarray(order)[list(perm)], [0, 1, 2, 3]
        )
        np.testing.assert_array_equal(values, CEILING)

    def test_crossed_estimates_are_swapped(self):
        refs = self.references[:2]
        estimates = np.stack(
            [refs[1] + 0.1 * refs[0], refs[0] + 0.1 * refs[1]]
        )
        perm, _ = pit_speaker_permutation(estimates, refs)
        assert perm == (1, 0)

    def test_result_beats_every_other_permutation(self):
        for n_speakers in (2, 3, 4):
            refs = self.references[:n_speakers]
            estimates = refs + self.rng.standard_normal(refs.shape)
            estimates = estimates[self.rng.permutation(n_speakers)]
            perm, values = pit_speaker_permutation(estimates, refs)
            for other in itertools.permutations(range(n_speakers)):
                mean = np.mean(
                    [si_sdr(estimates[o], r) for o, r in zip(other, refs)]
                )
                assert np.mean(values) >= mean

    def test_other_metrics_can_be_maximised(self):
        refs = self.references[:2]
        perm, values = pit_speaker_permutation(refs[::-1], refs, metric=snr)
        assert perm == (1, 0)
        np.testing.assert_array_equal(values, CEILING)

    def test_length_mismatch_is_rejected(self):
        with self.assertRaises(GeometryError):
            pit_speaker_permutation(self.references[:, 1:], self.references)

    def test_more_than_eight_speakers_are_rejected(self):
        refs = self.rng.standard_normal((9, 50))
        with self.assertRaises(ConfigurationError):
            pit_speaker_permutation(refs, refs)
