import logging
from dataclasses import dataclass

import numpy as np
from align.speakers import pit_speaker_permutation
from mcsep_project.exceptions import GeometryError
from mcsep_project.tables import write_csv
from metrics.measures import si_sdr, snr

logger = logging.getLogger(__name__)

REPORT_HEADER = ["speaker", "si_sdr", "snr", "si_sdr_delta", "snr_delta"]


@dataclass(frozen=True)
class MetricReport:
    """Per-reference metrics after the best speaker assignment.

    `permutation[c]` is the estimate matched to reference c. Deltas are
    improvements over the reference-mic mixture.
    """

    si_sdr: np.ndarray
    snr: np.ndarray
    mixture_si_sdr: np.ndarray
    mixture_snr: np.ndarray
    permutation: tuple

    @property
    def si_sdr_delta(self) -> np.ndarray:
        return self.si_sdr - self.mixture_si_sdr

    @property
    def snr_delta(self) -> np.ndarray:
        return self.snr - self.mixture_snr

    @property
    def mean_si_sdr_delta(self) -> float:
        return float(np.mean(self.si_sdr_delta))

    def rows(self):
        for c in range(len(self.si_sdr)):
            yield (
                c + 1,
                self.si_sdr[c],
                self.snr[c],
                self.si_sdr_delta[c],
                self.snr_delta[c],
            )


def report(estimates, references, mixture) -> MetricReport:
    """Score (C, N) estimates against (C, N) references, with the mixture
    at the reference mic as the baseline."""

    estimates = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    references = np.atleast_2d(np.asarray(references, dtype=np.float64))
    mixture = np.asarray(mixture, dtype=np.float64)
    if mixture.shape != references.shape[1:]:
        raise GeometryError(
            f"mixture {mixture.shape} does not match references "
            f"{references.shape}"
        )

    permutation, si_values = pit_speaker_permutation(estimates, references)
    matched = estimates[list(permutation)]
    result = MetricReport(
        si_sdr=np.asarray(si_values),
        snr=np.array([snr(e, r) for e, r in zip(matched, references)]),
        mixture_si_sdr=np.array([si_sdr(mixture, r) for r in references]),
        mixture_snr=np.array([snr(mixture, r) for r in references]),
        permutation=tuple(int(c) for c in permutation),
    )
    logger.info(
        "SI-SDR %s dB, improvement %.2f dB",
        np.round(result.si_sdr, 2).tolist(),
        result.mean_si_sdr_delta,
    )
    return result


def write_report_csv(result: MetricReport, path):
    return write_csv(path, REPORT_HEADER, result.rows())
