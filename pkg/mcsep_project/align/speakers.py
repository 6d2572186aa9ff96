import itertools
import logging

import numpy as np
from django.conf import settings
from mcsep_project.exceptions import ConfigurationError, GeometryError
from metrics.measures import si_sdr

logger = logging.getLogger(__name__)


def pit_speaker_permutation(estimates, references, metric=si_sdr):
    """Exhaustive utterance-level label assignment.

    Returns `perm` with estimate perm[c] assigned to reference c, chosen
    to maximise the mean metric, and the per-reference metric values.
    Ties keep the earlier permutation, identity first.
    """

    estimates = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    references = np.atleast_2d(np.asarray(references, dtype=np.float64))
    if estimates.shape != references.shape:
        raise GeometryError(
            f"estimates {estimates.shape} and references "
            f"{references.shape} differ"
        )
    n_speakers = references.shape[0]
    if n_speakers > settings.ALIGN["max_speakers"]:
        raise ConfigurationError(
            f"{n_speakers} speakers exceed the exhaustive search limit of "
            f"{settings.ALIGN['max_speakers']}"
        )

    # scores[c_ref, c_est]
    scores = np.array(
        [[metric(est, ref) for est in estimates] for ref in references]
    )
    labels = np.arange(n_speakers)
    best, best_mean = None, -np.inf
    for perm in itertools.permutations(range(n_speakers)):
        mean = scores[labels, list(perm)].mean()
        if mean > best_mean:
            best, best_mean = perm, mean
    logger.debug("speaker permutation %s, mean metric %.3f", best, best_mean)
    return best, scores[labels, list(best)]
