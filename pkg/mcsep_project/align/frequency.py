"""Repair of per-frequency speaker permutations.

Labels are 0-based. A permutation row `perm[f]` maps output label c to
input label perm[f, c]: aligned[c, :, f] = estimates[perm[f, c], :, f].
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from mcsep_project.exceptions import ConfigurationError, GeometryError
from mcsep_project.tables import write_csv

logger = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_SWEEPS = "max_sweeps"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class FrequencyPermutation:
    perm: np.ndarray
    status: str = CONVERGED
    sweeps: int = 0

    def __post_init__(self):
        if self.perm.ndim != 2:
            raise GeometryError("permutations must be shaped (F, C)")
        expected = np.arange(self.perm.shape[1])
        if not np.all(np.sort(self.perm, axis=1) == expected):
            raise GeometryError("every row must be a permutation of labels")

    @classmethod
    def identity(cls, n_freqs, n_speakers, **kwargs):
        perm = np.tile(np.arange(n_speakers), (n_freqs, 1))
        return cls(perm=perm, **kwargs)

    @property
    def n_freqs(self) -> int:
        return self.perm.shape[0]

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.perm == np.arange(self.perm.shape[1])))

    def changed_bins(self) -> np.ndarray:
        return np.flatnonzero(
            np.any(self.perm != np.arange(self.perm.shape[1]), axis=1)
        )

    def apply(self, estimates) -> np.ndarray:
        return apply_permutation(estimates, self)

    def rows(self):
        for f, row in enumerate(self.perm):
            yield f, "-".join(str(label) for label in row)


def apply_permutation(estimates, permutation: FrequencyPermutation):
    """Relabel (C, T, F) estimates bin by bin."""

    estimates = np.asarray(estimates)
    perm = permutation.perm
    if estimates.ndim != 3 or perm.shape != (
        estimates.shape[-1],
        estimates.shape[0],
    ):
        raise GeometryError(
            f"permutation {perm.shape} does not fit estimates "
            f"{estimates.shape}"
        )
    bins = np.arange(estimates.shape[-1])
    return estimates[perm.T, :, bins[None, :]].transpose(0, 2, 1)


def write_permutation_csv(permutation: FrequencyPermutation, path):
    return write_csv(path, ["f", "perm"], permutation.rows())


def _label_permutations(n_speakers):
    if n_speakers > settings.ALIGN["max_speakers"]:
        raise ConfigurationError(
            f"{n_speakers} speakers exceed the exhaustive search limit of "
            f"{settings.ALIGN['max_speakers']}"
        )
    return np.array(list(itertools.permutations(range(n_speakers))))


def oracle_freq_align(estimates, references):
    """Per bin, the labelling with the smallest squared error against the
    references. Ties keep the earlier permutation, identity first."""

    estimates = np.asarray(estimates)
    references = np.asarray(references)
    if estimates.shape != references.shape or estimates.ndim != 3:
        raise GeometryError(
            f"estimates {estimates.shape} and references "
            f"{references.shape} must match as (C, T, F)"
        )
    n_speakers = estimates.shape[0]
    candidates = _label_permutations(n_speakers)

    # distance[c_ref, c_est, f]
    distance = np.sum(
        np.abs(references[:, None] - estimates[None]) ** 2, axis=2
    )
    labels = np.arange(n_speakers)
    cost = distance[labels, candidates].sum(axis=1)
    best = candidates[np.argmin(cost, axis=0)]

    permutation = FrequencyPermutation(perm=best)
    logger.info(
        "oracle alignment relabelled %d of %d bins",
        permutation.changed_bins().size,
        permutation.n_freqs,
    )
    return permutation.apply(estimates), permutation


def _standardize(envelopes):
    """Zero-mean unit-variance rows over frames; constant rows become 0."""

    centred = envelopes - envelopes.mean(axis=-1, keepdims=True)
    scale = np.sqrt(np.mean(centred**2, axis=-1, keepdims=True))
    return np.divide(
        centred, scale, out=np.zeros_like(centred), where=scale > 0
    )


class _CorrelationAligner:
    """State of the greedy correlation alignment.

    `envelopes[c, f]` is the standardized log-magnitude envelope of input
    label c in bin f; `perm` the current labelling.
    """

    def __init__(self, envelopes, candidates):
        self.envelopes = envelopes
        self.candidates = candidates
        n_speakers, n_freqs, _ = envelopes.shape
        self.perm = np.tile(np.arange(n_speakers), (n_freqs, 1))

    def aligned(self, f):
        return self.envelopes[self.perm[f], f]

    def best(self, f, centroids):
        """Permutation of bin f most correlated with the centroids."""

        reference = _standardize(centroids)
        # corr[c_in, c_out] between input label and centroid
        corr = self.envelopes[:, f] @ reference.T / reference.shape[-1]
        labels = np.arange(len(reference))
        scores = corr[self.candidates, labels].sum(axis=1)
        return self.candidates[np.argmax(scores)]

    def incremental_pass(self, seed_bins):
        total = sum(self.aligned(f) for f in range(seed_bins))
        for f in range(seed_bins, self.perm.shape[0]):
            self.perm[f] = self.best(f, total)
            total = total + self.aligned(f)

    def leave_one_out_sweep(self, update=True):
        total = sum(self.aligned(f) for f in range(self.perm.shape[0]))
        changed = 0
        for f in range(self.perm.shape[0]):
            own = self.aligned(f)
            choice = self.best(f, total - own)
            if np.array_equal(choice, self.perm[f]):
                continue
            changed += 1
            if update:
                self.perm[f] = choice
                total = total - own + self.aligned(f)
        return changed


def corr_freq_align(
    estimates,
    max_sweeps=settings.ALIGN["max_sweeps"],
    seed_bins=settings.ALIGN["seed_bins"],
    log_floor=settings.LOG_FLOOR,
):
    """Greedy cross-frequency envelope alignment without references.

    Per bin, the permutation maximising the summed Pearson correlation
    between frame-wise log-magnitude envelopes and per-speaker centroids
    (mean standardized envelope of the other aligned bins) is chosen. An
    input that is already a fixed point is returned unchanged; otherwise
    an ascending pass grows the centroids from the lowest `seed_bins`
    bins, then leave-one-out sweeps run until nothing changes or
    `max_sweeps` is reached.
    """

    estimates = np.asarray(estimates)
    if estimates.ndim != 3:
        raise GeometryError("estimates must be shaped (C, T, F)")
    n_speakers, _, n_freqs = estimates.shape
    if n_speakers < 2:
        raise GeometryError("alignment needs at least two speakers")
    if max_sweeps < 1 or seed_bins < 1:
        raise ConfigurationError("max_sweeps and seed_bins must be positive")
    candidates = _label_permutations(n_speakers)

    magnitude = np.maximum(np.abs(estimates), log_floor)
    envelopes = _standardize(np.log(magnitude).transpose(0, 2, 1))
    if not np.any(envelopes):
        logger.warning("all envelopes are constant; keeping the labels")
        return estimates.copy(), FrequencyPermutation.identity(
            n_freqs, n_speakers, status=DEGENERATE
        )

    aligner = _CorrelationAligner(envelopes, candidates)
    if aligner.leave_one_out_sweep(update=False) == 0:
        permutation = FrequencyPermutation(perm=aligner.perm)
        return estimates.copy(), permutation

    aligner.incremental_pass(min(seed_bins, n_freqs))
    status = MAX_SWEEPS
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        changed = aligner.leave_one_out_sweep()
        logger.debug("alignment sweep %d changed %d bins", sweeps, changed)
        if changed == 0:
            status = CONVERGED
            break
    if status == MAX_SWEEPS:
        logger.warning(
            "correlation alignment stopped after %d sweeps", max_sweeps
        )

    permutation = FrequencyPermutation(
        perm=aligner.perm.copy(), status=status, sweeps=sweeps
    )
    return permutation.apply(estimates), permutation
