"""Coordinate minimisers of the blind-deconvolution objective

    J = sum_p sum_tf |Y_p - sum_c conj(g_pc) . X(c, t - lags)|^2
        + sum_f rho_g(f) sum_{p>1} |g_p(f)|^2 + rho_x sum |X|^2

where mic 1 always uses the identity filter, so its term compares Y_1
with the plain sum of the estimates. Frequencies are independent.
"""

import logging

import numpy as np
import scipy.linalg
from fcp.filters import (
    FcpConfig,
    RelativeFilterBank,
    solve_hermitian,
    stack_frames,
)
from mcsep_project.exceptions import GeometryError, NumericalError

logger = logging.getLogger(__name__)


def filter_ridge(mixtures, cfg: FcpConfig) -> np.ndarray:
    """Per-frequency filter ridge: cfg.ridge times the mean mic energy."""

    power = np.sum(np.abs(mixtures) ** 2, axis=1)
    return cfg.ridge * power.mean(axis=0)


def objective(
    estimates, bank: RelativeFilterBank, mixtures, ridge, source_ridge
):
    """Returns (objective with ridge penalties, data term alone)."""

    images = bank.images(estimates)
    residual = mixtures - images.sum(axis=1)
    data = float(np.sum(np.abs(residual) ** 2))
    filter_energy = np.sum(np.abs(bank.filters[1:]) ** 2, axis=(0, 1, 3))
    penalty = np.dot(ridge, filter_energy) + source_ridge * np.sum(
        np.abs(estimates) ** 2
    )
    return data + float(penalty), data


def filter_step(
    estimates, mixtures, cfg: FcpConfig, ridge=None, weights=None
) -> RelativeFilterBank:
    """Joint least-squares filters of all speakers for every mic p > 1.

    Per (p, f) the C*K taps are solved together. Without `weights` every
    T-F unit counts equally and the result is the exact minimiser of the
    objective in g; with FCP weights it is the weighted variant.
    """

    estimates = np.asarray(estimates)
    mixtures = np.asarray(mixtures)
    n_speakers, n_frames, n_freqs = estimates.shape
    n_mics = mixtures.shape[0]
    if mixtures.shape[1:] != (n_frames, n_freqs):
        raise GeometryError(
            f"estimates {estimates.shape} and mixtures {mixtures.shape} "
            "differ in (T, F)"
        )
    if ridge is None:
        ridge = filter_ridge(mixtures, cfg)
    bank = RelativeFilterBank.identity(n_mics, n_speakers, n_freqs, cfg)
    if n_mics == 1:
        return bank

    size = n_speakers * cfg.n_taps
    # (F, T, C*K), column c*K + k
    frames = stack_frames(estimates, cfg).transpose(2, 1, 0, 3)
    frames = frames.reshape(n_freqs, n_frames, size)
    gram = None
    filters = bank.filters.copy()
    for p in range(1, n_mics):
        weighted = np.swapaxes(frames, 1, 2)
        if weights is not None:
            weighted = weighted / weights[p].T[:, None, :]
        if gram is None or weights is not None:
            gram = weighted @ frames.conj()
        rhs = (weighted @ mixtures[p].T.conj()[..., None])[..., 0]
        solution = solve_hermitian(gram, rhs, ridge)
        filters[p] = solution.reshape(
            n_freqs, n_speakers, cfg.n_taps
        ).transpose(1, 0, 2)
    return RelativeFilterBank(filters=filters, config=cfg)


def _advance(mixtures, lags):
    """(P, T, F, K) stack with entry k = Y(t + lags[k]), zero outside."""

    n_frames = mixtures.shape[1]
    out = np.zeros(mixtures.shape + (len(lags),), dtype=complex)
    for k, lag in enumerate(lags):
        if abs(lag) >= n_frames:
            continue
        if lag >= 0:
            out[:, : n_frames - lag, :, k] = mixtures[:, lag:]
        else:
            out[:, -lag:, :, k] = mixtures[:, : n_frames + lag]
    return out


def source_rhs(bank: RelativeFilterBank, mixtures) -> np.ndarray:
    """Right-hand side sum_p sum_k g_pck Y_p(t + lag_k), shaped (F, T*C)
    with interleaved index t*C + c."""

    advanced = _advance(mixtures, bank.config.lags)
    rhs = np.einsum("pcfk,ptfk->ftc", bank.filters, advanced)
    return rhs.reshape(rhs.shape[0], -1)


def banded_normal_matrix(bank: RelativeFilterBank, n_frames, source_ridge):
    """Hermitian normal matrices of the source step in upper banded
    storage: (F, u + 1, T*C) with u = K*C - 1.

    Entry N[(s, c), (s + d, c')] sums g_pc[l] conj(g_pc'[l - d]) over mics
    and lags l with s + l inside the signal.
    """

    cfg = bank.config
    filters = bank.filters
    n_speakers, n_freqs, n_taps = bank.n_speakers, bank.n_freqs, cfg.n_taps
    upper = n_taps * n_speakers - 1
    lags = cfg.lags
    frames = np.arange(n_frames)
    # mask[k, s]: frame s + lag_k exists
    mask = (frames[None] + lags[:, None] >= 0) & (
        frames[None] + lags[:, None] < n_frames
    )

    ab = np.zeros((n_freqs, upper + 1, n_frames * n_speakers), dtype=complex)
    for d in range(min(n_taps, n_frames)):
        for c in range(n_speakers):
            for c2 in range(n_speakers):
                offset = d * n_speakers + c2 - c
                if offset < 0:
                    continue
                lead = filters[:, c, :, d:]
                lag = filters[:, c2, :, : n_taps - d].conj()
                coef = np.sum(lead * lag, axis=0)
                values = coef @ mask[d:, : n_frames - d]
                columns = (frames[: n_frames - d] + d) * n_speakers + c2
                ab[:, upper - offset, columns] = values
    ab[:, upper] += source_ridge
    return ab


def _dense_from_banded(ab):
    upper, size = ab.shape[0] - 1, ab.shape[1]
    dense = np.zeros((size, size), dtype=complex)
    for offset in range(upper + 1):
        if offset >= size:
            break
        band = ab[upper - offset, offset:]
        dense += np.diag(band, k=offset)
        if offset:
            dense += np.diag(band.conj(), k=-offset)
    return dense


def source_step(bank: RelativeFilterBank, mixtures, source_ridge):
    """Least-squares estimates at mic 1 for fixed filters.

    Solves the banded normal equations per frequency with a banded
    Cholesky factorisation. Returns the (C, T, F) estimates and a
    per-frequency condition estimate (max/min diagonal of the factor,
    squared); systems that are not positive definite fall back to a dense
    least-squares solve and report an infinite condition.
    """

    mixtures = np.asarray(mixtures)
    bank = bank.with_identity_reference()
    n_mics, n_frames, n_freqs = mixtures.shape
    if bank.n_mics != n_mics or bank.n_freqs != n_freqs:
        raise GeometryError(
            f"filter bank ({bank.n_mics} mics, {bank.n_freqs} bins) does "
            f"not fit mixtures {mixtures.shape}"
        )
    n_speakers = bank.n_speakers

    ab = banded_normal_matrix(bank, n_frames, source_ridge)
    rhs = source_rhs(bank, mixtures)
    solution = np.zeros_like(rhs)
    condition = np.zeros(n_freqs)
    for f in range(n_freqs):
        try:
            factor = scipy.linalg.cholesky_banded(ab[f], lower=False)
        except np.linalg.LinAlgError:
            logger.warning(
                "source system at bin %d is not positive definite, "
                "using lstsq",
                f,
            )
            dense = _dense_from_banded(ab[f])
            solution[f] = scipy.linalg.lstsq(dense, rhs[f])[0]
            condition[f] = np.inf
            continue
        solution[f] = scipy.linalg.cho_solve_banded((factor, False), rhs[f])
        diagonal = np.abs(factor[-1])
        condition[f] = (diagonal.max() / diagonal.min()) ** 2

    if not np.all(np.isfinite(solution)):
        raise NumericalError("source step produced NaN or Inf")
    estimates = solution.reshape(n_freqs, n_frames, n_speakers)
    return estimates.transpose(2, 1, 0), condition


def dense_source_step(bank: RelativeFilterBank, mixtures, source_ridge):
    """Reference source step on the explicit (P*T, T*C) design matrix."""

    mixtures = np.asarray(mixtures)
    bank = bank.with_identity_reference()
    n_mics, n_frames, n_freqs = mixtures.shape
    n_speakers = bank.n_speakers
    size = n_frames * n_speakers
    frames = np.arange(n_frames)

    estimates = np.zeros((n_speakers, n_frames, n_freqs), dtype=complex)
    for f in range(n_freqs):
        design = np.zeros((n_mics * n_frames, size), dtype=complex)
        for p in range(n_mics):
            for c in range(n_speakers):
                for k, lag in enumerate(bank.config.lags):
                    source = frames - lag
                    valid = (source >= 0) & (source < n_frames)
                    design[
                        p * n_frames + frames[valid],
                        source[valid] * n_speakers + c,
                    ] += bank.filters[p, c, f, k].conj()
        target = mixtures[:, :, f].reshape(-1)
        normal = design.conj().T @ design + source_ridge * np.eye(size)
        rhs = design.conj().T @ target
        x = scipy.linalg.solve(normal, rhs, assume_a="her")
        estimates[:, :, f] = x.reshape(n_frames, n_speakers).T
    return estimates
