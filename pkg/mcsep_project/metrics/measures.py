"""Signal-level separation measures in dB.

Ratios that are undefined because a numerator or denominator energy is
exactly zero, and values beyond the ceiling, are clipped to
+-METRIC_CEILING_DB.
"""

import numpy as np
from django.conf import settings
from mcsep_project.exceptions import DegenerateInputError, GeometryError

CEILING = settings.METRIC_CEILING_DB


def _pair(est, ref):
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise GeometryError(
            f"estimate {est.shape} and reference {ref.shape} must be equal "
            "length 1-D signals"
        )
    if not np.any(ref):
        raise DegenerateInputError("reference signal is all zeros")
    return est, ref


def energy_ratio_db(signal_energy, error_energy) -> float:
    if signal_energy == 0:
        return -CEILING
    if error_energy == 0:
        return CEILING
    ratio = 10 * np.log10(signal_energy / error_energy)
    return float(np.clip(ratio, -CEILING, CEILING))


def si_sdr(est, ref) -> float:
    """Scale-invariant SDR of `est` against the projection onto `ref`."""

    est, ref = _pair(est, ref)
    scale = np.dot(est, ref) / np.dot(ref, ref)
    target = scale * ref
    return energy_ratio_db(np.sum(target**2), np.sum((target - est) ** 2))


def snr(est, ref) -> float:
    est, ref = _pair(est, ref)
    return energy_ratio_db(np.sum(ref**2), np.sum((ref - est) ** 2))
