import logging
from pathlib import Path

from align.frequency import (
    corr_freq_align,
    oracle_freq_align,
    write_permutation_csv,
)
from cli.base import ToolkitCommand
from cli.inputs import analyse, read_estimates, read_scene, stft_config
from django.conf import settings
from django.core.management import CommandError
from signal_core.stft import istft
from signal_core.wavio import write_wav

logger = logging.getLogger(__name__)

METHODS = ("corr", "oracle")


class Command(ToolkitCommand):
    help = "Undo per-frequency label permutations of separated estimates."
    defaults = {
        "estimates": None,
        "method": "corr",
        "scene": None,
        "max_sweeps": settings.ALIGN["max_sweeps"],
        "seed_bins": settings.ALIGN["seed_bins"],
        "seed": None,
        "out": None,
    }
    required = ("estimates", "out")

    def add_arguments(self, parser):
        parser.add_argument(
            "--estimates", type=Path, help="C-channel estimate WAV"
        )
        parser.add_argument("--method", choices=METHODS)
        parser.add_argument(
            "--scene", type=Path, help="saved scene, needed for oracle"
        )
        parser.add_argument("--max-sweeps", dest="max_sweeps", type=int)
        parser.add_argument("--seed-bins", dest="seed_bins", type=int)
        parser.add_argument("--out", type=Path, help="output directory")

    def handle(self, *args, **options):
        truth, _ = read_scene(options, needed=False)
        if options["method"] == "oracle" and truth is None:
            raise CommandError("--method oracle needs --scene")
        estimates, sample_rate = read_estimates(options["estimates"])
        n_samples = estimates.shape[-1]
        spec = analyse(estimates, sample_rate).data

        if options["method"] == "oracle":
            if truth.mixtures.shape[-1] != n_samples:
                raise CommandError(
                    f"estimates have {n_samples} samples, the scene "
                    f"{truth.mixtures.shape[-1]}"
                )
            references = analyse(truth.reference_images, sample_rate).data
            aligned, permutation = oracle_freq_align(spec, references)
        else:
            aligned, permutation = corr_freq_align(
                spec,
                max_sweeps=options["max_sweeps"],
                seed_bins=options["seed_bins"],
            )
        logger.info(
            "%s alignment: %d bins relabelled, status %s",
            options["method"],
            permutation.changed_bins().size,
            permutation.status,
        )

        out = Path(options["out"])
        signals = istft(aligned, stft_config(sample_rate), n_samples)
        written = [
            write_wav(out / "aligned.wav", signals, sample_rate),
            write_permutation_csv(permutation, out / "permutation.csv"),
        ]
        return self.finish(options, written)
