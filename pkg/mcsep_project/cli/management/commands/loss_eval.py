import logging
from pathlib import Path

from cli.base import ToolkitCommand
from cli.inputs import (
    FCP_OPTIONS,
    add_fcp_arguments,
    analyse,
    estimates_or_references,
    fcp_config,
    read_scene,
)
from django.conf import settings
from losses.loss import LossVariant, LossWeights, combined_loss
from mcsep_project.tables import write_csv

logger = logging.getLogger(__name__)


class Command(ToolkitCommand):
    help = (
        "Evaluate the mixture-consistency and magnitude-scattering losses "
        "of separated estimates against a saved scene."
    )
    defaults = {
        "scene": None,
        "estimates": None,
        "variant": LossVariant.REFERENCE_UNFILTERED.value,
        "gamma": settings.LOSS_WEIGHTS["gamma"],
        "seed": None,
        "out": None,
        **FCP_OPTIONS,
    }
    required = ("scene", "out")

    def add_arguments(self, parser):
        parser.add_argument("--scene", type=Path, help="saved scene")
        parser.add_argument(
            "--estimates",
            type=Path,
            help="C-channel estimate WAV; the true images when omitted",
        )
        parser.add_argument(
            "--variant", choices=[variant.value for variant in LossVariant]
        )
        parser.add_argument(
            "--gamma", type=float, help="weight of the scattering term"
        )
        parser.add_argument("--out", type=Path, help="output directory")
        add_fcp_arguments(parser)

    def handle(self, *args, **options):
        truth, description = read_scene(options)
        if options["seed"] is None:
            options["seed"] = description.get("seed")
        variant = LossVariant(options["variant"])
        estimates = estimates_or_references(options, truth)

        mixtures = analyse(truth.mixtures, truth.sample_rate).data
        zhats = analyse(estimates, truth.sample_rate).data
        breakdown = combined_loss(
            mixtures,
            zhats,
            variant,
            fcp_config(options, variant.default_fcp),
            LossWeights(gamma=options["gamma"]),
        )
        logger.info(
            "%s: mixture consistency %.6g, combined %.6g",
            variant.value,
            breakdown.mc_total,
            breakdown.combined,
        )

        rows = [
            (p + 1, mc, isms)
            for p, (mc, isms) in enumerate(
                zip(breakdown.mc_per_mic, breakdown.isms_per_mic)
            )
        ]
        rows.append(("total", breakdown.mc_total, breakdown.isms_total))
        path = write_csv(
            Path(options["out"]) / "loss_eval.csv", ["mic", "mc", "isms"], rows
        )
        return self.finish(options, [path])
