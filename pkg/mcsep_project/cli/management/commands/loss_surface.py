from pathlib import Path

from cli.base import ToolkitCommand
from cli.inputs import (
    FCP_OPTIONS,
    add_fcp_arguments,
    fcp_config,
    read_scene,
    stft_config,
)
from losses.loss import LossVariant
from losses.surface import loss_surface, write_surface_csv


class Command(ToolkitCommand):
    help = (
        "Tabulate the mixture-consistency loss over blends of the two true "
        "reference images."
    )
    defaults = {
        "scene": None,
        "grid": 21,
        "variant": LossVariant.REFERENCE_UNFILTERED.value,
        "freeze_filters": False,
        "seed": None,
        "out": None,
        **FCP_OPTIONS,
    }
    required = ("scene", "out")

    def add_arguments(self, parser):
        parser.add_argument("--scene", type=Path, help="saved 2-speaker scene")
        parser.add_argument(
            "--grid", type=int, help="points per axis on [0, 1]"
        )
        parser.add_argument(
            "--variant", choices=[variant.value for variant in LossVariant]
        )
        parser.add_argument(
            "--freeze-filters",
            dest="freeze_filters",
            action="store_true",
            help="estimate filters once at the separated corner",
        )
        parser.add_argument("--out", type=Path, help="output directory")
        add_fcp_arguments(parser)

    def handle(self, *args, **options):
        truth, description = read_scene(options)
        if options["seed"] is None:
            options["seed"] = description.get("seed")
        variant = LossVariant(options["variant"])
        surface = loss_surface(
            truth,
            grid_n=options["grid"],
            variant=variant,
            fcp_cfg=fcp_config(options, variant.default_fcp),
            freeze_filters=options["freeze_filters"],
            stft_cfg=stft_config(truth.sample_rate),
        )
        path = Path(options["out"]) / "surface.csv"
        return self.finish(options, [write_surface_csv(surface, path)])
