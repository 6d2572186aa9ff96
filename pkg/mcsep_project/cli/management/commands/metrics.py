from pathlib import Path

from cli.base import ToolkitCommand
from cli.inputs import read_estimates, read_scene
from metrics.report import report, write_report_csv


class Command(ToolkitCommand):
    help = "Score separated estimates against a scene's reference images."
    defaults = {"scene": None, "estimates": None, "seed": None, "out": None}
    required = ("scene", "estimates", "out")

    def add_arguments(self, parser):
        parser.add_argument("--scene", type=Path, help="saved scene")
        parser.add_argument(
            "--estimates", type=Path, help="C-channel estimate WAV"
        )
        parser.add_argument("--out", type=Path, help="output directory")

    def handle(self, *args, **options):
        truth, description = read_scene(options)
        if options["seed"] is None:
            options["seed"] = description.get("seed")
        estimates, _ = read_estimates(
            options["estimates"], truth.mixtures.shape[-1], truth.sample_rate
        )
        result = report(estimates, truth.reference_images, truth.mixtures[0])
        path = Path(options["out"]) / "metrics.csv"
        return self.finish(options, [write_report_csv(result, path)])
