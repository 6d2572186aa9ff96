from pathlib import Path

from cli.base import ToolkitCommand
from django.conf import settings
from signal_core.wavio import SUBTYPES
from simkit.scene import random_scene, render
from simkit.storage import save_scene


class Command(ToolkitCommand):
    help = "Draw a seeded reverberant scene and write its WAVs and truth."
    defaults = {
        "C": settings.SCENE["n_speakers"],
        "P": settings.SCENE["n_mics"],
        "seed": 0,
        "n_samples": settings.SCENE["n_samples"],
        "rir_len": settings.SCENE["rir_len"],
        "decay_ms": settings.SCENE["decay_ms"],
        "max_delay": settings.SCENE["max_delay"],
        "noise_snr_db": settings.SCENE["noise_snr_db"],
        "sample_rate": settings.STFT["sample_rate"],
        "hop_aligned": False,
        "subtype": settings.WAV_SUBTYPE,
        "out": None,
    }
    required = ("out",)

    def add_arguments(self, parser):
        parser.add_argument("--C", type=int, help="number of speakers")
        parser.add_argument("--P", type=int, help="number of microphones")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--n-samples", dest="n_samples", type=int)
        parser.add_argument("--rir-len", dest="rir_len", type=int)
        parser.add_argument("--decay-ms", dest="decay_ms", type=float)
        parser.add_argument("--max-delay", dest="max_delay", type=int)
        parser.add_argument(
            "--noise-snr-db",
            dest="noise_snr_db",
            type=float,
            help="add white noise at this SNR per mic",
        )
        parser.add_argument("--sample-rate", dest="sample_rate", type=int)
        parser.add_argument(
            "--hop-aligned",
            dest="hop_aligned",
            action="store_true",
            help="keep RIR taps on the STFT hop grid",
        )
        parser.add_argument("--subtype", choices=SUBTYPES)
        parser.add_argument("--out", type=Path, help="output directory")

    def handle(self, *args, **options):
        scene = random_scene(
            n_speakers=options["C"],
            n_mics=options["P"],
            seed=options["seed"],
            rir_len=options["rir_len"],
            decay_ms=options["decay_ms"],
            max_delay=options["max_delay"],
            n_samples=options["n_samples"],
            sample_rate=options["sample_rate"],
            noise_snr_db=options["noise_snr_db"],
            reference_closest=True,
            tap_grid=settings.STFT["hop"] if options["hop_aligned"] else None,
            direct_reference=options["hop_aligned"],
        )
        truth = render(scene)
        written = save_scene(
            truth,
            options["out"],
            metadata={"seed": options["seed"]},
            dry=scene.dry,
            subtype=options["subtype"],
        )
        return self.finish(options, written)
