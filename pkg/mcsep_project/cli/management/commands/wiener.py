import logging
from pathlib import Path

import numpy as np
from cli.base import ToolkitCommand
from cli.inputs import estimates_or_references, read_scene
from django.conf import settings
from mcsep_project.tables import write_csv
from signal_core.wavio import write_wav
from wiener.filters import (
    METHODS,
    WienerConfig,
    iras_loss_per_mic,
    taps_from_stft_filter,
    wiener_images,
)

logger = logging.getLogger(__name__)


class Command(ToolkitCommand):
    help = (
        "Fit time-domain Wiener filters from every estimate to every mic "
        "and report the L1 residual of their sum."
    )
    defaults = {
        "scene": None,
        "estimates": None,
        "taps": settings.WIENER["taps"],
        "taps_from_K": None,
        "future_taps": settings.WIENER["future_taps"],
        "ridge": settings.WIENER["ridge"],
        "method": "dense",
        "seed": None,
        "out": None,
    }
    required = ("scene", "out")

    def add_arguments(self, parser):
        parser.add_argument("--scene", type=Path, help="saved scene")
        parser.add_argument(
            "--estimates",
            type=Path,
            help="C-channel estimate WAV; the true images when omitted",
        )
        parser.add_argument("--taps", type=int, help="filter length M")
        parser.add_argument(
            "--taps-from-K",
            dest="taps_from_K",
            type=int,
            help="size M to span a K-tap sub-band filter",
        )
        parser.add_argument("--future-taps", dest="future_taps", type=int)
        parser.add_argument("--ridge", type=float)
        parser.add_argument("--method", choices=METHODS)
        parser.add_argument("--out", type=Path, help="output directory")

    def config(self, options, sample_rate) -> WienerConfig:
        taps = options["taps"]
        if options["taps_from_K"] is not None:
            taps = taps_from_stft_filter(
                options["taps_from_K"],
                hop_ms=1000 * settings.STFT["hop"] / sample_rate,
                win_ms=1000 * settings.STFT["win_len"] / sample_rate,
                sample_rate=sample_rate,
            )
            options["taps"] = taps
        return WienerConfig(
            taps=taps,
            future_taps=min(options["future_taps"], taps - 1),
            ridge=options["ridge"],
            method=options["method"],
        )

    def handle(self, *args, **options):
        truth, description = read_scene(options)
        if options["seed"] is None:
            options["seed"] = description.get("seed")
        estimates = estimates_or_references(options, truth)
        cfg = self.config(options, truth.sample_rate)
        logger.info(
            "Wiener filters with %d taps, %d ahead", cfg.taps, cfg.future_taps
        )

        out = Path(options["out"])
        images = wiener_images(truth.mixtures, estimates, cfg)
        per_mic = iras_loss_per_mic(
            truth.mixtures, estimates, cfg, images=images
        )
        rows = [(p + 1, value) for p, value in enumerate(per_mic)]
        rows.append(("total", float(np.sum(per_mic))))
        written = [write_csv(out / "iras.csv", ["mic", "iras"], rows)]

        for p, filtered in enumerate(images):
            path = out / f"filtered_m{p + 1}.wav"
            written.append(write_wav(path, filtered, truth.sample_rate))
        logger.info("iRAS %.6g", float(np.sum(per_mic)))
        return self.finish(options, written)
