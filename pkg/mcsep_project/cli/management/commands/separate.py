import logging
from pathlib import Path

import numpy as np
from align.frequency import (
    corr_freq_align,
    oracle_freq_align,
    write_permutation_csv,
)
from cli.base import ToolkitCommand
from cli.inputs import (
    FCP_OPTIONS,
    add_fcp_arguments,
    analyse,
    fcp_config,
    read_estimates,
    read_scene,
    stft_config,
)
from django.conf import settings
from django.core.management import CommandError
from fcp.filters import FcpConfig
from metrics.report import report, write_report_csv
from signal_core.stft import istft
from signal_core.wavio import read_wav, write_wav
from solver.als import INITS, WEIGHTINGS, AlsConfig, solve, write_trace_csv

logger = logging.getLogger(__name__)

ALIGNMENTS = ("oracle", "corr", "none")


class Command(ToolkitCommand):
    help = (
        "Separate a multi-mic mixture by alternating least squares and "
        "write the reference-mic estimates."
    )
    defaults = {
        "scene": None,
        "mixture": None,
        "C": settings.SCENE["n_speakers"],
        "init": settings.ALS["init"],
        "init_estimates": None,
        "align": "none",
        "max_iters": settings.ALS["max_iters"],
        "tol_rel": settings.ALS["tol_rel"],
        "source_ridge": settings.ALS["source_ridge"],
        "filter_weighting": settings.ALS["filter_weighting"],
        "seed": settings.ALS["seed"],
        "out": None,
        **FCP_OPTIONS,
    }
    required = ("out",)

    def add_arguments(self, parser):
        inputs = parser.add_mutually_exclusive_group()
        inputs.add_argument(
            "--scene", type=Path, help="saved scene directory (with truth)"
        )
        inputs.add_argument(
            "--mixture", type=Path, help="multichannel mixture WAV"
        )
        parser.add_argument("--C", type=int, help="number of speakers")
        parser.add_argument("--init", choices=INITS)
        parser.add_argument(
            "--init-estimates",
            dest="init_estimates",
            type=Path,
            help="C-channel WAV of starting estimates for --init user",
        )
        parser.add_argument("--align", choices=ALIGNMENTS)
        parser.add_argument("--max-iters", dest="max_iters", type=int)
        parser.add_argument("--tol-rel", dest="tol_rel", type=float)
        parser.add_argument("--source-ridge", dest="source_ridge", type=float)
        parser.add_argument(
            "--filter-weighting", dest="filter_weighting", choices=WEIGHTINGS
        )
        parser.add_argument("--seed", type=int)
        parser.add_argument("--out", type=Path, help="output directory")
        add_fcp_arguments(parser)

    def load(self, options):
        truth, _ = read_scene(options, needed=False)
        if truth is not None:
            return truth, truth.mixtures, truth.sample_rate
        if options["mixture"] is None:
            raise CommandError("give either --scene or --mixture")
        mixtures, sample_rate = read_wav(options["mixture"])
        return None, mixtures, sample_rate

    def handle(self, *args, **options):
        truth, mixtures, sample_rate = self.load(options)
        n_speakers = options["C"]
        oracle = "oracle" in (options["init"], options["align"])
        if truth is None and oracle:
            raise CommandError(
                "--init oracle and --align oracle need a --scene with truth"
            )

        cfg = AlsConfig(
            max_iters=options["max_iters"],
            tol_rel=options["tol_rel"],
            fcp=fcp_config(
                options, FcpConfig(ridge=settings.ALS["filter_ridge"])
            ),
            init=options["init"],
            source_ridge=options["source_ridge"],
            filter_weighting=options["filter_weighting"],
            seed=options["seed"],
        )
        stft_cfg = stft_config(sample_rate)
        spec = analyse(mixtures, sample_rate)
        init_estimates = None
        if cfg.init == "oracle":
            init_estimates = analyse(truth.reference_images, sample_rate).data
        elif cfg.init == "user":
            if options["init_estimates"] is None:
                raise CommandError("--init user needs --init-estimates")
            start, _ = read_estimates(
                options["init_estimates"], mixtures.shape[-1], sample_rate
            )
            init_estimates = analyse(start, sample_rate).data

        estimate, trace, _ = solve(
            spec, n_speakers, cfg, init_estimates, stft_cfg
        )

        out = Path(options["out"])
        written = [write_trace_csv(trace, out / "trace.csv")]
        estimates = estimate.estimates
        if options["align"] == "oracle":
            references = analyse(truth.reference_images, sample_rate).data
            estimates, permutation = oracle_freq_align(estimates, references)
        elif options["align"] == "corr":
            estimates, permutation = corr_freq_align(estimates)
        if options["align"] != "none":
            written.append(
                write_permutation_csv(permutation, out / "permutation.csv")
            )

        dump = out / "estimates_stft.npy"
        np.save(dump, estimates)
        written.append(dump)
        signals = istft(estimates, stft_cfg, mixtures.shape[-1])
        written.append(write_wav(out / "estimates.wav", signals, sample_rate))

        if truth is not None:
            result = report(signals, truth.reference_images, mixtures[0])
            written.append(write_report_csv(result, out / "metrics.csv"))
            logger.info(
                "mean SI-SDR improvement %.2f dB", result.mean_si_sdr_delta
            )
        else:
            logger.info("no truth given, metrics omitted")
        logger.info(
            "separated %d speakers in %d iterations (%s)",
            n_speakers,
            trace.iterations,
            "converged" if trace.converged else "not converged",
        )
        return self.finish(options, written)
