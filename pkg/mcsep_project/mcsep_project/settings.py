"""
Default settings for the mcsep toolkit.

Every module config dataclass reads its defaults from here, and run
configuration files (YAML) override them per command. Values follow the
8 kHz setup: 32 ms square-root Hann windows with an 8 ms hop.
"""

# Django
# Only the management commands are used, with no database or URLs.

SECRET_KEY = "mcsep-offline-toolkit-no-secrets"

DEBUG = False

INSTALLED_APPS = [
    "signal_core.apps.SignalCoreConfig",
    "simkit.apps.SimkitConfig",
    "fcp.apps.FcpAppConfig",
    "losses.apps.LossesConfig",
    "wiener.apps.WienerAppConfig",
    "align.apps.AlignConfig",
    "solver.apps.SolverConfig",
    "metrics.apps.MetricsConfig",
    "cli.apps.CliConfig",
]

DATABASES = {}

USE_TZ = True


# Signal analysis

STFT = {
    "sample_rate": 8000,
    "win_len": 256,
    "hop": 64,
    "fft_size": 256,
    "window": "sqrt_hann",
}

# WAV files are float32 unless a command asks for 16-bit PCM
WAV_SUBTYPE = "FLOAT"


# Scene simulation

SCENE = {
    "n_speakers": 2,
    "n_mics": 3,
    "n_samples": 8000,
    "rir_len": 256,
    "decay_ms": 20.0,
    "max_delay": 16,
    "noise_snr_db": None,
}


# Sub-band filtering and losses

FCP = {
    "past_taps": 19,
    "future_taps": 0,
    "xi": 1e-4,
    "ridge": 1e-6,
}

# K above this keeps the per-frequency solve dense and small
FCP_MAX_TAPS = 64

LOSS_WEIGHTS = {
    "alpha": None,
    "gamma": 0.04,
}

GAMMA_SWEEP = (0.02, 0.04, 0.06, 0.1, 0.3, 1.0)

LOG_FLOOR = 1e-8


# Time-domain Wiener filtering

WIENER = {
    "taps": 512,
    "future_taps": 100,
    "ridge": 0.0,
}


# Alignment

ALIGN = {
    "max_sweeps": 10,
    "seed_bins": 8,
    "max_speakers": 8,
}


# Alternating least squares

ALS = {
    "max_iters": 50,
    "tol_rel": 1e-6,
    "init": "mixture_split_random",
    "source_ridge": 1e-9,
    "filter_ridge": 1e-9,
    "filter_weighting": "unweighted",
    "seed": 0,
}

MONOTONE_SLACK_REL = 1e-9
MONOTONE_SLACK_ABS = 1e-12


# Metrics

METRIC_CEILING_DB = 120.0


# Output

CSV_SIGNIFICANT_DIGITS = 12


# Logging
# https://docs.python.org/3/library/logging.config.html

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "%(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
}
