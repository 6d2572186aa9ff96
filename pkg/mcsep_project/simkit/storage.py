import logging
from pathlib import Path

import numpy as np
import yaml
from signal_core.wavio import read_wav, write_wav
from simkit.scene import SceneTruth

logger = logging.getLogger(__name__)

SCENE_FILE = "scene.yaml"
MIXTURE_FILE = "mixture.wav"
TRUTH_DIR = "truth"


def image_name(c, p):
    return f"image_s{c + 1}_m{p + 1}.wav"


def save_scene(
    truth: SceneTruth, directory, metadata=None, dry=None, subtype=None
):
    """Write the mixture, the truth bundle and scene.yaml; return the paths.

    File names count speakers and mics from 1.
    """

    directory = Path(directory)
    truth_dir = directory / TRUTH_DIR
    sample_rate = truth.sample_rate

    def write(path, audio):
        return write_wav(path, audio, sample_rate, subtype)

    written = [write(directory / MIXTURE_FILE, truth.mixtures)]
    for c in range(truth.n_speakers):
        for p in range(truth.n_mics):
            written.append(
                write(truth_dir / image_name(c, p), truth.images[c, p])
            )
    written.append(write(truth_dir / "noise.wav", truth.noise))
    if dry is not None:
        for c, source in enumerate(dry):
            written.append(write(truth_dir / f"dry_s{c + 1}.wav", source))

    description = {
        "n_speakers": truth.n_speakers,
        "n_mics": truth.n_mics,
        "sample_rate": sample_rate,
        "n_samples": truth.mixtures.shape[-1],
    }
    description.update(metadata or {})
    scene_file = directory / SCENE_FILE
    scene_file.write_text(yaml.safe_dump(description, sort_keys=True))
    written.append(scene_file)
    logger.info("wrote scene with %d files to %s", len(written), directory)
    return written


def load_scene(directory):
    """Read a saved scene back as (SceneTruth, description)."""

    directory = Path(directory)
    description = yaml.safe_load((directory / SCENE_FILE).read_text())
    mixtures, sample_rate = read_wav(directory / MIXTURE_FILE)
    n_speakers, n_mics = description["n_speakers"], description["n_mics"]

    images = np.zeros((n_speakers, n_mics, mixtures.shape[-1]))
    for c in range(n_speakers):
        for p in range(n_mics):
            image, _ = read_wav(directory / TRUTH_DIR / image_name(c, p))
            images[c, p] = image[0]
    noise, _ = read_wav(directory / TRUTH_DIR / "noise.wav")

    truth = SceneTruth(
        images=images,
        mixtures=mixtures,
        noise=noise,
        sample_rate=sample_rate,
    )
    return truth, description
