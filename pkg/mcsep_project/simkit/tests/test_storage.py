import tempfile
from pathlib import Path

import numpy as np
import soundfile as sf
from django.test import SimpleTestCase
from simkit.factories import SimSceneFactory
from simkit.scene import render
from simkit.storage import load_scene, save_scene


class SaveSceneTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls._tmp = tempfile.TemporaryDirectory()
        cls.directory = Path(cls._tmp.name)
        cls.scene = SimSceneFactory(seed=21, noisy=True)
        cls.truth = render(cls.scene)
        cls.written = save_scene(
            cls.truth, cls.directory, metadata={"seed": 21}, dry=cls.scene.dry
        )
        cls.loaded, cls.description = load_scene(cls.directory)

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()
        super().tearDownClass()

    def test_file_layout(self):
        names = {
            path.relative_to(self.directory).as_posix()
            for path in self.written
        }
        assert "mixture.wav" in names
        assert "scene.yaml" in names
        assert "truth/image_s2_m3.wav" in names
        assert "truth/dry_s1.wav" in names
        assert "truth/noise.wav" in names

    def test_description(self):
        assert self.description["n_speakers"] == 2
        assert self.description["n_mics"] == 3
        assert self.description["seed"] == 21
        assert self.description["n_samples"] == self.truth.mixtures.shape[-1]

    def test_reload_keeps_float32_precision(self):
        assert self.loaded.images.shape == self.truth.images.shape
        np.testing.assert_allclose(
            self.loaded.images, self.truth.images, rtol=1e-6, atol=1e-9
        )
        np.testing.assert_allclose(
            self.loaded.mixtures, self.truth.mixtures, rtol=1e-6, atol=1e-9
        )
        np.testing.assert_allclose(
            self.loaded.noise, self.truth.noise, rtol=1e-6, atol=1e-9
        )

    def test_pcm_subtype(self):
        with tempfile.TemporaryDirectory() as tmp:
            save_scene(self.truth, tmp, subtype="PCM_16")
            assert sf.info(str(Path(tmp) / "mixture.wav")).subtype == "PCM_16"
