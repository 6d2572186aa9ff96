import factory
from simkit.scene import SceneTruth, SimScene, random_scene, render


class SimSceneFactory(factory.Factory):
    class Meta:
        model = SimScene

    n_speakers = 2
    n_mics = 3
    seed = factory.Sequence(lambda n: n)
    rir_len = 128
    decay_ms = 10.0
    max_delay = 8
    n_samples = 4000
    noise_snr_db = None
    reference_closest = True
    tap_grid = None
    direct_reference = False

    class Params:
        anechoic = factory.Trait(rir_len=1, decay_ms=0.0, max_delay=0)
        # Taps on the 64-sample hop grid with a direct-path-only mic 1:
        # every relative filter is exactly a few STFT frames long.
        hop_aligned = factory.Trait(
            tap_grid=64,
            rir_len=193,
            decay_ms=20.0,
            max_delay=64,
            direct_reference=True,
        )
        noisy = factory.Trait(noise_snr_db=25.0)

    @classmethod
    def _build(cls, model_class, *args, **kwargs):
        return random_scene(*args, **kwargs)

    @classmethod
    def _create(cls, model_class, *args, **kwargs):
        return random_scene(*args, **kwargs)


class SceneTruthFactory(factory.Factory):
    class Meta:
        model = SceneTruth

    scene = factory.SubFactory(SimSceneFactory)

    @classmethod
    def _create(cls, model_class, scene):
        return render(scene)

    _build = _create
