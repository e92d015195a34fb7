import numpy as np
import pytest

from powercast.synth import ChannelSpec, SynthSpec, Tone, synth, two_tone_spec


def band_limited_spec(n_samples=4000):
    """Three channels, each exactly cos(2pi 0.05 t) + cos(2pi 0.20 t)."""
    channels = tuple(
        ChannelSpec(name=f"ch{j}", tones=(Tone(1.0, 0.05), Tone(1.0, 0.20)))
        for j in range(3)
    )
    return SynthSpec(n_samples=n_samples, channels=channels)


@pytest.fixture(scope="session")
def clean_two_tone():
    return synth(band_limited_spec())


@pytest.fixture(scope="session")
def noisy_two_tone():
    return synth(two_tone_spec())


@pytest.fixture
def rng():
    return np.random.default_rng(0)
