import numpy as np
import pytest

from seqvo import synth
from seqvo.cli import write_sequence


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


GENTLE_MOTION = synth.AffineMotion(rotation=0.004, scale=1.0005, translation=(0.4, 0.2))


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    """A small synthetic sequence written to disk (source-direction flows)."""
    out = tmp_path_factory.mktemp("synthseq")
    spec = synth.SynthSpec(width=96, height=72, frames=8, motion=GENTLE_MOTION,
                           disparity=3.0, seed=11)
    write_sequence(synth.gen_sequence(spec), out)
    return out
