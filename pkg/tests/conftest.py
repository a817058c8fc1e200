import numpy as np
import pytest

from gazekit.imaging import to_gray
from gazekit.landmarks import FaceSample
from gazekit.pipeline.synth import SyntheticFaceSpec, render_face


def face_sample(iris_offset=0.0, roll=0.0, noise_sigma=0.0, seed=0, size=128,
                subject="s", video="v", frame=0):
    """Rendered synthetic face wrapped as a FaceSample, with ground truth."""
    face = render_face(SyntheticFaceSpec(iris_offset, roll, noise_sigma, seed), size)
    sample = FaceSample(
        image=to_gray(face.rgb),
        landmarks=face.landmarks,
        subject_id=subject,
        video_id=video,
        frame_index=frame,
        color=face.rgb,
    )
    return sample, face


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
