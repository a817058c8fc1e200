"""gazekit: self-supervised gaze-zone pipeline.

Classical pupil-center localization, angle-heuristic pseudo-labeling of
gaze zones, temporal label smoothing, a capsule-CNN trained on the pseudo
labels, and linear-probe / fine-tune / k-NN downstream adaptation.
"""

from .config import Config, load_config
from .heuristic import (
    AngleQuad,
    PseudoLabel,
    Zone,
    angle_from_vertical,
    classify_gaze,
    classify_headpose,
    pseudo_label,
    smooth_labels,
)
from .imaging import (
    BitMask,
    Circle,
    GrayImage,
    adaptive_threshold,
    blob_centers,
    canny,
    hough_circles,
    otsu_threshold,
    to_gray,
)
from .landmarks import EyeRegion, FaceSample, LandmarkSet, extract_eyes, load_landmarks, nose_anchor
from .pupil import PupilPair, crop_length, jesorsky_error, locate_primary, locate_pupils, locate_secondary

__version__ = "0.1.0"
