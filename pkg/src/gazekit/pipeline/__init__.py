from .annotate import AnnotateSummary, annotate
from .evaluate import evaluate_pupils, load_ground_truth_pupils
from .manifest import Manifest, ManifestEntry, SplitSpec, ingest, split_by_subject, subsample_frames
from .report import generate_report
from .synth import SyntheticFaceSpec, gen_synthetic_corpus, render_face

__all__ = [
    "AnnotateSummary",
    "Manifest",
    "ManifestEntry",
    "SplitSpec",
    "SyntheticFaceSpec",
    "annotate",
    "evaluate_pupils",
    "gen_synthetic_corpus",
    "generate_report",
    "ingest",
    "load_ground_truth_pupils",
    "render_face",
    "split_by_subject",
    "subsample_frames",
]
