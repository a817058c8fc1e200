from .adapt import AdaptResult, adapt_fine_tune, adapt_linear_probe, knn_probe
from .checkpoint import load_checkpoint, save_checkpoint
from .data import ArrayDataset, image_to_tensor
from .gradcheck import grad_check
from .layers import NumericFault, squash
from .losses import angular_error_deg, cosine_gaze_loss, cross_entropy, DegenerateGaze
from .model import Network, build_capsule_cnn
from .optim import SGD, sgd_update
from .train import TrainResult, evaluate_zone, train_pretext

__all__ = [
    "AdaptResult",
    "ArrayDataset",
    "DegenerateGaze",
    "Network",
    "NumericFault",
    "SGD",
    "TrainResult",
    "adapt_fine_tune",
    "adapt_linear_probe",
    "angular_error_deg",
    "build_capsule_cnn",
    "cosine_gaze_loss",
    "cross_entropy",
    "evaluate_zone",
    "grad_check",
    "image_to_tensor",
    "knn_probe",
    "load_checkpoint",
    "save_checkpoint",
    "sgd_update",
    "squash",
    "train_pretext",
]
