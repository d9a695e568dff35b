from .autoencoder import (AutoencoderModel, LatentEncoding, TrainingConfig,
                          ae_encode_batch, ae_forward,
                          ae_reconstruction_errors, ae_train)
from .gradcheck import gradient_check
from .mlp import MlpModel, mlp_predict, mlp_predict_batch, mlp_train
from .optim import Adam, RMSprop, make_optimizer
from .serialize import load_model, save_model

__all__ = [
    "AutoencoderModel", "LatentEncoding", "TrainingConfig", "MlpModel",
    "ae_forward", "ae_train", "ae_encode_batch", "ae_reconstruction_errors",
    "mlp_train", "mlp_predict", "mlp_predict_batch", "gradient_check",
    "Adam", "RMSprop", "make_optimizer", "save_model", "load_model",
]
