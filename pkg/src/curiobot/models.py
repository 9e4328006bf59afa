"""Online-trained forward and inverse kinematic models.

The forward model maps a motor command to the predicted (standardized)
latent code of the image seen there; the inverse model maps a latent code
back to the motor command expected to produce it. Both are tanh networks
trained online with SGD+momentum on minibatches of recent and replayed
sensorimotor samples. Motor commands live in [0,1] per axis and are mapped
affinely to the tanh range [-1,1] at the network boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn

FORWARD_LR = 0.0014
FORWARD_MOMENTUM = 0.8
FORWARD_DECAY = 0.0


@dataclass
class SensorimotorSample:
    """One (motor command, latent code) observation; the training atom."""

    motor: np.ndarray  # (2,) in [0,1]
    code: np.ndarray   # (L,) standardized latent

    def key(self) -> bytes:
        return self.motor.tobytes() + self.code.tobytes()


@dataclass
class ForwardModel:
    net: nn.Network
    opt: nn.SgdMomentum


@dataclass
class InverseModel:
    net: nn.Network
    opt: nn.SgdMomentum


def motor_to_net(motor: np.ndarray) -> np.ndarray:
    """[0,1] motor space to the [-1,1] network range."""
    return 2.0 * np.asarray(motor, dtype=np.float64) - 1.0


def net_to_motor(out: np.ndarray) -> np.ndarray:
    """[-1,1] network range back to a clamped [0,1] motor command."""
    return np.clip((np.asarray(out, dtype=np.float64) + 1.0) / 2.0, 0.0, 1.0)


def _sgd_state():
    return nn.SgdMomentum(learning_rate=FORWARD_LR, momentum=FORWARD_MOMENTUM,
                          decay=FORWARD_DECAY)


def new_forward_model(latent_dim: int, rng: np.random.Generator) -> ForwardModel:
    net = nn.init_network(
        [(2, 32, "tanh"), (32, 320, "tanh"), (320, 320, "tanh"),
         (320, latent_dim, "tanh")], rng)
    return ForwardModel(net, _sgd_state())


def new_inverse_model(latent_dim: int, rng: np.random.Generator) -> InverseModel:
    net = nn.init_network(
        [(latent_dim, latent_dim, "tanh"), (latent_dim, 320, "tanh"),
         (320, 320, "tanh"), (320, 2, "tanh")], rng)
    return InverseModel(net, _sgd_state())


def predict_forward(fm: ForwardModel, motor: np.ndarray) -> np.ndarray:
    """Predicted latent code for a motor command in [0,1]^2."""
    return fm.net.forward(motor_to_net(motor))


def predict_inverse(im: InverseModel, code: np.ndarray) -> np.ndarray:
    """Motor command in [0,1]^2 expected to reach the given latent code."""
    return net_to_motor(im.net.forward(np.asarray(code, dtype=np.float64)))


def predict_inverse_batch(im: InverseModel, codes: np.ndarray) -> np.ndarray:
    return net_to_motor(im.net.forward(np.asarray(codes, dtype=np.float64)))


def _training_arrays(model, samples):
    motors = np.array([s.motor for s in samples])
    codes = np.array([s.code for s in samples])
    if isinstance(model, ForwardModel):
        return motor_to_net(motors), codes
    return codes, motor_to_net(motors)


def online_fit(model, buffer, memory_samples, rng: np.random.Generator,
               minibatch_size: int = 16) -> float:
    """One training epoch on the new buffer plus all replayed memory samples."""
    samples = list(buffer) + list(memory_samples)
    if not samples:
        raise ValueError("nothing to train on: buffer and memory both empty")
    inputs, targets = _training_arrays(model, samples)
    batch = nn.TrainingBatch(inputs, targets)
    return nn.fit_epoch(model.net, batch, model.opt, minibatch_size, rng)


def evaluate_mse(fm: ForwardModel, im: InverseModel, testset) -> tuple:
    """Test-set MSE of both models; no weights are touched."""
    motors = np.array([s.motor for s in testset])
    codes = np.array([s.code for s in testset])
    fwd_pred = fm.net.forward(motor_to_net(motors))
    inv_pred = predict_inverse_batch(im, codes)
    fwd_mse = nn.mse_loss(fwd_pred, codes)
    inv_mse = nn.mse_loss(inv_pred, motors)
    return fwd_mse, inv_mse
