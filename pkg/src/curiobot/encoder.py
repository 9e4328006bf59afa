"""Offline-pretrained autoencoder for compressing camera images.

The latent space produced here is where goals, predictions, and prediction
errors live. After pretraining the weights are frozen; per-dimension code
statistics from the training images are kept so downstream consumers can
work with standardized codes (raw linear-latent magnitudes are unbounded).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .world import WorldDataset

_HEADER_NAME = "autoencoder.txt"
_ENCODER_NAME = "encoder.nn"
_DECODER_NAME = "decoder.nn"


@dataclass
class Autoencoder:
    encoder: nn.Network
    decoder: nn.Network
    latent_dim: int
    img_w: int
    img_h: int
    code_mean: np.ndarray = None  # per-dimension standardization, set by pretrain
    code_std: np.ndarray = None

    def __post_init__(self):
        if self.encoder.out_dim != self.latent_dim or self.decoder.in_dim != self.latent_dim:
            raise ValueError("encoder/decoder latent dimensions inconsistent")
        if self.decoder.out_dim != self.img_w * self.img_h:
            raise ValueError("decoder output does not match image size")
        if self.code_mean is None:
            self.code_mean = np.zeros(self.latent_dim)
        if self.code_std is None:
            self.code_std = np.ones(self.latent_dim)

    def encode(self, img: np.ndarray) -> np.ndarray:
        """Raw latent code of one image."""
        img = np.asarray(img, dtype=np.float64)
        if img.shape != (self.img_h, self.img_w):
            raise ValueError(f"image shape {img.shape} does not match autoencoder")
        return self.encoder.forward(img.ravel())

    def encode_batch(self, imgs: np.ndarray) -> np.ndarray:
        flat = np.asarray(imgs, dtype=np.float64).reshape(len(imgs), -1)
        return self.encoder.forward(flat)

    def decode(self, code: np.ndarray) -> np.ndarray:
        """Image reconstruction from a latent code; pixels in (0,1)."""
        code = np.asarray(code, dtype=np.float64)
        if code.shape != (self.latent_dim,):
            raise ValueError("code length does not match latent_dim")
        return self.decoder.forward(code).reshape(self.img_h, self.img_w)

    def normalize(self, code: np.ndarray) -> np.ndarray:
        return (code - self.code_mean) / self.code_std

    def encode_norm(self, img: np.ndarray) -> np.ndarray:
        """Standardized latent code; the space used for goals and errors."""
        return self.normalize(self.encode(img))


@dataclass
class PretrainHistory:
    epoch_losses: list = field(default_factory=list)
    train_mse: float = float("nan")
    holdout_mse: float = float("nan")


def build_autoencoder(img_w: int, img_h: int, latent_dim: int = 16,
                      hidden=(128, 64), rng: np.random.Generator = None) -> Autoencoder:
    """Symmetric dense hourglass: relu hidden, linear latent, sigmoid output."""
    if min(img_w, img_h, latent_dim) < 1:
        raise ValueError("dimensions must be positive")
    if rng is None:
        rng = np.random.default_rng()
    d = img_w * img_h
    enc_dims = [d, *hidden, latent_dim]
    enc_spec = [(a, b, "relu") for a, b in zip(enc_dims[:-2], enc_dims[1:-1])]
    enc_spec.append((enc_dims[-2], latent_dim, "linear"))
    dec_dims = [latent_dim, *reversed(hidden), d]
    dec_spec = [(a, b, "relu") for a, b in zip(dec_dims[:-2], dec_dims[1:-1])]
    dec_spec.append((dec_dims[-2], d, "sigmoid"))
    return Autoencoder(nn.init_network(enc_spec, rng), nn.init_network(dec_spec, rng),
                       latent_dim, img_w, img_h)


def reconstruction_mse(ae: Autoencoder, images: np.ndarray) -> float:
    """Mean per-pixel squared reconstruction error over a stack of images."""
    flat = np.asarray(images, dtype=np.float64).reshape(len(images), -1)
    full = nn.Network(ae.encoder.layers + ae.decoder.layers)
    return nn.mse_loss(full.forward(flat), flat)


def pretrain(ae: Autoencoder, world: WorldDataset, epochs: int = 50,
             minibatch: int = 32, rng: np.random.Generator = None,
             holdout_frac: float = 0.1) -> PretrainHistory:
    """Train decode(encode(x)) against x with Adam on the world's images.

    A seeded holdout split is kept aside for reporting generalization; code
    standardization statistics are computed on the training images.
    """
    if rng is None:
        rng = np.random.default_rng()
    if world.n_cells == 0:
        raise ValueError("world has no images")
    flat = world.images.reshape(world.n_cells, -1).astype(np.float64)
    if flat.shape[1] != ae.img_w * ae.img_h:
        raise ValueError("world image size does not match autoencoder")

    perm = rng.permutation(world.n_cells)
    n_hold = int(round(world.n_cells * holdout_frac))
    n_hold = min(n_hold, world.n_cells - 1)
    hold, train = flat[perm[:n_hold]], flat[perm[n_hold:]]

    full = nn.Network(ae.encoder.layers + ae.decoder.layers)
    state = nn.Adam(learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8)
    history = PretrainHistory()
    batch = nn.TrainingBatch(train, train)
    for _ in range(epochs):
        history.epoch_losses.append(nn.fit_epoch(full, batch, state, minibatch, rng))

    codes = ae.encode_batch(train.reshape(-1, ae.img_h, ae.img_w))
    ae.code_mean = codes.mean(axis=0)
    ae.code_std = np.maximum(codes.std(axis=0), 1e-8)
    history.train_mse = reconstruction_mse(ae, train.reshape(-1, ae.img_h, ae.img_w))
    if n_hold:
        history.holdout_mse = reconstruction_mse(ae, hold.reshape(-1, ae.img_h, ae.img_w))
    return history


def save_autoencoder(ae: Autoencoder, dir_path) -> None:
    """Write encoder/decoder weight files plus a key-value header."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    nn.save_weights(ae.encoder, dir_path / _ENCODER_NAME)
    nn.save_weights(ae.decoder, dir_path / _DECODER_NAME)
    lines = [
        f"img_w = {ae.img_w}",
        f"img_h = {ae.img_h}",
        f"latent_dim = {ae.latent_dim}",
        "code_mean = " + ",".join(repr(float(v)) for v in ae.code_mean),
        "code_std = " + ",".join(repr(float(v)) for v in ae.code_std),
    ]
    (dir_path / _HEADER_NAME).write_text("\n".join(lines) + "\n")


def load_autoencoder(dir_path) -> Autoencoder:
    dir_path = Path(dir_path)
    header = {}
    for line in (dir_path / _HEADER_NAME).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
    try:
        img_w = int(header["img_w"])
        img_h = int(header["img_h"])
        latent_dim = int(header["latent_dim"])
        mean = np.array([float(v) for v in header["code_mean"].split(",")])
        std = np.array([float(v) for v in header["code_std"].split(",")])
    except (KeyError, ValueError) as e:
        raise ValueError(f"{dir_path}: bad autoencoder header") from e
    if mean.shape != (latent_dim,) or std.shape != (latent_dim,):
        raise ValueError(f"{dir_path}: standardization vectors have wrong length")
    encoder = nn.load_weights(dir_path / _ENCODER_NAME)
    decoder = nn.load_weights(dir_path / _DECODER_NAME)
    return Autoencoder(encoder, decoder, latent_dim, img_w, img_h, mean, std)
