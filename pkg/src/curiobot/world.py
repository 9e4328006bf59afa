"""Synthetic camera world and movement simulator.

A world is a grid of camera positions over a field of Gaussian intensity
blobs (stand-ins for plants seen top-down). Each grid cell holds the
grayscale image the camera captures there; neighboring cells see
overlapping windows, so the image varies smoothly with position. Motor
space is normalized to [0,1] per axis, with the physical extent (mm) kept
as metadata for trajectory stepping.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_DATASET_MAGIC = b"CURIOWLD1"


def clamp_command(cmd: np.ndarray) -> np.ndarray:
    """Clip a motor command to the valid [0,1] x [0,1] range."""
    return np.clip(np.asarray(cmd, dtype=np.float64), 0.0, 1.0)


@dataclass
class WorldConfig:
    grid_w: int = 50
    grid_h: int = 50
    img_w: int = 16
    img_h: int = 16
    extent: tuple = (0.0, 245.0, 0.0, 245.0)  # x_min, x_max, y_min, y_max in mm
    n_blobs: int = 12
    blob_r_min: float = 0.05   # blob sigma range, normalized world units
    blob_r_max: float = 0.15
    amp_min: float = 0.5
    amp_max: float = 1.0
    window_frac: float = 0.25  # camera window span as a fraction of the world


@dataclass
class WorldDataset:
    """Immutable grid of images; pixels are float32 in [0,1]."""

    grid_w: int
    grid_h: int
    img_w: int
    img_h: int
    extent: tuple
    images: np.ndarray  # (grid_h, grid_w, img_h, img_w) float32

    @property
    def n_cells(self) -> int:
        return self.grid_w * self.grid_h

    def cell_position(self, gx: int, gy: int) -> np.ndarray:
        """Normalized motor position of a grid cell."""
        dx = max(self.grid_w - 1, 1)
        dy = max(self.grid_h - 1, 1)
        return np.array([gx / dx, gy / dy])

    def image_at(self, gx: int, gy: int) -> np.ndarray:
        return self.images[gy, gx]

    def all_cells(self):
        """All (gx, gy) pairs, row-major (y outer)."""
        return [(gx, gy) for gy in range(self.grid_h) for gx in range(self.grid_w)]


@dataclass
class SimState:
    position: np.ndarray
    world: WorldDataset


def blob_field(points: np.ndarray, centers: np.ndarray, sigmas: np.ndarray,
               amps: np.ndarray) -> np.ndarray:
    """Sum-of-Gaussians intensity at the given (n, 2) world points, clamped to [0,1]."""
    vals = np.zeros(len(points))
    for c, s, a in zip(centers, sigmas, amps):
        d2 = np.sum((points - c) ** 2, axis=1)
        vals += a * np.exp(-d2 / (2.0 * s * s))
    return np.clip(vals, 0.0, 1.0)


def generate_world(cfg: WorldConfig, rng: np.random.Generator) -> WorldDataset:
    """Render the image of every grid cell over a seeded random blob field."""
    if min(cfg.grid_w, cfg.grid_h, cfg.img_w, cfg.img_h) < 1:
        raise ValueError("grid and image dimensions must be positive")
    centers = rng.uniform(0.0, 1.0, size=(cfg.n_blobs, 2))
    sigmas = rng.uniform(cfg.blob_r_min, cfg.blob_r_max, size=cfg.n_blobs)
    amps = rng.uniform(cfg.amp_min, cfg.amp_max, size=cfg.n_blobs)

    # pixel-center offsets within the camera window, in world units
    ox = (np.arange(cfg.img_w) + 0.5) / cfg.img_w - 0.5
    oy = (np.arange(cfg.img_h) + 0.5) / cfg.img_h - 0.5
    offs = np.stack(np.meshgrid(ox, oy), axis=-1).reshape(-1, 2) * cfg.window_frac

    images = np.empty((cfg.grid_h, cfg.grid_w, cfg.img_h, cfg.img_w), dtype=np.float32)
    for gy in range(cfg.grid_h):
        py = gy / max(cfg.grid_h - 1, 1)
        for gx in range(cfg.grid_w):
            px = gx / max(cfg.grid_w - 1, 1)
            pts = offs + np.array([px, py])
            vals = blob_field(pts, centers, sigmas, amps)
            images[gy, gx] = vals.reshape(cfg.img_h, cfg.img_w).astype(np.float32)
    return WorldDataset(cfg.grid_w, cfg.grid_h, cfg.img_w, cfg.img_h,
                        tuple(cfg.extent), images)


def snap_to_grid(pos: np.ndarray, world: WorldDataset):
    """Nearest grid cell to a normalized position; ties go to the lower index."""
    pos = np.asarray(pos, dtype=np.float64)
    gx = int(np.ceil(pos[0] * max(world.grid_w - 1, 1) - 0.5))
    gy = int(np.ceil(pos[1] * max(world.grid_h - 1, 1) - 0.5))
    return min(max(gx, 0), world.grid_w - 1), min(max(gy, 0), world.grid_h - 1)


def interpolate_trajectory(start: np.ndarray, end: np.ndarray, step_mm: float,
                           world: WorldDataset) -> np.ndarray:
    """Evenly spaced points from start to end, at most step_mm apart.

    Spacing is measured in physical units via the world extent; endpoints
    are exact. A zero-length move yields the single start point.
    """
    if step_mm <= 0:
        raise ValueError("step_mm must be positive")
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    x_min, x_max, y_min, y_max = world.extent
    span = np.array([x_max - x_min, y_max - y_min])
    length = float(np.hypot(*((end - start) * span)))
    if length == 0.0:
        return start[None, :].copy()
    n = int(np.ceil(length / step_mm))
    ts = np.linspace(0.0, 1.0, n + 1)
    pts = start[None, :] + ts[:, None] * (end - start)[None, :]
    pts[0] = start
    pts[-1] = end
    return pts


def execute_move(state: SimState, target: np.ndarray, samples_per_move: int = 1):
    """Move the camera to (clamped) target and observe along the way.

    Returns samples_per_move (position, image) pairs evenly spaced along
    the move, ending exactly at the target; one sample means just the
    endpoint. The state position is advanced to the target.
    """
    if samples_per_move < 1:
        raise ValueError("samples_per_move must be >= 1")
    target = clamp_command(target)
    start = state.position
    observations = []
    for j in range(1, samples_per_move + 1):
        pos = start + (j / samples_per_move) * (target - start)
        if j == samples_per_move:
            pos = target
        gx, gy = snap_to_grid(pos, state.world)
        observations.append((pos.copy(), state.world.image_at(gx, gy)))
    state.position = target.copy()
    return observations


def save_dataset(world: WorldDataset, path) -> None:
    """Write the world in the binary dataset format (32-bit pixels)."""
    with open(path, "wb") as f:
        f.write(_DATASET_MAGIC)
        f.write(struct.pack("<IIII", world.grid_w, world.grid_h,
                            world.img_w, world.img_h))
        f.write(struct.pack("<dddd", *world.extent))
        f.write(np.ascontiguousarray(world.images, dtype="<f4").tobytes())


def load_dataset(path) -> WorldDataset:
    """Read a dataset written by save_dataset; round-trip is bit-exact."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:9] != _DATASET_MAGIC:
        raise ValueError(f"{path}: bad magic, not a world dataset")
    off = 9
    try:
        grid_w, grid_h, img_w, img_h = struct.unpack_from("<IIII", data, off)
        off += 16
        extent = struct.unpack_from("<dddd", data, off)
        off += 32
    except struct.error as e:
        raise ValueError(f"{path}: truncated dataset header") from e
    if min(grid_w, grid_h, img_w, img_h) < 1:
        raise ValueError(f"{path}: non-positive dimensions")
    count = grid_w * grid_h * img_h * img_w
    if len(data) - off != count * 4:
        raise ValueError(f"{path}: pixel payload size mismatch")
    pixels = np.frombuffer(data, dtype="<f4", count=count, offset=off)
    if not np.isfinite(pixels).all() or pixels.min() < 0.0 or pixels.max() > 1.0:
        raise ValueError(f"{path}: pixels outside [0,1]")
    images = pixels.reshape(grid_h, grid_w, img_h, img_w).copy()
    return WorldDataset(grid_w, grid_h, img_w, img_h, tuple(extent), images)
