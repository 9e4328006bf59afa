"""Run configuration: defaults, flat key-value files, CLI overrides.

Config files hold one `namespaced.key = value` pair per line with `#`
comments. Every field of RunConfig maps to one key; unknown keys are
rejected so typos fail loudly. Values written back with write_config
round-trip exactly, which makes each run's config snapshot re-runnable.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path


@dataclass
class RunConfig:
    # world
    grid_w: int = 50
    grid_h: int = 50
    img_w: int = 16
    img_h: int = 16
    extent: tuple = (0.0, 245.0, 0.0, 245.0)
    n_blobs: int = 12
    blob_r_min: float = 0.05
    blob_r_max: float = 0.15
    amp_min: float = 0.5
    amp_max: float = 1.0
    window_frac: float = 0.25
    step_mm: float = 5.0
    samples_per_move: int = 1
    buffer_intermediate: bool = False
    # encoder
    latent_dim: int = 16
    hidden: tuple = (128, 64)
    ae_epochs: int = 50
    ae_minibatch: int = 32
    encoder_path: str = ""
    # internal models
    model_lr: float = 0.0014
    model_momentum: float = 0.8
    model_decay: float = 0.0
    # episodic memory
    mem_batches: int = 20
    p_em: float = 0.1
    memory_update_per_batch: bool = False
    # goals / motivation
    n_goals: int = 9
    epsilon_goal: float = 0.15
    p_random_move: float = 0.30
    lp_decay: float = 0.99
    # loop
    iterations: int = 2000
    buffer_len: int = 16
    eval_every: int = 50
    testset_size: int = 50
    motor_noise_sigma: float = 0.05
    seed: int = 0
    # grid harness
    grid_mem_batches: tuple = (0, 10, 20)
    grid_p_em: tuple = (0.1, 0.01)
    grid_runs: int = 5


KEY_MAP = {
    "world.grid_w": "grid_w",
    "world.grid_h": "grid_h",
    "world.img_w": "img_w",
    "world.img_h": "img_h",
    "world.extent": "extent",
    "world.n_blobs": "n_blobs",
    "world.blob_r_min": "blob_r_min",
    "world.blob_r_max": "blob_r_max",
    "world.amp_min": "amp_min",
    "world.amp_max": "amp_max",
    "world.window_frac": "window_frac",
    "world.step_mm": "step_mm",
    "world.samples_per_move": "samples_per_move",
    "world.buffer_intermediate": "buffer_intermediate",
    "encoder.latent_dim": "latent_dim",
    "encoder.hidden": "hidden",
    "encoder.epochs": "ae_epochs",
    "encoder.minibatch": "ae_minibatch",
    "encoder.path": "encoder_path",
    "models.lr": "model_lr",
    "models.momentum": "model_momentum",
    "models.decay": "model_decay",
    "memory.batches": "mem_batches",
    "memory.p_em": "p_em",
    "memory.update_per_batch": "memory_update_per_batch",
    "goals.n": "n_goals",
    "goals.epsilon": "epsilon_goal",
    "goals.p_random_move": "p_random_move",
    "goals.decay": "lp_decay",
    "loop.iterations": "iterations",
    "loop.buffer_len": "buffer_len",
    "loop.eval_every": "eval_every",
    "loop.testset_size": "testset_size",
    "loop.motor_noise_sigma": "motor_noise_sigma",
    "loop.seed": "seed",
    "grid.mem_batches": "grid_mem_batches",
    "grid.p_em": "grid_p_em",
    "grid.runs": "grid_runs",
}

_FIELD_TO_KEY = {v: k for k, v in KEY_MAP.items()}
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_TUPLE_ELEM = {"extent": float, "hidden": int,
               "grid_mem_batches": int, "grid_p_em": float}


def _parse_value(field_name: str, raw: str):
    ftype = _FIELD_TYPES[field_name]
    raw = raw.strip()
    if ftype in ("int", int):
        return int(raw)
    if ftype in ("float", float):
        return float(raw)
    if ftype in ("bool", bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if ftype in ("str", str):
        return raw
    elem = _TUPLE_ELEM[field_name]
    if not raw:
        return ()
    return tuple(elem(v) for v in raw.split(","))


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_file(path) -> dict:
    """Read a key-value config file into a {namespaced_key: raw_string} dict."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip()
        if key not in KEY_MAP:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def load_run_config(path=None, overrides=None) -> RunConfig:
    """Defaults, then file values, then override mapping (namespaced keys)."""
    values = {}
    if path is not None:
        values.update(parse_config_file(path))
    for key, val in (overrides or {}).items():
        if key not in KEY_MAP:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = val
    kwargs = {}
    for key, raw in values.items():
        name = KEY_MAP[key]
        try:
            kwargs[name] = _parse_value(name, str(raw))
        except ValueError as e:
            raise ValueError(f"config key {key}: {e}") from e
    return RunConfig(**kwargs)


def write_config(cfg: RunConfig, path) -> None:
    """Write every field as its namespaced key; parse/write round-trips."""
    lines = [f"{_FIELD_TO_KEY[f.name]} = {_format_value(getattr(cfg, f.name))}"
             for f in fields(cfg)]
    Path(path).write_text("\n".join(lines) + "\n")


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    return replace(cfg, **kwargs)
