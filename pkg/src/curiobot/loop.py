"""The online learning loop: explore, predict, err, learn, remember.

Each iteration selects a goal by expected learning progress, asks the
inverse model for a command (or draws a random movement), predicts the
sensory outcome with the forward model, executes the noisy movement in the
simulator, and turns the prediction error into the goal's learning
progress. Observations accumulate in a buffer; every buffer_len of them,
both models train on the buffer plus everything replayed from episodic
memory, and the buffer then feeds the memory.

A session is fully deterministic given its config: the master seed is
split into independent streams for world generation, network inits, goal
and test-set sampling, and the loop's own stochasticity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import encoder as enc
from . import models as md
from . import motivation as mo
from . import world as ws
from .config import RunConfig, write_config
from .memory import EpisodicMemory
from .nn import save_weights


def add_motor_noise(cmd: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Per-axis Gaussian jitter, clamped back into the unit square."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return np.asarray(cmd, dtype=np.float64).copy()
    return ws.clamp_command(cmd + rng.normal(0.0, sigma, size=2))


@dataclass
class RunLog:
    config: RunConfig
    explore: list = field(default_factory=list)      # (it, goal, was_random, cmd, exec, pe, lp_sel)
    lp: list = field(default_factory=list)           # (it, goal, lp vector)
    goal_preds: list = field(default_factory=list)   # (it, goal_id, pred, truth)
    mse: list = field(default_factory=list)          # (it, fwd_mse, inv_mse)
    memory_log: list = field(default_factory=list)   # (it, occupancy, replaced, forced, diversity)
    pretrain: enc.PretrainHistory = None
    skipped_steps: int = 0


class Session:
    """Mutable state of one run; see run_session for the one-call entry point."""

    def __init__(self, cfg: RunConfig, autoencoder: enc.Autoencoder = None,
                 world: ws.WorldDataset = None):
        self.cfg = cfg
        streams = np.random.SeedSequence(cfg.seed).spawn(6)
        (self._rng_world, self._rng_ae_init, self._rng_ae_fit,
         self._rng_models, self._rng_sample, self._rng_loop) = \
            [np.random.default_rng(s) for s in streams]

        self.world = world if world is not None else ws.generate_world(
            ws.WorldConfig(cfg.grid_w, cfg.grid_h, cfg.img_w, cfg.img_h,
                           cfg.extent, cfg.n_blobs, cfg.blob_r_min, cfg.blob_r_max,
                           cfg.amp_min, cfg.amp_max, cfg.window_frac),
            self._rng_world)

        self.log = RunLog(cfg)
        if autoencoder is not None:
            self.ae = autoencoder
        elif cfg.encoder_path:
            self.ae = enc.load_autoencoder(cfg.encoder_path)
        else:
            self.ae = enc.build_autoencoder(cfg.img_w, cfg.img_h, cfg.latent_dim,
                                            cfg.hidden, self._rng_ae_init)
            self.log.pretrain = enc.pretrain(self.ae, self.world, cfg.ae_epochs,
                                             cfg.ae_minibatch, self._rng_ae_fit)
        if (self.ae.img_w, self.ae.img_h) != (cfg.img_w, cfg.img_h):
            raise ValueError("autoencoder image size does not match the world")

        self.fm = md.new_forward_model(self.ae.latent_dim, self._rng_models)
        self.im = md.new_inverse_model(self.ae.latent_dim, self._rng_models)
        self.fm.opt = self._opt()
        self.im.opt = self._opt()

        self.goals = mo.init_goals(self.world, self.ae, cfg.n_goals,
                                   self._rng_sample, cfg.lp_decay,
                                   cfg.epsilon_goal, cfg.p_random_move)
        self.testset = self._sample_testset()
        self.memory = EpisodicMemory(cfg.mem_batches, cfg.buffer_len)
        self.sim = ws.SimState(np.array([0.5, 0.5]), self.world)
        self.buffer: list = []
        self.iteration = 0

    def _opt(self):
        from .nn import SgdMomentum
        return SgdMomentum(self.cfg.model_lr, self.cfg.model_momentum,
                           self.cfg.model_decay)

    def _sample_testset(self):
        """Held-out cells, disjoint from the goal cells, fixed for the run."""
        goal_pos = {tuple(g.truth_motor) for g in self.goals.goals}
        cells = [c for c in self.world.all_cells()
                 if tuple(self.world.cell_position(*c)) not in goal_pos]
        if self.cfg.testset_size > len(cells):
            raise ValueError("testset_size exceeds the number of non-goal cells")
        chosen = self._rng_sample.choice(len(cells), size=self.cfg.testset_size,
                                         replace=False)
        testset = []
        for ci in chosen:
            gx, gy = cells[int(ci)]
            testset.append(md.SensorimotorSample(
                self.world.cell_position(gx, gy),
                self.ae.encode_norm(self.world.image_at(gx, gy))))
        return testset

    def run_iteration(self):
        """One pass of the per-iteration protocol; returns the explore record."""
        cfg = self.cfg
        rng = self._rng_loop
        self.iteration += 1
        it = self.iteration

        goal_id = mo.select_goal(self.goals, rng)
        goal = self.goals.goals[goal_id]
        cmd, was_random = mo.choose_command(self.im, goal.code, self.goals, rng)
        predicted = md.predict_forward(self.fm, cmd)
        noisy = add_motor_noise(cmd, cfg.motor_noise_sigma, rng)
        observations = ws.execute_move(self.sim, noisy, cfg.samples_per_move)
        exec_pos, img = observations[-1]
        code = self.ae.encode_norm(img)
        pe = mo.compute_pe(predicted, code)
        mo.update_lp(goal, pe)
        mo.decay_all(self.goals)

        if cfg.buffer_intermediate:
            for pos, obs_img in observations:
                self.buffer.append(md.SensorimotorSample(
                    pos, self.ae.encode_norm(obs_img)))
        else:
            self.buffer.append(md.SensorimotorSample(exec_pos, code))

        record = (it, goal_id, was_random, cmd.copy(), exec_pos.copy(), pe, goal.lp)
        self.log.explore.append(record)
        self.log.lp.append((it, goal_id, self.goals.lp_values()))
        preds = md.predict_inverse_batch(self.im, self.goals.codes())
        for g, p in zip(self.goals.goals, preds):
            self.log.goal_preds.append((it, g.id, p.copy(), g.truth_motor.copy()))

        if len(self.buffer) >= cfg.buffer_len:
            replay = self.memory.all_samples()
            skipped_before = self.im.opt.step_count + self.fm.opt.step_count
            md.online_fit(self.im, self.buffer, replay, rng, cfg.buffer_len)
            md.online_fit(self.fm, self.buffer, replay, rng, cfg.buffer_len)
            self._feed_memory(rng)
            self.buffer.clear()
        return record

    def _feed_memory(self, rng):
        it = self.iteration
        if self.cfg.memory_update_per_batch and len(self.memory) >= self.memory.capacity > 0:
            reports = self._insert_batch(rng)
        else:
            reports = [self.memory.insert(s, self.cfg.p_em, rng) for s in self.buffer]
        for rep in reports:
            self.log.memory_log.append(
                (it, len(self.memory), len(rep.replaced_indices),
                 int(rep.was_full and rep.replaced_indices and
                     len(rep.replaced_indices) == 1 and
                     self.memory.forced_replacements > 0 and rep.forced),
                 self.memory.diversity()))

    def _insert_batch(self, rng):
        """Alternative policy: one sweep per buffer, slots drawing random buffer samples."""
        mem = self.memory
        n = len(mem.elements)
        idxs = np.flatnonzero(rng.random(n) < self.cfg.p_em)
        forced = idxs.size == 0
        if forced:
            idxs = np.array([rng.integers(0, n)])
            mem.forced_replacements += 1
        for i in idxs:
            mem.elements[int(i)] = self.buffer[int(rng.integers(len(self.buffer)))]
        mem.inserted += len(self.buffer)
        mem.replaced += int(idxs.size)
        from .memory import MemoryUpdateReport
        rep = MemoryUpdateReport([int(i) for i in idxs], True,
                                 max(int(idxs.size) - 1, 0))
        rep.forced = forced
        return [rep]

    def evaluate(self):
        """Test-set MSE of both models, no side effects."""
        return md.evaluate_mse(self.fm, self.im, self.testset)

    def run(self) -> RunLog:
        for _ in range(self.cfg.iterations):
            self.run_iteration()
            if self.iteration % self.cfg.eval_every == 0:
                fwd, inv = self.evaluate()
                self.log.mse.append((self.iteration, fwd, inv))
        return self.log


def run_session(cfg: RunConfig, out_dir=None, autoencoder=None, world=None) -> RunLog:
    """Run a full session; optionally write all logs and weights to out_dir."""
    session = Session(cfg, autoencoder=autoencoder, world=world)
    log = session.run()
    if out_dir is not None:
        write_run_log(log, session, out_dir)
    return log


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def write_run_log(log: RunLog, session: Session, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    _write_csv(out_dir / "explore.csv",
               ["iteration", "goal_id", "was_random", "cmd_x", "cmd_y",
                "exec_x", "exec_y", "pe", "lp_selected"],
               [(it, g, int(r), c[0], c[1], e[0], e[1], pe, lp)
                for it, g, r, c, e, pe, lp in log.explore])

    n_goals = len(session.goals)
    _write_csv(out_dir / "lp.csv",
               ["iteration", "selected_goal"] + [f"lp_{i}" for i in range(n_goals)],
               [(it, g, *lps) for it, g, lps in log.lp])

    _write_csv(out_dir / "goals.csv",
               ["iteration", "goal_id", "pred_x", "pred_y", "true_x", "true_y"],
               [(it, g, p[0], p[1], t[0], t[1]) for it, g, p, t in log.goal_preds])

    _write_csv(out_dir / "mse.csv", ["iteration", "fwd_mse", "inv_mse"], log.mse)

    _write_csv(out_dir / "memory.csv",
               ["iteration", "occupancy", "replaced_count", "forced", "diversity"],
               log.memory_log)

    write_config(log.config, out_dir / "config.txt")
    save_weights(session.fm.net, out_dir / "forward_model.nn")
    save_weights(session.im.net, out_dir / "inverse_model.nn")
    enc.save_autoencoder(session.ae, out_dir / "autoencoder")
