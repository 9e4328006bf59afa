"""Goal set, prediction-error bookkeeping, and learning-progress selection.

Each goal is the standardized latent code of an image from a known grid
cell. A goal's expected learning progress is the tanh-squashed absolute
change of its prediction error between consecutive visits; progress decays
every iteration so untouched goals eventually get revisited. Selection is
epsilon-greedy over learning progress, and command generation mixes the
inverse model's proposal with occasional uniform random movements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import InverseModel, predict_inverse


@dataclass
class Goal:
    id: int
    code: np.ndarray         # standardized latent code of the goal image
    truth_motor: np.ndarray  # grid-cell position, for logging/analysis only
    last_pe: float = 0.0
    lp: float = 0.0
    visits: int = 0


@dataclass
class GoalSet:
    goals: list
    decay: float = 0.99
    epsilon_goal: float = 0.15
    p_random_move: float = 0.30
    selections: int = 0

    def __len__(self) -> int:
        return len(self.goals)

    def lp_values(self) -> np.ndarray:
        return np.array([g.lp for g in self.goals])

    def codes(self) -> np.ndarray:
        return np.array([g.code for g in self.goals])


def init_goals(world, ae, n: int, rng: np.random.Generator,
               decay: float = 0.99, epsilon_goal: float = 0.15,
               p_random_move: float = 0.30) -> GoalSet:
    """Pick n distinct grid cells as goals, encoded with the trained autoencoder."""
    if n > world.n_cells:
        raise ValueError(f"cannot pick {n} goals from {world.n_cells} cells")
    cells = world.all_cells()
    chosen = rng.choice(len(cells), size=n, replace=False)
    goals = []
    for gid, ci in enumerate(chosen):
        gx, gy = cells[int(ci)]
        goals.append(Goal(gid, ae.encode_norm(world.image_at(gx, gy)),
                          world.cell_position(gx, gy)))
    return GoalSet(goals, decay, epsilon_goal, p_random_move)


def compute_pe(predicted: np.ndarray, observed: np.ndarray) -> float:
    """Euclidean distance between predicted and observed latent codes."""
    predicted = np.asarray(predicted, dtype=np.float64)
    observed = np.asarray(observed, dtype=np.float64)
    if predicted.shape != observed.shape:
        raise ValueError("code lengths differ")
    return float(np.linalg.norm(predicted - observed))


def update_lp(goal: Goal, pe_now: float) -> None:
    """Learning progress = tanh of the absolute prediction-error change."""
    if pe_now < 0:
        raise ValueError("prediction error must be non-negative")
    goal.lp = math.tanh(abs(pe_now - goal.last_pe))
    goal.last_pe = pe_now
    goal.visits += 1


def decay_all(goalset: GoalSet) -> None:
    for g in goalset.goals:
        g.lp *= goalset.decay


def select_goal(goalset: GoalSet, rng: np.random.Generator) -> int:
    """Epsilon-greedy argmax over learning progress.

    The first selection of a run is uniform random, as are argmax ties.
    """
    if not goalset.goals:
        raise ValueError("goal set is empty")
    goalset.selections += 1
    n = len(goalset.goals)
    if goalset.selections == 1:
        return int(rng.integers(n))
    if rng.random() < goalset.epsilon_goal:
        return int(rng.integers(n))
    lps = goalset.lp_values()
    ties = np.flatnonzero(lps == lps.max())
    if ties.size == 1:
        return int(ties[0])
    return int(rng.choice(ties))


def choose_command(im: InverseModel, goal_code: np.ndarray, goalset: GoalSet,
                   rng: np.random.Generator):
    """Inverse-model command for the goal, or a uniform random movement.

    Returns (command, was_random).
    """
    if rng.random() < goalset.p_random_move:
        return rng.random(2), True
    return predict_inverse(im, goal_code), False
