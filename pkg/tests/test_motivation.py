import math

import numpy as np
import pytest
from scipy import stats

from curiobot import encoder as enc
from curiobot import models as md
from curiobot import motivation as mo
from curiobot import world as ws


def make_goalset(lps, epsilon=0.0, p_random=0.0, decay=0.99):
    goals = [mo.Goal(i, np.zeros(4), np.zeros(2), lp=lp) for i, lp in enumerate(lps)]
    return mo.GoalSet(goals, decay=decay, epsilon_goal=epsilon,
                      p_random_move=p_random, selections=1)


@pytest.fixture(scope="module")
def setup():
    cfg = ws.WorldConfig(grid_w=10, grid_h=10, img_w=8, img_h=8, n_blobs=4)
    world = ws.generate_world(cfg, np.random.default_rng(0))
    ae = enc.build_autoencoder(8, 8, latent_dim=5, hidden=(16, 8),
                               rng=np.random.default_rng(1))
    return world, ae


@pytest.fixture(scope="module")
def im():
    return md.new_inverse_model(4, np.random.default_rng(0))


class TestInitGoals:
    def test_nine_distinct_goals(self, setup):
        world, ae = setup
        gs = mo.init_goals(world, ae, 9, np.random.default_rng(2))
        assert len(gs) == 9
        assert len({g.id for g in gs.goals}) == 9
        positions = {tuple(g.truth_motor) for g in gs.goals}
        assert len(positions) == 9

    def test_initialized_to_zero(self, setup):
        world, ae = setup
        gs = mo.init_goals(world, ae, 9, np.random.default_rng(2))
        assert all(g.lp == 0.0 and g.last_pe == 0.0 and g.visits == 0
                   for g in gs.goals)

    def test_same_seed_same_cells(self, setup):
        world, ae = setup
        a = mo.init_goals(world, ae, 5, np.random.default_rng(3))
        b = mo.init_goals(world, ae, 5, np.random.default_rng(3))
        for ga, gb in zip(a.goals, b.goals):
            assert np.array_equal(ga.truth_motor, gb.truth_motor)

    def test_too_many_goals(self, setup):
        world, ae = setup
        with pytest.raises(ValueError):
            mo.init_goals(world, ae, 101, np.random.default_rng(0))


class TestComputePe:
    def test_identical_zero(self):
        c = np.array([0.1, -0.4, 2.0])
        assert mo.compute_pe(c, c) == 0.0

    def test_three_four_five(self):
        a = np.zeros(5)
        b = np.array([3.0, 4.0, 0.0, 0.0, 0.0])
        assert mo.compute_pe(a, b) == 5.0

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=6), rng.normal(size=6)
        assert mo.compute_pe(a, b) == mo.compute_pe(b, a)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mo.compute_pe(np.zeros(3), np.zeros(4))


class TestUpdateLp:
    def test_no_change_zero_lp(self):
        g = mo.Goal(0, np.zeros(2), np.zeros(2), last_pe=0.3)
        mo.update_lp(g, 0.3)
        assert g.lp == 0.0
        assert g.last_pe == 0.3
        assert g.visits == 1

    def test_known_value(self):
        g = mo.Goal(0, np.zeros(2), np.zeros(2), last_pe=0.2)
        mo.update_lp(g, 0.5)
        assert g.lp == pytest.approx(math.tanh(0.3), abs=1e-15)
        assert g.lp == pytest.approx(0.2913126, abs=1e-7)

    def test_range_and_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b = rng.uniform(0, 10, 2)
            g1 = mo.Goal(0, np.zeros(2), np.zeros(2), last_pe=a)
            g2 = mo.Goal(0, np.zeros(2), np.zeros(2), last_pe=b)
            mo.update_lp(g1, b)
            mo.update_lp(g2, a)
            assert g1.lp == g2.lp
            assert 0.0 <= g1.lp < 1.0

    def test_negative_pe_rejected(self):
        g = mo.Goal(0, np.zeros(2), np.zeros(2))
        with pytest.raises(ValueError):
            mo.update_lp(g, -0.1)


class TestDecay:
    def test_identity(self):
        gs = make_goalset([0.5, 0.2], decay=1.0)
        mo.decay_all(gs)
        assert gs.goals[0].lp == 0.5

    def test_single_step(self):
        gs = make_goalset([1.0], decay=0.99)
        mo.decay_all(gs)
        assert gs.goals[0].lp == pytest.approx(0.99)

    def test_k_applications(self):
        gs = make_goalset([0.8], decay=0.9)
        for _ in range(5):
            mo.decay_all(gs)
        assert gs.goals[0].lp == pytest.approx(0.8 * 0.9 ** 5)


class TestSelectGoal:
    def test_argmax(self):
        gs = make_goalset([0.5, 0.1, 0.2])
        assert mo.select_goal(gs, np.random.default_rng(0)) == 0

    def test_first_selection_uniform(self):
        # fresh goal sets pick uniformly even with epsilon 0
        counts = np.zeros(3)
        for seed in range(3000):
            gs = make_goalset([0.9, 0.0, 0.0])
            gs.selections = 0
            counts[mo.select_goal(gs, np.random.default_rng(seed))] += 1
        _, p = stats.chisquare(counts)
        assert p > 0.01

    def test_epsilon_one_uniform(self):
        gs = make_goalset([0.9, 0.0, 0.0, 0.0], epsilon=1.0)
        rng = np.random.default_rng(5)
        counts = np.zeros(4)
        for _ in range(100_000):
            counts[mo.select_goal(gs, rng)] += 1
        _, p = stats.chisquare(counts)
        assert p > 0.01

    def test_tie_break_uniform(self):
        gs = make_goalset([0.3, 0.3, 0.3])
        rng = np.random.default_rng(6)
        counts = np.zeros(3)
        for _ in range(100_000):
            counts[mo.select_goal(gs, rng)] += 1
        _, p = stats.chisquare(counts)
        assert p > 0.01

    def test_scale_invariance(self):
        # scaling all lps by a positive constant keeps the argmax choice
        gs1 = make_goalset([0.1, 0.4, 0.2])
        gs2 = make_goalset([0.05, 0.2, 0.1])
        assert mo.select_goal(gs1, np.random.default_rng(0)) == \
               mo.select_goal(gs2, np.random.default_rng(0))

    def test_empty_rejected(self):
        gs = mo.GoalSet([])
        with pytest.raises(ValueError):
            mo.select_goal(gs, np.random.default_rng(0))


class TestChooseCommand:
    def test_never_random(self, im):
        gs = make_goalset([0.0] * 3, p_random=0.0)
        code = np.random.default_rng(1).normal(size=4)
        cmd, was_random = mo.choose_command(im, code, gs, np.random.default_rng(2))
        assert not was_random
        assert np.array_equal(cmd, md.predict_inverse(im, code))

    def test_always_random_uniform(self, im):
        gs = make_goalset([0.0] * 3, p_random=1.0)
        code = np.zeros(4)
        rng = np.random.default_rng(3)
        xs, ys = [], []
        for _ in range(100_000):
            cmd, was_random = mo.choose_command(im, code, gs, rng)
            assert was_random
            xs.append(cmd[0])
            ys.append(cmd[1])
        assert stats.kstest(xs, "uniform").pvalue > 0.01
        assert stats.kstest(ys, "uniform").pvalue > 0.01

    def test_flag_reports_branch(self, im):
        gs = make_goalset([0.0] * 3, p_random=0.5)
        code = np.zeros(4)
        rng = np.random.default_rng(4)
        inv_cmd = md.predict_inverse(im, code)
        for _ in range(200):
            cmd, was_random = mo.choose_command(im, code, gs, rng)
            assert was_random == (not np.array_equal(cmd, inv_cmd))
