import numpy as np
import pytest
from scipy import stats

from curiobot.memory import EpisodicMemory
from curiobot.models import SensorimotorSample


def sample(i):
    return SensorimotorSample(np.array([i / 1000.0, 0.5]), np.array([float(i)]))


def fill(mem, n, rng, p_em=0.0):
    for i in range(n):
        mem.insert(sample(i), p_em, rng)


class TestCapacity:
    def test_zero_capacity_noop(self):
        mem = EpisodicMemory(0, 16)
        rep = mem.insert(sample(0), 0.5, np.random.default_rng(0))
        assert len(mem) == 0
        assert rep.replaced_indices == []
        assert mem.inserted == 0

    def test_capacity_sizes(self):
        assert EpisodicMemory(20, 16).capacity == 320
        assert EpisodicMemory(10, 16).capacity == 160

    def test_appends_until_full(self):
        mem = EpisodicMemory(2, 4)
        rng = np.random.default_rng(0)
        for i in range(12):
            mem.insert(sample(i), 0.5, rng)
            assert len(mem) <= 8
        assert len(mem) == 8

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            EpisodicMemory(-1, 16)
        with pytest.raises(ValueError):
            EpisodicMemory(1, 0)
        mem = EpisodicMemory(1, 4)
        with pytest.raises(ValueError):
            mem.insert(sample(0), 1.5, np.random.default_rng(0))


class TestReplacementPolicy:
    def test_p_zero_forces_single_replacement(self):
        mem = EpisodicMemory(1, 8)
        rng = np.random.default_rng(1)
        fill(mem, 8, rng)
        rep = mem.insert(sample(99), 0.0, rng)
        assert rep.was_full
        assert len(rep.replaced_indices) == 1
        assert mem.forced_replacements == 1

    def test_p_one_replaces_everything(self):
        mem = EpisodicMemory(1, 8)
        rng = np.random.default_rng(2)
        fill(mem, 8, rng)
        rep = mem.insert(sample(99), 1.0, rng)
        assert sorted(rep.replaced_indices) == list(range(8))
        assert rep.duplicates_created == 7
        assert all(s.code[0] == 99.0 for s in mem.all_samples())

    def test_every_element_was_inserted(self):
        mem = EpisodicMemory(2, 8)
        rng = np.random.default_rng(3)
        inserted_keys = set()
        for i in range(200):
            s = sample(i)
            inserted_keys.add(s.key())
            mem.insert(s, 0.2, rng)
        assert all(s.key() in inserted_keys for s in mem.all_samples())

    def test_expected_replacements_binomial(self):
        # mean replacements per insert into a full memory of N slots is
        # N*p + (1-p)^N; checked by Monte Carlo within 1%
        n_slots, trials = 160, 100_000
        for p_em in (0.1, 0.01):
            mem = EpisodicMemory(10, 16)
            rng = np.random.default_rng(42)
            fill(mem, n_slots, rng)
            total = 0
            for i in range(trials):
                total += len(mem.insert(sample(i), p_em, rng).replaced_indices)
            expected = n_slots * p_em + (1.0 - p_em) ** n_slots
            assert abs(total / trials - expected) / expected < 0.01

    def test_forced_victim_uniform(self):
        # p_em = 0 degenerates to uniform single replacement
        n_slots, trials = 160, 100_000
        mem = EpisodicMemory(10, 16)
        rng = np.random.default_rng(7)
        fill(mem, n_slots, rng)
        counts = np.zeros(n_slots)
        for i in range(trials):
            rep = mem.insert(sample(i), 0.0, rng)
            counts[rep.replaced_indices[0]] += 1
        _, p = stats.chisquare(counts)
        assert p > 0.01


class TestContents:
    def test_all_samples_empty(self):
        assert EpisodicMemory(1, 4).all_samples() == []

    def test_all_samples_insertion_order(self):
        mem = EpisodicMemory(1, 4)
        rng = np.random.default_rng(0)
        fill(mem, 3, rng)
        codes = [s.code[0] for s in mem.all_samples()]
        assert codes == [0.0, 1.0, 2.0]

    def test_all_samples_is_copy(self):
        mem = EpisodicMemory(1, 4)
        fill(mem, 2, np.random.default_rng(0))
        out = mem.all_samples()
        out.clear()
        assert len(mem) == 2


class TestDiversity:
    def test_all_distinct(self):
        mem = EpisodicMemory(1, 4)
        fill(mem, 4, np.random.default_rng(0))
        assert mem.diversity() == 1.0

    def test_single_duplicated(self):
        mem = EpisodicMemory(1, 8)
        rng = np.random.default_rng(0)
        fill(mem, 8, rng)
        mem.insert(sample(42), 1.0, rng)
        assert mem.diversity() == 1.0 / 8.0

    def test_empty_convention(self):
        assert EpisodicMemory(0, 16).diversity() == 1.0

    def test_high_p_em_lowers_long_run_diversity(self):
        divs = {}
        for p_em in (0.1, 0.01):
            mem = EpisodicMemory(10, 16)
            rng = np.random.default_rng(11)
            for i in range(3000):
                mem.insert(sample(i), p_em, rng)
            divs[p_em] = mem.diversity()
        assert divs[0.1] < divs[0.01]
