import math

import numpy as np
import pytest

from advcomm.core_math import RngStream
from advcomm.gms_attack import (AgentConfig, EvaluationError, GmsEnv, ReplayBuffer, block_size,
                                evaluate_gms, random_policy, run_episode, train_gms)


def toy_env(seed, target=1.5):
    r = RngStream(seed, 1).gen.standard_normal(8) + 1j * RngStream(seed, 2).gen.standard_normal(8)
    return GmsEnv(r, lambda y: float(np.sum(np.abs(y - r) ** 2)), target, 0.3, 50)


def test_block_size_and_wraparound():
    assert block_size(54) == 6 and block_size(8) == 3 and block_size(1) == 1
    env = toy_env(0)
    assert list(env.block_indices(7)) == [7, 0, 1]


def test_rewards_telescope_to_final_power():
    for seed in range(10):
        env = toy_env(seed)
        rewards = []
        rng = RngStream(seed, 3)
        while not env.done and env.t < env.max_steps:
            _, rew, _ = env.step(int(rng.gen.integers(8)), rng)
            rewards.append(rew)
        assert -sum(rewards) == pytest.approx(env.power, rel=1e-12, abs=1e-12)


def test_mixing_only_touches_the_block():
    env = toy_env(1)
    before = env.y.copy()
    env.step(2, RngStream(0))
    changed = np.flatnonzero(env.y != before)
    assert set(changed) <= {2, 3, 4}


def test_replay_buffer_wraps():
    buf = ReplayBuffer(3, 2)
    for i in range(5):
        buf.add(np.full(2, i), i, float(i), np.zeros(2), False)
    assert len(buf) == 3 and sorted(buf.a) == [2, 3, 4]


def test_training_runs_and_evaluation():
    agent = train_gms(lambda ep: toy_env(100 + ep), 8, AgentConfig(timesteps=300, learning_starts=50,
                                                                    target_sync=100), RngStream(0, 9))
    assert agent.returns and agent.q.check_finite()
    ev = evaluate_gms(agent.greedy, [toy_env(500 + i) for i in range(10)], RngStream(0, 10))
    assert len(ev.rho) == 10 and ev.mean > 0
    rnd = evaluate_gms(random_policy(8, RngStream(0, 11)), [toy_env(500 + i) for i in range(10)], RngStream(0, 10))
    assert rnd.unfinished + sum(not math.isnan(v) for v in rnd.rho) == 10


def test_unreachable_target_raises():
    envs = [toy_env(i, target=1e9) for i in range(2)]
    with pytest.raises(EvaluationError):
        evaluate_gms(random_policy(8, RngStream(1)), envs, RngStream(2))
    p, done, steps = run_episode(toy_env(0, target=-1.0), lambda s: 0, RngStream(3))
    assert (p, done, steps) == (0.0, True, 0)
