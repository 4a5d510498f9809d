"""Gaussian mixture sequential attack: a block-mixing MDP solved with DQN."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .core_math import RngStream
from .nn import AdamW, DenseNetwork

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


class EvaluationError(RuntimeError):
    pass


def block_size(n_sym: int) -> int:
    return max(1, math.ceil(math.log2(n_sym)))


def interleave(y: np.ndarray) -> np.ndarray:
    out = np.empty(2 * y.size)
    out[0::2] = y.real
    out[1::2] = y.imag
    return out


class GmsEnv:
    """One attack episode on one received frame.

    ``distortion_fn(y)`` runs the receiver on the attacked symbols and returns
    the reconstruction distortion.
    """

    def __init__(self, r, distortion_fn: Callable[[np.ndarray], float], target: float,
                 alpha_mix: float = 0.3, max_steps: int = 200):
        if not 0 <= alpha_mix <= 1:
            raise ValueError("alpha_mix must lie in [0, 1]")
        self.r = np.asarray(r, dtype=complex).copy()
        self.n_sym = self.r.size
        self.block = block_size(self.n_sym)
        self.distortion_fn = distortion_fn
        self.target = target
        self.alpha = alpha_mix
        self.max_steps = max_steps
        self.y = self.r.copy()
        self.t = 0
        self.done = distortion_fn(self.y) >= target

    @property
    def state(self) -> np.ndarray:
        return interleave(self.y)

    @property
    def power(self) -> float:
        s = self.y - self.r
        return float(np.sum(s.real**2 + s.imag**2))

    def block_indices(self, action: int) -> np.ndarray:
        return (action + np.arange(self.block)) % self.n_sym

    def step(self, action: int, rng: RngStream):
        """Returns ``(next_state, reward, done)``."""
        if not 0 <= action < self.n_sym:
            raise ValueError("action out of range")
        before = self.power
        idx = self.block_indices(action)
        yb = self.y[idx]
        var = float(np.mean(np.abs(yb) ** 2))
        noise = math.sqrt(var / 2) * (rng.gen.standard_normal(idx.size) + 1j * rng.gen.standard_normal(idx.size))
        self.y[idx] = (1 - self.alpha) * yb + self.alpha * noise
        self.t += 1
        self.done = self.distortion_fn(self.y) >= self.target
        return self.state, before - self.power, self.done


def env_step(env: GmsEnv, action: int, rng: RngStream):
    return env.step(action, rng)


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.rew = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.d = np.zeros(capacity)
        self.size = 0
        self.pos = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a, rew, s2, done) -> None:
        i = self.pos
        self.s[i], self.a[i], self.rew[i], self.s2[i], self.d[i] = s, a, rew, s2, float(done)
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: RngStream):
        idx = rng.gen.integers(0, self.size, size=batch)
        return self.s[idx], self.a[idx], self.rew[idx], self.s2[idx], self.d[idx]


@dataclass(frozen=True)
class AgentConfig:
    timesteps: int = 10_000
    buffer_size: int = 10_000
    lr: float = 3e-4
    gamma: float = 0.99
    batch_size: int = 64
    target_sync: int = 1000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.5
    learning_starts: int = 500
    train_every: int = 1
    hidden: int = 256
    huber_delta: float = 1.0


@dataclass
class QAgent:
    q: DenseNetwork
    target: DenseNetwork
    replay: ReplayBuffer
    cfg: AgentConfig
    returns: list[float] = field(default_factory=list)

    @classmethod
    def create(cls, n_sym: int, cfg: AgentConfig, rng: RngStream) -> "QAgent":
        q = DenseNetwork.init([2 * n_sym, cfg.hidden, cfg.hidden, n_sym], ["relu", "relu", "linear"], rng)
        return cls(q, q.copy(), ReplayBuffer(cfg.buffer_size, 2 * n_sym), cfg)

    def epsilon(self, step: int) -> float:
        horizon = max(1, int(self.cfg.eps_fraction * self.cfg.timesteps))
        frac = min(1.0, step / horizon)
        return self.cfg.eps_start + frac * (self.cfg.eps_end - self.cfg.eps_start)

    def greedy(self, state) -> int:
        return int(np.argmax(self.q(state)))

    def act(self, state, step: int, rng: RngStream) -> int:
        if rng.gen.random() < self.epsilon(step):
            return int(rng.gen.integers(self.q.output_dim))
        return self.greedy(state)

    def learn(self, opt: AdamW, rng: RngStream) -> float:
        s, a, rew, s2, d = self.replay.sample(self.cfg.batch_size, rng)
        q_next = self.target(s2).max(axis=1)
        y = rew + self.cfg.gamma * (1.0 - d) * q_next
        out, cache = self.q.forward(s, keep=True)
        rows = np.arange(len(a))
        td = out[rows, a] - y
        k = self.cfg.huber_delta
        loss = float(np.mean(np.where(np.abs(td) <= k, 0.5 * td**2, k * (np.abs(td) - 0.5 * k))))
        if not math.isfinite(loss):
            raise TrainingDiverged("temporal-difference loss is not finite")
        g = np.zeros_like(out)
        g[rows, a] = np.clip(td, -k, k) / len(a)
        grads, _ = self.q.backward(cache, g)
        opt.step(grads)
        return loss


def train_gms(env_factory: Callable[[int], GmsEnv], n_sym: int, cfg: AgentConfig, rng: RngStream) -> QAgent:
    """Train a DQN on freshly drawn frames; ``env_factory(episode)`` builds each episode."""
    agent = QAgent.create(n_sym, cfg, rng.child(0))
    opt = AdamW(agent.q.params(), cfg.lr)
    act_rng, env_rng, batch_rng = rng.child(1), rng.child(2), rng.child(3)
    episode = 0
    env = env_factory(episode)
    while env.done:
        episode += 1
        env = env_factory(episode)
    state, ret = env.state, 0.0
    for step in range(cfg.timesteps):
        a = agent.act(state, step, act_rng)
        nxt, rew, done = env.step(a, env_rng)
        truncated = env.t >= env.max_steps and not done
        agent.replay.add(state, a, rew, nxt, done)
        ret += rew
        state = nxt
        if step >= cfg.learning_starts and step % cfg.train_every == 0:
            agent.learn(opt, batch_rng)
        if (step + 1) % cfg.target_sync == 0:
            agent.target.load_params(agent.q)
        if done or truncated:
            agent.returns.append(ret)
            episode += 1
            env = env_factory(episode)
            while env.done:
                episode += 1
                env = env_factory(episode)
            state, ret = env.state, 0.0
    log.info("GMS training: %d episodes, last-20 mean return %.4g", len(agent.returns),
             float(np.mean(agent.returns[-20:])) if agent.returns else math.nan)
    return agent


class GmsEvaluation(NamedTuple):
    mean: float
    stderr: float
    rho: list[float]  # nan for unfinished episodes
    unfinished: int


def run_episode(env: GmsEnv, policy: Callable[[np.ndarray], int], rng: RngStream,
                trace: Callable[[dict], None] | None = None) -> tuple[float, bool, int]:
    """Run to termination or the step cap; returns ``(power, finished, steps)``."""
    if env.done:
        return 0.0, True, 0
    state = env.state
    while env.t < env.max_steps:
        a = policy(state)
        state, rew, done = env.step(a, rng)
        if trace:
            trace({"step": env.t, "action": a, "reward": rew, "power": env.power, "done": done})
        if done:
            return env.power, True, env.t
    return env.power, False, env.t


def random_policy(n_sym: int, rng: RngStream) -> Callable[[np.ndarray], int]:
    return lambda _state: int(rng.gen.integers(n_sym))


def evaluate_gms(policy: Callable[[np.ndarray], int], envs, rng: RngStream) -> GmsEvaluation:
    rho, unfinished = [], 0
    for env in envs:
        p, ok, _ = run_episode(env, policy, rng)
        if ok:
            rho.append(p)
        else:
            rho.append(math.nan)
            unfinished += 1
    done = [v for v in rho if not math.isnan(v)]
    if not done:
        raise EvaluationError("every evaluation episode hit the step cap")
    arr = np.array(done)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.nan
    return GmsEvaluation(float(arr.mean()), se, rho, unfinished)
