"""INI experiment configuration.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``;`` and
``#`` start comments; lists are comma separated. Unknown sections or keys are
rejected so typos fail loudly. Every default is printable with
``advcomm <cmd> --print-config``.

Noise convention: ``snr_db`` is |h|^2 / sigma^2 where sigma^2 is the complex
noise variance per symbol (split evenly over I and Q) for the coded chain and
the variance per real dimension for DeepJSCC; both equal the SNR per real
dimension.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import json
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path


class ConfigError(ValueError):
    pass


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _strs(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentSection:
    system: str = "both"
    attack: tuple[str, ...] = ("vs", "pga")
    snr_db: tuple[float, ...] = (8.0, 10.0, 12.0)
    frames: int = 100
    target_distortion: float = 0.1
    h_mag: float = 1.0
    seed: int = 0
    out: str = "results.csv"
    cache_dir: str = ".advcomm_cache"


@dataclass(frozen=True)
class SourceSection:
    kind: str = "gaussian"
    M: int = 8
    variance: float = 0.0225
    mean: float = 0.5
    sparsity: float = 0.25
    bits_per_sample: int = 8
    lo: float = 0.0
    hi: float = 1.0


@dataclass(frozen=True)
class CodeSection:
    n: int = 108
    rate: str = "5/6"
    col_weight: int = 3
    modulation: str = "qpsk"
    max_iters: int = 50
    weights: tuple[float, ...] = (0.0, 1.0, 0.35, 0.25)

    @property
    def rate_frac(self) -> Fraction:
        return Fraction(self.rate)


@dataclass(frozen=True)
class VsSection:
    extra_weight_e: float = 9.0
    eta_step: float = 0.0  # 0 selects 0.01 * sqrt(mean received symbol power)
    max_steps: int = 5000
    stop: str = "distortion"


@dataclass(frozen=True)
class GmsSection:
    timesteps: int = 10_000
    buffer_size: int = 10_000
    lr: float = 3e-4
    gamma: float = 0.99
    batch_size: int = 64
    target_sync: int = 1000
    alpha_mix: float = 0.3
    episode_cap: int = 200


@dataclass(frozen=True)
class NetSection:
    hidden: int = 64
    channel_dim: int = 0  # 0 matches the coded chain's real dimensions
    train_samples: int = 4096
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    lipschitz_samples: int = 200


@dataclass(frozen=True)
class PgaSection:
    alpha: float = 0.1
    eps_norm: float = 1e-8
    max_iters: int = 10_000


@dataclass(frozen=True)
class CwSection:
    c_init: float = 1.0
    c_min: float = 1e-6
    c_max: float = 100.0
    lr: float = 0.01
    max_iters: int = 2000
    rounds: int = 8
    kappa: float = 0.0


@dataclass(frozen=True)
class AblationSection:
    # modulation:rate:n@snr_db
    settings: tuple[str, ...] = ("qpsk:1/2:132@6", "qpsk:2/3:108@8", "16qam:5/6:108@16")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    source: SourceSection = field(default_factory=SourceSection)
    code: CodeSection = field(default_factory=CodeSection)
    vs: VsSection = field(default_factory=VsSection)
    gms: GmsSection = field(default_factory=GmsSection)
    net: NetSection = field(default_factory=NetSection)
    pga: PgaSection = field(default_factory=PgaSection)
    cw: CwSection = field(default_factory=CwSection)
    ablation: AblationSection = field(default_factory=AblationSection)

    def validate(self) -> "ExperimentConfig":
        e = self.experiment
        if e.system not in ("classical", "semantic", "both"):
            raise ConfigError(f"system must be classical, semantic or both, got {e.system!r}")
        bad = [a for a in e.attack if a not in ("vs", "gms", "pga", "cw", "none")]
        if bad:
            raise ConfigError(f"unknown attack(s): {', '.join(bad)}")
        if e.frames < 1:
            raise ConfigError("frames must be >= 1")
        if not e.snr_db:
            raise ConfigError("snr_db needs at least one value")
        if e.target_distortion <= 0 or e.h_mag <= 0:
            raise ConfigError("target_distortion and h_mag must be positive")
        if self.code.modulation.lower() not in ("qpsk", "16qam", "qam16", "4", "16"):
            raise ConfigError(f"unknown modulation {self.code.modulation!r}")
        if len(self.code.weights) != 4:
            raise ConfigError("code.weights needs four values")
        try:
            self.code.rate_frac
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad code rate {self.code.rate!r}") from exc
        if self.vs.stop not in ("decode_failure", "distortion"):
            raise ConfigError("vs.stop must be decode_failure or distortion")
        for s in self.ablation.settings:
            parse_setting(s)
        return self

    def with_overrides(self, **experiment) -> "ExperimentConfig":
        return dataclasses.replace(self, experiment=dataclasses.replace(self.experiment, **experiment))

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keep key case (M)
        for f in fields(self):
            sec = getattr(self, f.name)
            cp[f.name] = {k.name: _fmt(getattr(sec, k.name)) for k in fields(sec)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self, *sections: str) -> str:
        """Stable hash of the named sections (all when empty)."""
        names = sections or tuple(f.name for f in fields(self))
        blob = json.dumps({n: dataclasses.asdict(getattr(self, n)) for n in names}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def parse_setting(s: str) -> tuple[str, str, int, float]:
    try:
        body, snr = s.split("@")
        mod, rate, n = body.split(":")
        Fraction(rate)
        return mod.strip(), rate.strip(), int(n), float(snr)
    except ValueError as exc:
        raise ConfigError(f"ablation setting {s!r} is not modulation:rate:n@snr") from exc


def _convert(default, text: str, key: str):
    try:
        if isinstance(default, tuple):
            return _floats(text) if (not default or isinstance(default[0], float)) else _strs(text)
        if isinstance(default, bool):
            return text.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    base = ExperimentConfig()
    known = {f.name for f in fields(base)}
    sections = {}
    for name in cp.sections():
        if name not in known:
            raise ConfigError(f"unknown section [{name}]")
        sec = getattr(base, name)
        keys = {k.name: k for k in fields(sec)}
        vals = {}
        for key, raw in cp[name].items():
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            vals[key] = _convert(getattr(sec, key), raw, f"{name}.{key}")
        sections[name] = dataclasses.replace(sec, **vals)
    return dataclasses.replace(base, **sections).validate()


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
