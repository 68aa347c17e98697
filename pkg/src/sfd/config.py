"""Flat ``key = value`` configuration with dotted section names.

Every key has a typed default below; unknown keys and malformed values raise
:class:`ConfigError`. ``parse(serialize(c)) == c`` for every config.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .data import DataConfig
from .errors import ConfigError, ContractError
from .scheduler import SamplerConfig
from .semvae import SemVaeConfig

# key -> (type, default, description)
SCHEMA: dict[str, tuple[type, object, str]] = {
    "seed": (int, 0, "master seed for every command"),
    "data.dim": (int, 2, "data dimension D"),
    "data.components": (int, 8, "mixture components K"),
    "data.radius": (float, 4.0, "radius of the circle of component means"),
    "data.radial_std": (float, 0.5, "radial spread of each component"),
    "data.tangent_std": (float, 0.05, "tangential spread of each component"),
    "data.texture_amplitude": (float, 0.1, "amplitude of the tangential texture wiggle"),
    "data.texture_period": (float, 0.5, "radial period of the texture wiggle"),
    "data.extra_std": (float, 0.1, "spread in dimensions beyond the first two"),
    "data.n_train": (int, 10000, "training points"),
    "data.n_test": (int, 2000, "held-out points"),
    "semvae.compressor": (str, "vae", "semantic compressor: vae or pca"),
    "semvae.foundation_seed": (int, 1234, "seed of the frozen random-feature encoder"),
    "semvae.c_in": (int, 64, "foundation feature width"),
    "semvae.c_s": (int, 16, "semantic latent width"),
    "semvae.hidden": (int, 128, "SemVAE hidden width"),
    "semvae.blocks": (int, 4, "SemVAE residual blocks per side"),
    "semvae.lambda_kl": (float, 1e-7, "KL weight"),
    "semvae.lr": (float, 1e-3, "SemVAE learning rate"),
    "semvae.batch_size": (int, 128, "SemVAE batch size"),
    "semvae.iterations": (int, 2000, "SemVAE iterations"),
    "semvae.jitter": (float, 0.01, "Gaussian jitter added to training features"),
    "model.hidden": (int, 128, "denoiser width H"),
    "model.blocks": (int, 4, "denoiser blocks"),
    "model.repa_depth": (int, 2, "block whose output is aligned"),
    "model.time_frequencies": (int, 32, "sinusoidal frequencies per timestep"),
    "train.delta_t": (float, 0.3, "semantic lead over texture"),
    "train.beta": (float, 2.0, "semantic velocity weight"),
    "train.lambda_repa": (float, 1.0, "alignment weight"),
    "train.repa_loss": (str, "cosine+mse", "alignment loss: cosine, mse or cosine+mse"),
    "train.lr": (float, 1e-3, "learning rate"),
    "train.weight_decay": (float, 0.0, "AdamW weight decay"),
    "train.batch_size": (int, 128, "batch size"),
    "train.iterations": (int, 5000, "training iterations"),
    "train.time_sampler": (str, "uniform", "raw time draw: uniform or logit_normal"),
    "train.logit_loc": (float, 0.0, "logit-normal location"),
    "train.logit_scale": (float, 1.0, "logit-normal scale"),
    "train.conditional": (bool, True, "train on component labels (else null label only)"),
    "train.label_dropout": (float, 0.1, "probability of replacing a label by the null label"),
    "train.checkpoint_every": (int, 1000, "iterations between checkpoints (0: final only)"),
    "train.log_every": (int, 1, "iterations between log rows"),
    "sample.steps": (int, 100, "Euler steps over the clock"),
    "sample.method": (str, "euler", "euler or adaptive"),
    "sample.atol": (float, 1e-6, "adaptive absolute tolerance"),
    "sample.rtol": (float, 1e-3, "adaptive relative tolerance"),
    "sample.guidance_scale": (float, 1.0, "weak-model guidance scale"),
    "sample.delta_t": (float, -1.0, "inference offset (negative: use the trained offset)"),
    "sample.n": (int, 2000, "samples for unconditional sampling"),
    "sample.per_class": (int, 250, "samples per class for class-balanced sampling"),
    "eval.mmd_bandwidth": (float, 0.0, "RBF bandwidth (0: median heuristic)"),
    "eval.deltas": (str, "0.0,0.3,1.0", "sweep offsets"),
    "eval.seeds": (str, "0,1,2", "sweep seeds"),
}


def _convert(key: str, raw) -> object:
    typ = SCHEMA[key][0]
    if typ is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "1", "yes"):
            return True
        if text in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if typ is int and isinstance(raw, float):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}") from None


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Config:
    values: dict[str, object] = field(default_factory=lambda: {k: v[1] for k, v in SCHEMA.items()})

    def __post_init__(self):
        unknown = set(self.values) - set(SCHEMA)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        full = {k: v[1] for k, v in SCHEMA.items()}
        full.update({k: _convert(k, v) for k, v in self.values.items()})
        object.__setattr__(self, "values", full)

    def __getitem__(self, key: str):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        return self.values[key]

    def with_overrides(self, overrides: dict[str, object]) -> "Config":
        return Config({**self.values, **{k: v for k, v in overrides.items() if v is not None}})

    def section(self, prefix: str) -> dict[str, object]:
        return {k[len(prefix) + 1:]: v for k, v in self.values.items() if k.startswith(prefix + ".")}

    # -- typed views ---------------------------------------------------------
    def data(self) -> DataConfig:
        return _build(DataConfig, self.section("data"))

    def semvae(self) -> SemVaeConfig:
        s = self.section("semvae")
        return _build(SemVaeConfig, {k: v for k, v in s.items() if k not in ("compressor", "foundation_seed")})

    def train(self):
        from .train import TrainConfig

        return _build(TrainConfig, {**self.section("train"), "lambda_kl": self["semvae.lambda_kl"],
                                    "seed": self["seed"]})

    def sampler(self, trained_delta_t: float | None = None) -> SamplerConfig:
        dt = self["sample.delta_t"]
        if dt < 0:
            dt = self["train.delta_t"] if trained_delta_t is None else trained_delta_t
        return _build(SamplerConfig, dict(num_steps=self["sample.steps"], method=self["sample.method"],
                                          atol=self["sample.atol"], rtol=self["sample.rtol"],
                                          guidance_scale=self["sample.guidance_scale"], delta_t=dt))

    def deltas(self) -> list[float]:
        return _float_list("eval.deltas", self["eval.deltas"])

    def seeds(self) -> list[int]:
        return [int(v) for v in _float_list("eval.seeds", self["eval.seeds"], integer=True)]

    def check(self) -> "Config":
        """Build every typed view so invalid values surface as ConfigError."""
        self.data(), self.semvae(), self.train(), self.sampler(), self.deltas(), self.seeds()
        if self["semvae.compressor"] not in ("vae", "pca"):
            raise ConfigError("semvae.compressor must be vae or pca")
        return self


def _float_list(key: str, text: str, integer: bool = False) -> list[float]:
    try:
        vals = [int(t) if integer else float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma-separated list, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{key} is empty")
    return vals


def _build(cls, kwargs):
    try:
        return cls(**kwargs)
    except (ContractError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from None


def parse(text: str) -> Config:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    return Config(values)


def serialize(cfg: Config) -> str:
    return "".join(f"{k} = {_format(cfg.values[k])}\n" for k in SCHEMA)


def documented_defaults() -> str:
    """The default config with one comment line per key."""
    return "".join(f"# {doc}\n{k} = {_format(default)}\n" for k, (_, default, doc) in SCHEMA.items())


def load(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse(path.read_text())
