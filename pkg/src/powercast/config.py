"""Run configuration: one JSON file drives every command.

Exactly one data source (a CSV path or an inline synthesis spec) must be
present. Flag overrides are applied by the CLI before validation, and
the effective config is echoed into the output directory so any run can
be audited and replayed.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .lstm import TrainConfig
from .pipeline import (
    MODE_INPUT_ALL_IMFS,
    MODE_INPUT_UNIVARIATE,
    PROTOCOL_DEFAULT,
    PROTOCOL_ROLLING,
    SplitSpec,
)
from .synth import ChannelSpec, SynthSpec, Tone, wind_solar_wave_spec


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    csv_path: str = None
    synth_spec: SynthSpec = None
    output_dir: str = "out"
    split: SplitSpec = field(default_factory=SplitSpec)
    lags: int = 6
    horizon: int = 1
    k_bounds: tuple = (3, 10)
    alpha_bounds: tuple = (1e2, 1e4)
    fixed_k: int = None
    fixed_alpha: float = None
    mvmd_tau: float = 0.0
    mvmd_tol: float = 1e-7
    mvmd_max_iter: int = 500
    mvmd_omega_init: str = "uniform"
    bo_budget: int = 25
    bo_n_init: int = 5
    bo_epochs: int = 15
    train: TrainConfig = field(default_factory=TrainConfig)
    protocol: str = PROTOCOL_DEFAULT
    mode_input: str = MODE_INPUT_UNIVARIATE
    aggregate_first: bool = False
    jobs: int = 1

    def __post_init__(self):
        if (self.csv_path is None) == (self.synth_spec is None):
            raise ConfigError("exactly one data source (csv or synth) must be set")
        if self.lags < 1 or self.horizon < 1:
            raise ConfigError("lags and horizon must be >= 1")
        if (self.fixed_k is None) != (self.fixed_alpha is None):
            raise ConfigError("fixed K and fixed alpha must be set together")
        if self.protocol not in (PROTOCOL_DEFAULT, PROTOCOL_ROLLING):
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.mode_input not in (MODE_INPUT_UNIVARIATE, MODE_INPUT_ALL_IMFS):
            raise ConfigError(f"unknown mode_input {self.mode_input!r}")
        if self.bo_budget < self.bo_n_init or self.bo_n_init < 2:
            raise ConfigError("need bo_budget >= bo_n_init >= 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @property
    def mvmd_defaults(self) -> dict:
        # omega_seed only matters for omega_init="random"; tied to the
        # global seed so every command stays reproducible under --seed.
        return {
            "tau": self.mvmd_tau,
            "tol": self.mvmd_tol,
            "max_iter": self.mvmd_max_iter,
            "omega_init": self.mvmd_omega_init,
            "omega_seed": self.seed,
        }

    def to_dict(self) -> dict:
        data = (
            {"csv": self.csv_path}
            if self.csv_path is not None
            else {"synth": _synth_to_dict(self.synth_spec)}
        )
        return {
            "seed": self.seed,
            "data": data,
            "output_dir": self.output_dir,
            "split": {
                "train_fraction": self.split.train_fraction,
                "validation_fraction": self.split.validation_fraction,
            },
            "windows": {"lags": self.lags, "horizon": self.horizon},
            "mvmd": {
                "k_bounds": list(self.k_bounds),
                "alpha_bounds": list(self.alpha_bounds),
                "fixed_k": self.fixed_k,
                "fixed_alpha": self.fixed_alpha,
                "tau": self.mvmd_tau,
                "tol": self.mvmd_tol,
                "max_iter": self.mvmd_max_iter,
                "omega_init": self.mvmd_omega_init,
            },
            "bo": {
                "budget": self.bo_budget,
                "n_init": self.bo_n_init,
                "epochs": self.bo_epochs,
            },
            "train": asdict(self.train),
            "pipeline": {
                "protocol": self.protocol,
                "mode_input": self.mode_input,
                "aggregate_first": self.aggregate_first,
                "jobs": self.jobs,
            },
        }

    def config_hash(self) -> str:
        """Digest of the experiment-defining fields.

        Where artifacts land (output_dir) and how trainings are scheduled
        (jobs) cannot change numeric results, so they are excluded.
        """
        data = self.to_dict()
        data.pop("output_dir")
        data["pipeline"].pop("jobs")
        canonical = json.dumps(data, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


def _synth_to_dict(spec: SynthSpec) -> dict:
    return {
        "n_samples": spec.n_samples,
        "seed": spec.seed,
        "dt": spec.dt,
        "diurnal_period": spec.diurnal_period,
        "channels": [
            {
                "name": ch.name,
                "tones": [
                    {"amplitude": t.amplitude, "frequency": t.frequency, "phase": t.phase}
                    for t in ch.tones
                ],
                "trend_slope": ch.trend_slope,
                "diurnal_amplitude": ch.diurnal_amplitude,
                "noise_std": ch.noise_std,
                "offset": ch.offset,
            }
            for ch in spec.channels
        ],
    }


def _synth_from_dict(data: dict) -> SynthSpec:
    channels = tuple(
        ChannelSpec(
            name=ch["name"],
            tones=tuple(
                Tone(t["amplitude"], t["frequency"], t.get("phase", 0.0))
                for t in ch.get("tones", [])
            ),
            trend_slope=ch.get("trend_slope", 0.0),
            diurnal_amplitude=ch.get("diurnal_amplitude", 0.0),
            noise_std=ch.get("noise_std", 0.0),
            offset=ch.get("offset", 0.0),
        )
        for ch in data["channels"]
    )
    return SynthSpec(
        n_samples=data["n_samples"],
        channels=channels,
        seed=data.get("seed", 0),
        dt=data.get("dt", 300.0),
        diurnal_period=data.get("diurnal_period", 288.0),
    )


def config_from_dict(data: dict) -> RunConfig:
    try:
        source = data.get("data", {})
        split = data.get("split", {})
        windows = data.get("windows", {})
        mvmd = data.get("mvmd", {})
        bo = data.get("bo", {})
        train_cfg = data.get("train", {})
        pipe = data.get("pipeline", {})
        return RunConfig(
            seed=data.get("seed", 0),
            csv_path=source.get("csv"),
            synth_spec=_synth_from_dict(source["synth"]) if "synth" in source else None,
            output_dir=data.get("output_dir", "out"),
            split=SplitSpec(
                train_fraction=split.get("train_fraction", 0.8),
                validation_fraction=split.get("validation_fraction", 0.125),
            ),
            lags=windows.get("lags", 6),
            horizon=windows.get("horizon", 1),
            k_bounds=tuple(mvmd.get("k_bounds", (3, 10))),
            alpha_bounds=tuple(mvmd.get("alpha_bounds", (1e2, 1e4))),
            fixed_k=mvmd.get("fixed_k"),
            fixed_alpha=mvmd.get("fixed_alpha"),
            mvmd_tau=mvmd.get("tau", 0.0),
            mvmd_tol=mvmd.get("tol", 1e-7),
            mvmd_max_iter=mvmd.get("max_iter", 500),
            mvmd_omega_init=mvmd.get("omega_init", "uniform"),
            bo_budget=bo.get("budget", 25),
            bo_n_init=bo.get("n_init", 5),
            bo_epochs=bo.get("epochs", 15),
            train=TrainConfig(
                hidden_size=train_cfg.get("hidden_size", 32),
                batch_size=train_cfg.get("batch_size", 64),
                epochs=train_cfg.get("epochs", 100),
                learning_rate=train_cfg.get("learning_rate", 1e-3),
                beta1=train_cfg.get("beta1", 0.9),
                beta2=train_cfg.get("beta2", 0.999),
                eps=train_cfg.get("eps", 1e-8),
                clip_norm=train_cfg.get("clip_norm", 5.0),
                seed=train_cfg.get("seed", 0),
            ),
            protocol=pipe.get("protocol", PROTOCOL_DEFAULT),
            mode_input=pipe.get("mode_input", MODE_INPUT_UNIVARIATE),
            aggregate_first=pipe.get("aggregate_first", False),
            jobs=pipe.get("jobs", 1),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad config structure: {exc}") from exc


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: RunConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def default_config() -> RunConfig:
    """Synthetic three-source fixture with desk-scale tuning settings."""
    return RunConfig(synth_spec=wind_solar_wave_spec())
