"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Unknown keys are an error.
``paper_scenario`` names the shipped default (``data/paper_scenario.cfg``).

Keys and defaults:

=====================  ==========================  =====================================
key                    default                     meaning
=====================  ==========================  =====================================
sigma                  7.0                         process noise std (m/s^2)
dt                     1.0                         scan interval (s)
survival_prob          0.95                        per-step target persistence
apply_survival         false                       let the simulated target leave
meas_std               10.0                        measurement noise std (m)
region                 -1000, 1000, -1000, 1000    x_min, x_max, y_min, y_max (m)
clutter_rate           5.0                         mean clutter points per scan
detection_prob         0.95                        target detection probability
horizon                50                          scans per run
initial_state          0, 0, 10, -5                x, y, vx, vy at time 0
initial_cov_diag       100, 100, 25, 25            filter prior covariance diagonal
methods                metric_bayes, naive_bayes,  subset of the four methods
                       nn, pda
n_runs                 200                         Monte Carlo runs
master_seed            2020                        root seed
n_sweeps               50                          Gibbs sweeps per scan
burn_in                10                          sweeps discarded before MAP pick
alpha_t                auto                        target concentration (auto: P_d)
alpha_c                auto                        clutter concentration (auto: lambda*(1-P_d))
metric_update          soft                        soft | hard target-set update
gate_probability       0.99                        NN/PDA gate probability
backend                gaussian                    gaussian | particle
n_particles            2000                        particle count for particle backend
workers                1                           worker processes
output                 mse.csv                     report path
=====================  ==========================  =====================================
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .clustering import GibbsConfig
from .dp_core import UniformRect
from .simulator import ScenarioConfig
from .tracker import MotionModel, ObsModel

ALL_METHODS = ("metric_bayes", "naive_bayes", "nn", "pda")
AUTO_ALPHA_FLOOR = 1e-9

DEFAULTS: Dict[str, str] = {
    "sigma": "7.0",
    "dt": "1.0",
    "survival_prob": "0.95",
    "apply_survival": "false",
    "meas_std": "10.0",
    "region": "-1000, 1000, -1000, 1000",
    "clutter_rate": "5.0",
    "detection_prob": "0.95",
    "horizon": "50",
    "initial_state": "0, 0, 10, -5",
    "initial_cov_diag": "100, 100, 25, 25",
    "methods": "metric_bayes, naive_bayes, nn, pda",
    "n_runs": "200",
    "master_seed": "2020",
    "n_sweeps": "50",
    "burn_in": "10",
    "alpha_t": "auto",
    "alpha_c": "auto",
    "metric_update": "soft",
    "gate_probability": "0.99",
    "backend": "gaussian",
    "n_particles": "2000",
    "workers": "1",
    "output": "mse.csv",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    methods: tuple = ALL_METHODS
    n_runs: int = 200
    master_seed: int = 2020
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    output: str = "mse.csv"
    alpha_t: Optional[float] = None
    alpha_c: Optional[float] = None
    metric_update: str = "soft"
    gate_probability: float = 0.99
    backend: str = "gaussian"
    n_particles: int = 2000
    workers: int = 1

    def __post_init__(self):
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        bad = [m for m in self.methods if m not in ALL_METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {ALL_METHODS}")
        if self.metric_update not in ("soft", "hard"):
            raise ConfigError("metric_update must be 'soft' or 'hard'")
        if self.backend not in ("gaussian", "particle"):
            raise ConfigError("backend must be 'gaussian' or 'particle'")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    @property
    def resolved_alpha_t(self) -> float:
        return self.alpha_t if self.alpha_t is not None else self.scenario.detection_probability

    @property
    def resolved_alpha_c(self) -> float:
        if self.alpha_c is not None:
            return self.alpha_c
        sc = self.scenario
        return max(sc.clutter_rate * (1.0 - sc.detection_probability), AUTO_ALPHA_FLOOR)


def _floats(text: str, n: Optional[int] = None, key: str = "") -> list:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"{key}: expected {n} numbers, got {len(vals)}")
    return vals


def _bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def parse_config_text(text: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def paper_scenario_text() -> str:
    return resources.files("metric_bayes").joinpath("data/paper_scenario.cfg").read_text()


def load_config_values(path) -> Dict[str, str]:
    """Merged key-value map (defaults overlaid by the file)."""
    if str(path) == "paper_scenario":
        text = paper_scenario_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    merged = dict(DEFAULTS)
    merged.update(parse_config_text(text))
    return merged


def build_run_config(values: Dict[str, str]) -> RunConfig:
    v = dict(DEFAULTS)
    v.update(values)

    def num(key, cast=float):
        try:
            return cast(v[key])
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {v[key]!r}") from exc

    def opt_alpha(key):
        return None if v[key].strip().lower() == "auto" else num(key)

    x0, x1, y0, y1 = _floats(v["region"], 4, "region")
    try:
        motion = MotionModel.constant_velocity(num("sigma"), num("dt"), num("survival_prob"))
        scenario = ScenarioConfig(
            motion=motion,
            obs=ObsModel.position(num("meas_std")),
            region=UniformRect((x0, y0), (x1, y1)),
            clutter_rate=num("clutter_rate"),
            detection_probability=num("detection_prob"),
            horizon=num("horizon", int),
            initial_state=np.array(_floats(v["initial_state"], 4, "initial_state")),
            initial_cov=np.diag(_floats(v["initial_cov_diag"], 4, "initial_cov_diag")),
            apply_survival=_bool(v["apply_survival"], "apply_survival"),
        )
        methods = tuple(m.strip() for m in v["methods"].split(",") if m.strip())
        return RunConfig(
            scenario=scenario,
            methods=methods,
            n_runs=num("n_runs", int),
            master_seed=num("master_seed", int),
            gibbs=GibbsConfig(num("n_sweeps", int), num("burn_in", int)),
            output=v["output"],
            alpha_t=opt_alpha("alpha_t"),
            alpha_c=opt_alpha("alpha_c"),
            metric_update=v["metric_update"].strip(),
            gate_probability=num("gate_probability"),
            backend=v["backend"].strip(),
            n_particles=num("n_particles", int),
            workers=num("workers", int),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def canonical_text(values: Dict[str, str]) -> str:
    """Normalized ``key = value`` text, sorted by key."""
    return "".join(f"{k} = {values[k]}\n" for k in sorted(values))


def config_hash(values: Dict[str, str]) -> str:
    return hashlib.sha256(canonical_text(values).encode()).hexdigest()
