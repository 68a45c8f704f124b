"""Reference scenarios, config files and experiment runs against the SCARA simulator."""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AimoleError, ConfigError, PreconditionError
from .ilc import LearningConfig, run_learning
from .plant import PlantParameters, ScaraPlant
from .trajectories import interleave, write_csv

log = logging.getLogger(__name__)

SCENARIOS = ("s1_point_to_point", "s2_sinusoid", "s3_multiharmonic")
SCENARIO_ALIASES = {"s1": SCENARIOS[0], "s2": SCENARIOS[1], "s3": SCENARIOS[2]}
DEFAULT_POSE = (0.0, np.pi / 6)
DEFAULT_SEED = 42
# fixed-length protocol: every run executes exactly learn.max_trials trials
HARNESS_LEARNING_DEFAULTS = {"stop_threshold": 0.0}


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: str
    num_samples: int
    sample_period: float
    initial_pose: tuple
    reference: object


@dataclass(frozen=True)
class ScenarioSettings:
    scenario: str = "all"
    num_samples: int = 200
    sample_period: float = 0.02
    initial_alpha: float = DEFAULT_POSE[0]
    initial_beta: float = DEFAULT_POSE[1]


@dataclass(frozen=True)
class PlantSettings:
    noise_std: float = 0.0
    substeps: int = 4
    divergence_bound: float = 1e3


@dataclass
class RunReport:
    scenario_id: str
    history: object
    wall_time: float
    config: dict
    files: list
    failed: bool = False
    failure: str = ""


def resolve_scenario(name):
    if name in SCENARIOS:
        return name
    if name in SCENARIO_ALIASES:
        return SCENARIO_ALIASES[name]
    raise PreconditionError(f"unknown scenario {name!r}; choose from "
                            + ", ".join(list(SCENARIO_ALIASES) + list(SCENARIOS)))


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s**2)


def envelope(t, horizon, dt=0.0):
    """0 -> 1 -> 0 window: 5 % dwell, 25 % quintic ramp, flat top, mirrored.

    The dwell never covers less than 1.5 sample periods, so the first and
    last sample differences are exactly zero on short horizons too.
    """
    dwell, ramp = max(0.05 * horizon, 1.5 * dt), 0.25 * horizon
    up = _smoothstep((t - dwell) / ramp)
    down = _smoothstep((horizon - dwell - t) / ramp)
    return np.minimum(up, down)


def build_reference(scenario_id, num_samples=200, dt=0.02, initial_pose=DEFAULT_POSE):
    """Joint-space reference for one of the three built-in scenarios.

    s1 is a minimum-jerk move by (+pi/2, -pi/3) over the middle half of the
    horizon. s2 and s3 are windowed sinusoids about the initial pose. All
    references start at ``initial_pose`` with exactly zero slope at both ends.
    """
    scenario_id = resolve_scenario(scenario_id)
    if num_samples < 16:
        raise PreconditionError("references need at least 16 samples")
    t = np.arange(num_samples) * dt
    horizon = t[-1]
    a0, b0 = initial_pose
    if scenario_id == "s1_point_to_point":
        s = _smoothstep((t - 0.25 * horizon) / (0.5 * horizon))
        alpha = a0 + (np.pi / 2) * s
        beta = b0 - (np.pi / 3) * s
    else:
        w = envelope(t, horizon, dt)
        if scenario_id == "s2_sinusoid":
            alpha = a0 + 0.8 * w * np.sin(2 * np.pi * 0.5 * t)
            beta = b0 + 0.6 * w * np.sin(2 * np.pi * 0.75 * t)
        else:
            wave = 0.6 * np.sin(2 * np.pi * 0.4 * t) + 0.25 * np.sin(2 * np.pi * 1.2 * t)
            alpha = a0 + w * wave
            beta = b0 + w * wave
    ref = interleave(np.column_stack([alpha, beta]), dt)
    return ScenarioSpec(scenario_id, num_samples, dt, (a0, b0), ref)


def forward_kinematics(joints, params=PlantParameters()):
    """End-effector (x, y) in metres; ``joints`` may be one pose or an (N, 2) array."""
    q = np.asarray(joints, dtype=float)
    a, b = q[..., 0], q[..., 1]
    l1, l2 = params.link_length_1, params.link_length_2
    return np.stack([l1 * np.cos(a) + l2 * np.cos(a + b),
                     l1 * np.sin(a) + l2 * np.sin(a + b)], axis=-1)


# -- config file ----------------------------------------------------------------

_SECTIONS = {
    "plant": (PlantParameters, PlantSettings),
    "learn": (LearningConfig,),
    "scenario": (ScenarioSettings,),
}
_EXCLUDED = {("learn", "seed")}


def _default(section, f):
    if section == "learn" and f.name in HARNESS_LEARNING_DEFAULTS:
        return HARNESS_LEARNING_DEFAULTS[f.name]
    return f.default


def _fields(section):
    out = {}
    for cls in _SECTIONS[section]:
        for f in dataclasses.fields(cls):
            if (section, f.name) not in _EXCLUDED:
                out[f.name] = (cls, _default(section, f))
    return out


def config_keys():
    """All accepted keys with their defaults."""
    keys = {"seed": DEFAULT_SEED}
    for section in _SECTIONS:
        for name, (cls, default) in _fields(section).items():
            keys[f"{section}.{name}"] = default
    return keys


def _convert(raw, default, key, line):
    text = raw.strip()
    try:
        if default is None or isinstance(default, float):
            if default is None and text.lower() in ("", "auto", "none"):
                return None
            return float(text)
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} for {key}", line=line, key=key) from None
    return text


@dataclass(frozen=True)
class HarnessConfig:
    plant: PlantParameters
    plant_settings: PlantSettings
    learning: LearningConfig
    scenario: ScenarioSettings

    @property
    def seed(self):
        return self.learning.seed


def default_config(seed=DEFAULT_SEED):
    return HarnessConfig(PlantParameters(), PlantSettings(),
                         LearningConfig(seed=seed, **HARNESS_LEARNING_DEFAULTS), ScenarioSettings())


def parse_config(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}: expected 'key = value', got {stripped!r}", line=lineno)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key == "seed":
            values["seed"] = _convert(raw, 0, key, lineno)
            continue
        section, _, name = key.partition(".")
        if section not in _SECTIONS or name not in _fields(section):
            raise ConfigError(f"{source}: unknown key {key!r}", line=lineno, key=key)
        _, default = _fields(section)[name]
        values[key] = _convert(raw, default, key, lineno)

    def build(cls, section):
        kwargs = {f.name: values[f"{section}.{f.name}"] for f in dataclasses.fields(cls)
                  if f"{section}.{f.name}" in values}
        return kwargs

    plant_kw = build(PlantParameters, "plant")
    # uniform-rod inertias and mid-link COMs follow the link length unless set explicitly
    for i in (1, 2):
        length = plant_kw.get(f"link_length_{i}", 0.3)
        mass = plant_kw.get(f"mass_{i}", 1.0)
        plant_kw.setdefault(f"inertia_{i}", mass * length**2 / 12)
        plant_kw.setdefault(f"com_{i}", length / 2)
    try:
        return HarnessConfig(
            PlantParameters(**plant_kw),
            PlantSettings(**build(PlantSettings, "plant")),
            LearningConfig(seed=values.get("seed", DEFAULT_SEED),
                           **{**HARNESS_LEARNING_DEFAULTS, **build(LearningConfig, "learn")}),
            ScenarioSettings(**build(ScenarioSettings, "scenario")),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path):
    """Read a ``key = value`` config file; missing keys take their defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def config_echo(cfg):
    echo = {"seed": cfg.learning.seed}
    for section, objs in (("plant", (cfg.plant, cfg.plant_settings)), ("learn", (cfg.learning,)),
                          ("scenario", (cfg.scenario,))):
        for obj in objs:
            for f in dataclasses.fields(obj):
                if (section, f.name) not in _EXCLUDED:
                    echo[f"{section}.{f.name}"] = getattr(obj, f.name)
    return echo


# -- running ----------------------------------------------------------------------

def make_plant(spec, cfg):
    a0, b0 = spec.initial_pose
    return ScaraPlant(cfg.plant, spec.num_samples, spec.sample_period, (a0, b0, 0.0, 0.0),
                      noise_std=cfg.plant_settings.noise_std, noise_seed=cfg.learning.seed,
                      substeps=cfg.plant_settings.substeps,
                      bound=cfg.plant_settings.divergence_bound)


def _fmt(v):
    return format(float(v), ".17g")


def write_taskspace(output, params, path):
    xy = forward_kinematics(output.samples(), params)
    with open(path, "w") as fh:
        fh.write("sample,x,y\n")
        for n, (x, y) in enumerate(xy, start=1):
            fh.write(f"{n},{_fmt(x)},{_fmt(y)}\n")


def write_epsilons(epsilons, path):
    with open(path, "w") as fh:
        fh.write("trial,epsilon\n")
        for j, eps in enumerate(epsilons, start=1):
            fh.write(f"{j},{_fmt(eps)}\n")


def run_scenario(spec, plant_params=None, config=None, out_dir="."):
    """Run the learning loop on one scenario and write its CSV outputs.

    Learning failures (divergence, conditioning, calibration) do not raise:
    the report is flagged and every trial completed so far stays on disk.
    """
    cfg = config or default_config()
    if plant_params is not None:
        cfg = dataclasses.replace(cfg, plant=plant_params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(spec.reference, out / "reference.csv")
    files = [out / "reference.csv"]
    epsilons = []

    def on_trial(rec, eps):
        j = rec.trial_index
        for name in ("input", "states", "output"):
            path = out / f"trial_{j}_{name}.csv"
            write_csv(getattr(rec, name), path)
            files.append(path)
        path = out / f"taskspace_trial_{j}.csv"
        write_taskspace(rec.output, cfg.plant, path)
        files.append(path)
        epsilons.append(eps)
        write_epsilons(epsilons, out / "epsilon.csv")

    plant = make_plant(spec, cfg)
    start = time.perf_counter()
    failed, failure, history = False, "", None
    try:
        history = run_learning(plant, spec.reference, cfg.learning, on_trial=on_trial)
    except AimoleError as exc:
        failed, failure = True, f"{type(exc).__name__} at trial {getattr(exc, 'trial_index', '?')}: {exc}"
        history = getattr(exc, "history", None)
        log.error("%s: %s", spec.scenario_id, failure)
    wall = time.perf_counter() - start
    if not epsilons:
        write_epsilons([], out / "epsilon.csv")
    files.append(out / "epsilon.csv")
    report = RunReport(spec.scenario_id, history, wall, config_echo(cfg), files, failed, failure)
    write_report(report, out / "report.txt")
    return report


def write_report(report, path):
    h = report.history
    lines = [
        f"scenario = {report.scenario_id}",
        f"status = {'failed' if report.failed else 'ok'}",
        f"failure = {report.failure}",
        f"trials = {h.num_trials if h else 0}",
        f"final_epsilon = {_fmt(h.epsilons[-1]) if h and h.epsilons else 'nan'}",
        f"stop_reason = {h.stop_reason if h else ''}",
        f"cutoff_frequency_hz = {_fmt(h.cutoff_frequency) if h else 'nan'}",
        f"input_variance = {_fmt(h.input_variance) if h else 'nan'}",
    ]
    lines += [f"config.{k} = {v}" for k, v in report.config.items()]
    # wall time last: the only line that changes between identical runs
    lines.append(f"wall_time_s = {report.wall_time:.3f}")
    Path(path).write_text("\n".join(lines) + "\n")
