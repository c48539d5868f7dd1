"""Parameter sweeps with replications and ensemble summaries.

A sweep spec is a flat ``key = value`` text file. The axis keys ``rt``,
``packets``, ``infected`` and ``susceptible`` may be repeated; every other key
is a scalar setting applied to all runs::

    map = city.pgm
    radius = 3
    replications = 20
    base_seed = 1000
    rt = 1:5
    rt = 41:80
    packets = 3
    packets = 6
    infected = 20
    susceptible = 80

Runs are the Cartesian product of the axes (in the order rt, packets,
infected, susceptible) times the replications; run ``k`` uses seed
``base_seed + k``.
"""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .engine import Outcome, OutcomeKind, SimulationConfig, load_world, simulate
from .errors import ConfigInvalid

log = logging.getLogger(__name__)

AXIS_KEYS = ("rt", "packets", "infected", "susceptible")

# scalar spec key -> (SimulationConfig field, parser)
_SCALARS = {
    "map": ("map_path", str),
    "attraction": ("attraction_path", str),
    "threshold": ("threshold", int),
    "invert": ("invert", None),
    "radius": ("radius", float),
    "speed": ("speed", int),
    "band": ("band_fraction", float),
    "max_steps": ("max_steps", int),
    "reset_on_disconnect": ("reset_on_disconnect", None),
    "static": ("static_devices", None),
}

SUMMARY_COLUMNS = (
    "config",
    "rt_min",
    "rt_max",
    "packets",
    "infected",
    "susceptible",
    "rate_is",
    "density",
    "runs",
    "failures",
    "pandemic_fraction",
    "pandemic_count",
    "prevented_count",
    "censored_count",
    "peak_step_median",
    "peak_step_iqr",
    "peak_infected_median",
    "peak_infected_iqr",
    "extinction_step_median",
    "extinction_step_iqr",
)


def parse_rt(text: str) -> tuple[int, int]:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ConfigInvalid(f"response-time interval must look like MIN:MAX, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise ConfigInvalid(f"need 1 <= MIN <= MAX in response-time interval, got {text!r}")
    return lo, hi


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigInvalid(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class SweepSpec:
    base: SimulationConfig
    rt: tuple
    packets: tuple
    infected: tuple
    susceptible: tuple
    replications: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigInvalid("replications must be >= 1")
        for key in AXIS_KEYS:
            if not getattr(self, key):
                raise ConfigInvalid(f"axis {key!r} has no values")

    def configurations(self) -> list[SimulationConfig]:
        out = []
        for (lo, hi), p, n_i, n_s in itertools.product(self.rt, self.packets, self.infected, self.susceptible):
            out.append(replace(self.base, rt_min=lo, rt_max=hi, packets=p, n_infected=n_i, n_susceptible=n_s))
        return out

    def runs(self) -> list[tuple[int, int, SimulationConfig]]:
        """``(config index, replication, config with seed)`` for every run, in run-index order."""
        out = []
        k = 0
        for ci, cfg in enumerate(self.configurations()):
            for rep in range(self.replications):
                out.append((ci, rep, replace(cfg, seed=self.base_seed + k)))
                k += 1
        return out


def parse_sweep_spec(text: str, base_dir: str | os.PathLike | None = None) -> SweepSpec:
    axes: dict[str, list] = {key: [] for key in AXIS_KEYS}
    scalars: dict[str, object] = {}
    replications, base_seed = 1, 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key == "rt":
                axes["rt"].append(parse_rt(value))
            elif key in AXIS_KEYS:
                axes[key].append(int(value))
            elif key == "replications":
                replications = int(value)
            elif key == "base_seed":
                base_seed = int(value)
            elif key in _SCALARS:
                field_name, parser = _SCALARS[key]
                scalars[field_name] = _parse_bool(value) if parser is None else parser(value)
            else:
                raise ConfigInvalid(f"unknown key {key!r}")
        except ValueError:
            raise ConfigInvalid(f"line {lineno}: bad value for {key!r}: {value!r}") from None
        except ConfigInvalid as exc:
            raise ConfigInvalid(f"line {lineno}: {exc}") from None
    if "map_path" not in scalars:
        raise ConfigInvalid("sweep spec must name a map")
    for key in ("map_path", "attraction_path"):
        if key in scalars and base_dir is not None and not os.path.isabs(scalars[key]):
            scalars[key] = os.path.join(base_dir, scalars[key])
    defaults = SimulationConfig()
    axes["rt"] = axes["rt"] or [(defaults.rt_min, defaults.rt_max)]
    axes["packets"] = axes["packets"] or [defaults.packets]
    axes["infected"] = axes["infected"] or [defaults.n_infected]
    axes["susceptible"] = axes["susceptible"] or [defaults.n_susceptible]
    return SweepSpec(
        base=SimulationConfig(**scalars),
        rt=tuple(axes["rt"]),
        packets=tuple(axes["packets"]),
        infected=tuple(axes["infected"]),
        susceptible=tuple(axes["susceptible"]),
        replications=replications,
        base_seed=base_seed,
    )


def load_sweep_spec(path: str | os.PathLike) -> SweepSpec:
    path = Path(path)
    return parse_sweep_spec(path.read_text(), base_dir=path.parent)


def config_label(cfg: SimulationConfig) -> str:
    return f"rt{cfg.rt_min}-{cfg.rt_max}_p{cfg.packets}_i{cfg.n_infected}_s{cfg.n_susceptible}"


@dataclass(frozen=True)
class Spread:
    median: float
    iqr: float


@dataclass(frozen=True)
class EnsembleSummary:
    runs: int
    pandemic_fraction: float
    pandemic_count: int
    prevented_count: int
    censored_count: int
    peak_step: Spread | None
    peak_infected: Spread | None
    extinction_step: Spread | None


def lower_median(values) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def _spread(values) -> Spread | None:
    if not values:
        return None
    q1, q3 = np.percentile(values, [25, 75])
    return Spread(lower_median(values), float(q3 - q1))


def aggregate(outcomes: list[Outcome]) -> EnsembleSummary:
    """Summarise an ensemble; step statistics skip censored runs."""
    if not outcomes:
        raise ValueError("cannot aggregate an empty ensemble")
    kinds = [o.kind for o in outcomes]
    finished = [o for o in outcomes if o.kind is not OutcomeKind.CENSORED]
    pandemic = kinds.count(OutcomeKind.PANDEMIC)
    return EnsembleSummary(
        runs=len(outcomes),
        pandemic_fraction=pandemic / len(outcomes),
        pandemic_count=pandemic,
        prevented_count=kinds.count(OutcomeKind.PREVENTED),
        censored_count=kinds.count(OutcomeKind.CENSORED),
        peak_step=_spread([o.peak_step for o in finished]),
        peak_infected=_spread([o.peak_infected for o in finished]),
        extinction_step=_spread([o.extinction_step for o in finished if o.extinction_step is not None]),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def summary_row(cfg: SimulationConfig, summary: EnsembleSummary | None, failures: int, map_vertices: int) -> list[str]:
    def spread(s):
        return [None, None] if s is None else [float(s.median), s.iqr]

    row = [
        config_label(cfg),
        cfg.rt_min,
        cfg.rt_max,
        cfg.packets,
        cfg.n_infected,
        cfg.n_susceptible,
        cfg.n_infected / (cfg.n_susceptible + 1),
        (cfg.n_infected + cfg.n_susceptible) / map_vertices,
    ]
    if summary is None:
        row += [0, failures] + [None] * (len(SUMMARY_COLUMNS) - 10)
    else:
        row += [
            summary.runs,
            failures,
            summary.pandemic_fraction,
            summary.pandemic_count,
            summary.prevented_count,
            summary.censored_count,
            *spread(summary.peak_step),
            *spread(summary.peak_infected),
            *spread(summary.extinction_step),
        ]
    return [_fmt(v) for v in row]


def _run_one(job):
    index, cfg, out_path = job
    try:
        result = simulate(cfg)
        result.write_csv(out_path)
        return index, result.outcome, None
    except Exception as exc:  # recorded per run; the sweep carries on
        return index, None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, out_dir: str | os.PathLike, jobs: int = 1) -> list[dict]:
    """Execute every run, write per-run CSVs plus ``summary.csv``; return the summary rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    configs = spec.configurations()
    world = load_world(configs[0])  # fail fast on map errors
    runs = spec.runs()
    job_list = [
        (k, cfg, out_dir / f"{config_label(cfg)}_r{rep:03d}.csv") for k, (ci, rep, cfg) in enumerate(runs)
    ]
    results: list[tuple] = [None] * len(job_list)
    if jobs <= 1:
        for job in job_list:
            results[job[0]] = _run_one(job)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for res in pool.map(_run_one, job_list):
                results[res[0]] = res

    rows = []
    for ci, cfg in enumerate(configs):
        outcomes, failures = [], 0
        for k, (run_ci, rep, _) in enumerate(runs):
            if run_ci != ci:
                continue
            _, outcome, error = results[k]
            if error is not None:
                failures += 1
                log.warning("run %d (%s rep %d) failed: %s", k, config_label(cfg), rep, error)
            else:
                outcomes.append(outcome)
        summary = aggregate(outcomes) if outcomes else None
        rows.append(dict(zip(SUMMARY_COLUMNS, summary_row(cfg, summary, failures, world.graph.vertex_count))))

    with open(out_dir / "summary.csv", "w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row[c] for c in SUMMARY_COLUMNS) + "\n")
    return rows
