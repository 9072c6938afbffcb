"""Experiment records, sweep tables and the figure configurations."""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import __version__, analytic, simulator
from .core import CoverageError, Scheme, SystemConfig, db_to_linear, validate

AXES = ("N", "N_r", "D", "T_db", "rho_db")
FIGURES = (2, 3, 4, 5, 6, 7, 8)


def _num(v) -> str:
    """Shortest text that reads back as the same number."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def parse_values(text: str) -> tuple[float, ...]:
    """``"1:32"`` (inclusive), ``"0:10:2"`` or ``"1,2,6"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise ValueError(f"bad range {text!r}")
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1.0
        if step <= 0:
            raise ValueError("range step must be positive")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        values = [lo + i * step for i in range(max(count, 0))]
    else:
        values = [float(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ValueError(f"no values in {text!r}")
    return tuple(values)


# -- sweep tables ----------------------------------------------------------------

@dataclass
class SweepResult:
    axis_name: str
    axis_values: list
    series: dict[str, list[float]]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for label, values in self.series.items():
            if len(values) != len(self.axis_values):
                raise ValueError(f"series {label!r} has {len(values)} values for {len(self.axis_values)} axis points")
            for v in values:
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"series {label!r} holds {v}, outside [0, 1]")

    @property
    def labels(self) -> list[str]:
        return sorted(self.series)

    def to_csv(self) -> str:
        out = io.StringIO()
        labels = self.labels
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow([self.axis_name, *labels])
        for i, x in enumerate(self.axis_values):
            writer.writerow([_num(x), *(_num(self.series[k][i]) for k in labels)])
        for key in sorted(self.metadata):
            out.write(f"# {key}={self.metadata[key]}\n")
        return out.getvalue()

    def to_json(self) -> str:
        doc = {
            "axis_name": self.axis_name,
            "axis_values": [float(x) for x in self.axis_values],
            "series": {k: [float(v) for v in self.series[k]] for k in self.labels},
            "metadata": {k: self.metadata[k] for k in sorted(self.metadata)},
        }
        return json.dumps(doc, indent=2) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        meta, data = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line.strip():
                data.append(line)
        rows = list(csv.reader(data))
        header, body = rows[0], rows[1:]
        axis = [float(r[0]) for r in body]
        series = {label: [float(r[i + 1]) for r in body] for i, label in enumerate(header[1:])}
        return cls(header[0], axis, series, meta)


# -- experiment records --------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun one experiment.

    ``threshold`` and ``rho`` are stored in the unit they were given in, so a
    record written from dB flags reads back bit for bit.
    """

    schemes: tuple[str, ...] = ("orp-sa",)
    n_tx: int = 32
    n_rx: int = 1
    n_beams: int = 1
    n_slots: int = 1
    threshold: float = 0.0
    threshold_unit: str = "db"
    rho: float = 0.0
    rho_unit: str = "db"
    axis: str = ""
    axis_values: tuple[float, ...] = ()
    trials: int = simulator.DEFAULT_TRIALS
    master_seed: int = 0
    sampler: str = "explicit"
    out: str = ""
    format: str = "csv"

    def __post_init__(self):
        for unit in (self.threshold_unit, self.rho_unit):
            if unit not in ("db", "linear"):
                raise ValueError(f"unit must be 'db' or 'linear', got {unit!r}")
        if self.axis and self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.sampler not in simulator.SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}")
        for s in self.schemes:
            Scheme.parse(s)

    @property
    def threshold_linear(self) -> float:
        return db_to_linear(self.threshold) if self.threshold_unit == "db" else self.threshold

    @property
    def rho_linear(self) -> float:
        return db_to_linear(self.rho) if self.rho_unit == "db" else self.rho

    def system(self) -> SystemConfig:
        return SystemConfig(self.n_tx, self.n_rx, self.n_beams, self.n_slots, self.rho_linear, self.threshold_linear)

    def point(self, value: float) -> SystemConfig:
        """The system at one value of the sweep axis."""
        base = self.system()
        if self.axis == "N":
            return base.replace(n_beams=int(value))
        if self.axis == "N_r":
            return base.replace(n_rx=int(value))
        if self.axis == "D":
            return base.replace(n_slots=int(value))
        if self.axis == "T_db":
            return base.replace(threshold=db_to_linear(value))
        if self.axis == "rho_db":
            return base.replace(rho=db_to_linear(value))
        raise ValueError("no sweep axis set")

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        sec = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("schemes", "axis_values"):
                sec[f.name] = ",".join(_num(v) if f.name == "axis_values" else v for v in value)
            elif isinstance(value, float):
                sec[f.name] = repr(value)
            else:
                sec[f.name] = str(value)
        cp["experiment"] = sec
        out = io.StringIO()
        cp.write(out)
        return out.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        if "experiment" not in cp:
            raise ValueError("config needs an [experiment] section")
        sec = cp["experiment"]
        known = {f.name: f for f in fields(cls)}
        unknown = set(sec) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for name, raw in sec.items():
            default = getattr(cls, name, None)
            if name == "schemes":
                kwargs[name] = tuple(s.strip() for s in raw.split(",") if s.strip())
            elif name == "axis_values":
                kwargs[name] = parse_values(raw) if raw.strip() else ()
            elif isinstance(default, bool):
                kwargs[name] = sec.getboolean(name)
            elif isinstance(default, int):
                kwargs[name] = int(raw)
            elif isinstance(default, float):
                kwargs[name] = float(raw)
            else:
                kwargs[name] = raw
        return cls(**kwargs)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def metadata(self) -> dict[str, str]:
        meta = {"version": f"orpcov-{__version__}"}
        for f in fields(self):
            if f.name in ("out", "format", "axis_values") or (f.name == "axis" and not self.axis):
                continue
            value = getattr(self, f.name)
            meta[f.name] = ",".join(value) if f.name == "schemes" else _num(value) if isinstance(value, (int, float)) else str(value)
        return meta


# -- sweeps ----------------------------------------------------------------------

def _label(kind: str, name: str) -> str:
    return f"{kind}:{name}"


def run_sweep(exp: ExperimentConfig, threads: int = 1, simulate: bool = True) -> SweepResult:
    """Analytic and simulated coverage of every scheme along the sweep axis."""
    if not exp.axis or not exp.axis_values:
        raise ValueError("a sweep needs an axis and axis values")
    schemes = [Scheme.parse(s) for s in exp.schemes]
    specs = [(exp.point(v), s) for s in schemes for v in exp.axis_values]
    series: dict[str, list[float]] = {}
    for s in schemes:
        series[_label("analytic", s.value)] = [analytic.coverage(exp.point(v), s) for v in exp.axis_values]
    if simulate:
        estimates = simulator.estimate_many(specs, exp.trials, exp.master_seed, threads, exp.sampler)
        n = len(exp.axis_values)
        for i, s in enumerate(schemes):
            chunk = estimates[i * n:(i + 1) * n]
            series[_label("simulated", s.value)] = [e.p_hat for e in chunk]
            series[_label("ci95", s.value)] = [e.ci_half_width for e in chunk]
    axis = [int(v) if exp.axis in ("N", "N_r", "D") else v for v in exp.axis_values]
    return SweepResult(exp.axis, axis, series, exp.metadata())


# -- figures ---------------------------------------------------------------------

@dataclass(frozen=True)
class Curve:
    label: str
    config: SystemConfig
    scheme: Scheme


@dataclass(frozen=True)
class FigureSpec:
    figure_id: int
    title: str
    axis_name: str
    axis_values: tuple
    curves: tuple  # of tuple[Curve, ...], one inner tuple per series
    n_tx: int
    sampler: str = "explicit"


def _db(x: float) -> str:
    return f"{_num(x)}dB"


def _coverage_figure(fid, title, n_tx, axis_name, axis_values, series, sampler="explicit") -> FigureSpec:
    """``series`` maps a label to a function ``axis value -> (config, scheme)``."""
    curves = tuple(
        tuple(Curve(label, *make(v)) for v in axis_values)
        for label, make in series.items()
    )
    return FigureSpec(fid, title, axis_name, tuple(axis_values), curves, n_tx, sampler)


FIG6_BEAMS = (1, 2, 5, 8)


def figure_spec(figure_id: int) -> FigureSpec:
    """Configuration of each reproduced figure (all beam counts and dB values as printed)."""
    L = db_to_linear
    if figure_id == 2:
        xs = tuple(float(x) for x in np.logspace(-2, 1, 121))
        return FigureSpec(2, "CDF of the maximum SINR", "x", xs, (), 32)
    if figure_id in (3, 4):
        rho_db, t_dbs = (6.0, (0, 2, 4, 8)) if figure_id == 3 else (-2.0, (-1, -4, -7, -10))
        series = {
            f"T={_db(t)}": (lambda n, t=t: (SystemConfig(32, n_beams=int(n), rho=L(rho_db), threshold=L(t)), Scheme.ORP_SA))
            for t in t_dbs
        }
        return _coverage_figure(figure_id, f"coverage versus N, rho={_db(rho_db)}", 32, "N", range(1, 33), series)
    if figure_id == 5:
        series = {}
        for t in (-5, 2):
            for nr in (1, 4, 16):
                scheme = Scheme.ORP_SA if nr == 1 else Scheme.ORP_AS
                series[f"Nr={nr} T={_db(t)}"] = (
                    lambda n, nr=nr, t=t, s=scheme: (SystemConfig(32, n_rx=nr, n_beams=int(n), rho=1.0, threshold=L(t)), s))
        return _coverage_figure(5, "ORP-SA against ORP-AS versus N", 32, "N", range(1, 33), series)
    if figure_id == 6:
        series = {}
        for rho_db, t_db in ((0, -5), (5, 2)):
            for n in FIG6_BEAMS:
                series[f"N={n} rho={_db(rho_db)} T={_db(t_db)}"] = (
                    lambda nr, n=n, r=rho_db, t=t_db: (SystemConfig(32, n_rx=int(nr), n_beams=n, rho=L(r), threshold=L(t)), Scheme.ORP_AS))
        return _coverage_figure(6, "ORP-AS versus N_r", 32, "N_r", range(2, 33), series)
    if figure_id == 7:
        t = L(-2.0)
        series = {
            f"ORP-MPG N={n}": (lambda d, n=n: (SystemConfig(64, n_beams=n, n_slots=int(d), rho=t, threshold=t), Scheme.ORP_MPG))
            for n in (1, 2, 3)
        }
        series["STC"] = lambda d: (SystemConfig(64, n_slots=int(d), rho=t, threshold=t), Scheme.STC)
        return _coverage_figure(7, "ORP-MPG against STC versus D", 64, "D", range(1, 17), series)
    if figure_id == 8:
        t = L(-4.0)
        series = {"ORP-SA": lambda n: (SystemConfig(200, n_beams=int(n), rho=1.0, threshold=t), Scheme.ORP_SA)}
        for nr in (4, 8):
            series[f"ORP-AS Nr={nr}"] = (
                lambda n, nr=nr: (SystemConfig(200, n_rx=nr, n_beams=int(n), rho=1.0, threshold=t), Scheme.ORP_AS))
            for d in (4, 8, 16):
                series[f"ORP-AS-MPG Nr={nr} D={d}"] = (
                    lambda n, nr=nr, d=d: (SystemConfig(200, n_rx=nr, n_beams=int(n), n_slots=d, rho=1.0, threshold=t), Scheme.ORP_AS_MPG))
        return _coverage_figure(8, "ORP-SA, ORP-AS and ORP-AS-MPG versus N", 200, "N", range(1, 13), series, sampler="projected")
    raise ValueError(f"unknown figure {figure_id}; expected one of {FIGURES}")


CDF_BEAMS = (1, 2, 6, 12)


def cdf_figure(trials: int, master_seed: int, threads: int = 1, sampler: str = "explicit",
               beams: Sequence[int] = CDF_BEAMS, rho: float = 1.0, n_tx: int = 32) -> tuple[SweepResult, dict[int, np.ndarray]]:
    """Analytic and empirical CDFs of the max SINR; also returns the samples."""
    spec = figure_spec(2)
    xs = np.array(spec.axis_values)
    configs = [(SystemConfig(n_tx, n_beams=n, rho=rho, threshold=1.0), Scheme.ORP_SA) for n in beams]
    stats = simulator.sample_statistics(configs, trials, master_seed, threads, sampler)
    series, samples = {}, {}
    for n, row in zip(beams, stats):
        row = np.sort(row)
        samples[n] = row
        series[_label("analytic", f"N={n}")] = [analytic.cdf_max_sinr(float(x), n, rho) for x in xs]
        series[_label("simulated", f"N={n}")] = (np.searchsorted(row, xs, side="right") / trials).tolist()
    meta = {"version": f"orpcov-{__version__}", "figure": "2", "n_tx": str(n_tx), "rho": _num(rho),
            "trials": str(trials), "master_seed": str(master_seed), "sampler": sampler}
    return SweepResult("x", xs.tolist(), series, meta), samples


def run_figure(figure_id: int, trials: int = simulator.DEFAULT_TRIALS, master_seed: int = 0, threads: int = 1,
               sampler: str | None = None, simulate: bool = True) -> SweepResult:
    if figure_id == 2:
        return cdf_figure(trials, master_seed, threads, sampler or "explicit")[0]
    spec = figure_spec(figure_id)
    sampler = sampler or spec.sampler
    series: dict[str, list[float]] = {}
    flat = [c for curve in spec.curves for c in curve]
    for curve in spec.curves:
        series[_label("analytic", curve[0].label)] = [analytic.coverage(c.config, c.scheme) for c in curve]
    if simulate:
        estimates = simulator.estimate_many([(c.config, c.scheme) for c in flat], trials, master_seed, threads, sampler)
        i = 0
        for curve in spec.curves:
            chunk = estimates[i:i + len(curve)]
            i += len(curve)
            series[_label("simulated", curve[0].label)] = [e.p_hat for e in chunk]
            series[_label("ci95", curve[0].label)] = [e.ci_half_width for e in chunk]
    meta = {"version": f"orpcov-{__version__}", "figure": str(figure_id), "title": spec.title, "n_tx": str(spec.n_tx),
            "trials": str(trials if simulate else 0), "master_seed": str(master_seed), "sampler": sampler}
    return SweepResult(spec.axis_name, list(spec.axis_values), series, meta)


def check_configs(spec: FigureSpec) -> None:
    """Raise if any point of a figure is not a legal scenario."""
    for curve in spec.curves:
        for c in curve:
            try:
                validate(c.config, c.scheme)
            except CoverageError as err:
                raise CoverageError(f"figure {spec.figure_id}, series {c.label}: {err}") from err
