"""Calibration datasets: CSV ingestion, normalization, splits, error
injection, and a synthetic hot-wire generator.

CSV format: header ``voltage,air_temp,wind_speed,run_id``; decimal point
``.``; UTF-8; lines starting with ``#`` are ignored. Voltage in volts,
air temperature in Celsius, wind speed in m/s. Files are written with
17-significant-digit floats, so a save/load round trip is bit-identical.

The synthetic generator replaces wind-tunnel data with a King's-law
response: the clean sensor voltage is sqrt((A + B U^n) (Tw - Ta)) for
wind speed U, wire temperature Tw, and air temperature Ta, so voltage
rises with speed and with wire-air overheat. Seeded Gaussian noise is
added to the voltage and to the recorded reference speed.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError, ParseError, SchemaError

CSV_COLUMNS = ("voltage", "air_temp", "wind_speed", "run_id")


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


@dataclass(frozen=True)
class CalibrationRecord:
    """One (voltage, air temperature, wind speed) sample from a run."""

    voltage: float
    air_temp: float
    wind_speed: float
    run_id: str


@dataclass(frozen=True)
class CalibrationDataset:
    """Ordered, immutable collection of calibration records."""

    records: tuple[CalibrationRecord, ...]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def inputs(self) -> np.ndarray:
        """Raw (voltage, air_temp) rows as an (n, 2) array."""
        return np.array([(r.voltage, r.air_temp) for r in self.records])

    def speeds(self) -> np.ndarray:
        return np.array([r.wind_speed for r in self.records])

    def run_ids(self) -> tuple[str, ...]:
        """Distinct run ids in first-appearance order."""
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.run_id, None)
        return tuple(seen)

    def run_temperatures(self) -> dict[str, float]:
        """Nominal (mean) air temperature of each run."""
        sums: dict[str, list[float]] = {}
        for r in self.records:
            sums.setdefault(r.run_id, []).append(r.air_temp)
        return {rid: float(np.mean(v)) for rid, v in sums.items()}

    def subset(self, indices, provenance: str = "") -> "CalibrationDataset":
        recs = tuple(self.records[i] for i in indices)
        return CalibrationDataset(recs, provenance or self.provenance)


# -- CSV -------------------------------------------------------------------


def load_csv(path) -> CalibrationDataset:
    """Read a calibration CSV; reject malformed rows with line numbers."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.readlines()
    except OSError as exc:
        raise SchemaError(f"cannot read dataset {path}: {exc}") from exc

    numbered = [
        (i, ln.strip()) for i, ln in enumerate(raw, start=1)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not numbered:
        raise SchemaError(f"{path}: no header row found")

    header_line, header = numbered[0]
    names = [c.strip() for c in header.split(",")]
    missing = [c for c in CSV_COLUMNS if c not in names]
    if missing:
        raise SchemaError(f"{path} line {header_line}: missing column(s) {', '.join(missing)}")
    if len(names) != len(CSV_COLUMNS):
        extra = [c for c in names if c not in CSV_COLUMNS]
        raise SchemaError(f"{path} line {header_line}: unexpected column(s) {', '.join(extra)}")
    col = {name: names.index(name) for name in CSV_COLUMNS}

    records = []
    for lineno, line in numbered[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(names):
            raise ParseError(
                f"{path} line {lineno}: expected {len(names)} fields, got {len(cells)}",
                row=lineno,
            )
        values = {}
        for name in ("voltage", "air_temp", "wind_speed"):
            cell = cells[col[name]]
            try:
                values[name] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path} line {lineno}, column {name}: cannot parse {cell!r} as a number",
                    row=lineno,
                    column=name,
                ) from None
            if not math.isfinite(values[name]):
                raise ParseError(
                    f"{path} line {lineno}, column {name}: non-finite value {cell!r}",
                    row=lineno,
                    column=name,
                )
        if values["wind_speed"] < 0.0:
            raise ParseError(
                f"{path} line {lineno}: wind_speed must be >= 0, got {values['wind_speed']}",
                row=lineno,
                column="wind_speed",
            )
        records.append(CalibrationRecord(run_id=cells[col["run_id"]], **values))
    return CalibrationDataset(tuple(records), provenance=str(path))


def save_csv(dataset: CalibrationDataset, path) -> None:
    """Write a dataset in the canonical CSV format (17 significant digits)."""
    lines = [",".join(CSV_COLUMNS)]
    for r in dataset.records:
        if "," in r.run_id or "\n" in r.run_id:
            raise InputError(f"run_id {r.run_id!r} contains a separator character")
        lines.append(f"{_fmt(r.voltage)},{_fmt(r.air_temp)},{_fmt(r.wind_speed)},{r.run_id}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# -- normalization -----------------------------------------------------------


@dataclass(frozen=True)
class NormalizationTransform:
    """Per-dimension affine map onto [0, 1], fit on training inputs only.

    Test inputs outside the training range map outside [0, 1]; they are
    deliberately not clipped, since extrapolation is a legitimate use.
    """

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != len(self.maxs) or not self.mins:
            raise InputError("transform mins and maxs must be non-empty and equal length")
        for lo, hi in zip(self.mins, self.maxs):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise InputError(f"degenerate normalization range [{lo}, {hi}]")

    @classmethod
    def from_training(cls, X) -> "NormalizationTransform":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise InputError(f"training inputs must be a non-empty 2-D array, got {X.shape}")
        return cls(tuple(X.min(axis=0)), tuple(X.max(axis=0)))

    @property
    def dim(self) -> int:
        return len(self.mins)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        mins = np.array(self.mins)
        spans = np.array(self.maxs) - mins
        return (X - mins) / spans

    def invert(self, Xn) -> np.ndarray:
        Xn = np.asarray(Xn, dtype=float)
        mins = np.array(self.mins)
        spans = np.array(self.maxs) - mins
        return Xn * spans + mins


def normalize(dataset: CalibrationDataset, transform: NormalizationTransform):
    """(normalized input matrix, target vector) for a dataset.

    Targets are returned untouched; centering happens inside the GP fit.
    """
    if len(dataset) == 0:
        raise InputError("cannot normalize an empty dataset")
    X = dataset.inputs()
    if X.shape[1] != transform.dim:
        raise InputError(f"transform has {transform.dim} dims, data has {X.shape[1]}")
    return transform.apply(X), dataset.speeds()


# -- splits ------------------------------------------------------------------


@dataclass(frozen=True)
class RandomFraction:
    """Seeded uniform shuffle, then prefix/suffix split.

    The training size is round(train_fraction * n): 70% of 4112 records
    gives the 2878/1234 split sizes used throughout the experiments.
    """

    train_fraction: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise InputError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class KFold:
    """Seeded shuffle into k near-equal folds; each fold serves as test once."""

    k: int
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise InputError(f"k must be >= 2, got {self.k}")


@dataclass(frozen=True)
class ByRun:
    """Hold out all records of the named runs; order is preserved."""

    held_out_runs: tuple[str, ...]

    def __post_init__(self):
        if not self.held_out_runs:
            raise InputError("ByRun requires at least one held-out run id")


SplitSpec = RandomFraction | KFold | ByRun


def split(dataset: CalibrationDataset, spec: SplitSpec):
    """Partition a dataset according to ``spec``.

    Returns a (train, test) pair, or a list of k such pairs for KFold.
    """
    n = len(dataset)
    if n < 2:
        raise InputError("need at least 2 records to split")

    if isinstance(spec, RandomFraction):
        rng = np.random.default_rng(spec.seed)
        perm = rng.permutation(n)
        n_train = int(math.floor(spec.train_fraction * n + 0.5))
        if n_train < 1 or n_train >= n:
            raise InputError(
                f"fraction {spec.train_fraction} of {n} records leaves an empty side"
            )
        tag = f"random:{spec.train_fraction:g} seed={spec.seed}"
        return (
            dataset.subset(perm[:n_train], f"{dataset.provenance}[train {tag}]"),
            dataset.subset(perm[n_train:], f"{dataset.provenance}[test {tag}]"),
        )

    if isinstance(spec, KFold):
        if spec.k > n:
            raise InputError(f"cannot make {spec.k} folds from {n} records")
        rng = np.random.default_rng(spec.seed)
        perm = rng.permutation(n)
        folds = np.array_split(perm, spec.k)
        pairs = []
        for i, fold in enumerate(folds):
            rest = np.concatenate([f for j, f in enumerate(folds) if j != i])
            tag = f"kfold:{spec.k} fold={i} seed={spec.seed}"
            pairs.append((
                dataset.subset(rest, f"{dataset.provenance}[train {tag}]"),
                dataset.subset(fold, f"{dataset.provenance}[test {tag}]"),
            ))
        return pairs

    if isinstance(spec, ByRun):
        available = set(dataset.run_ids())
        missing = [rid for rid in spec.held_out_runs if rid not in available]
        if missing:
            raise InputError(f"held-out run(s) not in dataset: {', '.join(missing)}")
        held = set(spec.held_out_runs)
        test_idx = [i for i, r in enumerate(dataset.records) if r.run_id in held]
        train_idx = [i for i, r in enumerate(dataset.records) if r.run_id not in held]
        if not train_idx:
            raise InputError("holding out every run leaves no training data")
        tag = f"byrun:{','.join(spec.held_out_runs)}"
        return (
            dataset.subset(train_idx, f"{dataset.provenance}[train {tag}]"),
            dataset.subset(test_idx, f"{dataset.provenance}[test {tag}]"),
        )

    raise InputError(f"unknown split spec {spec!r}")


# -- temperature-error injection ---------------------------------------------


def inject_random_error(dataset: CalibrationDataset, amplitude: float, seed: int = 0,
                        distribution: str = "uniform") -> CalibrationDataset:
    """Perturb each record's air temperature by a seeded random draw.

    ``uniform`` draws from [-amplitude, +amplitude] (accuracy-bound
    semantics); the ``gaussian`` option treats amplitude as a standard
    deviation. For a fixed seed the draws scale linearly with amplitude,
    so sweeps over levels degrade coherently.
    """
    if amplitude < 0.0:
        raise InputError(f"amplitude must be >= 0, got {amplitude}")
    if distribution not in ("uniform", "gaussian"):
        raise InputError(f"unknown error distribution {distribution!r}")
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        unit = rng.uniform(-1.0, 1.0, size=len(dataset))
    else:
        unit = rng.standard_normal(len(dataset))
    records = tuple(
        dataclasses.replace(r, air_temp=r.air_temp + amplitude * u)
        for r, u in zip(dataset.records, unit)
    )
    tag = f"random_error(amplitude={amplitude:g}, seed={seed}, {distribution})"
    return CalibrationDataset(records, f"{dataset.provenance}[{tag}]")


def inject_systematic_error(dataset: CalibrationDataset, offset: float) -> CalibrationDataset:
    """Shift every record's air temperature by a constant offset."""
    records = tuple(
        dataclasses.replace(r, air_temp=r.air_temp + offset) for r in dataset.records
    )
    return CalibrationDataset(records, f"{dataset.provenance}[systematic_error({offset:g})]")


# -- synthetic generator -------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """King's-law surrogate configuration. Defaults are plausible, not
    measured: seven runs at fixed nominal temperatures, a stepped speed
    ramp over 0..21 m/s, and several noisy samples per step."""

    run_temps: tuple[float, ...] = (19.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0)
    speed_steps: int = 30
    speed_max: float = 21.0
    samples_per_step: int = 10
    wire_temp: float = 220.0
    king_a: float = 1.0
    king_b: float = 0.8
    king_n: float = 0.45
    voltage_noise_std: float = 0.005
    speed_noise_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.run_temps:
            raise ConfigError("run_temps must be non-empty")
        if self.wire_temp <= max(self.run_temps):
            raise ConfigError(
                f"wire_temp {self.wire_temp} must exceed the hottest air temperature "
                f"{max(self.run_temps)}"
            )
        if self.speed_steps < 1 or self.samples_per_step < 1:
            raise ConfigError("speed_steps and samples_per_step must be >= 1")
        if self.speed_max <= 0.0:
            raise ConfigError(f"speed_max must be positive, got {self.speed_max}")
        for name in ("king_a", "king_b", "king_n"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.voltage_noise_std < 0.0 or self.speed_noise_std < 0.0:
            raise ConfigError("noise standard deviations must be >= 0")


def king_voltage(speed, air_temp, config: SynthConfig):
    """Clean King's-law voltage for a wind speed and air temperature."""
    speed = np.asarray(speed, dtype=float)
    return np.sqrt(
        (config.king_a + config.king_b * speed**config.king_n)
        * (config.wire_temp - np.asarray(air_temp, dtype=float))
    )


def load_synth_config(path) -> SynthConfig:
    """Read a SynthConfig from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read synth config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"synth config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"synth config {path} must be a JSON object")
    known = {f.name for f in dataclasses.fields(SynthConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"synth config {path}: unknown key(s) {', '.join(sorted(unknown))}")
    if "run_temps" in raw:
        raw["run_temps"] = tuple(float(t) for t in raw["run_temps"])
    return SynthConfig(**raw)


def synthesize(config: SynthConfig = SynthConfig()) -> CalibrationDataset:
    """Generate a seeded synthetic calibration dataset.

    One run per nominal temperature; each run ramps the speed from 0 to
    speed_max in ``speed_steps`` steps with ``samples_per_step`` noisy
    records per step. Recorded reference speeds are floored at zero, as
    a real anemometer cannot report a negative speed.
    """
    rng = np.random.default_rng(config.seed)
    records = []
    for temp in config.run_temps:
        run_id = f"T{temp:g}"
        speeds = np.linspace(0.0, config.speed_max, config.speed_steps)
        for u in speeds:
            clean_v = float(king_voltage(u, temp, config))
            for _ in range(config.samples_per_step):
                v = clean_v + rng.normal(0.0, config.voltage_noise_std)
                w = u + rng.normal(0.0, config.speed_noise_std)
                records.append(
                    CalibrationRecord(float(v), float(temp), max(0.0, float(w)), run_id)
                )
    provenance = (
        f"synthetic(seed={config.seed}, runs={len(config.run_temps)}, "
        f"points={len(records)})"
    )
    return CalibrationDataset(tuple(records), provenance)
