"""Process-table CSV files, a synthetic furnace generator, and model archives."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter
from scipy.stats import norm

from .errors import (
    ChecksumError,
    CsvParseError,
    DataError,
    MissingColumn,
    ShapeError,
    ValidationError,
    VersionError,
)
from .kernel_qp import KernelParams
from .knowledge import FURNACE_A, KnowledgeRule, SiliconBands
from .pipeline import LagSpec, Normalizer
from .wsvm import PenaltyScheme, TrainedModel

SCHEMA = ("blast_temp", "blast_vol", "feed_speed", "gas_perm", "coal_inj", "sulfur", "silicon")
UNITS = {
    "blast_temp": "degC",
    "blast_vol": "m3/min",
    "feed_speed": "mm/h",
    "gas_perm": "m3/(min*kPa)",
    "coal_inj": "ton",
    "sulfur": "wt%",
    "silicon": "wt% (normalised to [0, 1])",
}


@dataclass
class ProcessTable:
    """Time-ordered columns of equal length, keyed by name."""

    columns: dict[str, np.ndarray]

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        lengths = {v.size for v in self.columns.values()}
        if len(lengths) > 1:
            raise ShapeError("columns have unequal lengths")

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns

    def __len__(self):
        return next(iter(self.columns.values())).size if self.columns else 0

    @property
    def names(self) -> list[str]:
        return list(self.columns)


def read_csv(path, schema=SCHEMA) -> ProcessTable:
    """Read a comma-separated file with a header row.

    Only the ``schema`` columns are kept. Row numbers in errors count data
    rows from 1 (the header is row 0).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvParseError(f"{path} is empty") from None
        pos = {}
        for name in schema:
            if name not in header:
                raise MissingColumn(name, path)
            pos[name] = header.index(name)
        data = {name: [] for name in schema}
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            for name, k in pos.items():
                try:
                    value = float(row[k])
                except (ValueError, IndexError):
                    cell = row[k] if k < len(row) else ""
                    raise CsvParseError(
                        f"{path}: row {row_no}, column {name!r}: cannot parse {cell!r}",
                        row=row_no, column=name,
                    ) from None
                if not math.isfinite(value):
                    raise CsvParseError(
                        f"{path}: row {row_no}, column {name!r}: non-finite value",
                        row=row_no, column=name,
                    )
                data[name].append(value)
    if not data[schema[0]]:
        raise CsvParseError(f"{path} has no data rows")
    return ProcessTable(data)


def write_csv(table: ProcessTable, path, columns=None):
    columns = list(columns or table.names)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in zip(*(table[c] for c in columns)):
            w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic furnace series.

    ``coupling`` weights the five process inputs (standardised, each at its
    own delay from ``driver_lags``) in the latent thermal state. ``noise``
    is the innovation scale of that state and ``measurement_noise`` the
    non-persistent assay noise added on top, both relative to unit-variance
    drivers.
    """

    length: int = 800
    rho: float = 0.8
    low_fraction: float = 0.145
    high_fraction: float = 0.139
    bands: SiliconBands = FURNACE_A
    noise: float = 0.6
    measurement_noise: float = 1.0
    driver_persistence: float = 0.3
    coupling: tuple[float, ...] = (0.45, -0.35, 0.3, -0.3, 0.4)
    driver_lags: tuple[int, ...] = (1, 2, 1, 3, 2)
    seed: int = 0

    def __post_init__(self):
        if self.length < 50:
            raise ValidationError("length must be at least 50")
        if not (0.0 <= self.rho < 1.0):
            raise ValidationError("rho must lie in [0, 1)")
        if not (0 < self.low_fraction and 0 < self.high_fraction
                and self.low_fraction + self.high_fraction < 1):
            raise ValidationError("band fractions must be positive and sum below 1")
        if self.noise <= 0 or self.measurement_noise < 0:
            raise ValidationError("noise scales must be positive")
        if len(self.coupling) != 5 or len(self.driver_lags) != 5:
            raise ValidationError("need one coupling weight and one lag per process input")
        if not (0.0 <= self.driver_persistence < 1.0):
            raise ValidationError("driver_persistence must lie in [0, 1)")

    def to_dict(self):
        return {
            "length": self.length,
            "rho": self.rho,
            "low_fraction": self.low_fraction,
            "high_fraction": self.high_fraction,
            "bands": self.bands.to_dict(),
            "noise": self.noise,
            "measurement_noise": self.measurement_noise,
            "driver_persistence": self.driver_persistence,
            "coupling": list(self.coupling),
            "driver_lags": list(self.driver_lags),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "bands" in d:
            d["bands"] = SiliconBands.from_dict(d["bands"])
        for k in ("coupling", "driver_lags"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


# mean and spread of the five process inputs in physical units
_INPUT_SCALES = (
    ("blast_temp", 1150.0, 18.0),
    ("blast_vol", 4300.0, 120.0),
    ("feed_speed", 95.0, 9.0),
    ("gas_perm", 2.6, 0.25),
    ("coal_inj", 32.0, 2.5),
)


def generate_synthetic(config: SynthConfig = SynthConfig()) -> ProcessTable:
    """Synthetic furnace record; a pure function of ``config``.

    The latent thermal state follows
    ``s_t = rho * s_{t-1} + sum_k coupling_k * d_k(t - lag_k) + noise * e_t``
    where the drivers ``d_k`` are AR(1) series sharing a common factor. The
    reported silicon is ``s_t`` plus assay noise, mapped affinely so the
    band fractions match the targets under a Gaussian approximation, and
    clamped to ``[0.05, 0.95]``. Sulfur moves inversely with silicon.
    """
    rng = np.random.default_rng(config.seed)
    burn = 100
    n = config.length + burn
    phi = config.driver_persistence
    innov_scale = math.sqrt(1 - phi * phi)

    common = _ar1(rng.standard_normal(n), phi) * innov_scale
    drivers = []
    for _ in range(5):
        own = _ar1(rng.standard_normal(n), phi) * innov_scale
        drivers.append(0.5 * common + math.sqrt(0.75) * own)
    drivers = np.array(drivers)

    forcing = np.zeros(n)
    for w, lag, d in zip(config.coupling, config.driver_lags, drivers):
        forcing[lag:] += w * d[:-lag]
    state = _ar1(forcing + config.noise * rng.standard_normal(n), config.rho)
    observed = state + config.measurement_noise * rng.standard_normal(n)

    observed = observed[burn:]
    drivers = drivers[:, burn:]
    lo_q = norm.ppf(config.low_fraction)
    hi_q = norm.ppf(1 - config.high_fraction)
    scale = (config.bands.z_sup - config.bands.z_inf) / (hi_q - lo_q)
    centre = config.bands.z_inf - scale * lo_q
    standardised = (observed - observed.mean()) / observed.std()
    silicon = np.clip(centre + scale * standardised, 0.05, 0.95)

    cols = {}
    for (name, mean, sd), d in zip(_INPUT_SCALES, drivers):
        cols[name] = mean + sd * d
    sulfur = 0.030 - 0.012 * standardised + 0.004 * rng.standard_normal(config.length)
    cols["sulfur"] = np.clip(sulfur, 0.005, None)
    cols["silicon"] = silicon
    return ProcessTable(cols)


def _ar1(innovations, coef):
    return lfilter([1.0], [1.0, -coef], innovations)


ARCHIVE_VERSION = 1
ARCHIVE_FIELDS = (
    "version", "kernel", "scheme", "rule", "bands", "lag_spec", "normalizer",
    "support_vectors", "coefficients", "bias", "provenance",
)


@dataclass
class ModelArchive:
    model: TrainedModel
    normalizer: Normalizer
    bands: SiliconBands
    lag_spec: LagSpec
    provenance: dict = field(default_factory=dict)


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def archive_payload(archive: ModelArchive) -> dict:
    m = archive.model
    payload = {
        "version": ARCHIVE_VERSION,
        "kernel": {"gamma": m.kernel.gamma},
        "scheme": m.scheme.to_dict(),
        "rule": m.rule.to_dict() if m.rule is not None else None,
        "bands": archive.bands.to_dict(),
        "lag_spec": archive.lag_spec.to_dict(),
        "normalizer": archive.normalizer.to_dict(),
        "support_vectors": m.support_vectors.tolist(),
        "coefficients": m.coefficients.tolist(),
        "bias": m.bias,
        "provenance": archive.provenance,
    }
    payload["checksum"] = hashlib.sha256(_canonical(payload)).hexdigest()
    return payload


def save_model(path, archive: ModelArchive):
    """Write an archive as JSON. Floats use the shortest round-trip repr."""
    Path(path).write_text(json.dumps(archive_payload(archive), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> ModelArchive:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumError(f"{path}: archive is not valid JSON ({exc})") from None
    if not isinstance(payload, dict) or "version" not in payload:
        raise VersionError(f"{path}: archive has no version field")
    if payload["version"] != ARCHIVE_VERSION:
        raise VersionError(
            f"{path}: archive version {payload['version']!r}, expected {ARCHIVE_VERSION}"
        )
    stored = payload.pop("checksum", None)
    if stored != hashlib.sha256(_canonical(payload)).hexdigest():
        raise ChecksumError(f"{path}: checksum mismatch")
    try:
        model = TrainedModel(
            support_vectors=np.asarray(payload["support_vectors"], dtype=float),
            coefficients=np.asarray(payload["coefficients"], dtype=float),
            bias=float(payload["bias"]),
            kernel=KernelParams(float(payload["kernel"]["gamma"])),
            scheme=PenaltyScheme.from_dict(payload["scheme"]),
            rule=KnowledgeRule.from_dict(payload["rule"]) if payload["rule"] else None,
        )
        return ModelArchive(
            model,
            Normalizer.from_dict(payload["normalizer"]),
            SiliconBands.from_dict(payload["bands"]),
            LagSpec.from_dict(payload["lag_spec"]),
            payload.get("provenance") or {},
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed archive ({exc})") from None
