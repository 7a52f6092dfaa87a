"""Snapshot, telemetry, config and manifest formats."""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .solver import ConfigError, SimulationState, SolverConfig
from .transform import SpectralField

__all__ = [
    "SnapshotError",
    "SnapshotMagicError",
    "SnapshotVersionError",
    "SnapshotTruncatedError",
    "write_snapshot",
    "read_snapshot",
    "TELEMETRY_HEADER",
    "TelemetryWriter",
    "read_telemetry",
    "parse_config",
    "parse_config_text",
    "RunManifest",
    "sha256_file",
]

MAGIC = b"SQG2"
VERSION = 1
_HEADER = struct.Struct("<4sIIddQ")


class SnapshotError(ValueError):
    pass


class SnapshotMagicError(SnapshotError):
    pass


class SnapshotVersionError(SnapshotError):
    pass


class SnapshotTruncatedError(SnapshotError):
    pass


def write_snapshot(state: SimulationState, path, alpha: float = 1.0) -> Path:
    """Little-endian: magic, u32 version, u32 L_max, f64 alpha, f64 time, u64 step, complex128 coefficients."""
    path = Path(path)
    th = state.theta
    header = _HEADER.pack(MAGIC, VERSION, th.L_max, float(alpha), float(state.time), int(state.step_index))
    payload = np.ascontiguousarray(th.coeffs, dtype="<c16").tobytes()
    path.write_bytes(header + payload)
    return path


def read_snapshot(path, with_alpha: bool = False):
    """Inverse of :func:`write_snapshot`; returns the state, or ``(state, alpha)``."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise SnapshotMagicError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < _HEADER.size:
        raise SnapshotTruncatedError(f"{path}: header truncated ({len(data)} bytes)")
    _, version, L, alpha, time, step = _HEADER.unpack_from(data)
    if version != VERSION:
        raise SnapshotVersionError(f"{path}: format version {version}, expected {VERSION}")
    n = (L + 1) ** 2
    need = _HEADER.size + 16 * n
    if len(data) < need:
        raise SnapshotTruncatedError(f"{path}: payload has {len(data) - _HEADER.size} bytes, expected {16 * n}")
    if len(data) > need:
        raise SnapshotError(f"{path}: {len(data) - need} trailing bytes")
    coeffs = np.frombuffer(data, dtype="<c16", count=n, offset=_HEADER.size).astype(complex)
    state = SimulationState(time, SpectralField(L, coeffs), step)
    return (state, alpha) if with_alpha else state


TELEMETRY_HEADER = ["time", "l2", "linf", "grad_sup", "h1", "h1_5", "h2", "h3", "maxpoint_lambda"]


class TelemetryWriter:
    """Writes one CSV row per diagnostics record; values use ``repr`` so they round-trip."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(TELEMETRY_HEADER)

    def write(self, rec):
        self._w.writerow([repr(float(v)) for v in rec.row()])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_telemetry(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != TELEMETRY_HEADER:
        raise ValueError(f"{path}: unexpected telemetry header")
    arr = np.array(rows[1:], dtype=float).reshape(-1, len(TELEMETRY_HEADER))
    return {k: arr[:, i] for i, k in enumerate(TELEMETRY_HEADER)}


_CASTS = {
    "L_max": int,
    "dt": float,
    "t_end": float,
    "alpha": float,
    "nu": float,
    "dealias_fraction": float,
    "sample_every": int,
    "seed": int,
}


def parse_config_text(text: str) -> dict:
    """``key=value`` lines with ``#`` comments; returns typed values."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CASTS:
            raise ConfigError(f"line {n}: unknown key {key!r}; valid keys: {', '.join(SolverConfig.keys())}")
        try:
            out[key] = _CASTS[key](value)
        except ValueError:
            raise ConfigError(f"line {n}: {key} expects {_CASTS[key].__name__}, got {value!r}") from None
    return out


def parse_config(path=None, **overrides) -> SolverConfig:
    """Config from an optional file, with keyword overrides (``None`` values ignored)."""
    values = parse_config_text(Path(path).read_text()) if path is not None else {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _CASTS:
            raise ConfigError(f"unknown key {key!r}; valid keys: {', '.join(SolverConfig.keys())}")
        values[key] = _CASTS[key](value)
    return SolverConfig(**values)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    config: dict
    initial_condition: str
    start_time: str
    end_time: str = ""
    version: str = ""
    files: dict = field(default_factory=dict)

    def add(self, path):
        path = Path(path)
        self.files[path.name] = sha256_file(path)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))

    def verify(self, directory) -> list[str]:
        """Names of listed files that are missing or whose checksum changed."""
        bad = []
        for name, digest in self.files.items():
            p = Path(directory) / name
            if not p.exists() or sha256_file(p) != digest:
                bad.append(name)
        return bad
