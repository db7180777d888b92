"""Sampled waveform container and its CSV representation."""

from __future__ import annotations

import dataclasses
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import FrameParseError, InvalidParameterError

COLUMNS = ("t_s", "i_l_a", "v_out_v", "v_c_v", "v_mos_v")
_FIELDS = ("t", "i_l", "v_out", "v_c", "v_mos")
MIN_SAMPLES = 100


@dataclass(frozen=True, eq=False)
class AcquisitionFrame:
    """One switching period of the four measured signals.

    ``v_c`` is the voltage on the ideal capacitance, before the series
    resistance drop; ``v_out`` is the voltage across the load.
    """

    sample_rate: float
    t: np.ndarray
    i_l: np.ndarray
    v_out: np.ndarray
    v_c: np.ndarray
    v_mos: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, name), dtype=float) for name in _FIELDS]
        for name, arr in zip(_FIELDS, arrays):
            object.__setattr__(self, name, arr)
        lengths = {arr.shape for arr in arrays}
        if len(lengths) != 1 or arrays[0].ndim != 1:
            raise InvalidParameterError("frame channels must be 1-D arrays of equal length")
        if len(self.t) < MIN_SAMPLES:
            raise InvalidParameterError(f"frame needs at least {MIN_SAMPLES} samples, got {len(self.t)}")
        if not self.sample_rate > 0:
            raise InvalidParameterError("sample_rate must be > 0")
        dt = np.diff(self.t)
        if np.any(np.abs(dt * self.sample_rate - 1.0) > 1e-6):
            raise InvalidParameterError("t must be uniformly spaced at 1/sample_rate")

    def __len__(self):
        return len(self.t)

    @property
    def period(self) -> float:
        return len(self.t) / self.sample_rate

    def with_channels(self, **channels) -> "AcquisitionFrame":
        return dataclasses.replace(self, **channels)

    def roll(self, shift: int) -> "AcquisitionFrame":
        """Circularly shift samples so that index ``shift`` becomes index 0.

        The time axis keeps its start and spacing.
        """
        rolled = {name: np.roll(getattr(self, name), -shift) for name in _FIELDS[1:]}
        return dataclasses.replace(self, **rolled)

    def equals(self, other: "AcquisitionFrame") -> bool:
        return self.sample_rate == other.sample_rate and all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in _FIELDS)


def write_frame(frame: AcquisitionFrame, destination) -> None:
    """Write ``frame`` as CSV to a path or text stream.

    Values use ``repr`` formatting so a read-back is bit-exact.
    """
    lines = [f"# sample_rate_hz={frame.sample_rate!r}"]
    for key, value in frame.metadata.items():
        if key != "sample_rate_hz":
            lines.append(f"# {key}={value!r}" if isinstance(value, float) else f"# {key}={value}")
    lines.append(",".join(COLUMNS))
    cols = [getattr(frame, name) for name in _FIELDS]
    for row in zip(*cols):
        lines.append(",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    else:
        destination.write(text)


def _parse_meta(value: str):
    try:
        return float(value)
    except ValueError:
        return value


def read_frame(source) -> AcquisitionFrame:
    """Parse a waveform CSV from a path or text stream.

    Blank lines and surrounding whitespace are ignored. Without a
    ``sample_rate_hz`` comment the rate is inferred from the time column.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            text = fh.read()
    else:
        text = source.read()

    metadata = {}
    header = None
    rows = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = _parse_meta(value.strip())
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise FrameParseError(f"missing column {', '.join(missing)}", lineno)
            if len(set(header)) != len(header):
                raise FrameParseError("duplicate column names in header", lineno)
            index = [header.index(c) for c in COLUMNS]
            continue
        if len(cells) != len(header):
            raise FrameParseError(f"expected {len(header)} fields, found {len(cells)}", lineno)
        try:
            rows.append([float(cells[i]) for i in index])
        except ValueError as exc:
            raise FrameParseError(f"non-numeric value ({exc})", lineno) from None

    if header is None:
        raise FrameParseError("no header line found")
    if not rows:
        raise FrameParseError("no data rows")
    data = np.array(rows).T
    sample_rate = metadata.pop("sample_rate_hz", None)
    if sample_rate is None:
        if data.shape[1] < 2:
            raise FrameParseError("cannot infer sample rate from a single row")
        sample_rate = 1.0 / float(np.mean(np.diff(data[0])))
    try:
        return AcquisitionFrame(float(sample_rate), *data, metadata=metadata)
    except InvalidParameterError as exc:
        raise FrameParseError(str(exc)) from None
