"""Switch-state segmentation and period averages of an acquired frame."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientResolutionError, MalformedFrameError
from .frame import AcquisitionFrame

MIN_SEGMENT_SAMPLES = 10
DEBOUNCE = 2
CHANNELS = ("i_l", "v_out", "v_c", "v_mos")


@dataclass(frozen=True)
class SegmentedFrame:
    """A frame rotated to ``[T_on | T_off]`` order.

    ``frame`` is the rotated frame; ``on_indices`` and ``off_indices`` index
    into it.
    """

    frame: AcquisitionFrame
    on_indices: range
    off_indices: range
    d_on: float
    t_on: float
    rotation: int = 0

    @property
    def n_on(self) -> int:
        return len(self.on_indices)

    @property
    def n_off(self) -> int:
        return len(self.off_indices)

    def on(self, channel: str) -> np.ndarray:
        return getattr(self.frame, channel)[self.on_indices.start:self.on_indices.stop]

    def off(self, channel: str) -> np.ndarray:
        return getattr(self.frame, channel)[self.off_indices.start:self.off_indices.stop]


def _debounce(raw: np.ndarray, hold: int = DEBOUNCE) -> np.ndarray:
    """Circular debounce: a state change needs ``hold`` consecutive samples."""
    n = len(raw)
    stable = [i for i in range(n) if all(raw[(i + j) % n] == raw[i] for j in range(hold))]
    if not stable:
        raise MalformedFrameError("switch state never holds for two consecutive samples")
    start = stable[0]
    state = raw[start]
    out = np.empty(n, dtype=bool)
    for step in range(n):
        i = (start + step) % n
        if raw[i] != state and all(raw[(i + j) % n] != state for j in range(hold)):
            state = raw[i]
        out[i] = state
    return out


def segment_states(frame: AcquisitionFrame) -> SegmentedFrame:
    """Split one period into switch-on and switch-off samples.

    A sample is on when ``v_mos`` is below the midpoint of its range. The
    frame is rotated so the on run starts at index 0.
    """
    v = frame.v_mos
    lo, hi = float(np.min(v)), float(np.max(v))
    if not hi > lo:
        raise MalformedFrameError("v_mos is constant; no switching edges")
    raw = v < 0.5 * (lo + hi)
    labels = _debounce(raw)

    n = len(labels)
    edges = np.flatnonzero(labels != np.roll(labels, 1))
    if len(edges) == 0:
        raise MalformedFrameError("only one switch state present in the frame")
    if len(edges) != 2:
        raise MalformedFrameError(f"expected 2 switching edges per period, found {len(edges)}")

    start = int(edges[0] if labels[edges[0]] else edges[1])
    n_on = int(np.count_nonzero(labels))
    n_off = n - n_on
    if n_on < MIN_SEGMENT_SAMPLES or n_off < MIN_SEGMENT_SAMPLES:
        raise InsufficientResolutionError(
            f"segments have {n_on} on / {n_off} off samples; at least "
            f"{MIN_SEGMENT_SAMPLES} each are required")

    rotated = frame.roll(start) if start else frame
    return SegmentedFrame(
        frame=rotated,
        on_indices=range(0, n_on),
        off_indices=range(n_on, n),
        d_on=n_on / n,
        t_on=n_on / frame.sample_rate,
        rotation=start,
    )


@dataclass(frozen=True)
class FrameMeans:
    v_media: float
    i_l_media: float
    v_c_media: float
    v_mos_media: float
    on: dict
    off: dict


def compute_means(seg: SegmentedFrame) -> FrameMeans:
    f = seg.frame
    return FrameMeans(
        v_media=float(np.mean(f.v_out)),
        i_l_media=float(np.mean(f.i_l)),
        v_c_media=float(np.mean(f.v_c)),
        v_mos_media=float(np.mean(f.v_mos)),
        on={ch: float(np.mean(seg.on(ch))) for ch in CHANNELS},
        off={ch: float(np.mean(seg.off(ch))) for ch in CHANNELS},
    )
