"""Simulation traces: columnar sample storage and CSV round-tripping."""
from __future__ import annotations

import csv
import math
from array import array
from dataclasses import dataclass, field
from typing import Mapping, Optional

STEP_KINDS = ("init", "intra", "switch")


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    edge: int
    source: str
    target: str
    pre: Mapping[str, float]
    post: Mapping[str, float]


@dataclass(frozen=True)
class Sample:
    time: float
    location: str
    step_kind: str
    values: Mapping[str, float]


class Trace:
    """Ordered samples of one run.

    A discrete switch is stored as two rows with the same time: the last
    sample before the switch and a ``switch`` row holding the post-reset
    values. Runs of the frequency engine also store, for every flow
    variable, the angular frame behind each sample (``anchor``,
    ``max_range``, ``theta`` and the normalized value ``norm``); these are
    NaN for update variables and for time-domain runs.
    """

    FRAME_FIELDS = ("anchor", "max_range", "theta", "norm")

    def __init__(self, variables, frames: bool = False):
        self.variables = tuple(variables)
        self.times = array("d")
        self.locations = []
        self.kinds = []
        self.columns = {v: array("d") for v in self.variables}
        self.has_frames = frames
        self.frames = (
            {f: {v: array("d") for v in self.variables} for f in self.FRAME_FIELDS}
            if frames
            else {}
        )
        self.switches = []

    def __len__(self):
        return len(self.times)

    def append(self, time, location, kind, values, frame=None):
        """Append a sample; ``values`` is a sequence in ``variables`` order."""
        self.times.append(time)
        self.locations.append(location)
        self.kinds.append(kind)
        for v, x in zip(self.variables, values):
            self.columns[v].append(x)
        if self.has_frames:
            frame = frame or {}
            for f in self.FRAME_FIELDS:
                col = self.frames[f]
                for v in self.variables:
                    fr = frame.get(v)
                    col[v].append(getattr(fr, f) if fr is not None else math.nan)

    def sample(self, i: int) -> Sample:
        return Sample(
            self.times[i],
            self.locations[i],
            self.kinds[i],
            {v: self.columns[v][i] for v in self.variables},
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self.sample(i)

    def column(self, name: str):
        import numpy as np

        return np.asarray(self.columns[name], dtype=float)

    @property
    def end_time(self) -> float:
        return self.times[-1] if len(self) else 0.0

    def final(self) -> Optional[Sample]:
        return self.sample(len(self) - 1) if len(self) else None

    def first_switch(self) -> Optional[SwitchEvent]:
        return self.switches[0] if self.switches else None

    # -- CSV -------------------------------------------------------------------

    def to_csv(self, path_or_file):
        """Write ``time,location,step_kind,<vars>`` with 17 significant digits."""
        if hasattr(path_or_file, "write"):
            self._write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                self._write(fh)

    def _write(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "location", "step_kind", *self.variables])
        cols = [self.columns[v] for v in self.variables]
        for i, t in enumerate(self.times):
            w.writerow(
                [format(t, ".17g"), self.locations[i], self.kinds[i]]
                + [format(c[i], ".17g") for c in cols]
            )

    @classmethod
    def from_csv(cls, path_or_file) -> "Trace":
        if hasattr(path_or_file, "read"):
            return cls._read(path_or_file)
        with open(path_or_file, newline="") as fh:
            return cls._read(fh)

    @classmethod
    def _read(cls, fh):
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["time", "location", "step_kind"]:
            raise ValueError("not a trace CSV: bad header")
        trace = cls(header[3:])
        for row in reader:
            if not row:
                continue
            trace.append(float(row[0]), row[1], row[2], [float(x) for x in row[3:]])
        return trace


@dataclass
class SimState:
    """Snapshot of a run: clock, location, values and angular frames."""

    clock: float
    location: str
    env: dict
    normalized: dict = field(default_factory=dict)
    angles: dict = field(default_factory=dict)
    entry_env: dict = field(default_factory=dict)


@dataclass
class RunReport:
    intra_steps: int
    switch_count: int
    wall_time: float
    final_state: Optional[SimState] = None
    diagnostics: list = field(default_factory=list)
    engine: str = ""

    @property
    def steps(self) -> int:
        return self.intra_steps
