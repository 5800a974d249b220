import csv
import json
from typing import IO, List, Sequence

from config.settings import EXPORT_SETTINGS
from dynamics.integrator import Sample

FORMATS = ("csv", "json")


def format_number(value: float) -> str:
    return format(float(value), f".{EXPORT_SETTINGS['significant_digits']}g")


def header(coordinates: Sequence[str], observables: Sequence[str]) -> List[str]:
    """Column names; an observable may not repeat another column."""
    columns = ["t", *coordinates, "w", "H"]
    for name in observables:
        if name in columns:
            raise ValueError(f"observable '{name}' collides with a trajectory column")
        columns.append(name)
    return columns


def sample_row(sample: Sample) -> List[str]:
    values = [sample.t, *sample.x, sample.w, sample.H, *sample.observables]
    return [format_number(v) for v in values]


def sample_record(sample: Sample, coordinates: Sequence[str], observables: Sequence[str]) -> dict:
    return dict(zip(header(coordinates, observables),
                    [float(v) for v in (sample.t, *sample.x, sample.w, sample.H, *sample.observables)]))


class CsvTrajectoryWriter:
    """Streams samples as rows `t,<coords>,w,H[,<observables>]`, LF-terminated."""

    def __init__(self, handle: IO[str], coordinates: Sequence[str], observables: Sequence[str] = ()):
        self.handle = handle
        self.writer = csv.writer(handle, lineterminator=EXPORT_SETTINGS["line_terminator"])
        self.writer.writerow(header(coordinates, observables))
        self.rows = 0

    def write(self, sample: Sample):
        self.writer.writerow(sample_row(sample))
        self.rows += 1

    def close(self):
        self.handle.flush()


class JsonTrajectoryWriter:
    """Collects sample records and writes one JSON array on close, partial or not."""

    def __init__(self, handle: IO[str], coordinates: Sequence[str], observables: Sequence[str] = ()):
        self.handle = handle
        self.coordinates = tuple(coordinates)
        self.observables = tuple(observables)
        self.records = []

    @property
    def rows(self) -> int:
        return len(self.records)

    def write(self, sample: Sample):
        self.records.append(sample_record(sample, self.coordinates, self.observables))

    def close(self):
        json.dump(self.records, self.handle, indent=1)
        self.handle.write("\n")
        self.handle.flush()


def trajectory_writer(fmt: str, handle: IO[str], coordinates: Sequence[str], observables: Sequence[str] = ()):
    if fmt == "csv":
        return CsvTrajectoryWriter(handle, coordinates, observables)
    if fmt == "json":
        return JsonTrajectoryWriter(handle, coordinates, observables)
    raise ValueError(f"unknown output format '{fmt}', expected one of {FORMATS}")
