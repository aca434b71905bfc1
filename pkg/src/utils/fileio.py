import csv
import os

from pathlib import Path
from types import TracebackType
from typing import Any, Iterable, Sequence, TextIO


def write_text_atomic(path: Path, content: str) -> None:
    tmp_path = path.with_name(f".{path.name}.tmp")
    with open(tmp_path, "w") as f:
        f.write(content)
        f.flush()
        os.fsync(f.fileno())

    os.replace(tmp_path, path)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with CsvWriter(path, header) as writer:
        writer.write_rows(rows)


class CsvWriter:
    def __init__(self, path: Path, header: Sequence[str]) -> None:
        self._path = path
        self._header = tuple(header)
        self._file: TextIO | None = None

    def __enter__(self) -> "CsvWriter":
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self._path, "w", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(self._header)
        self._file.flush()
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def write_rows(self, rows: Iterable[Sequence[Any]]) -> None:
        if self._file is None:
            raise RuntimeError(f"CsvWriter({self._path}) is not open.")

        for row in rows:
            if len(row) != len(self._header):
                raise ValueError(f"Row has {len(row)} fields, expected {len(self._header)}.")

            self._writer.writerow(format_field(value) for value in row)

        self._file.flush()


def format_field(value: Any) -> str:
    if value is None:
        return ""

    if isinstance(value, float):
        return repr(value)

    return str(value)
