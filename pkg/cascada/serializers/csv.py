"""
CSV serializer for result tables.

Tables are pandas DataFrames. The first line of every file is a versioned
header comment naming the table and the seed of the run, taken from the
frame's ``attrs``.
"""

import io
import re
from typing import Any, TypeVar

import pandas as pd

from cascada.exceptions import DocumentValidationError
from cascada.serializers.base import Serializer, register_serializer

T = TypeVar("T")

TABLE_VERSION = 1

_HEADER = re.compile(r"^# cascada (?P<table>\S+) v(?P<version>\d+)(?: seed=(?P<seed>\S+))?$")


def tag_table(frame: pd.DataFrame, table: str, seed: int | None) -> pd.DataFrame:
    """Attach the table name and seed written in the header line."""
    frame.attrs["table"] = table
    frame.attrs["seed"] = seed
    return frame


class CSVSerializer(Serializer):
    """Reads and writes tagged DataFrames."""

    @property
    def content_type(self) -> str:
        return "text/csv"

    @property
    def suffix(self) -> str:
        return ".csv"

    def serialize(self, data: Any) -> bytes:
        """
        Serialize a DataFrame.

        Raises:
            DocumentValidationError: If ``data`` is not a DataFrame
        """
        if not isinstance(data, pd.DataFrame):
            raise DocumentValidationError(
                f"CSV output needs a DataFrame, got {type(data).__name__}"
            )
        table = data.attrs.get("table", "table")
        seed = data.attrs.get("seed")
        header = f"# cascada {table} v{TABLE_VERSION}"
        if seed is not None:
            header += f" seed={seed}"
        body = data.to_csv(index=False, lineterminator="\n")
        return f"{header}\n{body}".encode("utf-8")

    def deserialize(self, data: bytes, target_type: type[T]) -> T:
        """
        Read a tagged table back into a DataFrame.

        Raises:
            DocumentValidationError: If the header line is missing or malformed
        """
        text = data.decode("utf-8")
        first, _, rest = text.partition("\n")
        match = _HEADER.match(first.strip())
        if match is None:
            raise DocumentValidationError(
                "Missing table header line", {"line": first[:100]}
            )
        frame = pd.read_csv(io.StringIO(rest))
        frame.attrs["table"] = match["table"]
        frame.attrs["version"] = int(match["version"])
        seed = match["seed"]
        frame.attrs["seed"] = int(seed) if seed is not None and seed.lstrip("-").isdigit() else seed
        return frame  # type: ignore[return-value]


# Register the CSV serializer
register_serializer("csv", CSVSerializer())
