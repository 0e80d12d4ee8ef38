"""
Serializer interface and the registry of file formats.

Every document or table Cascada writes goes through a ``Serializer``. The
registry finds one by name, content type or file suffix, so a path like
``sweep.csv`` or ``instance.json`` picks its own format.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, TypeVar

from cascada.exceptions import UsageError

T = TypeVar("T")


def read_bytes(path: str | Path) -> bytes:
    """
    Read a whole input file.

    Raises:
        UsageError: If the file cannot be read
    """
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise UsageError(f"Cannot read {path}: {e.strerror}") from e


class Serializer(ABC):
    """
    A file format for Cascada documents or tables.

    Subclasses convert domain objects to bytes and back; ``load`` adds the
    file access on top.
    """

    @property
    @abstractmethod
    def content_type(self) -> str:
        """The media type of the bytes this serializer produces."""

    @property
    @abstractmethod
    def suffix(self) -> str:
        """File suffix, with the dot, that selects this serializer."""

    @abstractmethod
    def serialize(self, data: Any) -> bytes:
        """
        Serialize data to bytes.

        Args:
            data: A domain object, document model or table

        Returns:
            The serialized bytes

        Raises:
            DocumentValidationError: If the data has no form in this format
        """

    @abstractmethod
    def deserialize(self, data: bytes, target_type: type[T]) -> T:
        """
        Read bytes back into ``target_type``.

        Args:
            data: The bytes to read
            target_type: The expected type of the result

        Returns:
            The object

        Raises:
            DocumentValidationError: If the bytes do not form a valid document
        """

    def load(self, path: str | Path, target_type: type[T]) -> T:
        """Read and deserialize a file."""
        return self.deserialize(read_bytes(path), target_type)


class SerializerRegistry:
    """Serializers indexed by name, content type and suffix."""

    def __init__(self) -> None:
        self._by_name: dict[str, Serializer] = {}
        self._by_content_type: dict[str, Serializer] = {}
        self._by_suffix: dict[str, Serializer] = {}

    def register(self, name: str, serializer: Serializer) -> None:
        self._by_name[name] = serializer
        self._by_content_type[serializer.content_type] = serializer
        self._by_suffix[serializer.suffix.lower()] = serializer

    def get(self, name: str) -> Serializer:
        """
        Raises:
            KeyError: If no serializer has this name
        """
        return self._by_name[name]

    def get_by_content_type(self, content_type: str) -> Serializer:
        """
        Raises:
            KeyError: If no serializer produces this content type
        """
        return self._by_content_type[content_type]

    def for_path(self, path: str | Path, default: str = "json") -> Serializer:
        """The serializer for a file suffix, or ``default`` for unknown suffixes."""
        found = self._by_suffix.get(Path(path).suffix.lower())
        return found if found is not None else self._by_name[default]

    def names(self) -> list[str]:
        return list(self._by_name)


_registry = SerializerRegistry()


def register_serializer(name: str, serializer: Serializer) -> None:
    """Register a serializer in the global registry."""
    _registry.register(name, serializer)


def get_serializer(name: str) -> Serializer:
    """Get a serializer from the global registry."""
    return _registry.get(name)


def get_serializer_by_content_type(content_type: str) -> Serializer:
    """Get a serializer by content type from the global registry."""
    return _registry.get_by_content_type(content_type)


def get_serializer_for_path(path: str | Path) -> Serializer:
    """Get the serializer a file's suffix selects (JSON when unknown)."""
    return _registry.for_path(path)


def list_serializers() -> list[str]:
    """Names of the registered serializers."""
    return _registry.names()
