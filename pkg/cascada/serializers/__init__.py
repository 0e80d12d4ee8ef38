"""Serializers for the documents and tables Cascada reads and writes."""

from cascada.serializers.base import (
    Serializer,
    get_serializer,
    get_serializer_by_content_type,
    get_serializer_for_path,
    list_serializers,
    read_bytes,
    register_serializer,
)
from cascada.serializers.csv import CSVSerializer, tag_table
from cascada.serializers.json import JSONSerializer, dump_instance, dump_pool

__all__ = [
    "Serializer",
    "JSONSerializer",
    "CSVSerializer",
    "dump_instance",
    "dump_pool",
    "tag_table",
    "get_serializer",
    "get_serializer_by_content_type",
    "get_serializer_for_path",
    "read_bytes",
    "list_serializers",
    "register_serializer",
]
