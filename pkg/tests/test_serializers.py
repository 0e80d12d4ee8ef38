"""Tests for the serializers module."""

import json

import numpy as np
import pandas as pd
import pytest
from pydantic import BaseModel

from cascada.cascade import CascadeSample, sample_cascade, sample_cascades
from cascada.core import Instance, Strategy
from cascada.exceptions import DocumentValidationError, UsageError
from cascada.generators import figure2, spatial_metapop
from cascada.metapop import MetapopSpec
from cascada.preprocess import ReducedCascade, reduce
from cascada.serializers import (
    CSVSerializer,
    JSONSerializer,
    dump_instance,
    dump_pool,
    get_serializer,
    get_serializer_by_content_type,
    get_serializer_for_path,
    list_serializers,
    tag_table,
)
from cascada.types import CascadePoolDocument, InstanceDocument


class SampleModel(BaseModel):
    """Sample Pydantic model for testing."""

    id: int
    name: str


def test_registry():
    """Test both serializers are registered by name and content type."""
    assert isinstance(get_serializer("json"), JSONSerializer)
    assert isinstance(get_serializer_by_content_type("text/csv"), CSVSerializer)
    assert {"json", "csv"} <= set(list_serializers())
    with pytest.raises(KeyError):
        get_serializer("yaml")


def test_serializer_for_path():
    """Test the file suffix selects the format and unknown suffixes read as JSON."""
    assert isinstance(get_serializer_for_path("out/sweep.CSV"), CSVSerializer)
    assert isinstance(get_serializer_for_path("instance.json"), JSONSerializer)
    assert isinstance(get_serializer_for_path("instance.txt"), JSONSerializer)


def test_load(tmp_path):
    """Test loading a file and a missing path."""
    path = tmp_path / "gadget.json"
    path.write_bytes(JSONSerializer().serialize(figure2(2)))

    assert get_serializer_for_path(path).load(path, Instance).num_nodes == 8
    with pytest.raises(UsageError, match="Cannot read"):
        JSONSerializer().load(tmp_path / "missing.json", Instance)


def test_instance_document():
    """Test an instance is written in the documented layout."""
    serializer = JSONSerializer()

    document = json.loads(serializer.serialize(figure2(2)))

    assert document["nodes"] == 8
    assert document["edges"][0] == [0, 1, 1.0]
    assert document["base_nodes"] == [0]
    assert document["actions"][3] == {"nodes": [6, 7], "cost": 1.0, "label": "a4"}
    assert document["sources"] == [0]
    assert document["rewards"][0] == [1, 1.0]
    assert document["budget"] == 2.0
    assert document["metapop"] is None


def test_instance_round_trip():
    """Test an instance survives a write and a read."""
    serializer = JSONSerializer()
    instance = figure2(5)

    restored = serializer.deserialize(serializer.serialize(instance), Instance)

    assert restored.edges == instance.edges
    assert restored.actions == instance.actions
    assert restored.rewards == instance.rewards
    assert restored.base_nodes == instance.base_nodes
    assert restored.labels == instance.labels


def test_metapop_round_trip():
    """Test a spec is written with its layered instance and read back whole."""
    serializer = JSONSerializer()
    spec = spatial_metapop(n_patches=15, n_parcels=3, seed=2, horizon=2)

    data = dump_instance(spec, seed=2)
    document = InstanceDocument.model_validate_json(data)

    assert document.seed == 2
    assert document.nodes == 15 * 3
    assert document.metapop is not None
    assert serializer.deserialize(data, MetapopSpec) == spec


def test_metapop_block_required():
    """Test reading a spec from a plain instance fails."""
    serializer = JSONSerializer()

    with pytest.raises(DocumentValidationError, match="no metapop block"):
        serializer.deserialize(serializer.serialize(figure2(2)), MetapopSpec)


def test_cascade_round_trip():
    """Test sampled and reduced cascades keep their type and content."""
    serializer = JSONSerializer()
    sample = sample_cascade(figure2(3), 4, 7)
    reduced = reduce(sample)

    restored = serializer.deserialize(serializer.serialize(sample), CascadeSample)
    restored_reduced = serializer.deserialize(serializer.serialize(reduced), CascadeSample)

    assert type(restored) is CascadeSample
    assert restored == sample
    assert restored.seed == sample.seed
    assert isinstance(restored_reduced, ReducedCascade)
    assert restored_reduced == reduced


def test_pool_document():
    """Test a pool is written with its seed and statistics."""
    pool = sample_cascades(figure2(2), 3, 5)

    data = dump_pool(pool, seed=5, stats={"summary": {"cascades": 3}})
    document = CascadePoolDocument.model_validate_json(data)

    assert document.seed == 5
    assert [c.scenario_index for c in document.cascades] == [0, 1, 2]
    assert document.stats == {"summary": {"cascades": 3}}
    assert JSONSerializer().deserialize(data, list) == pool


def test_cascade_arrays_must_align():
    """Test per-node arrays of the wrong length are rejected."""
    document = {
        "scenario_index": 0,
        "nodes": [0, 1],
        "edges": [[0, 1]],
        "sources": [0],
        "rewards": [1.0],
        "action_sets": [[], []],
    }

    with pytest.raises(DocumentValidationError, match="per-node arrays must have 2 entries"):
        JSONSerializer().deserialize(json.dumps(document).encode(), CascadeSample)


def test_strategy_round_trip():
    """Test strategies keep their actions and cost."""
    serializer = JSONSerializer()
    strategy = Strategy.from_actions([1.0, 2.0, 4.0], [1, 3])

    data = serializer.serialize(strategy)

    assert json.loads(data) == {"seed": None, "actions": [1, 3], "n_actions": 3, "cost": 5.0}
    assert serializer.deserialize(data, Strategy) == strategy


def test_strategy_out_of_range():
    """Test a strategy document with an unknown action is rejected."""
    data = b'{"actions": [4], "n_actions": 3}'

    with pytest.raises(DocumentValidationError, match="Action 4 out of range 1..3"):
        JSONSerializer().deserialize(data, Strategy)


def test_invalid_documents():
    """Test malformed JSON and schema violations."""
    serializer = JSONSerializer()

    with pytest.raises(DocumentValidationError, match="Failed to parse JSON"):
        serializer.deserialize(b"{not json", Instance)
    with pytest.raises(DocumentValidationError, match="Failed to validate document") as exc_info:
        serializer.deserialize(b'{"nodes": 2, "actions": [{"nodes": [1], "cost": -1}]}', Instance)
    assert exc_info.value.errors["errors"]


def test_plain_values_and_models():
    """Test non-domain data falls back to plain JSON."""
    serializer = JSONSerializer()

    payload = {"a": frozenset({2, 1}), "b": np.int64(3), "m": SampleModel(id=1, name="x")}
    data = serializer.serialize(payload)

    assert json.loads(data) == {"a": [1, 2], "b": 3, "m": {"id": 1, "name": "x"}}
    restored = serializer.deserialize(b'{"id": 2, "name": "y"}', SampleModel)
    assert restored == SampleModel(id=2, name="y")


def test_unserializable():
    """Test objects without a JSON form raise DocumentValidationError."""

    class Opaque:
        pass

    with pytest.raises(DocumentValidationError, match="Failed to serialize data to JSON"):
        JSONSerializer().serialize(Opaque())


def test_csv_round_trip():
    """Test a tagged table keeps its header and columns."""
    serializer = CSVSerializer()
    frame = tag_table(pd.DataFrame({"budget": [1.0, 2.0], "method": ["saa", "saa"]}), "sweep", 3)

    data = serializer.serialize(frame)
    restored = serializer.deserialize(data, pd.DataFrame)

    assert data.decode().splitlines()[0] == "# cascada sweep v1 seed=3"
    assert restored.attrs == {"table": "sweep", "version": 1, "seed": 3}
    assert restored["budget"].tolist() == [1.0, 2.0]
    assert restored["method"].tolist() == ["saa", "saa"]


def test_csv_without_seed():
    """Test a table without a seed omits it from the header."""
    frame = tag_table(pd.DataFrame({"N": [1]}), "gapcurve", None)

    assert CSVSerializer().serialize(frame).decode().startswith("# cascada gapcurve v1\n")


def test_csv_errors():
    """Test non-frames and headerless files are rejected."""
    serializer = CSVSerializer()

    with pytest.raises(DocumentValidationError, match="CSV output needs a DataFrame"):
        serializer.serialize([1, 2])
    with pytest.raises(DocumentValidationError, match="Missing table header line"):
        serializer.deserialize(b"a,b\n1,2\n", pd.DataFrame)
