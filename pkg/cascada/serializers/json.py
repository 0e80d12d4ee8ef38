"""
JSON serializer implementation.

Domain objects are converted to the pydantic document models in
``cascada.types`` and written with pydantic, so every file the library
writes is validated against its schema on the way back in.
"""

import json
from collections.abc import Sequence
from typing import Any, TypeVar

from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from cascada.cascade import CascadeSample
from cascada.core import Action, Instance, Strategy
from cascada.exceptions import DocumentValidationError
from cascada.metapop import MetapopSpec, Parcel, Patch, layered_graph
from cascada.models import KernelParams
from cascada.preprocess import ReducedCascade
from cascada.serializers.base import Serializer, register_serializer
from cascada.types import (
    ActionDocument,
    CascadeDocument,
    CascadePoolDocument,
    InstanceDocument,
    KernelDocument,
    MetapopDocument,
    ParcelDocument,
    StrategyDocument,
)

T = TypeVar("T")


def instance_to_document(instance: Instance, seed: int | None = None) -> InstanceDocument:
    """Convert an instance to its document."""
    return InstanceDocument(
        nodes=instance.num_nodes,
        edges=[(e.src, e.dst, e.prob) for e in instance.edges],
        base_nodes=sorted(instance.base_nodes),
        actions=[
            ActionDocument(nodes=sorted(a.nodes), cost=a.cost, label=a.label)
            for a in instance.actions
        ],
        sources=sorted(instance.sources),
        rewards=[(v, r) for v, r in enumerate(instance.rewards) if r != 0],
        budget=instance.budget,
        labels=list(instance.labels) if instance.labels is not None else None,
        seed=seed,
    )


def instance_from_document(document: InstanceDocument) -> Instance:
    """Convert a document to an instance (not validated)."""
    return Instance.build(
        num_nodes=document.nodes,
        edges=document.edges,
        base_nodes=document.base_nodes,
        actions=[Action(frozenset(a.nodes), a.cost, a.label) for a in document.actions],
        sources=document.sources,
        rewards=dict(document.rewards),
        budget=document.budget,
        labels=document.labels,
    )


def metapop_to_document(spec: MetapopSpec, seed: int | None = None) -> InstanceDocument:
    """Convert a spec to its layered instance document with the ``metapop`` block."""
    document = instance_to_document(layered_graph(spec), seed)
    kernel = spec.kernel
    document.metapop = MetapopDocument(
        positions=[(p.x, p.y) for p in spec.patches],
        occupied=[i for i, p in enumerate(spec.patches) if p.occupied],
        extinction=list(spec.extinction),
        colonization=list(spec.colonization),
        horizon=spec.horizon,
        parcels=[
            ParcelDocument(
                patches=list(p.patches), conserved=p.conserved, cost=p.cost, label=p.label
            )
            for p in spec.parcels
        ],
        kernel=KernelDocument(r0=kernel.r0, alpha=kernel.alpha, gamma=kernel.gamma)
        if kernel is not None
        else None,
    )
    return document


def metapop_from_document(document: InstanceDocument) -> MetapopSpec:
    """Rebuild a spec from the ``metapop`` block of an instance document."""
    block = document.metapop
    if block is None:
        raise DocumentValidationError("Document has no metapop block")
    occupied = set(block.occupied)
    return MetapopSpec(
        patches=tuple(
            Patch(x, y, i in occupied) for i, (x, y) in enumerate(block.positions)
        ),
        extinction=tuple(block.extinction),
        colonization=tuple((int(i), int(j), float(p)) for i, j, p in block.colonization),
        horizon=block.horizon,
        parcels=tuple(
            Parcel(tuple(p.patches), p.conserved, p.cost, p.label) for p in block.parcels
        ),
        kernel=KernelParams(block.kernel.r0, block.kernel.alpha, block.kernel.gamma)
        if block.kernel is not None
        else None,
        budget=document.budget,
    )


def cascade_to_document(cascade: CascadeSample) -> CascadeDocument:
    """Convert a sample or reduced cascade to its document."""
    provenance = None
    if isinstance(cascade, ReducedCascade):
        provenance = [sorted(p) for p in cascade.provenance]
    return CascadeDocument(
        scenario_index=cascade.scenario_index,
        seed=list(cascade.seed),
        nodes=list(cascade.nodes),
        edges=list(cascade.edges),
        sources=sorted(cascade.sources),
        rewards=list(cascade.rewards),
        action_sets=[sorted(a) for a in cascade.action_sets],
        provenance=provenance,
    )


def cascade_from_document(document: CascadeDocument) -> CascadeSample:
    """Convert a document to a cascade; documents with provenance become reduced cascades."""
    n = len(document.nodes)
    if len(document.rewards) != n or len(document.action_sets) != n:
        raise DocumentValidationError(
            f"Cascade {document.scenario_index}: per-node arrays must have {n} entries"
        )
    fields: dict[str, Any] = {
        "scenario_index": document.scenario_index,
        "nodes": tuple(document.nodes),
        "edges": tuple((int(u), int(v)) for u, v in document.edges),
        "sources": frozenset(document.sources),
        "rewards": tuple(document.rewards),
        "action_sets": tuple(frozenset(a) for a in document.action_sets),
        "seed": tuple(document.seed),
    }
    if document.provenance is None:
        return CascadeSample(**fields)
    return ReducedCascade(**fields, provenance=tuple(frozenset(p) for p in document.provenance))


def strategy_to_document(strategy: Strategy, seed: int | None = None) -> StrategyDocument:
    """Convert a strategy to its document."""
    return StrategyDocument(
        seed=seed,
        actions=sorted(strategy.actions),
        n_actions=strategy.n_actions,
        cost=strategy.cost,
    )


def strategy_from_document(document: StrategyDocument) -> Strategy:
    """Convert a document to a strategy."""
    bits = [False] * document.n_actions
    for action in document.actions:
        if not 1 <= action <= document.n_actions:
            raise DocumentValidationError(
                f"Action {action} out of range 1..{document.n_actions}"
            )
        bits[action - 1] = True
    return Strategy(purchased=tuple(bits), cost=document.cost)


class JSONSerializer(Serializer):
    """
    JSON serializer for instances, specs, cascades, strategies and reports.

    Anything that is neither a domain object nor a pydantic model falls back
    to plain ``json``.
    """

    @property
    def content_type(self) -> str:
        """Return the content type for JSON."""
        return "application/json"

    @property
    def suffix(self) -> str:
        return ".json"

    def to_document(self, data: Any) -> Any:
        """Convert a domain object to the model that is written for it."""
        if isinstance(data, MetapopSpec):
            return metapop_to_document(data)
        if isinstance(data, Instance):
            return instance_to_document(data)
        if isinstance(data, CascadeSample):
            return cascade_to_document(data)
        if isinstance(data, Strategy):
            return strategy_to_document(data)
        if isinstance(data, (list, tuple)) and data and all(
            isinstance(item, CascadeSample) for item in data
        ):
            return CascadePoolDocument(cascades=[cascade_to_document(c) for c in data])
        return data

    def serialize(self, data: Any) -> bytes:
        """
        Serialize data to JSON bytes.

        Raises:
            DocumentValidationError: If the data cannot be serialized
        """
        try:
            document = self.to_document(data)
            if isinstance(document, BaseModel):
                return document.model_dump_json(indent=2).encode("utf-8")
            return json.dumps(document, indent=2, default=self._json_default).encode("utf-8")
        except (TypeError, ValueError) as e:
            raise DocumentValidationError(
                f"Failed to serialize data to JSON: {e}",
                {"type": type(data).__name__, "error": str(e)},
            ) from e

    def deserialize(self, data: bytes, target_type: type[T]) -> T:
        """
        Deserialize JSON bytes into ``target_type``.

        Supported targets are ``Instance``, ``MetapopSpec``, ``CascadeSample``,
        ``ReducedCascade``, ``Strategy``, ``list`` (a cascade pool) and any
        pydantic model.

        Raises:
            DocumentValidationError: If the data cannot be deserialized
        """
        try:
            parsed = json.loads(data.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise DocumentValidationError(
                f"Failed to parse JSON: {e}",
                {"data": data[:100].decode("utf-8", errors="replace"), "error": str(e)},
            ) from e

        try:
            result: Any
            if target_type is Instance:
                result = instance_from_document(InstanceDocument.model_validate(parsed))
            elif target_type is MetapopSpec:
                result = metapop_from_document(InstanceDocument.model_validate(parsed))
            elif target_type is Strategy:
                result = strategy_from_document(StrategyDocument.model_validate(parsed))
            elif isinstance(target_type, type) and issubclass(target_type, CascadeSample):
                result = cascade_from_document(CascadeDocument.model_validate(parsed))
            elif target_type is list:
                if isinstance(parsed, dict) and "cascades" in parsed:
                    pool = CascadePoolDocument.model_validate(parsed)
                    documents = pool.cascades
                else:
                    documents = [CascadeDocument.model_validate(item) for item in parsed]
                result = [cascade_from_document(d) for d in documents]
            elif isinstance(target_type, type) and issubclass(target_type, BaseModel):
                result = target_type.model_validate(parsed)
            else:
                result = parsed
            return result  # type: ignore[no-any-return]
        except PydanticValidationError as e:
            raise DocumentValidationError(
                f"Failed to validate document: {e}", {"errors": e.errors()}
            ) from e
        except DocumentValidationError:
            raise
        except Exception as e:
            raise DocumentValidationError(
                f"Failed to deserialize document: {e}", {"error": str(e)}
            ) from e

    def _json_default(self, obj: Any) -> Any:
        """
        Default JSON encoder for non-standard types.

        Raises:
            TypeError: If the object cannot be serialized
        """
        if isinstance(obj, BaseModel):
            return obj.model_dump(mode="json")
        if isinstance(obj, (set, frozenset)):
            return sorted(obj)
        if hasattr(obj, "item"):
            # numpy scalars
            return obj.item()
        if hasattr(obj, "value"):
            return obj.value
        raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dump_pool(
    cascades: Sequence[CascadeSample],
    seed: int | None = None,
    stats: dict[str, Any] | None = None,
) -> bytes:
    """Serialize a pool of cascades with the seed that produced it."""
    document = CascadePoolDocument(
        seed=seed, cascades=[cascade_to_document(c) for c in cascades], stats=stats
    )
    return document.model_dump_json(indent=2).encode("utf-8")


def dump_instance(instance: Instance | MetapopSpec, seed: int | None = None) -> bytes:
    """Serialize an instance or spec with the seed that produced it."""
    if isinstance(instance, MetapopSpec):
        document = metapop_to_document(instance, seed)
    else:
        document = instance_to_document(instance, seed)
    return document.model_dump_json(indent=2).encode("utf-8")


# Register the JSON serializer
register_serializer("json", JSONSerializer())
