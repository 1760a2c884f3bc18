"""Tool decision layer: confidence gate, action/argument heads, envelopes.

A consensus result either goes back for another thought round (Rethink) or
is committed to a tool call (Dispatch).  Tool choice is the argmax of a
linear head over the merged sync vector; each object-reference slot is
filled by the candidate whose embedding best matches that slot's projection
of the sync vector.  Ties break toward the lowest index, fallback results
always route to the noop tool, and scaling the sync vector by any positive
factor changes nothing (argmax of a linear score).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .consensus import ConsensusResult
from .envelope import Envelope, EnvelopeMeta, sync_digest
from .errors import NoCandidates
from .numerics import matvec

GAMMA = 0.70           # between typical mid-range confidences and the
                       # baseline halting threshold, so both gate branches
                       # occur in practice
SLOT_EMBED_WIDTH = 16
NOOP_TOOL = "noop"


class SlotKind(enum.Enum):
    OBJECT_REF = "object_ref"
    SCALAR = "scalar"


@dataclass(frozen=True)
class ToolSpec:
    name: str
    arg_slots: tuple = ()         # ((slot_name, SlotKind), ...)
    description: str = ""


class ToolRegistry:
    """Ordered, immutable-by-convention tool table; noop is always present."""

    def __init__(self, specs: list[ToolSpec]):
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError("tool names must be unique")
        if NOOP_TOOL not in names:
            specs = [ToolSpec(NOOP_TOOL, (), "do nothing")] + list(specs)
        self.specs = tuple(specs)
        self._by_name = {s.name: s for s in self.specs}

    def __len__(self) -> int:
        return len(self.specs)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> ToolSpec:
        return self._by_name[name]

    @property
    def max_slots(self) -> int:
        return max((len(s.arg_slots) for s in self.specs), default=0)


@dataclass(frozen=True)
class RouterParams:
    gamma: float                       # dispatch threshold on merged confidence
    action_head: np.ndarray            # (len(registry), pair_count)
    slot_head: np.ndarray              # (max_slots * embed_width, pair_count)
    candidates: tuple                  # ordered (name, embedding) pairs
    embed_width: int = SLOT_EMBED_WIDTH


class GateOutcome(enum.Enum):
    RETHINK = "rethink"
    DISPATCH = "dispatch"


def policy_gate(
    c_merged: float, gamma: float, slabs_used: int, max_slabs: int
) -> GateOutcome:
    """Dispatch when confident enough or out of slab budget (no livelock)."""
    if c_merged >= gamma or slabs_used >= max_slabs:
        return GateOutcome.DISPATCH
    return GateOutcome.RETHINK


def _fill_slot(
    slot_index: int, kind: SlotKind, sync: np.ndarray, params: RouterParams
):
    width = params.embed_width
    rows = params.slot_head[slot_index * width : (slot_index + 1) * width]
    projection = matvec(rows, sync)
    if kind is SlotKind.OBJECT_REF:
        if not params.candidates:
            raise NoCandidates(f"object_ref slot {slot_index} has no candidates")
        scores = [
            float(np.dot(emb.astype(np.float64), projection))
            for _, emb in params.candidates
        ]
        return params.candidates[int(np.argmax(scores))][0]
    # Scalar slots get the cosine of the projection against the all-ones
    # direction: deterministic and invariant to positive scaling of sync.
    norm = float(np.linalg.norm(projection))
    if norm == 0.0:
        return 0.0
    return float(np.sum(projection) / (norm * np.sqrt(width)))


def select_action(
    result: ConsensusResult, params: RouterParams, registry: ToolRegistry
) -> tuple[ToolSpec, dict]:
    """Pick a tool and fill its slots from the merged sync vector.

    Fallback results always select noop with no arguments.  Ties break
    toward the lowest tool/candidate index.
    """
    if len(registry) == 0:
        raise ValueError("registry is empty")
    if result.fallback:
        return registry.get(NOOP_TOOL), {}
    scores = matvec(params.action_head, result.sync_merged)
    spec = registry.specs[int(np.argmax(scores))]
    args = {
        slot_name: _fill_slot(i, kind, result.sync_merged, params)
        for i, (slot_name, kind) in enumerate(spec.arg_slots)
    }
    return spec, args


@dataclass
class EnvelopeSession:
    """Hands out envelopes with strictly increasing ids within a session."""

    episode: str
    _next_id: int = field(default=1, init=False)

    def build(
        self,
        tool: ToolSpec,
        args: dict,
        result: ConsensusResult,
        affect: np.ndarray,
        step: int,
        slab_count: int,
        ticks: int,
    ) -> Envelope:
        envelope = Envelope(
            id=self._next_id,
            method=f"tool/{tool.name}",
            args=dict(args),
            meta=EnvelopeMeta(
                episode=self.episode,
                step=step,
                slab_count=slab_count,
                ticks=ticks,
                confidence=float(result.confidence_merged),
                affect=tuple(float(a) for a in affect),
                sync_digest=sync_digest(result.sync_merged),
                fallback=bool(result.fallback),
            ),
        )
        self._next_id += 1
        return envelope
