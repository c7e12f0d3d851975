"""
Pydantic Data Models for the Choreography Toolkit

This module contains the validated, JSON-serializable models exchanged
between services and the command line:
- Violations found by the connectedness checks
- Amendment configuration and the replayable amendment report
- Rename advice, check / verify / conformance results

AST and endpoint terms are frozen dataclasses in the services; only
reports and configuration go through pydantic.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from choreo.config import (
    DEFAULT_EXPANSION_BUDGET,
    DEFAULT_FRESH_PREFIX,
    DEFAULT_MAX_ROUNDS,
)


# ============================================================================
# MODES
# ============================================================================

class TraceMode(str, Enum):
    """Strong traces keep private labels, weak traces erase them."""
    STRONG = "strong"
    WEAK = "weak"


class SystemSemantics(str, Enum):
    """Communication model of a projected system."""
    SYNC = "sync"
    ASYNC = "async"


# ============================================================================
# VIOLATION MODELS
# ============================================================================

class ViolationKind(str, Enum):
    SEQ_NOT_CONNECTED = "SeqNotConnected"
    CHOICE_NOT_UNIQUE_POINT = "ChoiceNotUniquePoint"
    CAUSALITY_UNSAFE = "CausalityUnsafe"


class ViolationDetail(str, Enum):
    """Which condition of a choice failed, or which class a causality issue has."""
    COND1 = "Cond1"
    COND2 = "Cond2"
    PARALLEL_ISSUE = "ParallelIssue"
    SEQUENTIAL_ISSUE = "SequentialIssue"
    CHOICE_ISSUE = "ChoiceIssue"


class Violation(BaseModel):
    """A located failure of one connectedness condition."""
    kind: ViolationKind = Field(..., description="Condition that failed")
    detail: Optional[ViolationDetail] = Field(None, description="Cond1/Cond2 or causality class")
    path: list[int] = Field(default_factory=list, description="Seq node, Choice node, or common ancestor")
    witnesses: list[str] = Field(default_factory=list, description="Offending interactions or roles, rendered")
    witness_paths: list[list[int]] = Field(default_factory=list, description="Paths of offending interactions")
    endangered: list[list[int]] = Field(
        default_factory=list,
        description="Interactions whose receive may capture the other send (causality only)"
    )

    class Config:
        json_schema_extra = {
            "example": {
                "kind": "SeqNotConnected",
                "path": [],
                "witnesses": ["a->b:o1", "c->d:o2"],
                "witness_paths": [[0], [1]]
            }
        }

    def to_json(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)


# ============================================================================
# AMENDMENT MODELS
# ============================================================================

class AmendConfig(BaseModel):
    """Knobs of the amendment driver."""
    max_rounds: int = Field(DEFAULT_MAX_ROUNDS, ge=1, description="Verify-and-iterate rounds")
    expansion_budget: int = Field(DEFAULT_EXPANSION_BUDGET, ge=1, description="Node budget per normalization")
    fresh_prefix: str = Field(
        DEFAULT_FRESH_PREFIX,
        pattern=r"^[A-Za-z_][A-Za-z0-9_]*$",
        description="Prefix of generated role and operation names"
    )

    class Config:
        json_schema_extra = {
            "example": {"max_rounds": 16, "expansion_budget": 20000, "fresh_prefix": "_"}
        }


class AmendPattern(str, Enum):
    NORMALIZE = "Normalize"
    CONNECT_SEQ = "ConnectSeq"
    CONNECT_CHOICE_COND1 = "ConnectChoiceCond1"
    CONNECT_CHOICE_COND2 = "ConnectChoiceCond2"
    FIX_SEQ_CAUSALITY = "FixSeqCausality"
    FIX_CHOICE_CAUSALITY = "FixChoiceCausality"


class AmendStep(BaseModel):
    """One rewrite: the subterm at `at` went from `before` to `after`."""
    pattern: AmendPattern
    at: list[int] = Field(default_factory=list)
    before: str
    after: str


class AmendReport(BaseModel):
    """Ordered, replayable record of an amendment."""
    steps: list[AmendStep] = Field(default_factory=list)
    rounds: int = Field(0, ge=0, description="Driver rounds used")
    added_interactions: int = Field(0, ge=0, description="Private interactions added")
    fresh_roles: int = Field(0, ge=0, description="Fresh roles introduced")

    def to_json(self) -> dict:
        return self.model_dump(mode="json")


# ============================================================================
# DIAGNOSTIC AND RESULT MODELS
# ============================================================================

class RenameAdvice(BaseModel):
    """A causality violation that renaming one operation would remove."""
    path: list[int] = Field(..., description="Interaction to rename")
    interaction: str
    operation: str
    suggested: str = Field(..., description="Fresh public operation name")
    issue: ViolationDetail
    recommended: bool = Field(False, description="True for parallel issues")


class CheckResult(BaseModel):
    connected: bool
    violations: list[Violation] = Field(default_factory=list)
    rename_advice: Optional[list[RenameAdvice]] = None

    def to_json(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)


class VerifyResult(BaseModel):
    equivalent: bool
    mode: TraceMode
    witness: Optional[list[str]] = Field(None, description="Trace present in exactly one set")
    first_traces: int = Field(0, ge=0)
    second_traces: int = Field(0, ge=0)


class ConformanceResult(BaseModel):
    """Choreography strong traces versus synchronous projection traces."""
    sync_strong_equal: bool
    counterexample: Optional[list[str]] = Field(None, description="Trace present in exactly one set")
    choreography_traces: int = Field(0, ge=0)
    system_traces: int = Field(0, ge=0)
