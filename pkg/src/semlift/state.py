"""Runtime values and heap snapshots.

Kept separate from the interpreter so that lifting and virtual sources can
work over a configuration without importing the step semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from .syntax import ClassTable, Linkage, Type


@dataclass(frozen=True)
class ObjRef:
    """A heap reference; object N lifts to run:objN."""
    n: int

    def __repr__(self):
        return "obj%d" % self.n


class UnitValue:
    _instance: Optional["UnitValue"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unit"


UNIT_VALUE = UnitValue()

# None encodes null
Value = Union[int, float, bool, str, None, ObjRef, UnitValue]


@dataclass
class ObjectState:
    class_name: str
    fields: Dict[str, Value]
    linkage: Optional[Linkage] = None  # per-object linkage overrides the class's


@dataclass(frozen=True)
class RuntimeValue:
    """An already-evaluated value in statement position; rules that reduce to
    an assignment (new, return, the reflection rules) park their result here."""
    value: Value


@dataclass(frozen=True)
class WaitingStmt:
    """The statement of a caller blocked on a method call. `template` is the
    original call statement; the return value replaces its right-hand side."""
    template: object
    line: int = 0


@dataclass
class Process:
    """One stack frame: executing method, receiver, remaining statements and
    local store. Statically declared variable types ride along so runtime
    configurations can be re-checked against the original typing."""
    method: str
    self_ref: ObjRef
    stmts: List[object]
    store: Dict[str, Value] = field(default_factory=dict)
    var_types: Dict[str, Type] = field(default_factory=dict)


@dataclass
class RuntimeConfiguration:
    class_table: ClassTable
    heap: Dict[int, ObjectState] = field(default_factory=dict)
    next_id: int = 0
    processes: List[Process] = field(default_factory=list)
    next_temp: int = 0

    def allocate(self, class_name: str, fields: Dict[str, Value],
                 linkage: Optional[Linkage] = None) -> ObjRef:
        ref = ObjRef(self.next_id)
        self.heap[self.next_id] = ObjectState(class_name, fields, linkage)
        self.next_id += 1
        return ref

    def object(self, ref: ObjRef) -> ObjectState:
        return self.heap[ref.n]
