"""The closed term universe used for machine memory and port values.

A value is one of:

* an atom -- an interned symbol string,
* an integer,
* a finite sequence of values (a Python tuple),
* a multiset of atoms (:class:`~heterotest.multiset.Multiset`).

Values are finite, immutable and totally ordered: all atoms come first
(lexicographic), then integers (numeric), then sequences, then multisets
(both lexicographic on their canonical forms).  Equality is structural.
"""

from __future__ import annotations

from typing import Any, Tuple, Union

from .errors import SchemaError
from .multiset import Multiset

Value = Union[str, int, Tuple["Value", ...], Multiset]

# Reserved atoms.  BOTTOM is the generic undefined element, BOTTOM_M the
# undefined memory/port value, NULL the do-nothing stream symbol.  None of
# them may appear in user alphabets.
BOTTOM = "⊥"
BOTTOM_M = "⊥_M"
NULL = "λ"
RESERVED_ATOMS = frozenset({BOTTOM, BOTTOM_M, NULL})


def is_value(v: Any) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, (str, int, Multiset)):
        return True
    if isinstance(v, tuple):
        return all(is_value(x) for x in v)
    return False


def _type_rank(v: Value) -> int:
    if isinstance(v, str):
        return 0
    if isinstance(v, bool):  # bool is an int subclass; never a value
        raise TypeError("bool is not a value")
    if isinstance(v, int):
        return 1
    if isinstance(v, tuple):
        return 2
    if isinstance(v, Multiset):
        return 3
    raise TypeError(f"not a value: {v!r}")


def sort_key(v: Value):
    """A key realising the total order on values."""
    rank = _type_rank(v)
    if rank == 0:
        return (0, v)
    if rank == 1:
        return (1, v)
    if rank == 2:
        return (2, tuple(sort_key(x) for x in v))
    return (3, v.canonical())


def render(v: Value) -> str:
    """Compact human-readable form, used in reports and traces."""
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(render(x) for x in v) + ")"
    return v.canonical()


def value_to_json(v: Value) -> Any:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        raise TypeError("bool is not a value")
    if isinstance(v, int):
        return v
    if isinstance(v, tuple):
        return [value_to_json(x) for x in v]
    if isinstance(v, Multiset):
        return {"mset": v.canonical()}
    raise TypeError(f"not a value: {v!r}")


def value_from_json(obj: Any) -> Value:
    if isinstance(obj, str):
        return obj
    if isinstance(obj, bool):
        raise SchemaError("booleans are not values")
    if isinstance(obj, int):
        return obj
    if isinstance(obj, list):
        return tuple(value_from_json(x) for x in obj)
    if isinstance(obj, dict):
        if set(obj) == {"mset"} and isinstance(obj["mset"], str):
            return Multiset.from_string(obj["mset"])
        raise SchemaError(f"unrecognised value object: {obj!r}")
    raise SchemaError(f"unrecognised value: {obj!r}")
