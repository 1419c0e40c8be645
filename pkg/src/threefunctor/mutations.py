"""Deliberate corruptions of single structure maps.

Each mutation is switched on inside :func:`active` and consulted by the
builder of the map it targets. They exist to show that every check family
can fail.
"""

from __future__ import annotations

import contextlib
import contextvars

MUTATIONS = {
    "associator": "swap two basis vectors in every fusion associator",
    "lambda-order": "swap two matched pairs in every standard-form isomorphism",
    "lambda-phase": "multiply one column of every standard-form isomorphism by a phase",
    "dagger-conjugation": "drop the complex conjugation from the dagger",
    "cocycle-phase": "multiply the action of one arrow by a phase in random representations",
}

# family each mutation is expected to break
TARGETS = {
    "associator": "projection",
    "lambda-order": "base_change",
    "lambda-phase": "mixed",
    "dagger-conjugation": "involutive",
    "cocycle-phase": "fell",
}

_current: contextvars.ContextVar[tuple[str, dict] | None] = contextvars.ContextVar(
    "threefunctor_mutation", default=None
)


@contextlib.contextmanager
def active(name: str | None, **params):
    """Enable mutation ``name`` for the duration of the block."""
    if name is not None and name not in MUTATIONS:
        raise KeyError(f"unknown mutation {name!r}")
    token = _current.set(None if name is None else (name, params))
    try:
        yield
    finally:
        _current.reset(token)


def current(name: str) -> dict | None:
    """Parameters of mutation ``name`` if it is active, else None."""
    cur = _current.get()
    if cur is not None and cur[0] == name:
        return cur[1]
    return None
