"""Reference sequential object specifications and their registry.

Specs are registered by name; scenario files refer to them by that name.
States are plain immutable values (tuples / dicts copied on write) so the
fold-and-compare machinery in `seqspec` stays side-effect free.
"""
from __future__ import annotations

from typing import Any, Callable

from .errors import MalformedInputError
from .seqspec import OpInstance, SeqObjectSpec

OK = "ok"
BOTTOM = None  # JSON-friendly stand-in for the "no effect" response

LIST_VALUES = ("a", "b", "c", "d")


def _list_apply(state: tuple, op: OpInstance):
    if op.method == "append":
        (v,) = op.args
        if v not in LIST_VALUES:
            raise MalformedInputError(f"append value {v!r} not in {LIST_VALUES}")
        return OK, state + (v,)
    if op.method == "readLast":
        return (state[-1] if state else BOTTOM), state
    if op.method == "readAll":
        return list(state), state
    if op.method == "swap":
        i, j = op.args
        if not (0 <= i <= j):
            raise MalformedInputError(f"swap indices ({i},{j}) invalid")
        # Index-validity guard: both positions must exist.
        if len(state) < j + 1:
            return BOTTOM, state
        items = list(state)
        items[i], items[j] = items[j], items[i]
        return OK, tuple(items)
    raise MalformedInputError(f"unknown list method {op.method!r}")


def list_spec(**_params) -> SeqObjectSpec:
    return SeqObjectSpec(name="list", initial_state=(), apply=_list_apply)


def _asset_apply(balances: dict, op: OpInstance):
    if op.method == "transfer":
        frm, to, amount = op.args
        if frm not in balances or to not in balances:
            raise MalformedInputError(f"unknown account in transfer {op.args}")
        if amount < 0:
            raise MalformedInputError("negative transfer amount")
        if balances[frm] < amount:
            return "rejected", balances
        updated = dict(balances)
        updated[frm] -= amount
        updated[to] += amount
        return "accepted", updated
    if op.method == "readBalance":
        (acct,) = op.args
        if acct not in balances:
            raise MalformedInputError(f"unknown account {acct!r}")
        return balances[acct], balances
    raise MalformedInputError(f"unknown asset-transfer method {op.method!r}")


def asset_transfer_spec(balances: dict | None = None, **_params) -> SeqObjectSpec:
    initial = dict(balances) if balances else {"main": 100, "other": 0}
    if any(v < 0 for v in initial.values()):
        raise MalformedInputError("initial balances must be non-negative")
    return SeqObjectSpec(name="asset-transfer", initial_state=initial, apply=_asset_apply)


def _counter_apply(count: int, op: OpInstance):
    if op.method == "inc":
        return OK, count + 1
    if op.method == "read":
        return count, count
    raise MalformedInputError(f"unknown counter method {op.method!r}")


def counter_spec(**_params) -> SeqObjectSpec:
    return SeqObjectSpec(name="counter", initial_state=0, apply=_counter_apply)


def _register_apply(value, op: OpInstance):
    if op.method == "write":
        (v,) = op.args
        return OK, v
    if op.method == "read":
        return value, value
    raise MalformedInputError(f"unknown register method {op.method!r}")


def register_spec(**_params) -> SeqObjectSpec:
    return SeqObjectSpec(name="register", initial_state=None, apply=_register_apply)


_REGISTRY: dict[str, Callable[..., SeqObjectSpec]] = {
    "list": list_spec,
    "asset-transfer": asset_transfer_spec,
    "counter": counter_spec,
    "register": register_spec,
}


def make_spec(name: str, params: dict[str, Any] | None = None) -> SeqObjectSpec:
    if name not in _REGISTRY:
        raise MalformedInputError(
            f"unknown object spec {name!r}; known: {sorted(_REGISTRY)}"
        )
    return _REGISTRY[name](**(params or {}))


def spec_names() -> list[str]:
    return sorted(_REGISTRY)
