"""Small-step interpreter for a CSP subset over a shared integer store.

Terms cover Stop, Skip, event prefix, sequencing, interleaved parallel with
channel rendezvous, guarded continuations, indexed parallel replication and
named process calls. Every transition is atomic: one event plus one batch of
store assignments. Channel communication is synchronous; a send and a
matching receive fire as a single joint transition, so no in-flight value
ever survives across a transition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import RecursionBudgetExceeded, UnboundVariable, UndefinedProcess

DEFAULT_UNFOLD_LIMIT = 10**6


# --------------------------------------------------------------------------
# Expressions

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Idx(Expr):
    """Array element reference, e.g. slotTT[i]."""
    name: str
    index: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str  # + - * / == != < <= > >= && ||
    left: Expr
    right: Expr


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, int):
        return Const(value)
    if isinstance(value, str):
        return Var(value)
    raise TypeError(f"cannot treat {value!r} as an expression")


def evaluate(expr, store) -> int:
    """Evaluate an integer expression; comparisons and logic yield 0/1."""
    expr = _coerce(expr)
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        try:
            value = store[expr.name]
        except KeyError:
            raise UnboundVariable(expr.name) from None
        if not isinstance(value, int):
            raise UnboundVariable(f"{expr.name} is an array, not a scalar")
        return value
    if isinstance(expr, Idx):
        try:
            array = store[expr.name]
        except KeyError:
            raise UnboundVariable(expr.name) from None
        i = evaluate(expr.index, store)
        if not 0 <= i < len(array):
            raise UnboundVariable(f"{expr.name}[{i}] out of range")
        return array[i]
    if isinstance(expr, Bin):
        a = evaluate(expr.left, store)
        b = evaluate(expr.right, store)
        op = expr.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a // b
        if op == "==":
            return int(a == b)
        if op == "!=":
            return int(a != b)
        if op == "<":
            return int(a < b)
        if op == "<=":
            return int(a <= b)
        if op == ">":
            return int(a > b)
        if op == ">=":
            return int(a >= b)
        if op == "&&":
            return int(bool(a) and bool(b))
        if op == "||":
            return int(bool(a) or bool(b))
        raise ValueError(f"unknown operator {op!r}")
    raise TypeError(f"not an expression: {expr!r}")


# --------------------------------------------------------------------------
# Events and terms

@dataclass(frozen=True)
class Event:
    name: str
    payload: int | None = None  # present iff from a channel rendezvous

    def __post_init__(self):
        if not self.name:
            raise ValueError("event name must be non-empty")


class ProcessTerm:
    __slots__ = ()


@dataclass(frozen=True)
class Stop(ProcessTerm):
    pass


@dataclass(frozen=True)
class Skip(ProcessTerm):
    pass


STOP = Stop()
SKIP = Skip()


@dataclass(frozen=True)
class Prefix(ProcessTerm):
    """Engage in `event`, atomically apply `updates`, then behave as `cont`.

    updates is a tuple of (target, expr); target is a variable name or a
    (name, index_expr) pair for array cells. Assignments run in order
    against the evolving store, like a program block.
    """
    event: str
    cont: ProcessTerm
    updates: tuple = ()


@dataclass(frozen=True)
class Guard(ProcessTerm):
    """Enable `cont`'s first step only while `cond` evaluates true."""
    cond: Expr
    cont: ProcessTerm


@dataclass(frozen=True)
class Seq(ProcessTerm):
    left: ProcessTerm
    right: ProcessTerm


@dataclass(frozen=True)
class Par(ProcessTerm):
    left: ProcessTerm
    right: ProcessTerm


@dataclass(frozen=True)
class Send(ProcessTerm):
    channel: str
    expr: Expr
    cont: ProcessTerm


@dataclass(frozen=True)
class Recv(ProcessTerm):
    channel: str
    var: str
    cont: ProcessTerm


@dataclass(frozen=True)
class IndexedPar(ProcessTerm):
    """Replicated interleaving: body(i) for i in [lo, hi], composed in parallel."""
    var: str
    lo: int
    hi: int
    body: ProcessTerm

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("IndexedPar range is empty")

    def expand(self) -> ProcessTerm:
        parts = [substitute(self.body, {self.var: Const(i)})
                 for i in range(self.lo, self.hi + 1)]
        term = parts[0]
        for p in parts[1:]:
            term = Par(term, p)
        return term


@dataclass(frozen=True)
class Call(ProcessTerm):
    name: str
    args: tuple = ()


def substitute(term: ProcessTerm, binding: dict) -> ProcessTerm:
    """Replace free Var occurrences per `binding` throughout a term tree."""
    def sub_expr(e):
        e = _coerce(e)
        if isinstance(e, Var) and e.name in binding:
            return binding[e.name]
        if isinstance(e, Idx):
            return Idx(e.name, sub_expr(e.index))
        if isinstance(e, Bin):
            return Bin(e.op, sub_expr(e.left), sub_expr(e.right))
        return e

    def sub_target(t):
        if isinstance(t, tuple):
            return (t[0], sub_expr(t[1]))
        return t

    if isinstance(term, (Stop, Skip)):
        return term
    if isinstance(term, Prefix):
        ups = tuple((sub_target(t), sub_expr(e)) for t, e in term.updates)
        return Prefix(term.event, substitute(term.cont, binding), ups)
    if isinstance(term, Guard):
        return Guard(sub_expr(term.cond), substitute(term.cont, binding))
    if isinstance(term, Seq):
        return Seq(substitute(term.left, binding), substitute(term.right, binding))
    if isinstance(term, Par):
        return Par(substitute(term.left, binding), substitute(term.right, binding))
    if isinstance(term, Send):
        return Send(term.channel, sub_expr(term.expr), substitute(term.cont, binding))
    if isinstance(term, Recv):
        inner = {k: v for k, v in binding.items() if k != term.var}
        return Recv(term.channel, term.var, substitute(term.cont, inner))
    if isinstance(term, IndexedPar):
        inner = {k: v for k, v in binding.items() if k != term.var}
        return IndexedPar(term.var, term.lo, term.hi, substitute(term.body, inner))
    if isinstance(term, Call):
        return Call(term.name, tuple(sub_expr(a) for a in term.args))
    raise TypeError(f"not a term: {term!r}")


# --------------------------------------------------------------------------
# Kernel state

def _freeze_store(store: dict) -> tuple:
    return tuple(sorted(store.items()))


@dataclass(frozen=True)
class KernelState:
    """Immutable snapshot: active term multiset + integer store.

    channel_buffers is always empty between transitions (rendezvous is
    atomic); the field exists so the synchrony invariant is checkable.
    """
    terms: tuple
    store_items: tuple
    definitions: tuple = ()  # tuple of (name, params, body)
    unfolds: int = 0
    unfold_limit: int = DEFAULT_UNFOLD_LIMIT
    channel_buffers: tuple = ()

    @classmethod
    def make(cls, terms, store=None, definitions=None,
             unfold_limit=DEFAULT_UNFOLD_LIMIT):
        terms = tuple(terms)
        store = dict(store or {})
        frozen = tuple(sorted(
            (k, tuple(v) if isinstance(v, (list, tuple)) else v)
            for k, v in store.items()))
        defs = tuple(sorted((definitions or {}).items()))
        defs = tuple((name, tuple(params), body) for name, (params, body) in defs)
        return cls(terms=terms, store_items=frozen, definitions=defs,
                   unfold_limit=unfold_limit)

    @property
    def store(self) -> dict:
        return dict(self.store_items)

    def _defs(self) -> dict:
        return {name: (params, body) for name, params, body in self.definitions}


def _apply_updates(store: dict, updates) -> dict:
    if not updates:
        return store
    new = dict(store)
    for target, expr in updates:
        value = evaluate(expr, new)
        if isinstance(target, tuple):
            name, index_expr = target
            i = evaluate(index_expr, new)
            array = list(new.get(name, ()))
            if not 0 <= i < len(array):
                raise UnboundVariable(f"{name}[{i}] out of range")
            array[i] = value
            new[name] = tuple(array)
        else:
            new[target] = value
    return new


def _is_terminated_term(term) -> bool:
    if isinstance(term, Skip):
        return True
    if isinstance(term, Seq):
        return _is_terminated_term(term.left) and _is_terminated_term(term.right)
    if isinstance(term, Par):
        return _is_terminated_term(term.left) and _is_terminated_term(term.right)
    return False


class _Unfolds:
    __slots__ = ("count", "limit")

    def __init__(self, limit=DEFAULT_UNFOLD_LIMIT):
        self.count = 0
        self.limit = limit

    def spend(self):
        self.count += 1
        if self.count > self.limit:
            raise RecursionBudgetExceeded(
                f"more than {self.limit} process unfoldings on one path")


def _term_steps(term, store, defs, unfolds):
    """Return (transitions, sends, recvs).

    transitions: list of (event_name_or_Event, updates, new_term); rendezvous
                 transitions carry a ready-made Event with its payload
    sends:       list of (channel, value_expr, plug) where plug(cont) rebuilds
                 the whole term with the send replaced by cont
    recvs:       list of (channel, var, plug)
    """
    if isinstance(term, (Stop, Skip)):
        return [], [], []
    if isinstance(term, Prefix):
        return [(term.event, term.updates, term.cont)], [], []
    if isinstance(term, Guard):
        if evaluate(term.cond, store):
            return _term_steps(term.cont, store, defs, unfolds)
        return [], [], []
    if isinstance(term, Seq):
        if _is_terminated_term(term.left):
            return _term_steps(term.right, store, defs, unfolds)
        trans, sends, recvs = _term_steps(term.left, store, defs, unfolds)
        right = term.right
        trans = [(e, u, Seq(t, right)) for e, u, t in trans]
        sends = [(c, v, (lambda p: (lambda k: Seq(p(k), right)))(plug))
                 for c, v, plug in sends]
        recvs = [(c, x, (lambda p: (lambda k: Seq(p(k), right)))(plug))
                 for c, x, plug in recvs]
        return trans, sends, recvs
    if isinstance(term, Par):
        lt, ls, lr = _term_steps(term.left, store, defs, unfolds)
        rt, rs, rr = _term_steps(term.right, store, defs, unfolds)
        left, right = term.left, term.right
        trans = [(e, u, Par(t, right)) for e, u, t in lt]
        trans += [(e, u, Par(left, t)) for e, u, t in rt]
        # channel rendezvous inside this Par
        for sc, sv, splug in ls:
            for rc, rx, rplug in rr:
                if sc == rc:
                    value = evaluate(sv, store)
                    new = Par(splug(None), rplug(None))
                    trans.append((Event(sc, payload=value),
                                  ((rx, Const(value)),), new))
        for sc, sv, splug in rs:
            for rc, rx, rplug in lr:
                if sc == rc:
                    value = evaluate(sv, store)
                    new = Par(rplug(None), splug(None))
                    trans.append((Event(sc, payload=value),
                                  ((rx, Const(value)),), new))
        sends = [(c, v, (lambda p: (lambda k: Par(p(k), right)))(plug))
                 for c, v, plug in ls]
        sends += [(c, v, (lambda p: (lambda k: Par(left, p(k))))(plug))
                  for c, v, plug in rs]
        recvs = [(c, x, (lambda p: (lambda k: Par(p(k), right)))(plug))
                 for c, x, plug in lr]
        recvs += [(c, x, (lambda p: (lambda k: Par(left, p(k))))(plug))
                  for c, x, plug in rr]
        return trans, sends, recvs
    if isinstance(term, Send):
        cont = term.cont
        return [], [(term.channel, term.expr, lambda k, c=cont: c)], []
    if isinstance(term, Recv):
        cont = term.cont
        return [], [], [(term.channel, term.var, lambda k, c=cont: c)]
    if isinstance(term, IndexedPar):
        return _term_steps(term.expand(), store, defs, unfolds)
    if isinstance(term, Call):
        try:
            params, body = defs[term.name]
        except KeyError:
            raise UndefinedProcess(term.name) from None
        if len(params) != len(term.args):
            raise UndefinedProcess(
                f"{term.name} expects {len(params)} args, got {len(term.args)}")
        unfolds.spend()
        binding = {p: Const(evaluate(a, store)) for p, a in zip(params, term.args)}
        return _term_steps(substitute(body, binding), store, defs, unfolds)
    raise TypeError(f"not a term: {term!r}")


def successors(state: KernelState) -> set:
    """All enabled one-step transitions as (Event, KernelState) pairs.

    The active term multiset behaves as an implicit parallel composition:
    matching send/receive offers across distinct active terms also fire.
    """
    store = state.store
    defs = state._defs()
    unfolds = _Unfolds(max(state.unfold_limit - state.unfolds, 0))
    # guard plain Python recursion too: a Loop = Loop definition would
    # otherwise blow the interpreter stack before a large budget is spent
    unfolds.limit = min(unfolds.limit, 400)
    per_term = [_term_steps(t, store, defs, unfolds) for t in state.terms]

    out = set()

    def mk(new_terms, event, updates):
        new_store = _apply_updates(store, updates)
        frozen = tuple(sorted(new_store.items()))
        ks = KernelState(terms=tuple(new_terms), store_items=frozen,
                         definitions=state.definitions,
                         unfolds=state.unfolds + unfolds.count,
                         unfold_limit=state.unfold_limit)
        out.add((event, ks))

    terms = list(state.terms)
    for i, (trans, _sends, _recvs) in enumerate(per_term):
        for ev, updates, new_term in trans:
            event = ev if isinstance(ev, Event) else Event(ev)
            mk(terms[:i] + [new_term] + terms[i + 1:], event, updates)
    # rendezvous across distinct active terms
    for i, (_, sends_i, _) in enumerate(per_term):
        for j, (_, _, recvs_j) in enumerate(per_term):
            if i == j:
                continue
            for sc, sv, splug in sends_i:
                for rc, rx, rplug in recvs_j:
                    if sc != rc:
                        continue
                    value = evaluate(sv, store)
                    new_terms = list(terms)
                    new_terms[i] = splug(None)
                    new_terms[j] = rplug(None)
                    mk(new_terms, Event(sc, payload=value), ((rx, Const(value)),))
    return out


def is_terminated(state: KernelState) -> bool:
    """True iff every active term has successfully terminated (Stop has not)."""
    return all(_is_terminated_term(t) for t in state.terms)
