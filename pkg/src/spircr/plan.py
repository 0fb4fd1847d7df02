"""Replicated-database retrieval plans built from k-sum requests.

A plan asks each of N non-colluding databases, all holding the same K
messages of L = N^K symbols, for sums of single symbols drawn from every
size-k subset of messages. Undesired-only sums double as side information:
each one is re-queried at every other database inside a larger sum that
adds exactly one fresh desired symbol, which is how all L desired symbols
become recoverable by subtraction.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .fields import DrawStream, Permutation, identity_permutation, is_prime, sample_permutation


def message_length(n_db: int, n_msg: int) -> int:
    return n_db**n_msg


def cr_pool_size(n_db: int, n_msg: int) -> int:
    """Number of shared-randomness symbols the scheme layer consumes."""
    if n_db == 1:
        return n_msg
    return (n_db**n_msg - 1) // (n_db - 1)


def total_download(n_db: int, n_msg: int) -> int:
    """Total request count across all databases."""
    return n_db * cr_pool_size(n_db, n_msg)


@dataclass(frozen=True)
class SchemeParams:
    """Instance shape: N databases, K messages over F_q, plus derived sizes.

    L is the per-message symbol count, rs_size the shared-randomness pool
    size, ru_size how many of those symbols the user holds.
    """

    N: int
    K: int
    q: int
    L: int
    rs_size: int
    ru_size: int

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("need at least one database")
        if self.K < 2:
            raise ValueError("need at least two messages")
        if not is_prime(self.q):
            raise ValueError(f"q={self.q} is not prime")
        if self.L != message_length(self.N, self.K):
            raise ValueError(f"L must be {message_length(self.N, self.K)}")
        if self.rs_size != cr_pool_size(self.N, self.K):
            raise ValueError(f"rs_size must be {cr_pool_size(self.N, self.K)}")
        if self.ru_size != 1:
            raise ValueError("ru_size is fixed at 1")
        if self.L >= 1 << 32 or self.q >= 1 << 32:
            raise ValueError("L and q must fit in 32 bits for the wire format")

    @classmethod
    def create(cls, n_db: int, n_msg: int, q: int = 2) -> "SchemeParams":
        return cls(
            N=n_db,
            K=n_msg,
            q=q,
            L=message_length(n_db, n_msg),
            rs_size=cr_pool_size(n_db, n_msg),
            ru_size=1,
        )


@dataclass(frozen=True, order=True)
class SymbolRequest:
    """A formal sum of single symbols, one from each listed message.

    terms: ((message, symbol), ...), message indices strictly increasing,
    both 1-based.
    """

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("a request needs at least one term")
        msgs = [m for m, _ in self.terms]
        if msgs != sorted(msgs) or len(set(msgs)) != len(msgs):
            raise ValueError("terms must be sorted by distinct message index")

    @property
    def size(self) -> int:
        return len(self.terms)

    def messages(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.terms)

    def symbol_of(self, message: int) -> int | None:
        for m, s in self.terms:
            if m == message:
                return s
        return None

    def without(self, message: int) -> "SymbolRequest":
        kept = tuple((m, s) for m, s in self.terms if m != message)
        return SymbolRequest(kept)


@dataclass(frozen=True)
class PirPlan:
    """Per-database request lists for one desired message.

    per_db holds each database's requests in canonical order; perms records
    the per-message symbol orderings used for allocation (None when the plan
    was reconstructed from received requests).
    """

    params: SchemeParams
    desired: int
    per_db: tuple[tuple[SymbolRequest, ...], ...]
    perms: tuple[Permutation, ...] | None = None

    def all_requests(self) -> list[tuple[int, SymbolRequest]]:
        return [(db + 1, r) for db, reqs in enumerate(self.per_db) for r in reqs]


def request_sort_key(terms: tuple[tuple[int, int], ...]):
    # Canonical order: by sum size, then message indices, then symbol indices.
    return (len(terms), terms)


def subset_rank(subset: tuple[int, ...], desired: int, n_msg: int) -> tuple[int, ...]:
    # Messages ranked cyclically starting at the desired index, so the
    # desired message's own subsets come first at every size.
    return tuple(sorted((m - desired) % n_msg for m in subset))


def _check_desired(params: SchemeParams, desired: int) -> None:
    if not 1 <= desired <= params.K:
        raise ValueError(f"desired index {desired} outside [1, {params.K}]")


def build_pir_plan(params: SchemeParams, desired: int, rng: DrawStream) -> PirPlan:
    """Sample fresh symbol orderings and lay out the request structure."""
    _check_desired(params, desired)
    perms = tuple(sample_permutation(params.L, rng) for _ in range(params.K))
    return plan_with_perms(params, desired, perms)


def plan_with_perms(
    params: SchemeParams, desired: int, perms: tuple[Permutation, ...]
) -> PirPlan:
    """Deterministic plan layout for fixed per-message symbol orderings."""
    _check_desired(params, desired)
    n_db, n_msg = params.N, params.K
    next_pos = [0] * n_msg

    def take(message: int) -> int:
        p = perms[message - 1][next_pos[message - 1]]
        next_pos[message - 1] += 1
        return p + 1

    per_db: list[list[SymbolRequest]] = [[] for _ in range(n_db)]
    # Undesired-only sums of the previous round, per database, in creation
    # order; round t reuses each of them once at every other database.
    side_prev: list[list[SymbolRequest]] = [[] for _ in range(n_db)]

    for t in range(1, n_msg + 1):
        side_this: list[list[SymbolRequest]] = [[] for _ in range(n_db)]
        for db in range(1, n_db + 1):
            subsets = sorted(
                itertools.combinations(range(1, n_msg + 1), t),
                key=lambda sub: subset_rank(sub, desired, n_msg),
            )
            for subset in subsets:
                if desired in subset:
                    if t == 1:
                        per_db[db - 1].append(SymbolRequest(((desired, take(desired)),)))
                    else:
                        rest = tuple(m for m in subset if m != desired)
                        for other in _cyclic_others(db, n_db):
                            for comp in side_prev[other - 1]:
                                if comp.messages() != rest:
                                    continue
                                terms = tuple(
                                    sorted(comp.terms + ((desired, take(desired)),))
                                )
                                per_db[db - 1].append(SymbolRequest(terms))
                else:
                    for _ in range((n_db - 1) ** (t - 1)):
                        terms = tuple((m, take(m)) for m in subset)
                        req = SymbolRequest(terms)
                        per_db[db - 1].append(req)
                        side_this[db - 1].append(req)
        side_prev = side_this

    ordered = tuple(
        tuple(sorted(reqs, key=lambda r: request_sort_key(r.terms)))
        for reqs in per_db
    )
    return PirPlan(params=params, desired=desired, per_db=ordered, perms=perms)


def _cyclic_others(db: int, n_db: int) -> list[int]:
    return [((db - 1 + k) % n_db) + 1 for k in range(1, n_db)]


def plan_from_requests(
    params: SchemeParams,
    desired: int,
    per_db: tuple[tuple[SymbolRequest, ...], ...],
) -> PirPlan:
    """Rebuild a plan view from received request structure (no orderings)."""
    ordered = tuple(
        tuple(sorted(reqs, key=lambda r: request_sort_key(r.terms)))
        for reqs in per_db
    )
    return PirPlan(params=params, desired=desired, per_db=ordered, perms=None)


def undesired_only_slots(plan: PirPlan) -> list[tuple[int, SymbolRequest]]:
    """Undesired-only requests in canonical slot order.

    These are the requests that introduce fresh masking randomness; order is
    (size, database, cyclic subset rank, terms) which reproduces allocation
    order whenever at most one instance per (database, subset) exists.
    """
    slots = []
    for db, reqs in enumerate(plan.per_db, start=1):
        for r in reqs:
            if plan.desired not in r.messages():
                slots.append((db, r))
    slots.sort(
        key=lambda item: (
            item[1].size,
            item[0],
            subset_rank(item[1].messages(), plan.desired, plan.params.K),
            item[1].terms,
        )
    )
    return slots


def validate_pir_plan(plan: PirPlan, params: SchemeParams | None = None) -> list[str]:
    """Structural checks; returns human-readable violations (empty = valid)."""
    params = params or plan.params
    problems: list[str] = []
    n_db, n_msg, length = params.N, params.K, params.L
    if len(plan.per_db) != n_db:
        return [f"expected {n_db} database request lists, got {len(plan.per_db)}"]

    for db, reqs in enumerate(plan.per_db, start=1):
        counts: dict[tuple[int, ...], int] = {}
        for r in reqs:
            counts[r.messages()] = counts.get(r.messages(), 0) + 1
            for m, s in r.terms:
                if not 1 <= m <= n_msg:
                    problems.append(f"db{db}: message index {m} out of range")
                if not 1 <= s <= length:
                    problems.append(f"db{db}: symbol index {s} out of range")
        for t in range(1, n_msg + 1):
            want = (n_db - 1) ** (t - 1)
            for subset in itertools.combinations(range(1, n_msg + 1), t):
                got = counts.get(subset, 0)
                if got != want:
                    problems.append(
                        f"db{db}: subset {subset} has {got} requests, expected {want}"
                    )

    desired_seen: set[int] = set()
    undesired_seen: dict[tuple[int, int], tuple[int, SymbolRequest]] = {}
    for db, r in plan.all_requests():
        if plan.desired in r.messages():
            s = r.symbol_of(plan.desired)
            if s in desired_seen:
                problems.append(f"index reuse: desired symbol {s} requested more than once")
            desired_seen.add(s)  # type: ignore[arg-type]
        else:
            for m, s in r.terms:
                key = (m, s)
                if key in undesired_seen:
                    problems.append(
                        f"index reuse: fresh symbol W{m}[{s}] introduced twice "
                        f"(db{undesired_seen[key][0]} and db{db})"
                    )
                undesired_seen[key] = (db, r)

    if len(desired_seen) != length:
        problems.append(
            f"desired symbols cover {len(desired_seen)} of {length} positions"
        )

    # Every multi-term desired request must reuse, at another database, an
    # undesired-only request over exactly its undesired terms.
    by_terms: dict[tuple[tuple[int, int], ...], int] = {}
    for db, r in plan.all_requests():
        if plan.desired not in r.messages():
            by_terms[r.terms] = db
    for db, r in plan.all_requests():
        if plan.desired in r.messages() and r.size >= 2:
            rest = r.without(plan.desired)
            comp_db = by_terms.get(rest.terms)
            if comp_db is None:
                problems.append(
                    f"side-information missing: db{db} has no companion for "
                    f"{format_terms(r.terms)}"
                )
            elif comp_db == db:
                problems.append(
                    f"side-information missing: companion of {format_terms(r.terms)} "
                    f"sits at the same database db{db}"
                )
    return problems


def download_rate(params: SchemeParams) -> Fraction:
    return Fraction(total_download(params.N, params.K), params.L)


def format_terms(terms: tuple[tuple[int, int], ...], length: int | None = None) -> str:
    parts = []
    for m, s in terms:
        if length == 1:
            parts.append(f"W{m}")
        else:
            parts.append(f"W{m}[{s}]")
    return "+".join(parts)


def render_plan(plan: PirPlan) -> str:
    """Text table of the plan: rows are requests, columns are databases."""
    length = plan.params.L
    cols = [
        [format_terms(r.terms, length) for r in reqs] for reqs in plan.per_db
    ]
    depth = max(len(c) for c in cols)
    widths = [max([len(f"DB{i+1}")] + [len(x) for x in col]) for i, col in enumerate(cols)]
    lines = [
        f"desired W{plan.desired}  (N={plan.params.N}, K={plan.params.K}, L={length})"
    ]
    lines.append("  ".join(f"DB{i+1}".ljust(w) for i, w in enumerate(widths)))
    for row in range(depth):
        cells = [
            (col[row] if row < len(col) else "").ljust(w)
            for col, w in zip(cols, widths)
        ]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def identity_plan(params: SchemeParams, desired: int) -> PirPlan:
    """Plan with identity symbol orderings; used for display and fixtures."""
    perms = tuple(identity_permutation(params.L) for _ in range(params.K))
    return plan_with_perms(params, desired, perms)
