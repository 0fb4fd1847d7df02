import json

import pytest

from spircr.fields import Seed, SeededStream
from spircr.plan import SchemeParams
from spircr.scheme import SpirRequest, select_query
from spircr.sim import (
    DecodeError,
    MessageStore,
    RetrievalSeeds,
    ServerRandomness,
    SimError,
    UserRandomness,
    answer_query,
    build_transcript,
    deal,
    decode,
    run_retrieval,
)
from spircr.plan import SymbolRequest

GRID = [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)]


def seeds(label: str) -> RetrievalSeeds:
    return RetrievalSeeds.from_master(Seed.from_text(label))


def test_deal_deterministic():
    p = SchemeParams.create(2, 2, 2)
    s = seeds("deal")
    a = deal(p, s.messages, s.pool, s.user)
    b = deal(p, s.messages, s.pool, s.user)
    assert a == b


def test_deal_shapes_and_subset_property():
    p = SchemeParams.create(2, 2, 2)
    s = seeds("shapes")
    store, randomness, user = deal(p, s.messages, s.pool, s.user)
    assert len(store.messages) == 2 and all(len(m) == 4 for m in store.messages)
    assert len(randomness.pool) == 3
    assert 1 <= user.index <= 3
    assert user.value == randomness.pool[user.index - 1]
    # space sizes the exhaustive audits rely on: 2^8 stores, 2^3 pools, 3 indices
    assert p.q ** (p.K * p.L) == 256 and p.q ** p.rs_size == 8 and p.rs_size == 3


def test_user_index_varies_with_seed():
    p = SchemeParams.create(2, 2, 2)
    indices = set()
    for i in range(30):
        s = seeds(f"u{i}")
        _, _, user = deal(p, s.messages, s.pool, s.user)
        indices.add(user.index)
    assert indices == {1, 2, 3}


def test_answer_query_golden_single_db():
    # the fixture row: answers are (W1+S1, W2+S2, W3+S3) evaluated pointwise
    p = SchemeParams.create(1, 3, 5)
    store = MessageStore(p, ((2,), (3,), (4,)))
    randomness = ServerRandomness(p, (1, 2, 3))
    reqs = tuple(
        SpirRequest(SymbolRequest(((m, 1),)), m) for m in (1, 2, 3)
    )
    assert answer_query(1, reqs, store, randomness) == (3, 0, 2)


def test_answer_query_gf2_wraps():
    p = SchemeParams.create(1, 2, 2)
    store = MessageStore(p, ((1,), (0,)))
    randomness = ServerRandomness(p, (1, 0))
    reqs = (SpirRequest(SymbolRequest(((1, 1),)), 1),)
    assert answer_query(1, reqs, store, randomness) == (0,)


def test_answer_query_range_errors():
    p = SchemeParams.create(1, 2, 2)
    store = MessageStore(p, ((1,), (0,)))
    randomness = ServerRandomness(p, (1, 0))
    bad_symbol = (SpirRequest(SymbolRequest(((1, 2),)), 1),)
    with pytest.raises(SimError):
        answer_query(1, bad_symbol, store, randomness)
    bad_cr = (SpirRequest(SymbolRequest(((1, 1),)), 9),)
    with pytest.raises(SimError):
        answer_query(1, bad_cr, store, randomness)


@pytest.mark.parametrize("n,k", GRID)
def test_retrieval_roundtrip_grid(n, k):
    p = SchemeParams.create(n, k, 257)
    for desired in range(1, k + 1):
        for trial in range(4):
            s = seeds(f"run-{n}-{k}-{desired}-{trial}")
            t = run_retrieval(p, desired, s)
            store, _, _ = deal(p, s.messages, s.pool, s.user)
            assert t.decoded == store.messages[desired - 1]
            assert sum(len(a) for a in t.answers) == t.rates.d * p.L


def test_query_not_influenced_by_messages():
    # scrubbing the store must leave the transmitted query untouched
    p = SchemeParams.create(2, 2, 257)
    s1 = seeds("content-a")
    s2 = RetrievalSeeds(
        messages=Seed.from_text("totally-different").derive("messages"),
        pool=s1.pool,
        user=s1.user,
        query=s1.query,
    )
    t1 = run_retrieval(p, 1, s1)
    t2 = run_retrieval(p, 1, s2)
    assert t1.query == t2.query
    assert t1.decoded != t2.decoded or t1.answers != t2.answers


def test_transcript_json_stable():
    p = SchemeParams.create(2, 2, 257)
    t1 = run_retrieval(p, 2, seeds("stable"))
    t2 = run_retrieval(p, 2, seeds("stable"))
    assert t1.to_json(indent=2) == t2.to_json(indent=2)
    doc = json.loads(t1.to_json())
    assert doc["params"]["N"] == 2
    assert doc["rates"]["d"] == "3/2"
    assert list(doc["seeds"]) == sorted(doc["seeds"])


def test_decode_requires_matching_user_index():
    p = SchemeParams.create(1, 2, 5)
    s = seeds("mismatch")
    store, randomness, user = deal(p, s.messages, s.pool, s.user)
    query = select_query(p, 1, user.index, SeededStream(s.query))
    answers = tuple(
        answer_query(db, reqs, store, randomness)
        for db, reqs in enumerate(query, start=1)
    )
    wrong = UserRandomness(index=(user.index % 2) + 1, value=user.value)
    with pytest.raises(DecodeError):
        decode(p, 1, query, answers, wrong)


def test_decode_detects_missing_companion():
    p = SchemeParams.create(2, 2, 5)
    s = seeds("chop")
    store, randomness, user = deal(p, s.messages, s.pool, s.user)
    query = select_query(p, 1, user.index, SeededStream(s.query), mutation="bare-companion")
    answers = tuple(
        answer_query(db, reqs, store, randomness)
        for db, reqs in enumerate(query, start=1)
    )
    with pytest.raises(DecodeError):
        decode(p, 1, query, answers, user)


def test_build_transcript_rates():
    p = SchemeParams.create(2, 3, 2)
    t = run_retrieval(p, 1, seeds("rates"))
    assert t.rates.as_strings() == {"d": "7/4", "rho_s": "7/8", "rho_u": "1/8"}
    core = t.core()
    assert set(core) >= {"params", "desired", "query", "answers", "decoded", "rates"}
    assert "seeds" not in core
