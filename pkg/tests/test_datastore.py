"""Keyspace semantics: families, counts, erasure, the sorted-set index."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miniredis.datastore import KeyStore, RangeBound, SortedSet, parse_int, parse_score
from miniredis.errors import CommandError, WrongTypeError


@pytest.fixture
def store():
    return KeyStore()


# -- strings ---------------------------------------------------------------


def test_set_get_roundtrip(store):
    store.set(b"ice-cream", b"chocolate")
    assert store.get(b"ice-cream") == b"chocolate"
    assert store.get(b"ice-cream") == b"chocolate"  # reads do not consume


def test_get_missing_returns_none(store):
    assert store.get(b"nope") is None


def test_set_overwrites_any_family(store):
    store.lpush(b"k", b"x")
    store.set(b"k", b"now a string")
    assert store.get(b"k") == b"now a string"
    assert store.kind(b"k") == "string"


def test_set_keeps_binary_values(store):
    blob = bytes(range(256)) + b"\r\n\x00"
    store.set(b"bin", blob)
    assert store.get(b"bin") == blob


def test_keys_are_case_sensitive(store):
    store.set(b"Key", b"upper")
    store.set(b"key", b"lower")
    assert store.get(b"Key") == b"upper"
    assert store.get(b"key") == b"lower"


def test_get_on_hash_is_wrongtype(store):
    store.hset(b"h", b"f", b"v")
    with pytest.raises(WrongTypeError) as excinfo:
        store.get(b"h")
    assert (
        excinfo.value.message
        == "WRONGTYPE Operation against a key holding the wrong kind of value"
    )


# -- hashes ---------------------------------------------------------------


def test_hset_reports_new_field_then_overwrite(store):
    assert store.hset(b"myhash", b"abc", b"42") == 1
    assert store.hset(b"myhash", b"def", b"some text") == 1
    assert store.hset(b"myhash", b"abc", b"43") == 0
    assert store.hget(b"myhash", b"abc") == b"43"


def test_hget_and_hexists(store):
    store.hset(b"myhash", b"abc", b"42")
    assert store.hget(b"myhash", b"abc") == b"42"
    assert store.hget(b"myhash", b"xyz") is None
    assert store.hget(b"nohash", b"abc") is None
    assert store.hexists(b"myhash", b"abc") == 1
    assert store.hexists(b"myhash", b"xyz") == 0
    assert store.hexists(b"nohash", b"abc") == 0


def test_hdel_counts_and_erases_empty_hash(store):
    store.hset(b"h", b"a", b"1")
    store.hset(b"h", b"b", b"2")
    assert store.hdel(b"h", b"a", b"missing", b"a") == 1
    assert store.kind(b"h") == "hash"
    assert store.hdel(b"h", b"b") == 1
    assert store.kind(b"h") is None  # empty collections vanish


def test_hash_ops_on_string_are_wrongtype(store):
    store.set(b"s", b"x")
    for call in (
        lambda: store.hset(b"s", b"f", b"v"),
        lambda: store.hget(b"s", b"f"),
        lambda: store.hexists(b"s", b"f"),
        lambda: store.hdel(b"s", b"f"),
    ):
        with pytest.raises(WrongTypeError):
            call()
    assert store.get(b"s") == b"x"  # value untouched by the failures


# -- sets ------------------------------------------------------------------


def test_sadd_counts_only_new_members(store):
    assert store.sadd(b"myset", b"puppy") == 1
    assert store.sadd(b"myset", b"kitten") == 1
    assert store.sadd(b"myset", b"kitten") == 0
    assert store.sadd(b"myset", b"a", b"a", b"b") == 2


def test_srem_and_empty_erasure(store):
    store.sadd(b"s", b"a", b"b")
    assert store.srem(b"s", b"a", b"zz") == 1
    assert store.srem(b"s", b"b") == 1
    assert store.kind(b"s") is None
    assert store.srem(b"s", b"a") == 0


def test_set_algebra_matches_python_sets(store):
    store.sadd(b"myset", b"puppy", b"kitten")
    store.sadd(b"otherset", b"birdie", b"kitten")
    assert store.sinter(b"myset", b"otherset") == {b"kitten"}
    assert store.sunion(b"myset", b"otherset") == {b"puppy", b"kitten", b"birdie"}
    assert store.sdiff(b"myset", b"otherset") == {b"puppy"}
    assert store.sdiff(b"otherset", b"myset") == {b"birdie"}


def test_set_algebra_treats_missing_keys_as_empty(store):
    store.sadd(b"s", b"a")
    assert store.sinter(b"s", b"missing") == set()
    assert store.sunion(b"missing", b"s") == {b"a"}
    assert store.sdiff(b"s", b"missing") == {b"a"}
    assert store.sdiff(b"missing", b"s") == set()


def test_set_algebra_wrongtype_applies_to_every_operand(store):
    store.sadd(b"s", b"a")
    store.set(b"str", b"x")
    for op in (store.sinter, store.sunion, store.sdiff):
        with pytest.raises(WrongTypeError):
            op(b"s", b"str")
        with pytest.raises(WrongTypeError):
            op(b"str", b"s")


@given(
    left=st.sets(st.binary(min_size=1, max_size=6), max_size=12),
    right=st.sets(st.binary(min_size=1, max_size=6), max_size=12),
)
def test_set_algebra_property(left, right):
    store = KeyStore()
    if left:
        store.sadd(b"l", *left)
    if right:
        store.sadd(b"r", *right)
    assert store.sinter(b"l", b"r") == left & right
    assert store.sunion(b"l", b"r") == left | right
    assert store.sdiff(b"l", b"r") == left - right


# -- lists ----------------------------------------------------------------


def test_lpush_each_value_becomes_head(store):
    assert store.lpush(b"mylist", b"chocolate") == 1
    assert store.lpush(b"mylist", b"strawberry", b"vanilla") == 3
    assert store.llen(b"mylist") == 3
    assert store.lindex(b"mylist", 0) == b"vanilla"
    assert store.lindex(b"mylist", 1) == b"strawberry"
    assert store.lindex(b"mylist", 2) == b"chocolate"


def test_lindex_negative_and_out_of_range(store):
    store.lpush(b"l", b"c", b"b", b"a")
    assert store.lindex(b"l", -1) == b"c"
    assert store.lindex(b"l", -3) == b"a"
    assert store.lindex(b"l", 3) is None
    assert store.lindex(b"l", -4) is None
    assert store.lindex(b"missing", 0) is None


@pytest.mark.parametrize(
    "start,stop,expected",
    [
        (0, 1, [b"vanilla", b"strawberry"]),
        (0, -1, [b"vanilla", b"strawberry", b"chocolate"]),
        (-2, -1, [b"strawberry", b"chocolate"]),
        (-100, 100, [b"vanilla", b"strawberry", b"chocolate"]),
        (2, 1, []),
        (3, 5, []),
        (0, -4, []),
        (-1, -2, []),
        (1, 1, [b"strawberry"]),
    ],
)
def test_lrange_clamping(store, start, stop, expected):
    store.lpush(b"mylist", b"chocolate", b"strawberry", b"vanilla")
    assert store.lrange(b"mylist", start, stop) == expected


def test_lrange_missing_key(store):
    assert store.lrange(b"nope", 0, -1) == []


@given(
    items=st.lists(st.binary(max_size=4), max_size=10),
    start=st.integers(-15, 15),
    stop=st.integers(-15, 15),
)
def test_lrange_matches_naive_index_scan(items, start, stop):
    store = KeyStore()
    if items:
        store.lpush(b"l", *items)
    held = list(reversed(items))
    expected = [
        held[i]
        for i in range(len(held))
        if (start + len(held) if start < 0 else start)
        <= i
        <= (stop + len(held) if stop < 0 else stop)
    ]
    assert store.lrange(b"l", start, stop) == expected


# -- sorted sets -----------------------------------------------------------


def _bound(raw: bytes) -> RangeBound:
    return RangeBound.parse(raw)


def test_zadd_counts_new_members_only(store):
    assert store.zadd(b"myz", [(100.0, b"row1")]) == 1
    assert store.zadd(b"myz", [(105.0, b"row2")]) == 1
    assert store.zadd(b"myz", [(99.0, b"row1")]) == 0  # rescore, not new
    # a repeated member counts once, on its first (new) appearance
    assert store.zadd(b"myz", [(1.0, b"a"), (2.0, b"b"), (1.5, b"a")]) == 2
    assert store.zrangebyscore(b"myz", _bound(b"1.5"), _bound(b"1.5")) == [b"a"]


def test_zrangebyscore_inclusive_and_ordered(store):
    store.zadd(b"z", [(100.0, b"a"), (105.0, b"b"), (120.0, b"c")])
    assert store.zrangebyscore(b"z", _bound(b"90"), _bound(b"120")) == [b"a", b"b", b"c"]
    assert store.zrangebyscore(b"z", _bound(b"100"), _bound(b"105")) == [b"a", b"b"]
    assert store.zrangebyscore(b"z", _bound(b"101"), _bound(b"104")) == []
    assert store.zrangebyscore(b"missing", _bound(b"-inf"), _bound(b"+inf")) == []


def test_zrangebyscore_exclusive_bounds(store):
    store.zadd(b"z", [(1.0, b"a"), (2.0, b"b"), (3.0, b"c")])
    assert store.zrangebyscore(b"z", _bound(b"(1"), _bound(b"3")) == [b"b", b"c"]
    assert store.zrangebyscore(b"z", _bound(b"(1"), _bound(b"(3")) == [b"b"]
    assert store.zrangebyscore(b"z", _bound(b"-inf"), _bound(b"(2")) == [b"a"]


def test_zrangebyscore_ties_order_by_member_bytes(store):
    store.zadd(b"z", [(5.0, b"delta"), (5.0, b"alpha"), (5.0, b"charlie")])
    assert store.zrangebyscore(b"z", _bound(b"5"), _bound(b"5")) == [
        b"alpha",
        b"charlie",
        b"delta",
    ]


def test_zadd_rescore_moves_member(store):
    store.zadd(b"z", [(1.0, b"a"), (2.0, b"b"), (3.0, b"c")])
    store.zadd(b"z", [(10.0, b"a")])
    assert store.zrangebyscore(b"z", _bound(b"-inf"), _bound(b"+inf")) == [
        b"b",
        b"c",
        b"a",
    ]


def test_zadd_accepts_infinite_scores(store):
    store.zadd(b"z", [(float("-inf"), b"low"), (float("inf"), b"high"), (0.0, b"mid")])
    assert store.zrangebyscore(b"z", _bound(b"-inf"), _bound(b"+inf")) == [
        b"low",
        b"mid",
        b"high",
    ]


def test_parse_score_rejects_nan_and_garbage():
    assert parse_score(b"1.5") == 1.5
    assert parse_score(b"inf") == float("inf")
    assert parse_score(b"-inf") == float("-inf")
    for raw in (b"nan", b"NaN", b"abc", b"", b"\xff"):
        with pytest.raises(CommandError) as excinfo:
            parse_score(raw)
        assert excinfo.value.message == "ERR value is not a valid float"


def test_range_bound_parse():
    assert RangeBound.parse(b"100") == RangeBound(100.0, False)
    assert RangeBound.parse(b"(100") == RangeBound(100.0, True)
    assert RangeBound.parse(b"-inf") == RangeBound(float("-inf"), False)
    assert RangeBound.parse(b"(+inf") == RangeBound(float("inf"), True)
    for raw in (b"nan", b"(nan", b"abc", b"(", b""):
        with pytest.raises(CommandError) as excinfo:
            RangeBound.parse(raw)
        assert excinfo.value.message == "ERR min or max is not a float"


def test_parse_int_strictness():
    assert parse_int(b"42") == 42
    assert parse_int(b"-7") == -7
    assert parse_int(b"+7") == 7
    for raw in (b"", b"abc", b"1.5", b" 1", b"1 ", b"1_0", b"0x10", b"99999999999999999999"):
        with pytest.raises(CommandError):
            parse_int(raw)


# -- sorted set structure (skip list vs naive resort) ----------------------


def test_sortedset_add_remove_len():
    zset = SortedSet()
    assert zset.add(1.0, b"a") is True
    assert zset.add(1.0, b"a") is False
    assert zset.add(2.0, b"a") is False  # rescore
    assert len(zset) == 1
    assert zset.score(b"a") == 2.0
    assert zset.remove(b"a") is True
    assert zset.remove(b"a") is False
    assert len(zset) == 0


@settings(max_examples=200)
@given(
    ops=st.lists(
        st.tuples(
            st.sampled_from(["add", "remove"]),
            st.floats(allow_nan=False, width=64),
            st.binary(min_size=1, max_size=3),
        ),
        max_size=60,
    ),
    low=st.floats(allow_nan=False, width=64),
    high=st.floats(allow_nan=False, width=64),
    low_open=st.booleans(),
    high_open=st.booleans(),
)
def test_sortedset_matches_naive_model(ops, low, high, low_open, high_open):
    zset = SortedSet()
    naive: dict[bytes, float] = {}
    for op, score, member in ops:
        if op == "add":
            assert zset.add(score, member) == (member not in naive)
            naive[member] = score
        else:
            assert zset.remove(member) == (member in naive)
            naive.pop(member, None)
    assert len(zset) == len(naive)
    low_bound = RangeBound(low, low_open)
    high_bound = RangeBound(high, high_open)
    expected = [
        member
        for score, member in sorted((s, m) for m, s in naive.items())
        if (score > low if low_open else score >= low)
        and (score < high if high_open else score <= high)
    ]
    assert zset.range_by_score(low_bound, high_bound) == expected
    assert list(zset.items()) == sorted((s, m) for m, s in naive.items())


def test_sortedset_large_ordering_is_exact():
    import random as _random

    rng = _random.Random(7)
    zset = SortedSet()
    naive = {}
    for i in range(2000):
        member = f"m{rng.randrange(500)}".encode()
        score = rng.uniform(-1000, 1000)
        zset.add(score, member)
        naive[member] = score
        if rng.random() < 0.2:
            victim = f"m{rng.randrange(500)}".encode()
            zset.remove(victim)
            naive.pop(victim, None)
    assert list(zset.items()) == sorted((s, m) for m, s in naive.items())


# -- keyspace-wide ----------------------------------------------------------


def test_delete_and_exists(store):
    store.set(b"a", b"1")
    store.sadd(b"b", b"x")
    store.lpush(b"c", b"y")
    assert store.exists(b"a", b"b", b"missing", b"a") == 3  # repeats count
    assert store.delete(b"a", b"missing", b"b") == 2
    assert store.exists(b"a", b"b") == 0
    assert store.kind(b"c") == "list"


def test_flushall_clears_everything(store):
    store.set(b"a", b"1")
    store.zadd(b"z", [(1.0, b"m")])
    store.flushall()
    assert store.keys() == []


def test_wrongtype_never_mutates(store):
    store.set(b"s", b"value")
    before = store.get(b"s")
    for attack in (
        lambda: store.sadd(b"s", b"m"),
        lambda: store.lpush(b"s", b"m"),
        lambda: store.hset(b"s", b"f", b"v"),
        lambda: store.zadd(b"s", [(1.0, b"m")]),
        lambda: store.llen(b"s"),
        lambda: store.zrangebyscore(b"s", _bound(b"0"), _bound(b"1")),
    ):
        with pytest.raises(WrongTypeError):
            attack()
    assert store.get(b"s") == before
    assert store.kind(b"s") == "string"


def test_binary_safe_keys_fields_members(store):
    key = b"\x00weird\xffkey\r\n"
    store.hset(key, b"\x00f", b"\xffv")
    assert store.hget(key, b"\x00f") == b"\xffv"
    store.sadd(b"bin", b"\x00", b"\x01")
    assert store.sinter(b"bin") == {b"\x00", b"\x01"}
