import json
from datetime import datetime, timedelta, timezone

import pytest

from veritrace.evidence import (
    EvidenceRecord, EvidenceStore, FetchError, ReplayClient, TokenBucket,
    fetch_live, get_titles, import_records, normalize_titles, request_hash,
    write_replay_fixture,
)

NOW = datetime(2015, 6, 1, 12, 0, tzinfo=timezone.utc)


def rec(image_id="img-1", engine="fixture", titles=("storm photo",), at=NOW):
    return EvidenceRecord(image_id=image_id, engine=engine,
                          titles=tuple(titles), retrieved_at=at)


# ---------------------------------------------------------------------------
# Record validation
# ---------------------------------------------------------------------------


def test_record_rejects_unknown_engine():
    with pytest.raises(ValueError):
        rec(engine="altavista")


def test_record_caps_titles_at_ten():
    rec(titles=[f"title {i}" for i in range(10)])  # ok
    with pytest.raises(ValueError):
        rec(titles=[f"title {i}" for i in range(11)])


def test_record_rejects_empty_title_and_naive_timestamp():
    with pytest.raises(ValueError):
        rec(titles=("ok", ""))
    with pytest.raises(ValueError):
        rec(at=datetime(2015, 6, 1, 12, 0))


# ---------------------------------------------------------------------------
# Title normalization
# ---------------------------------------------------------------------------


def test_normalize_titles_unescapes_and_collapses():
    got = normalize_titles(["Sharks &amp;  the\tstorm\n2012"])
    assert got == ("Sharks & the storm 2012",)


def test_normalize_titles_drops_short_strings():
    assert normalize_titles(["ab", "  x ", "abc"]) == ("abc",)


def test_normalize_titles_dedupes_case_insensitively_keeping_first():
    got = normalize_titles(["Storm Photo", "storm  photo", "STORM PHOTO", "other"])
    assert got == ("Storm Photo", "other")


def test_normalize_titles_caps_at_ten():
    got = normalize_titles([f"title {i}" for i in range(25)])
    assert len(got) == 10 and got[0] == "title 0" and got[-1] == "title 9"


# ---------------------------------------------------------------------------
# Store persistence
# ---------------------------------------------------------------------------


def test_store_upsert_get_roundtrip(tmp_path):
    store = EvidenceStore()
    store.upsert(rec("a", titles=("one",)))
    store.upsert(rec("b", titles=("two", "three")))
    store.upsert(rec("a", titles=("replaced",)))  # same key overwrites
    assert len(store) == 2
    assert store.get("a", "fixture").titles == ("replaced",)
    assert store.get("missing", "fixture") is None

    path = tmp_path / "evidence.jsonl"
    store.save(str(path))
    back = EvidenceStore.load(str(path))
    assert back.records() == store.records()


def test_store_save_is_sorted_and_stable(tmp_path):
    store = EvidenceStore()
    store.upsert(rec("z"))
    store.upsert(rec("a"))
    p1, p2 = tmp_path / "e1.jsonl", tmp_path / "e2.jsonl"
    store.save(str(p1))
    EvidenceStore.load(str(p1)).save(str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    ids = [json.loads(line)["image_id"] for line in p1.read_text().splitlines()]
    assert ids == sorted(ids)


def test_same_image_different_engines_coexist():
    store = EvidenceStore()
    store.upsert(rec("a", engine="bing_visual", titles=("bing title",)))
    store.upsert(rec("a", engine="google_images", titles=("google title",)))
    assert len(store) == 2
    assert store.get("a", "bing_visual").titles == ("bing title",)


def test_import_records_merges_and_skips_malformed(tmp_path, caplog):
    path = tmp_path / "in.jsonl"
    good = {"image_id": "a", "engine": "fixture", "titles": ["fine title"],
            "retrieved_at": NOW.isoformat()}
    bad = {"image_id": "b", "engine": "nope", "titles": [], "retrieved_at": NOW.isoformat()}
    path.write_text(json.dumps(good) + "\n" + "not json\n" + json.dumps(bad) + "\n",
                    encoding="utf-8")
    store = EvidenceStore()
    assert import_records(store, str(path)) == 1
    assert len(store) == 1 and store.get("a", "fixture") is not None


# ---------------------------------------------------------------------------
# get_titles
# ---------------------------------------------------------------------------


def test_get_titles_top_k_and_missing():
    store = EvidenceStore()
    store.upsert(rec("a", titles=tuple(f"title {i}" for i in range(5))))
    assert get_titles(store, "a", "fixture", k=3) == ["title 0", "title 1", "title 2"]
    assert get_titles(store, "a", "fixture") == [f"title {i}" for i in range(5)]
    assert get_titles(store, "nope", "fixture") == []


def test_get_titles_validates_k():
    store = EvidenceStore()
    for bad in (0, 11, -1, 2.5, True):
        with pytest.raises(ValueError):
            get_titles(store, "a", "fixture", k=bad)


# ---------------------------------------------------------------------------
# Fetch with cache, TTL, retry
# ---------------------------------------------------------------------------


class FlakyClient:
    engine = "fixture"

    def __init__(self, fail_times=0, retryable=True):
        self.calls = 0
        self.fail_times = fail_times
        self.retryable = retryable

    def search(self, image_ref):
        self.calls += 1
        if self.calls <= self.fail_times:
            raise FetchError(self.engine, "transient", retryable=self.retryable)
        return [f"title for {image_ref}"]


def test_fetch_live_caches_within_ttl():
    store = EvidenceStore()
    client = FlakyClient()
    clock = lambda: NOW
    r1 = fetch_live(store, client, "img", "ref", now=clock)
    r2 = fetch_live(store, client, "img", "ref", now=clock)
    assert client.calls == 1 and r1 == r2


def test_fetch_live_refreshes_after_ttl():
    store = EvidenceStore()
    client = FlakyClient()
    times = iter([NOW, NOW + timedelta(days=31)])
    fetch_live(store, client, "img", "ref", now=lambda: next(times))
    fetch_live(store, client, "img", "ref", now=lambda: NOW + timedelta(days=31))
    assert client.calls == 2


def test_fetch_live_retries_transient_failures():
    store = EvidenceStore()
    client = FlakyClient(fail_times=2, retryable=True)
    record = fetch_live(store, client, "img", "ref", now=lambda: NOW)
    assert client.calls == 3 and record.titles == ("title for ref",)


def test_fetch_live_does_not_retry_permanent_failures():
    store = EvidenceStore()
    client = FlakyClient(fail_times=1, retryable=False)
    with pytest.raises(FetchError):
        fetch_live(store, client, "img", "ref", now=lambda: NOW)
    assert client.calls == 1


def test_fetch_live_gives_up_after_attempts():
    store = EvidenceStore()
    client = FlakyClient(fail_times=99, retryable=True)
    with pytest.raises(FetchError):
        fetch_live(store, client, "img", "ref", attempts=3, now=lambda: NOW)
    assert client.calls == 3


def test_fetch_live_normalizes_before_storing():
    class NoisyClient:
        engine = "fixture"

        def search(self, image_ref):
            return ["A &amp; B", "a & b", "xx"]

    store = EvidenceStore()
    record = fetch_live(store, NoisyClient(), "img", "ref", now=lambda: NOW)
    assert record.titles == ("A & B",)


# ---------------------------------------------------------------------------
# Replay fixtures
# ---------------------------------------------------------------------------


def test_replay_round_trip(tmp_path):
    d = str(tmp_path)
    path = write_replay_fixture(d, "fixture", "image-ref-1", ["canned title"])
    assert path.endswith(request_hash("fixture", "image-ref-1") + ".json")
    client = ReplayClient(d)
    assert client.search("image-ref-1") == ["canned title"]


def test_replay_missing_fixture_raises(tmp_path):
    client = ReplayClient(str(tmp_path))
    with pytest.raises(FetchError, match="no canned response"):
        client.search("never-recorded")


def test_replay_bad_fixture_raises(tmp_path):
    h = request_hash("fixture", "ref")
    (tmp_path / f"{h}.json").write_text('{"no_titles": 1}', encoding="utf-8")
    with pytest.raises(FetchError, match="bad canned response"):
        ReplayClient(str(tmp_path)).search("ref")


def test_request_hash_separates_engines():
    assert request_hash("fixture", "x") != request_hash("bing_visual", "x")


# ---------------------------------------------------------------------------
# Rate limiter (fake clock; no real sleeping)
# ---------------------------------------------------------------------------


class FakeClock:
    def __init__(self):
        self.t = 0.0
        self.slept = []

    def now(self):
        return self.t

    def sleep(self, dt):
        self.slept.append(dt)
        self.t += dt


def test_token_bucket_burst_then_throttle():
    clk = FakeClock()
    bucket = TokenBucket(rate=2.0, capacity=3, clock=clk.now, sleeper=clk.sleep)
    for _ in range(3):
        bucket.acquire()
    assert clk.slept == []  # burst capacity
    bucket.acquire()
    assert len(clk.slept) == 1 and clk.slept[0] == pytest.approx(0.5)


def test_token_bucket_refills_with_time():
    clk = FakeClock()
    bucket = TokenBucket(rate=1.0, capacity=1, clock=clk.now, sleeper=clk.sleep)
    bucket.acquire()
    clk.t += 5.0  # plenty of refill, but capped at capacity
    bucket.acquire()
    bucket.acquire()
    assert sum(clk.slept) == pytest.approx(1.0)


def test_token_bucket_validates():
    with pytest.raises(ValueError):
        TokenBucket(rate=0, capacity=1)
    with pytest.raises(ValueError):
        TokenBucket(rate=1, capacity=0)
