"""Reverse-image-search evidence: records, persistent store, and clients.

An evidence record is the list of page titles a search engine returned for
one image. The store is the only component allowed network access, and only
through fetch_live with an explicitly constructed client; everything else
in the package replays stored records.
"""

from __future__ import annotations

import hashlib
import html
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Protocol

log = logging.getLogger(__name__)

ENGINES = ("bing_visual", "google_images", "fixture")
MAX_TITLES = 10
MIN_TITLE_CHARS = 3
DEFAULT_TTL = timedelta(days=30)

BING_KEY_ENV = "VERITRACE_BING_KEY"
GOOGLE_KEY_ENV = "VERITRACE_GOOGLE_KEY"


class EvidenceError(Exception):
    pass


class ConfigError(EvidenceError):
    pass


class FetchError(EvidenceError):
    def __init__(self, engine: str, message: str, retryable: bool = False):
        self.engine = engine
        self.retryable = retryable
        super().__init__(f"{engine}: {message}")


class QuotaError(FetchError):
    def __init__(self, engine: str, message: str = "quota exhausted"):
        super().__init__(engine, message, retryable=False)


@dataclass(frozen=True)
class EvidenceRecord:
    image_id: str
    engine: str
    titles: tuple[str, ...]
    retrieved_at: datetime

    def __post_init__(self) -> None:
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if len(self.titles) > MAX_TITLES:
            raise ValueError(f"at most {MAX_TITLES} titles per record, got {len(self.titles)}")
        if any(not t for t in self.titles):
            raise ValueError("empty title in record")
        if self.retrieved_at.tzinfo is None:
            raise ValueError("retrieved_at must be timezone-aware")


_WS_RE = re.compile(r"\s+")


def normalize_titles(raw: list[str]) -> tuple[str, ...]:
    """Engine output -> storable titles.

    Unescapes HTML entities, collapses whitespace, drops strings shorter
    than 3 characters, deduplicates case-insensitively keeping first
    occurrence, caps at 10.
    """
    out: list[str] = []
    seen: set[str] = set()
    for t in raw:
        t = _WS_RE.sub(" ", html.unescape(t)).strip()
        if len(t) < MIN_TITLE_CHARS:
            continue
        key = t.lower()
        if key in seen:
            continue
        seen.add(key)
        out.append(t)
        if len(out) == MAX_TITLES:
            break
    return tuple(out)


class EvidenceStore:
    """In-memory map keyed by (image_id, engine), persisted as JSONL.

    Writes are serialized with a lock so concurrent fetch workers cannot
    interleave; reads are unsynchronized (records are immutable).
    """

    def __init__(self) -> None:
        self._records: dict[tuple[str, str], EvidenceRecord] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    def get(self, image_id: str, engine: str) -> EvidenceRecord | None:
        return self._records.get((image_id, engine))

    def upsert(self, record: EvidenceRecord) -> None:
        with self._lock:
            self._records[(record.image_id, record.engine)] = record

    def records(self) -> list[EvidenceRecord]:
        return [self._records[k] for k in sorted(self._records)]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records():
                fh.write(json.dumps({
                    "image_id": rec.image_id,
                    "engine": rec.engine,
                    "titles": list(rec.titles),
                    "retrieved_at": rec.retrieved_at.isoformat(),
                }, ensure_ascii=False, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str) -> "EvidenceStore":
        store = cls()
        count = import_records(store, path)
        log.debug("loaded %d evidence records from %s", count, path)
        return store


def _record_from_obj(obj: dict) -> EvidenceRecord:
    for key in ("image_id", "engine", "titles", "retrieved_at"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    if not isinstance(obj["titles"], list):
        raise ValueError("titles must be a list")
    return EvidenceRecord(
        image_id=str(obj["image_id"]),
        engine=str(obj["engine"]),
        titles=tuple(str(t) for t in obj["titles"]),
        retrieved_at=datetime.fromisoformat(obj["retrieved_at"]),
    )


def import_records(store: EvidenceStore, path: str) -> int:
    """Merge a JSONL evidence file into the store, newest-write-wins.

    Malformed lines are skipped with a logged line-numbered diagnostic;
    the import continues. Returns the number of records imported.
    """
    count = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = _record_from_obj(json.loads(line))
            except (ValueError, TypeError) as exc:
                log.warning("%s: skipped line %d: %s", path, lineno, exc)
                continue
            store.upsert(record)
            count += 1
    return count


def get_titles(store: EvidenceStore, image_id: str, engine: str, k: int = MAX_TITLES) -> list[str]:
    """Top-k stored titles for an image, [] when nothing was retrieved."""
    if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= MAX_TITLES:
        raise ValueError(f"k must be an integer in [1, {MAX_TITLES}], got {k!r}")
    record = store.get(image_id, engine)
    if record is None:
        return []
    return list(record.titles[:k])


# ---------------------------------------------------------------------------
# Clients
# ---------------------------------------------------------------------------


class SearchClient(Protocol):
    engine: str

    def search(self, image_ref: str) -> list[str]:
        """Raw titles for one image reference. Raises FetchError on failure."""
        ...


class TokenBucket:
    """Blocking rate limiter: `rate` tokens/second, burst up to `capacity`."""

    def __init__(
        self,
        rate: float,
        capacity: int,
        clock: Callable[[], float] = time.monotonic,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        if rate <= 0 or capacity < 1:
            raise ValueError("rate must be > 0 and capacity >= 1")
        self.rate = rate
        self.capacity = capacity
        self._clock = clock
        self._sleep = sleeper
        self._tokens = float(capacity)
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


def request_hash(engine: str, image_ref: str) -> str:
    return hashlib.sha256(f"{engine}\n{image_ref}".encode("utf-8")).hexdigest()


class ReplayClient:
    """Replays canned engine responses from a fixtures directory.

    Each fixture file is named by the request hash and holds a JSON object
    with a "titles" list, exactly what a live client would have returned.
    """

    def __init__(self, fixtures_dir: str, engine: str = "fixture") -> None:
        if engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
        self.engine = engine
        self.fixtures_dir = Path(fixtures_dir)

    def search(self, image_ref: str) -> list[str]:
        path = self.fixtures_dir / f"{request_hash(self.engine, image_ref)}.json"
        if not path.exists():
            raise FetchError(self.engine, f"no canned response for {image_ref!r} at {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
            titles = obj["titles"]
            if not isinstance(titles, list):
                raise TypeError("titles must be a list")
        except (ValueError, TypeError, KeyError) as exc:
            raise FetchError(self.engine, f"bad canned response {path}: {exc}") from exc
        return [str(t) for t in titles]


def write_replay_fixture(fixtures_dir: str, engine: str, image_ref: str, titles: list[str]) -> str:
    """Store a canned response where ReplayClient will find it."""
    path = Path(fixtures_dir) / f"{request_hash(engine, image_ref)}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps({"engine": engine, "image_ref": image_ref, "titles": titles},
                   ensure_ascii=False, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return str(path)


class BingVisualSearchClient:
    """Live adapter for the Bing Visual Search API. Best-effort: the hosted

    API surface changes; this client exists so live collection is wired,
    but nothing in the test suite exercises the network.
    """

    ENDPOINT = "https://api.bing.microsoft.com/v7.0/images/visualsearch"
    engine = "bing_visual"

    def __init__(self, api_key: str | None = None, limiter: TokenBucket | None = None,
                 timeout: float = 15.0) -> None:
        key = api_key or os.environ.get(BING_KEY_ENV)
        if not key:
            raise ConfigError(f"no Bing API key: pass api_key or set {BING_KEY_ENV}")
        self._key = key
        self._limiter = limiter
        self._timeout = timeout

    def search(self, image_ref: str) -> list[str]:
        import requests

        if self._limiter is not None:
            self._limiter.acquire()
        try:
            resp = requests.post(
                self.ENDPOINT,
                headers={"Ocp-Apim-Subscription-Key": self._key},
                json={"imageInfo": {"url": image_ref}},
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise FetchError(self.engine, f"transport failure: {exc}", retryable=True) from exc
        if resp.status_code == 429:
            raise QuotaError(self.engine)
        if resp.status_code >= 500:
            raise FetchError(self.engine, f"server error {resp.status_code}", retryable=True)
        if resp.status_code != 200:
            raise FetchError(self.engine, f"unexpected status {resp.status_code}")
        titles: list[str] = []
        try:
            for tag in resp.json().get("tags", []):
                for action in tag.get("actions", []):
                    if action.get("actionType") != "PagesIncluding":
                        continue
                    for item in action.get("data", {}).get("value", []):
                        name = item.get("name")
                        if name:
                            titles.append(str(name))
        except (ValueError, AttributeError) as exc:
            raise FetchError(self.engine, f"unparseable response: {exc}") from exc
        return titles


class GoogleImagesClient:
    """Live adapter for Google Custom Search restricted to image results.

    Requires a programmable search engine id alongside the API key, both
    read from the environment when not passed. Best-effort, untested live.
    """

    ENDPOINT = "https://www.googleapis.com/customsearch/v1"
    engine = "google_images"

    def __init__(self, api_key: str | None = None, cx: str | None = None,
                 limiter: TokenBucket | None = None, timeout: float = 15.0) -> None:
        key = api_key or os.environ.get(GOOGLE_KEY_ENV)
        if not key:
            raise ConfigError(f"no Google API key: pass api_key or set {GOOGLE_KEY_ENV}")
        self._key = key
        self._cx = cx or os.environ.get("VERITRACE_GOOGLE_CX", "")
        self._limiter = limiter
        self._timeout = timeout

    def search(self, image_ref: str) -> list[str]:
        import requests

        if self._limiter is not None:
            self._limiter.acquire()
        params = {
            "key": self._key, "cx": self._cx, "searchType": "image",
            "q": image_ref, "num": MAX_TITLES,
        }
        try:
            resp = requests.get(self.ENDPOINT, params=params, timeout=self._timeout)
        except requests.RequestException as exc:
            raise FetchError(self.engine, f"transport failure: {exc}", retryable=True) from exc
        if resp.status_code == 429:
            raise QuotaError(self.engine)
        if resp.status_code >= 500:
            raise FetchError(self.engine, f"server error {resp.status_code}", retryable=True)
        if resp.status_code != 200:
            raise FetchError(self.engine, f"unexpected status {resp.status_code}")
        try:
            items = resp.json().get("items", [])
        except ValueError as exc:
            raise FetchError(self.engine, f"unparseable response: {exc}") from exc
        return [str(it["title"]) for it in items if it.get("title")]


def fetch_live(
    store: EvidenceStore,
    client: SearchClient,
    image_id: str,
    image_ref: str,
    ttl: timedelta = DEFAULT_TTL,
    attempts: int = 3,
    now: Callable[[], datetime] | None = None,
) -> EvidenceRecord:
    """Fetch titles for one image with write-through caching.

    A stored record younger than ttl is returned without touching the
    network, so re-running a collection is idempotent. Transport-level
    failures are retried up to `attempts` times; quota and parse failures
    are not.
    """
    clock = now or (lambda: datetime.now(timezone.utc))
    current = clock()
    cached = store.get(image_id, client.engine)
    if cached is not None and current - cached.retrieved_at < ttl:
        return cached

    last_error: FetchError | None = None
    for attempt in range(attempts):
        try:
            raw = client.search(image_ref)
            break
        except FetchError as exc:
            last_error = exc
            if not exc.retryable or attempt == attempts - 1:
                raise
            log.warning("retrying %s fetch for %s (%d/%d): %s",
                        client.engine, image_id, attempt + 1, attempts, exc)
    else:  # pragma: no cover - loop always breaks or raises
        raise last_error  # type: ignore[misc]

    record = EvidenceRecord(
        image_id=image_id,
        engine=client.engine,
        titles=normalize_titles(raw),
        retrieved_at=current,
    )
    store.upsert(record)
    return record
