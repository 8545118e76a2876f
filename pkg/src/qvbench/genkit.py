"""Query variant and backstory generation over a pluggable completion provider.

The prompt template lives in an editable text file with four numbered
sections; neutral variants drop the two profile sections. Providers
expose a single ``complete(prompt) -> text`` method. The HTTP provider
speaks a chat-completion API; the mock provider derives every response
from a hash of the prompt and a fixed seed string, so sweeps are
bit-reproducible and need no network.

The mock reads the seed query and profile name back out of the rendered
prompt, which couples it to the template's "Seed query:" and
"Transformation profile:" lines. Editing those labels breaks the mock
but not the HTTP provider.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

import requests

from .core import ParseError, Profile, QueryVariant, Topic, ValidationError, group_variants
from .validate import load_dictionary, spell_correct

__all__ = [
    "PromptTemplate",
    "ProviderConfig",
    "GenerationLog",
    "GenerationError",
    "TransportError",
    "Provider",
    "MockProvider",
    "HttpProvider",
    "RateLimiter",
    "load_profiles",
    "load_backstory_template",
    "build_prompt",
    "build_neutral_prompt",
    "parse_variant_response",
    "generate_variants",
    "generate_backstory",
    "generate_backstories",
    "generate_sweep",
]

_TEMPLATE_RESOURCE = "data/templates/variant_prompt.txt"
_BACKSTORY_RESOURCE = "data/templates/backstory_prompt.txt"
_PROFILES_RESOURCE = "data/profiles.json"

_PART_KEYS = ("1", "2", "3a", "3b")
_PART_MARKER = re.compile(r"^\[part (\w+)\]$")

API_KEY_ENV = "QVBENCH_API_KEY"


class GenerationError(Exception):
    """No parseable response after all retries; carries every raw response."""

    def __init__(self, message: str, raw_responses: Sequence[str] = ()):
        super().__init__(message)
        self.raw_responses = tuple(raw_responses)


class TransportError(Exception):
    """The provider endpoint was unreachable or rejected the request."""


class Provider(Protocol):
    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt text in four sections: task, profile slot, output format,
    profile-adherence reminder. Sections 2 and 3b are omitted for
    neutral prompts."""

    parts: dict[str, str]
    n_variants: int = 3

    def __post_init__(self):
        parts = dict(self.parts)
        unknown = sorted(set(parts) - set(_PART_KEYS))
        if unknown:
            raise ValidationError(f"unknown template parts: {', '.join(unknown)}")
        missing = [k for k in _PART_KEYS if not parts.get(k, "").strip()]
        if missing:
            raise ValidationError(f"template parts missing or empty: {', '.join(missing)}")
        if not isinstance(self.n_variants, int) or self.n_variants < 1:
            raise ValidationError("n_variants must be a positive integer")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def load(cls, path=None, n_variants: int = 3) -> "PromptTemplate":
        if path is None:
            text = resources.files("qvbench").joinpath(_TEMPLATE_RESOURCE).read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        return cls(parts=_parse_parts(text), n_variants=n_variants)


def _parse_parts(text: str) -> dict[str, str]:
    """Split on [part N] marker lines; leading # comment lines are ignored."""
    parts: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in text.splitlines():
        marker = _PART_MARKER.match(line.strip())
        if marker:
            key = marker.group(1)
            if key not in _PART_KEYS:
                raise ParseError(f"unknown template part [{key}]")
            if key in parts:
                raise ParseError(f"duplicate template part [{key}]")
            current = key
            parts[key] = []
        elif current is not None:
            parts[current].append(line)
        elif line.strip() and not line.lstrip().startswith("#"):
            raise ParseError("template text before the first [part] marker")
    return {key: "\n".join(lines).strip() for key, lines in parts.items()}


@lru_cache(maxsize=1)
def default_template() -> PromptTemplate:
    return PromptTemplate.load()


def load_backstory_template(path=None) -> str:
    if path is None:
        text = resources.files("qvbench").joinpath(_BACKSTORY_RESOURCE).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    lines = text.splitlines()
    start = 0
    while start < len(lines) and (
        not lines[start].strip() or lines[start].lstrip().startswith("#")
    ):
        start += 1
    body = "\n".join(lines[start:]).strip()
    if not body:
        raise ParseError("backstory template is empty")
    return body


def _substitute(text: str, mapping: dict[str, object]) -> str:
    # plain replacement, not str.format: template files may contain
    # literal braces in their JSON examples
    for key, value in mapping.items():
        text = text.replace("{" + key + "}", str(value))
    return text


def build_prompt(topic: Topic, profile: Profile, template: Optional[PromptTemplate] = None) -> str:
    """Full four-part prompt for a profile-conditioned generation call."""
    template = template or default_template()
    if profile.method == "neutral":
        raise ValidationError("neutral profiles take build_neutral_prompt")
    if not profile.description.strip():
        raise ValidationError(f"profile {profile.profile_id} has an empty description")
    mapping = {
        "seed_query": topic.seed_query,
        "profile_name": profile.name,
        "profile_description": profile.description,
        "n_variants": template.n_variants,
    }
    return "\n\n".join(_substitute(template.parts[k], mapping) for k in _PART_KEYS)


def build_neutral_prompt(topic: Topic, template: Optional[PromptTemplate] = None) -> str:
    """Parts 1 and 3a only: no profile text at all."""
    template = template or default_template()
    mapping = {"seed_query": topic.seed_query, "n_variants": template.n_variants}
    return "\n\n".join(_substitute(template.parts[k], mapping) for k in ("1", "3a"))


_NUMBERED_LINE = re.compile(r"^\s*\d+\s*[.):]\s*(.+?)\s*$")


def _as_string_list(value) -> Optional[list[str]]:
    if isinstance(value, list) and all(isinstance(item, str) for item in value):
        return value
    return None


def parse_variant_response(text: str, n_variants: int = 3) -> list[str]:
    """JSON array of strings, else numbered lines; exactly n_variants of them.

    The JSON route also accepts an array embedded in surrounding prose.
    """
    items: Optional[list[str]] = None
    try:
        items = _as_string_list(json.loads(text.strip()))
    except ValueError:
        items = None
    if items is None:
        embedded = re.search(r"\[.*\]", text, re.DOTALL)
        if embedded:
            try:
                items = _as_string_list(json.loads(embedded.group(0)))
            except ValueError:
                items = None
    if items is None:
        numbered = []
        for line in text.splitlines():
            m = _NUMBERED_LINE.match(line)
            if m:
                numbered.append(m.group(1).strip("\"'"))
        if numbered:
            items = numbered
    if items is None:
        raise ParseError("response is neither a JSON array of strings nor a numbered list")
    cleaned = [item.strip() for item in items]
    if len(cleaned) != n_variants:
        raise ParseError(f"expected {n_variants} variant strings, got {len(cleaned)}")
    if any(not item for item in cleaned):
        raise ParseError("variant strings must be non-empty")
    return cleaned


@dataclass(frozen=True)
class GenerationLog:
    topic_id: str
    profile_id: str
    raw_response: str
    parsed: tuple[str, ...]
    attempts: int


def generate_variants(
    provider: Provider,
    topic: Topic,
    profile: Profile,
    template: Optional[PromptTemplate] = None,
    max_retries: int = 3,
    logs: Optional[list[GenerationLog]] = None,
) -> list[QueryVariant]:
    """One generation call, retried on parse failures with the same prompt."""
    template = template or default_template()
    if profile.method == "neutral":
        prompt = build_neutral_prompt(topic, template)
    else:
        prompt = build_prompt(topic, profile, template)
    raw_responses: list[str] = []
    for attempt in range(1, max_retries + 2):
        raw = provider.complete(prompt)
        raw_responses.append(raw)
        try:
            parsed = parse_variant_response(raw, template.n_variants)
        except ParseError:
            continue
        if logs is not None:
            logs.append(
                GenerationLog(topic.topic_id, profile.profile_id, raw, tuple(parsed), attempt)
            )
        return [
            QueryVariant(topic.topic_id, profile.profile_id, i, text)
            for i, text in enumerate(parsed, start=1)
        ]
    raise GenerationError(
        f"no parseable variant list for topic {topic.topic_id}, "
        f"profile {profile.profile_id} after {len(raw_responses)} attempts",
        raw_responses,
    )


def generate_backstory(
    provider: Provider,
    topic: Topic,
    template: Optional[str] = None,
    max_retries: int = 3,
    max_words: int = 120,
) -> str:
    """One-paragraph backstory, whitespace-collapsed, truncated to max_words."""
    prompt_text = template if template is not None else load_backstory_template()
    prompt = _substitute(
        prompt_text, {"seed_query": topic.seed_query, "max_words": max_words}
    )
    raw_responses: list[str] = []
    for _ in range(max_retries + 1):
        raw = provider.complete(prompt)
        raw_responses.append(raw)
        words = raw.split()
        if words:
            return " ".join(words[:max_words])
    raise GenerationError(
        f"empty backstory response for topic {topic.topic_id} "
        f"after {len(raw_responses)} attempts",
        raw_responses,
    )


def generate_backstories(
    provider: Provider,
    topics: Sequence[Topic],
    template: Optional[str] = None,
    max_retries: int = 3,
    max_words: int = 120,
) -> list[Topic]:
    """Fill in missing backstories; topics that already have one pass through."""
    out = []
    for topic in topics:
        if topic.backstory:
            out.append(topic)
        else:
            story = generate_backstory(provider, topic, template, max_retries, max_words)
            out.append(replace(topic, backstory=story))
    return out


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str
    model_name: str
    temperature: float = 1.0
    max_retries: int = 3
    timeout: float = 60.0
    api_key: Optional[str] = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValidationError("timeout must be positive")
        if self.api_key is None:
            object.__setattr__(self, "api_key", os.environ.get(API_KEY_ENV))


class HttpProvider:
    """Chat-completion client: one user message in, first choice text out."""

    def __init__(self, config: ProviderConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        payload = {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = requests.post(
                self.config.endpoint, json=payload, headers=headers, timeout=self.config.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"request to {self.config.endpoint} failed: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(
                f"provider returned HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed provider response: {exc!r}") from exc
        if not isinstance(text, str):
            raise TransportError("provider message content is not text")
        return text


_SYNONYMS = {
    "best": "top",
    "big": "large",
    "buy": "purchase",
    "cheap": "budget",
    "cost": "price",
    "easy": "simple",
    "fast": "quick",
    "find": "locate",
    "fix": "repair",
    "good": "great",
    "home": "house",
    "kids": "children",
    "learn": "study",
    "make": "create",
    "near": "nearby",
    "new": "latest",
    "old": "ancient",
    "small": "little",
    "start": "begin",
    "symptoms": "signs",
    "top": "best",
    "use": "apply",
}

_FRAMES = (
    "what is {q}",
    "tell me about {q}",
    "{q} explained",
    "{q} guide",
    "{q} tips",
    "{q} basics",
    "{q} overview",
    "everything about {q}",
    "i want to know about {q}",
    "please tell me about {q}",
    "{q} information",
    "how does {q} work",
    "{q} facts",
    "learn about {q}",
)

_BACKSTORY_OPENERS = (
    "You have recently become curious about",
    "For a while now you have been meaning to understand",
    "A conversation with a friend left you wondering about",
    "Something you read last week made you want to look into",
)

_BACKSTORY_MIDDLES = (
    "You have only a rough picture so far and want a clear, plain explanation.",
    "You know a few scattered facts and would like to see how they fit together.",
    "You tried asking around but the answers you got were vague.",
)

_BACKSTORY_CLOSERS = (
    "A trustworthy overview would settle the question for you.",
    "You hope to find something concrete enough to act on.",
    "Even a short, reliable summary would help you decide what to do next.",
)


class MockProvider:
    """Deterministic provider: responses are a pure function of the prompt
    and a fixed seed string.

    Variant responses are rule-based rewrites of the seed query parsed
    back out of the prompt. The Order profile gets word shuffles that
    keep the token multiset, the Misspelling profile gets injected typos
    whose spell correction recovers the original word, and every other
    profile gets synonym swaps inside templated rephrasings, so the
    downstream validators see realistic signal. Relevance-labeling
    prompts (a "Passage:" line plus an integer-answer instruction) get a
    single grade drawn from a fixed distribution over 0..3.
    """

    def __init__(self, seed_material: str = "", dictionary: Optional[frozenset] = None):
        self.seed_material = str(seed_material)
        self._dictionary = dictionary if dictionary is not None else load_dictionary()

    def complete(self, prompt: str) -> str:
        digest = hashlib.sha256(
            (self.seed_material + "\x00" + prompt).encode("utf-8")
        ).digest()
        rng = random.Random(digest)
        if _prompt_field(prompt, "Passage") is not None and "integer" in prompt.lower():
            return str(rng.choices((0, 1, 2, 3), weights=(35, 25, 22, 18))[0])
        seed_query = _prompt_field(prompt, "Seed query")
        if seed_query is None:
            raise ValidationError("mock provider needs a 'Seed query:' line in the prompt")
        if "backstory" in prompt.lower():
            return self._backstory(seed_query, rng)
        count_match = re.search(r"exactly (\d+)", prompt)
        n = int(count_match.group(1)) if count_match else 3
        profile_name = _prompt_field(prompt, "Transformation profile")
        return json.dumps(self._variants(seed_query, profile_name, n, rng))

    def _backstory(self, seed_query: str, rng: random.Random) -> str:
        return (
            f"{rng.choice(_BACKSTORY_OPENERS)} {seed_query}. "
            f"{rng.choice(_BACKSTORY_MIDDLES)} {rng.choice(_BACKSTORY_CLOSERS)}"
        )

    def _variants(
        self, seed_query: str, profile_name: Optional[str], n: int, rng: random.Random
    ) -> list[str]:
        kind = (profile_name or "").strip().lower()
        if kind == "order":
            return [self._shuffled(seed_query, rng) for _ in range(n)]
        if kind == "misspelling":
            return [self._misspelled(seed_query, rng) for _ in range(n)]
        frames = rng.sample(_FRAMES, n) if n <= len(_FRAMES) else rng.choices(_FRAMES, k=n)
        return [self._paraphrased(seed_query, frame, rng) for frame in frames]

    def _shuffled(self, seed_query: str, rng: random.Random) -> str:
        words = seed_query.split()
        if len(set(w.lower() for w in words)) < 2:
            return seed_query
        shuffled = words[:]
        for _ in range(20):
            rng.shuffle(shuffled)
            if [w.lower() for w in shuffled] != [w.lower() for w in words]:
                break
        return " ".join(shuffled)

    def _misspelled(self, seed_query: str, rng: random.Random) -> str:
        tokens = seed_query.split()
        order = sorted(range(len(tokens)), key=lambda i: (-len(tokens[i]), i))
        for i in order:
            word = tokens[i].lower()
            if not word.isalpha() or len(word) < 4 or word not in self._dictionary:
                continue
            typo = self._typo_for(word, rng)
            if typo is not None:
                out = tokens[:]
                out[i] = typo
                return " ".join(out)
        if tokens:
            # no safe typo found; double a letter and accept the risk
            out = tokens[:]
            out[0] = out[0][:1] + out[0][:1] + out[0][1:]
            return " ".join(out)
        return seed_query

    def _typo_for(self, word: str, rng: random.Random) -> Optional[str]:
        candidates = []
        for j in range(len(word)):
            candidates.append(word[:j] + word[j + 1 :])
        for j in range(len(word) - 1):
            if word[j] != word[j + 1]:
                candidates.append(word[:j] + word[j + 1] + word[j] + word[j + 2 :])
        for j in range(len(word)):
            candidates.append(word[: j + 1] + word[j] + word[j + 1 :])
        rng.shuffle(candidates)
        for candidate in candidates:
            if (
                candidate
                and candidate not in self._dictionary
                and spell_correct(candidate, self._dictionary) == word
            ):
                return candidate
        return None

    def _paraphrased(self, seed_query: str, frame: str, rng: random.Random) -> str:
        words = []
        for token in seed_query.split():
            swap = _SYNONYMS.get(token.lower())
            if swap is not None and rng.random() < 0.5:
                words.append(swap)
            else:
                words.append(token)
        return frame.replace("{q}", " ".join(words))


def _prompt_field(prompt: str, label: str) -> Optional[str]:
    match = re.search(rf"^{re.escape(label)}:\s*(.+?)\s*$", prompt, re.MULTILINE)
    return match.group(1) if match else None


class RateLimiter:
    """Token bucket: at most `rate` acquisitions per second after an
    initial burst of `capacity`."""

    def __init__(self, rate: float, capacity: Optional[float] = None):
        if rate <= 0:
            raise ValidationError("rate must be positive")
        self.rate = float(rate)
        self.capacity = float(capacity) if capacity is not None else float(rate)
        if self.capacity < 1:
            raise ValidationError("capacity must be at least 1")
        self._tokens = self.capacity
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            time.sleep(wait)


def generate_sweep(
    provider: Provider,
    topics: Sequence[Topic],
    profiles: Sequence[Profile],
    template: Optional[PromptTemplate] = None,
    existing: Iterable[QueryVariant] = (),
    max_retries: int = 3,
    max_in_flight: int = 1,
    rate_limit: Optional[float] = None,
    logs: Optional[list[GenerationLog]] = None,
) -> list[QueryVariant]:
    """Every (topic, profile) combination, reusing complete existing pairs.

    Pairs holding fewer than n_variants stored variants are regenerated
    whole. Output order is topics-major, profiles-minor, index-ascending,
    regardless of concurrency. With max_in_flight > 1 provider calls run
    on a thread pool; log append order is then scheduling-dependent even
    though the variants themselves are not.
    """
    template = template or default_template()
    if max_in_flight < 1:
        raise ValidationError("max_in_flight must be >= 1")
    done: dict[tuple[str, str], list[QueryVariant]] = {}
    for pair, group in group_variants(existing).items():
        if len(group) == template.n_variants:
            done[pair] = group
    limiter = RateLimiter(rate_limit) if rate_limit is not None else None
    jobs = [
        (topic, profile)
        for topic in topics
        for profile in profiles
        if (topic.topic_id, profile.profile_id) not in done
    ]
    results: dict[tuple[str, str], list[QueryVariant]] = {}
    results_lock = threading.Lock()
    log_lock = threading.Lock()

    def run_one(job: tuple[Topic, Profile]) -> None:
        topic, profile = job
        if limiter is not None:
            limiter.acquire()
        local_logs: list[GenerationLog] = []
        variants = generate_variants(
            provider, topic, profile, template, max_retries, logs=local_logs
        )
        with results_lock:
            results[(topic.topic_id, profile.profile_id)] = variants
        if logs is not None:
            with log_lock:
                logs.extend(local_logs)

    if max_in_flight == 1:
        for job in jobs:
            run_one(job)
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            for future in [pool.submit(run_one, job) for job in jobs]:
                future.result()

    out: list[QueryVariant] = []
    for topic in topics:
        for profile in profiles:
            pair = (topic.topic_id, profile.profile_id)
            out.extend(done.get(pair) or results[pair])
    return out


def load_profiles(path=None) -> list[Profile]:
    """Bundled or user-supplied profile descriptions as Profile records."""
    if path is None:
        text = resources.files("qvbench").joinpath(_PROFILES_RESOURCE).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise ParseError(f"profiles file is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ParseError("profiles file must hold a JSON array")
    profiles = []
    seen = set()
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise ParseError(f"profiles entry {i} is not an object")
        try:
            profile = Profile(
                profile_id=entry["profile_id"],
                method=entry["method"],
                name=entry["name"],
                description=entry.get("description", ""),
            )
        except KeyError as exc:
            raise ParseError(f"profiles entry {i} lacks key {exc}") from exc
        if profile.profile_id in seen:
            raise ParseError(f"duplicate profile_id {profile.profile_id!r}")
        seen.add(profile.profile_id)
        profiles.append(profile)
    return profiles
