"""HTTP clients for hosted classifier / embedder / generator services.

Each client speaks a one-endpoint JSON protocol and validates the response
shape strictly: a wrong logit count, a short candidate list or a malformed
body is a structured error, never a silently wrong answer.
"""

from __future__ import annotations

import numpy as np
import requests

from .errors import BackendError, GenerationError

DEFAULT_CLASSIFY_TIMEOUT = 10.0
DEFAULT_EMBED_TIMEOUT = 30.0
DEFAULT_GENERATE_TIMEOUT = 60.0


def _post_json(url: str, payload: dict, timeout: float, backend: str) -> dict:
    try:
        response = requests.post(url, json=payload, timeout=timeout)
    except requests.Timeout as exc:
        raise BackendError(
            f"{backend}: request to {url} timed out after {timeout}s",
            backend=backend,
            cause="timeout",
        ) from exc
    except requests.RequestException as exc:
        raise BackendError(
            f"{backend}: request to {url} failed: {exc}",
            backend=backend,
            cause="connection",
        ) from exc
    if response.status_code != 200:
        raise BackendError(
            f"{backend}: {url} returned HTTP {response.status_code}",
            backend=backend,
            cause="http_status",
        )
    try:
        body = response.json()
    except ValueError as exc:
        raise BackendError(
            f"{backend}: {url} returned invalid JSON",
            backend=backend,
            cause="malformed",
        ) from exc
    if not isinstance(body, dict):
        raise BackendError(
            f"{backend}: {url} returned a non-object body",
            backend=backend,
            cause="malformed",
        )
    return body


def ping(base_url: str, timeout: float = 5.0) -> bool:
    """True when GET {base}/healthz answers 200."""
    try:
        return requests.get(f"{base_url}/healthz", timeout=timeout).status_code == 200
    except requests.RequestException:
        return False


class RemoteClassifier:
    """Client for POST {base}/classify -> {"logits": [...], "k": K}."""

    name = "remote-classifier"

    def __init__(self, base_url: str, expected_k: int, timeout: float = DEFAULT_CLASSIFY_TIMEOUT):
        self.base_url = base_url.rstrip("/")
        self.k = expected_k
        self.timeout = timeout

    def classify(self, query: str) -> np.ndarray:
        body = _post_json(
            f"{self.base_url}/classify", {"text": query}, self.timeout, self.name
        )
        logits = body.get("logits")
        if not isinstance(logits, list) or body.get("k") != self.k or len(logits) != self.k:
            raise BackendError(
                f"{self.name}: expected {self.k} logits, got "
                f"k={body.get('k')!r} with {len(logits) if isinstance(logits, list) else 'no'} values",
                backend=self.name,
                cause="wrong_k",
            )
        arr = np.asarray(logits, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise BackendError(
                f"{self.name}: logits contain non-finite values",
                backend=self.name,
                cause="malformed",
            )
        return arr


class RemoteEmbedder:
    """Client for POST {base}/embed -> {"vectors": [[...], ...], "dim": d}.

    Bound to one case id, which is sent with every batch. The dimension is
    pinned on first use and enforced afterwards.
    """

    name = "remote-embedder"

    def __init__(self, base_url: str, case_id: str, timeout: float = DEFAULT_EMBED_TIMEOUT):
        self.base_url = base_url.rstrip("/")
        self.case_id: str | None = case_id
        self.timeout = timeout
        self._dimension: int | None = None

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            raise BackendError(
                f"{self.name}: dimension unknown before the first embed call",
                backend=self.name,
                cause="not_ready",
            )
        return self._dimension

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        body = _post_json(
            f"{self.base_url}/embed",
            {"texts": texts, "case_id": self.case_id},
            self.timeout,
            self.name,
        )
        vectors = body.get("vectors")
        dim = body.get("dim")
        if not isinstance(vectors, list) or len(vectors) != len(texts) or not isinstance(dim, int):
            raise BackendError(
                f"{self.name}: expected {len(texts)} vectors with a dim field",
                backend=self.name,
                cause="malformed",
            )
        if self._dimension is not None and dim != self._dimension:
            raise BackendError(
                f"{self.name}: dimension changed from {self._dimension} to {dim}",
                backend=self.name,
                cause="dimension_drift",
            )
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != dim or not np.all(np.isfinite(arr)):
                raise BackendError(
                    f"{self.name}: vector of dimension {arr.shape} does not match dim={dim}",
                    backend=self.name,
                    cause="malformed",
                )
            out.append(arr)
        self._dimension = dim
        return out

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


class RemoteGenerator:
    """Client for POST {base}/generate -> {"candidates": [...]}."""

    name = "remote-generator"

    def __init__(
        self,
        base_url: str,
        max_tokens: int = 40,
        rng_seed: int | None = None,
        timeout: float = DEFAULT_GENERATE_TIMEOUT,
    ):
        self.base_url = base_url.rstrip("/")
        self.max_tokens = max_tokens
        self.rng_seed = rng_seed
        self.timeout = timeout

    def generate(self, seed_text: str, p: int) -> list[str]:
        payload = {"seed": seed_text, "n": p, "max_tokens": self.max_tokens}
        if self.rng_seed is not None:
            payload["rng_seed"] = self.rng_seed
        body = _post_json(f"{self.base_url}/generate", payload, self.timeout, self.name)
        candidates = body.get("candidates")
        if not isinstance(candidates, list) or len(candidates) != p:
            raise GenerationError(
                f"{self.name}: expected {p} candidates, got "
                f"{len(candidates) if isinstance(candidates, list) else 'none'}",
                backend=self.name,
                cause="short_list",
            )
        if any(not isinstance(c, str) for c in candidates):
            raise GenerationError(
                f"{self.name}: candidates must be strings",
                backend=self.name,
                cause="malformed",
            )
        return candidates
