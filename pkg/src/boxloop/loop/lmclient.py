"""Minimal chat-completions client over HTTP.

The endpoint, model name, and key come from the config or from the
environment (BOXLOOP_LM_ENDPOINT / BOXLOOP_LM_MODEL / BOXLOOP_LM_API_KEY).
Transient failures retry with exponential backoff; every exchange returns
a transcript dict that the run record persists verbatim, so runs can be
inspected and re-scored offline without the endpoint.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass

import requests

__all__ = ["LMClient", "LMError", "extract_last_code_block"]

ENV_ENDPOINT = "BOXLOOP_LM_ENDPOINT"
ENV_MODEL = "BOXLOOP_LM_MODEL"
ENV_KEY = "BOXLOOP_LM_API_KEY"

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


class LMError(RuntimeError):
    """Endpoint unreachable or response unusable after retries."""


def extract_last_code_block(text: str) -> str | None:
    """Content of the last fenced code block, or None if there is none."""
    blocks = _FENCE.findall(text)
    return blocks[-1] if blocks else None


@dataclass
class LMClient:
    endpoint: str
    model: str
    api_key: str = ""
    max_retries: int = 3
    request_timeout: float = 120.0
    backoff: float = 1.0

    @classmethod
    def from_env(cls, endpoint: str = "", model: str = "") -> "LMClient":
        endpoint = endpoint or os.environ.get(ENV_ENDPOINT, "")
        model = model or os.environ.get(ENV_MODEL, "")
        if not endpoint or not model:
            raise LMError(
                f"no endpoint/model configured; set {ENV_ENDPOINT} and {ENV_MODEL}"
            )
        return cls(endpoint=endpoint, model=model, api_key=os.environ.get(ENV_KEY, ""))

    def chat(
        self,
        messages: list[dict],
        temperature: float,
        max_tokens: int = 2048,
    ) -> tuple[str, dict]:
        """Returns (assistant text, transcript). Raises LMError when the
        endpoint stays unusable through max_retries attempts."""
        payload = {
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        transcript = {"request": payload, "response": None, "attempts": 0}
        last_err = "no attempt made"
        for attempt in range(self.max_retries):
            transcript["attempts"] = attempt + 1
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = requests.post(
                    self.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self.request_timeout,
                )
            except requests.RequestException as exc:
                last_err = f"request failed: {exc}"
                continue
            if resp.status_code >= 500:
                last_err = f"server error {resp.status_code}"
                continue
            if resp.status_code != 200:
                transcript["response"] = {"status": resp.status_code, "body": resp.text}
                raise LMError(f"endpoint returned {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
                content = body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                transcript["response"] = {"status": 200, "body": resp.text[:2000]}
                raise LMError(f"malformed completion payload: {exc}") from exc
            transcript["response"] = body
            return content, transcript

        transcript["response"] = {"error": last_err}
        raise LMError(f"gave up after {self.max_retries} attempts: {last_err}")
