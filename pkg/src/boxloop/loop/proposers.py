"""Proposal sources: a scripted replay double and a live LM client.

Both produce the same shape: m Proposal entries per round, each carrying
either source text or an error tag, plus any raw transcripts. The
scripted proposer returns fixture entries byte-exactly, which is what
makes whole-loop determinism testable without an endpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..datasets import fixture_text
from .lmclient import LMClient, LMError, extract_last_code_block
from .render import render_dataset
from .types import CandidateProgram, CriticismState, LoopConfig

__all__ = [
    "LMProposer",
    "ProposalContext",
    "Proposal",
    "ScriptedProposer",
    "build_proposal_messages",
    "load_scripted_rounds",
]


@dataclass(frozen=True)
class Proposal:
    source: str | None  # None -> nothing usable came back
    error: str = ""  # "no_response" | "no_code_block" | ""
    transcript: dict | None = None


@dataclass(frozen=True)
class ProposalContext:
    config: LoopConfig
    round_index: int
    dataset: object
    exemplars: tuple[CandidateProgram, ...]
    criticism: CriticismState


class FixtureExhausted(RuntimeError):
    """The scripted fixture has no entries for the requested round."""


def load_scripted_rounds(obj) -> list[list[str]]:
    """Accepts a parsed fixture, JSON text, or a fixture file name.

    Canonical form: {"rounds": [["src", ...], ...]}; a bare list of lists
    is accepted too.
    """
    if isinstance(obj, str):
        text = obj if obj.lstrip().startswith(("{", "[")) else fixture_text(
            "scripted", obj
        )
        obj = json.loads(text)
    if isinstance(obj, dict):
        obj = obj["rounds"]
    if not (
        isinstance(obj, list)
        and all(isinstance(r, list) and all(isinstance(s, str) for s in r) for r in obj)
    ):
        raise ValueError("scripted fixture must be a list of rounds of source strings")
    return obj


@dataclass
class ScriptedProposer:
    rounds: list[list[str]]

    @classmethod
    def from_fixture(cls, name_or_json) -> "ScriptedProposer":
        return cls(load_scripted_rounds(name_or_json))

    def propose(self, ctx: ProposalContext) -> list[Proposal]:
        t, m = ctx.round_index, ctx.config.proposals_per_round
        if t >= len(self.rounds):
            raise FixtureExhausted(
                f"fixture has {len(self.rounds)} round(s); round {t} requested"
            )
        entries = self.rounds[t]
        if len(entries) < m:
            raise FixtureExhausted(
                f"round {t} has {len(entries)} entries; {m} proposals requested"
            )
        return [Proposal(source=entries[i]) for i in range(m)]


def _exemplar_block(exemplars: tuple[CandidateProgram, ...]) -> str:
    if not exemplars:
        return ""
    parts = ["# Previously scored programs (best first)\n"]
    for e in exemplars:
        parts.append(f"score = {e.score:.4f}\n```\n{e.source}\n```\n")
    return "\n".join(parts) + "\n"


def build_proposal_messages(ctx: ProposalContext) -> list[dict]:
    """System + user messages for one proposal completion."""
    cfg = ctx.config
    system = fixture_text("prompts", f"system_{cfg.backend}.txt")
    user_tpl = fixture_text("prompts", "user_proposal.txt")
    warm = (
        f"# Seed program\n\n```\n{cfg.warm_start}\n```\n\n" if cfg.warm_start else ""
    )
    criticism = (
        f"# Instruction from the previous round\n\n{ctx.criticism.text}\n\n"
        if ctx.criticism.text
        else ""
    )
    instruction = (
        f"{cfg.proposal_instruction}\n\n" if cfg.proposal_instruction else ""
    )
    user = user_tpl.format(
        dataset=render_dataset(ctx.dataset, metadata=cfg.metadata),
        warm_start=warm,
        exemplars=_exemplar_block(ctx.exemplars),
        criticism=criticism,
        instruction=instruction,
    )
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]


@dataclass
class LMProposer:
    client: LMClient

    @classmethod
    def from_config(cls, config: LoopConfig) -> "LMProposer":
        return cls(LMClient.from_env(config.lm_endpoint, config.lm_model))

    def propose(self, ctx: ProposalContext) -> list[Proposal]:
        messages = build_proposal_messages(ctx)
        out: list[Proposal] = []
        for _ in range(ctx.config.proposals_per_round):
            try:
                text, transcript = self.client.chat(
                    messages,
                    temperature=ctx.config.proposal_temperature,
                    max_tokens=ctx.config.max_tokens,
                )
            except LMError as exc:
                out.append(
                    Proposal(
                        source=None,
                        error="no_response",
                        transcript={"error": str(exc)},
                    )
                )
                continue
            block = extract_last_code_block(text)
            if block is None:
                out.append(
                    Proposal(source=None, error="no_code_block", transcript=transcript)
                )
            else:
                out.append(Proposal(source=block.strip("\n"), transcript=transcript))
        return out
