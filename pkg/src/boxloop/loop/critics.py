"""Criticism synthesis: scripted double and LM critic, two variants.

top_d: conditions on the best-scoring programs (run-wide pool by default,
current round optionally) and produces free-form instruction text.

state_space: maintains an explicit hypothesis list; the critic replies
with ADD:/DELETE: edit lines which are applied to the carried list, and
the rendered list becomes the next round's instruction text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..datasets import fixture_text
from .lmclient import LMClient, LMError
from .types import CandidateProgram, CriticismState, LoopConfig

__all__ = [
    "CriticContext",
    "LMCritic",
    "ScriptedCritic",
    "apply_hypothesis_edits",
    "build_critic_prompt",
    "render_hypotheses",
    "select_critic_pool",
]


@dataclass(frozen=True)
class CriticContext:
    config: LoopConfig
    round_index: int
    dataset_text: str  # rendered once by the loop, reused verbatim
    round_candidates: tuple[CandidateProgram, ...]
    all_candidates: tuple[CandidateProgram, ...]
    state: CriticismState


def select_critic_pool(ctx: CriticContext) -> tuple[CandidateProgram, ...]:
    """fit_ok programs the critic conditions on, best score first."""
    cfg = ctx.config
    if cfg.critic_variant == "state_space":
        pool = [c for c in ctx.round_candidates if c.status == "fit_ok"]
    elif cfg.critic_pool_scope == "current_round":
        pool = [c for c in ctx.round_candidates if c.status == "fit_ok"]
    else:
        pool = [c for c in ctx.all_candidates if c.status == "fit_ok"]
    pool.sort(key=lambda c: (-c.score, c.key))
    return tuple(pool[: cfg.critic_pool])


def _stats_block(cand: CandidateProgram) -> str:
    lines = [f"score = {cand.score:.4f}"]
    if cand.predictive:
        mean = cand.predictive.get("mean") or []
        var = cand.predictive.get("var") or []
        if mean:
            lines.append(
                "posterior predictive mean per observation: "
                + " ".join(f"{v:.4g}" for v in mean)
            )
        if var:
            lines.append(
                "posterior predictive variance per observation: "
                + " ".join(f"{v:.4g}" for v in var)
            )
        resid = cand.predictive.get("residual")
        if resid:
            lines.append(
                "residual summary (mean, sd, max|r|): "
                + " ".join(f"{v:.4g}" for v in resid)
            )
    if cand.summary:
        lines.append("diagnostics: " + json.dumps(cand.summary, sort_keys=True))
    return "\n".join(lines)


def _programs_block(pool: tuple[CandidateProgram, ...]) -> str:
    parts = []
    for cand in pool:
        parts.append(f"[{cand.label}]\n{_stats_block(cand)}\n```\n{cand.source}\n```")
    return "\n\n".join(parts) if parts else "(none)"


def render_hypotheses(hypotheses: tuple[str, ...]) -> str:
    if not hypotheses:
        return "(empty)"
    return "\n".join(f"H{i + 1}: {h}" for i, h in enumerate(hypotheses))


def build_critic_prompt(ctx: CriticContext) -> tuple[list[dict], tuple[str, ...]]:
    """Messages for the critic call plus the provenance labels used."""
    pool = select_critic_pool(ctx)
    provenance = tuple(c.label for c in pool)
    if ctx.config.critic_variant == "state_space":
        tpl = fixture_text("prompts", "critic_state_space.txt")
        user = tpl.format(
            dataset=ctx.dataset_text,
            hypotheses=render_hypotheses(ctx.state.hypotheses),
            programs=_programs_block(pool),
        )
    else:
        tpl = fixture_text("prompts", "critic_top_d.txt")
        user = tpl.format(dataset=ctx.dataset_text, programs=_programs_block(pool))
    return [{"role": "user", "content": user}], provenance


def apply_hypothesis_edits(
    hypotheses: tuple[str, ...], reply: str
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Apply ADD:/DELETE: lines; returns (new list, ops actually applied).

    DELETE accepts either a positional label (H2) against the list as it
    stood when the critic saw it, or exact hypothesis text. Unknown lines
    and misses are ignored rather than failed: critics are free-form.
    """
    current = list(hypotheses)
    label_of = {f"h{i + 1}": h for i, h in enumerate(hypotheses)}
    applied: list[str] = []
    for raw in reply.splitlines():
        line = raw.strip()
        low = line.lower()
        if low.startswith("add:"):
            text = line[4:].strip()
            if text and text not in current:
                current.append(text)
                applied.append(f"ADD: {text}")
        elif low.startswith("delete:"):
            target = line[7:].strip()
            resolved = label_of.get(target.lower(), target)
            if resolved in current:
                current.remove(resolved)
                applied.append(f"DELETE: {resolved}")
    return tuple(current), tuple(applied)


def _next_state(ctx: CriticContext, reply: str, provenance) -> CriticismState:
    if ctx.config.critic_variant == "state_space":
        hyps, applied = apply_hypothesis_edits(ctx.state.hypotheses, reply)
        return CriticismState(
            text="Current working hypotheses:\n" + render_hypotheses(hyps),
            variant="state_space",
            provenance=provenance,
            hypotheses=hyps,
            history=ctx.state.history + applied,
        )
    return CriticismState(
        text=reply.strip(), variant="top_d", provenance=provenance
    )


@dataclass
class ScriptedCritic:
    """Fixture replies, one per criticism call, in order."""

    replies: list[str]
    _cursor: int = 0

    @classmethod
    def from_fixture(cls, name_or_json) -> "ScriptedCritic":
        obj = name_or_json
        if isinstance(obj, str):
            text = obj if obj.lstrip().startswith(("{", "[")) else fixture_text(
                "scripted", obj
            )
            obj = json.loads(text)
        if isinstance(obj, dict):
            obj = obj["replies"]
        return cls(list(obj))

    def criticize(self, ctx: CriticContext) -> CriticismState:
        if self._cursor >= len(self.replies):
            raise RuntimeError("scripted critic exhausted")
        reply = self.replies[self._cursor]
        self._cursor += 1
        _, provenance = build_critic_prompt(ctx)
        return _next_state(ctx, reply, provenance)


@dataclass
class LMCritic:
    client: LMClient

    @classmethod
    def from_config(cls, config: LoopConfig) -> "LMCritic":
        return cls(LMClient.from_env(config.lm_endpoint, config.lm_model))

    def criticize(self, ctx: CriticContext) -> CriticismState:
        messages, provenance = build_critic_prompt(ctx)
        try:
            reply, _ = self.client.chat(
                messages,
                temperature=ctx.config.critic_temperature,
                max_tokens=ctx.config.max_tokens,
            )
        except LMError:
            return ctx.state.with_note("critic unavailable; instruction carried over")
        return _next_state(ctx, reply, provenance)
