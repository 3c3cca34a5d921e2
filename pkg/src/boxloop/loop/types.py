"""Core types for the propose / fit / criticize loop.

Everything here is plain data. A run is fully described by its LoopConfig
plus the per-round records; with scripted proposers and critics the whole
loop is a pure function of (config, fixtures), which is what the
determinism and replay contracts lean on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

__all__ = [
    "BACKENDS",
    "CandidateProgram",
    "CriticismState",
    "LoopConfig",
    "PRESETS",
    "RoundRecord",
    "RunRecord",
    "SCHEMA_VERSION",
    "named_preset",
]

BACKENDS = ("gp", "ppl", "ode")
SCHEMA_VERSION = 1

FAIL_REASONS = ("parse_error", "inference_error", "timeout", "diagnostics_failed")


@dataclass(frozen=True)
class CandidateProgram:
    """One proposal and, once scored, its outcome.

    score semantics per backend: gp -> log marginal likelihood,
    ppl -> elpd_loo, ode -> negative train MSE. Higher is always better.
    """

    backend: str
    source: str
    round_index: int
    proposal_index: int
    status: str = "proposed"  # proposed | fit_ok | fit_failed
    reason: str = ""  # one of FAIL_REASONS, optionally ": detail"
    score: float | None = None
    predictive: dict | None = None  # {"mean": [...], "var": [...]}
    summary: dict = field(default_factory=dict)  # backend-specific extras
    seed: int = 0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.status not in ("proposed", "fit_ok", "fit_failed"):
            raise ValueError(f"bad status {self.status!r}")
        if (self.score is not None) != (self.status == "fit_ok"):
            raise ValueError("score must be present exactly when status is fit_ok")
        if self.status == "fit_failed" and not self.reason:
            raise ValueError("fit_failed needs a reason")

    @property
    def key(self) -> tuple[int, int]:
        return (self.round_index, self.proposal_index)

    @property
    def label(self) -> str:
        return f"round{self.round_index}/proposal{self.proposal_index}"


@dataclass(frozen=True)
class CriticismState:
    """Natural-language hypothesis state carried between rounds."""

    text: str = ""
    variant: str = "top_d"  # top_d | state_space
    provenance: tuple[str, ...] = ()  # candidate labels it conditioned on
    hypotheses: tuple[str, ...] = ()  # state_space only: current list
    history: tuple[str, ...] = ()  # state_space only: applied add/delete ops
    note: str = ""  # e.g. "no valid fits" carry-over marker

    def with_note(self, note: str) -> "CriticismState":
        return replace(self, note=note)


@dataclass(frozen=True)
class LoopConfig:
    backend: str
    rounds: int  # T
    proposals_per_round: int  # m
    exemplars: int = 3  # k
    critic_pool: int = 12  # d: programs the critic conditions on
    critic_variant: str = "top_d"  # top_d | state_space
    critic_pool_scope: str = "best_so_far"  # best_so_far | current_round
    proposal_temperature: float = 0.7
    critic_temperature: float = 0.0
    warm_start: str = ""  # optional seed program source (z0)
    proposal_instruction: str = ""  # extra instruction appended to prompts
    metadata: bool = True  # False -> columns anonymized in prompt and data
    master_seed: int = 0
    proposer: str = "scripted"  # scripted | lm
    lm_endpoint: str = ""  # empty -> environment variable
    lm_model: str = ""
    max_tokens: int = 2048
    timeout_per_fit: float = 600.0
    # keyword arguments for the backend scorer (e.g. ode fit iterations);
    # stored on the config so replay rebuilds an identical scorer
    scorer_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.rounds < 1 or self.proposals_per_round < 1:
            raise ValueError("need rounds >= 1 and proposals_per_round >= 1")
        if not 1 <= self.exemplars <= self.proposals_per_round:
            raise ValueError("need 1 <= exemplars <= proposals_per_round")
        if self.critic_variant not in ("top_d", "state_space"):
            raise ValueError(f"bad critic_variant {self.critic_variant!r}")
        if self.critic_pool_scope not in ("best_so_far", "current_round"):
            raise ValueError(f"bad critic_pool_scope {self.critic_pool_scope!r}")


# Published loop settings per experiment family. The two predator-prey
# warm-start presets share hyperparameters and differ in whether proposals
# may restructure the mechanistic core or only the correction terms.
_LV_COMMON = dict(
    backend="ode",
    rounds=4,
    proposals_per_round=12,
    proposal_temperature=0.7,
)
PRESETS: dict[str, dict] = {
    "gp_base": dict(
        backend="gp", rounds=2, proposals_per_round=3, proposal_temperature=0.2
    ),
    "gp_augmented": dict(
        backend="gp", rounds=3, proposals_per_round=8, proposal_temperature=0.7
    ),
    "ppl_default": dict(
        backend="ppl", rounds=3, proposals_per_round=8, proposal_temperature=0.7
    ),
    "lv_no_ws": dict(_LV_COMMON),
    "lv_ws_constraint": dict(
        _LV_COMMON,
        proposal_instruction=(
            "Keep the mass-action core terms exactly as given in the seed "
            "program; only modify or add correction terms."
        ),
    ),
    "lv_ws_noconstraint": dict(_LV_COMMON),
}


def named_preset(name: str, **overrides) -> LoopConfig:
    """LoopConfig for a named experiment family; overrides win."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    kw = dict(PRESETS[name])
    if name == "lv_ws_constraint" or name == "lv_ws_noconstraint":
        if "warm_start" not in overrides:
            from ..ode import print_ode_spec, warm_start_spec

            kw["warm_start"] = print_ode_spec(warm_start_spec())
    kw.update(overrides)
    return LoopConfig(**kw)


@dataclass(frozen=True)
class RoundRecord:
    index: int
    proposals: tuple[CandidateProgram, ...]
    exemplar_keys: tuple[tuple[int, int], ...]
    criticism: CriticismState | None
    success_rate: float


@dataclass(frozen=True)
class RunRecord:
    config: LoopConfig
    rounds: tuple[RoundRecord, ...]
    best_key: tuple[int, int] | None  # (round, proposal) of global best
    failed: bool = False
    transcripts: tuple[dict, ...] = ()
    schema_version: int = SCHEMA_VERSION

    def candidates(self):
        for rnd in self.rounds:
            yield from rnd.proposals

    def candidate(self, key: tuple[int, int]) -> CandidateProgram:
        for cand in self.candidates():
            if cand.key == tuple(key):
                return cand
        raise KeyError(f"no candidate at {key}")

    @property
    def best(self) -> CandidateProgram | None:
        return None if self.best_key is None else self.candidate(self.best_key)
