"""Model-search loop: proposers, scorers, critics, records, and replay."""

from .critics import (
    CriticContext,
    LMCritic,
    ScriptedCritic,
    apply_hypothesis_edits,
    build_critic_prompt,
    render_hypotheses,
    select_critic_pool,
)
from .lmclient import LMClient, LMError, extract_last_code_block
from .proposers import (
    FixtureExhausted,
    LMProposer,
    Proposal,
    ProposalContext,
    ScriptedProposer,
    build_proposal_messages,
    load_scripted_rounds,
)
from .record import (
    ReplayEntry,
    ReplayError,
    ReplayReport,
    load_run,
    replay,
    replay_dir,
    save_run,
)
from .render import anonymize, render_dataset
from .run import candidate_seed, run_loop, score_all, select_exemplars
from .scorers import (
    DiagnosticsFailed,
    GPScorer,
    InferenceError,
    ODEScorer,
    PPLScorer,
    ProposalParseError,
    ScoreOutcome,
    make_scorer,
)
from .types import (
    BACKENDS,
    PRESETS,
    SCHEMA_VERSION,
    CandidateProgram,
    CriticismState,
    LoopConfig,
    RoundRecord,
    RunRecord,
    named_preset,
)

__all__ = [
    "BACKENDS",
    "CandidateProgram",
    "CriticContext",
    "CriticismState",
    "DiagnosticsFailed",
    "FixtureExhausted",
    "GPScorer",
    "InferenceError",
    "LMClient",
    "LMCritic",
    "LMError",
    "LMProposer",
    "LoopConfig",
    "ODEScorer",
    "PPLScorer",
    "PRESETS",
    "Proposal",
    "ProposalContext",
    "ProposalParseError",
    "ReplayEntry",
    "ReplayError",
    "ReplayReport",
    "RoundRecord",
    "RunRecord",
    "SCHEMA_VERSION",
    "ScoreOutcome",
    "ScriptedCritic",
    "ScriptedProposer",
    "anonymize",
    "apply_hypothesis_edits",
    "build_critic_prompt",
    "build_proposal_messages",
    "candidate_seed",
    "extract_last_code_block",
    "load_run",
    "load_scripted_rounds",
    "make_scorer",
    "named_preset",
    "render_dataset",
    "render_hypotheses",
    "replay",
    "replay_dir",
    "run_loop",
    "save_run",
    "score_all",
    "select_exemplars",
]
