"""The propose / fit / criticize driver.

One round: draw m proposals conditioned on (seed program, exemplars,
criticism, data rendering); score them all with per-proposal failure
isolation; keep the round's top-k successes as the next exemplars; ask
the critic for the next instruction. The global best is the argmax score
over every successful candidate in every round.

Scoring failures never propagate: each proposal ends up fit_ok or
fit_failed(reason), and a round's success rate is recorded either way. A
run only counts as failed when every round produced zero successes; the
record is still written in full so the failure can be inspected.
"""

from __future__ import annotations

import time

import numpy as np

from .critics import CriticContext
from .proposers import Proposal, ProposalContext
from .render import anonymize, render_dataset
from .scorers import DiagnosticsFailed, InferenceError, ProposalParseError, make_scorer
from .types import (
    CandidateProgram,
    CriticismState,
    LoopConfig,
    RoundRecord,
    RunRecord,
)

__all__ = ["candidate_seed", "run_loop", "score_all", "select_exemplars"]


def candidate_seed(master_seed: int, round_index: int, proposal_index: int) -> int:
    """Deterministic per-fit seed; independent streams across (t, i)."""
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(round_index, proposal_index)
    )
    return int(seq.generate_state(1)[0])


def score_all(
    proposals: list[Proposal],
    scorer,
    *,
    backend: str,
    round_index: int,
    master_seed: int,
    timeout_per_fit: float = 600.0,
) -> tuple[list[CandidateProgram], float]:
    """Score every proposal in isolation; returns (candidates, success rate).

    The timeout is cooperative: fits are not preempted, but any fit whose
    wall time exceeds the budget is recorded as a timeout failure so slow
    programs cannot win rounds.
    """
    out: list[CandidateProgram] = []
    for i, prop in enumerate(proposals):
        seed = candidate_seed(master_seed, round_index, i)
        common = dict(
            backend=backend,
            source=prop.source or "",
            round_index=round_index,
            proposal_index=i,
            seed=seed,
        )
        if prop.source is None:
            out.append(
                CandidateProgram(
                    **common,
                    status="fit_failed",
                    reason=f"parse_error: {prop.error or 'empty proposal'}",
                )
            )
            continue
        start = time.monotonic()
        try:
            outcome = scorer.score(prop.source, seed)
        except ProposalParseError as exc:
            out.append(
                CandidateProgram(
                    **common, status="fit_failed", reason=f"parse_error: {exc}"
                )
            )
            continue
        except DiagnosticsFailed as exc:
            out.append(
                CandidateProgram(
                    **common, status="fit_failed", reason=f"diagnostics_failed: {exc}"
                )
            )
            continue
        except InferenceError as exc:
            out.append(
                CandidateProgram(
                    **common, status="fit_failed", reason=f"inference_error: {exc}"
                )
            )
            continue
        except Exception as exc:  # isolation contract: nothing propagates
            out.append(
                CandidateProgram(
                    **common,
                    status="fit_failed",
                    reason=f"inference_error: unexpected {type(exc).__name__}: {exc}",
                )
            )
            continue
        elapsed = time.monotonic() - start
        if elapsed > timeout_per_fit:
            out.append(
                CandidateProgram(
                    **common,
                    status="fit_failed",
                    reason=f"timeout: fit took {elapsed:.1f}s (budget {timeout_per_fit:.1f}s)",
                )
            )
            continue
        out.append(
            CandidateProgram(
                **common,
                status="fit_ok",
                score=float(outcome.score),
                predictive=outcome.predictive,
                summary=outcome.summary,
            )
        )
    n_ok = sum(c.status == "fit_ok" for c in out)
    return out, n_ok / max(len(out), 1)


def select_exemplars(
    candidates: list[CandidateProgram], k: int
) -> tuple[CandidateProgram, ...]:
    """Top-k fit_ok candidates of one round, best score first."""
    ok = [c for c in candidates if c.status == "fit_ok"]
    ok.sort(key=lambda c: (-c.score, c.key))
    return tuple(ok[:k])


def run_loop(
    config: LoopConfig,
    dataset,
    proposer,
    scorer=None,
    critic=None,
    out_dir=None,
) -> RunRecord:
    """Run the full loop; returns the RunRecord (record.best is the winner).

    With metadata off the dataset is anonymized once up front so prompts
    and fits see identical column names.
    """
    if not config.metadata:
        dataset = anonymize(dataset)
    if scorer is None:
        scorer = make_scorer(config.backend, dataset, **config.scorer_options)
    dataset_text = render_dataset(dataset, metadata=config.metadata)

    exemplars: tuple[CandidateProgram, ...] = ()
    criticism = CriticismState(variant=config.critic_variant)
    rounds: list[RoundRecord] = []
    transcripts: list[dict] = []
    all_candidates: list[CandidateProgram] = []

    for t in range(config.rounds):
        proposals = proposer.propose(
            ProposalContext(
                config=config,
                round_index=t,
                dataset=dataset,
                exemplars=exemplars,
                criticism=criticism,
            )
        )
        for i, prop in enumerate(proposals):
            if prop.transcript is not None:
                transcripts.append(
                    {"round": t, "proposal": i, **prop.transcript}
                )
        candidates, success_rate = score_all(
            proposals,
            scorer,
            backend=config.backend,
            round_index=t,
            master_seed=config.master_seed,
            timeout_per_fit=config.timeout_per_fit,
        )
        all_candidates.extend(candidates)
        exemplars = select_exemplars(candidates, config.exemplars)

        new_criticism = None
        if t < config.rounds - 1:
            if any(c.status == "fit_ok" for c in candidates):
                new_criticism = critic.criticize(
                    CriticContext(
                        config=config,
                        round_index=t,
                        dataset_text=dataset_text,
                        round_candidates=tuple(candidates),
                        all_candidates=tuple(all_candidates),
                        state=criticism,
                    )
                )
            else:
                new_criticism = criticism.with_note(
                    "no valid fits this round; instruction carried over"
                )
            criticism = new_criticism

        rounds.append(
            RoundRecord(
                index=t,
                proposals=tuple(candidates),
                exemplar_keys=tuple(c.key for c in exemplars),
                criticism=new_criticism,
                success_rate=success_rate,
            )
        )

    ok = [c for c in all_candidates if c.status == "fit_ok"]
    best_key = None
    if ok:
        ok.sort(key=lambda c: (-c.score, c.key))
        best_key = ok[0].key
    record = RunRecord(
        config=config,
        rounds=tuple(rounds),
        best_key=best_key,
        failed=not ok,
        transcripts=tuple(transcripts),
    )
    if out_dir is not None:
        from .record import save_run

        save_run(record, out_dir)
    return record
