"""On-disk run records and score replay.

Layout under the run directory:

    config.json                   run-level config, best key, schema version
    round_<t>/proposal_<i>.src    proposal source, byte for byte
    round_<t>/scores.json         statuses, scores, summaries, exemplars
    round_<t>/criticism.txt       instruction text produced after round t
    transcripts/<t>_<i>.json      raw LM request/response pairs, if any

JSON is written with sorted keys and no timestamps, so saving the same
record twice produces identical bytes. Replay re-fits every fit_ok
proposal from its stored source and seed and compares scores: GP and ODE
scores must agree to 1e-9, seeded MCMC scores must agree exactly. Any
mismatch (including a refit that now fails) is reported, which makes
hand-edited score files detectable.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .scorers import make_scorer
from .types import (
    SCHEMA_VERSION,
    CandidateProgram,
    CriticismState,
    LoopConfig,
    RoundRecord,
    RunRecord,
)

__all__ = [
    "ReplayEntry",
    "ReplayError",
    "ReplayReport",
    "load_run",
    "replay",
    "replay_dir",
    "save_run",
]

# max |stored - recomputed| per backend; seeded MCMC is required to be exact
SCORE_TOLERANCE = {"gp": 1e-9, "ode": 1e-9, "ppl": 0.0}


class ReplayError(Exception):
    """A record cannot be loaded or replayed at all (vs. a score mismatch)."""


def _to_jsonable(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value.ravel()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    return value


def _dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_to_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _candidate_payload(cand: CandidateProgram) -> dict:
    return {
        "backend": cand.backend,
        "round_index": cand.round_index,
        "proposal_index": cand.proposal_index,
        "status": cand.status,
        "reason": cand.reason,
        "score": cand.score,
        "predictive": None if cand.predictive is None else cand.predictive,
        "summary": cand.summary,
        "seed": cand.seed,
    }


def _criticism_payload(state: CriticismState | None):
    if state is None:
        return None
    return {
        "text": state.text,
        "variant": state.variant,
        "provenance": list(state.provenance),
        "hypotheses": list(state.hypotheses),
        "history": list(state.history),
        "note": state.note,
    }


def save_run(record: RunRecord, out_dir) -> Path:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    _dump(
        root / "config.json",
        {
            "schema_version": record.schema_version,
            "config": asdict(record.config),
            "failed": record.failed,
            "best_key": None if record.best_key is None else list(record.best_key),
            "n_rounds": len(record.rounds),
        },
    )
    for rnd in record.rounds:
        rdir = root / f"round_{rnd.index}"
        rdir.mkdir(exist_ok=True)
        for cand in rnd.proposals:
            (rdir / f"proposal_{cand.proposal_index}.src").write_bytes(
                cand.source.encode("utf-8")
            )
        _dump(
            rdir / "scores.json",
            {
                "success_rate": rnd.success_rate,
                "exemplar_keys": [list(k) for k in rnd.exemplar_keys],
                "criticism": _criticism_payload(rnd.criticism),
                "proposals": [_candidate_payload(c) for c in rnd.proposals],
            },
        )
        if rnd.criticism is not None:
            (rdir / "criticism.txt").write_text(rnd.criticism.text)
    if record.transcripts:
        tdir = root / "transcripts"
        tdir.mkdir(exist_ok=True)
        for entry in record.transcripts:
            name = f"{entry.get('round', 0)}_{entry.get('proposal', 0)}.json"
            _dump(tdir / name, entry)
    return root


def _load_criticism(payload) -> CriticismState | None:
    if payload is None:
        return None
    return CriticismState(
        text=payload["text"],
        variant=payload["variant"],
        provenance=tuple(payload["provenance"]),
        hypotheses=tuple(payload["hypotheses"]),
        history=tuple(payload["history"]),
        note=payload["note"],
    )


def load_run(run_dir) -> RunRecord:
    root = Path(run_dir)
    cfg_path = root / "config.json"
    if not cfg_path.exists():
        raise ReplayError(f"no config.json under {root}")
    head = json.loads(cfg_path.read_text())
    if head.get("schema_version") != SCHEMA_VERSION:
        raise ReplayError(
            f"schema version mismatch: record has {head.get('schema_version')!r}, "
            f"this build reads {SCHEMA_VERSION}"
        )
    config = LoopConfig(**head["config"])
    rounds = []
    for t in range(head["n_rounds"]):
        rdir = root / f"round_{t}"
        scores = json.loads((rdir / "scores.json").read_text())
        cands = []
        for payload in scores["proposals"]:
            i = payload["proposal_index"]
            src_path = rdir / f"proposal_{i}.src"
            if not src_path.exists():
                raise ReplayError(f"missing source file {src_path}")
            cands.append(
                CandidateProgram(
                    backend=payload["backend"],
                    source=src_path.read_bytes().decode("utf-8"),
                    round_index=payload["round_index"],
                    proposal_index=i,
                    status=payload["status"],
                    reason=payload["reason"],
                    score=payload["score"],
                    predictive=payload["predictive"],
                    summary=payload["summary"],
                    seed=payload["seed"],
                )
            )
        rounds.append(
            RoundRecord(
                index=t,
                proposals=tuple(cands),
                exemplar_keys=tuple(tuple(k) for k in scores["exemplar_keys"]),
                criticism=_load_criticism(scores["criticism"]),
                success_rate=scores["success_rate"],
            )
        )
    transcripts = []
    tdir = root / "transcripts"
    if tdir.exists():
        for path in sorted(tdir.glob("*.json")):
            transcripts.append(json.loads(path.read_text()))
    best = head["best_key"]
    return RunRecord(
        config=config,
        rounds=tuple(rounds),
        best_key=None if best is None else tuple(best),
        failed=head["failed"],
        transcripts=tuple(transcripts),
        schema_version=head["schema_version"],
    )


@dataclass(frozen=True)
class ReplayEntry:
    key: tuple[int, int]
    stored_score: float
    recomputed_score: float | None
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class ReplayReport:
    entries: tuple[ReplayEntry, ...]
    n_checked: int

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    @property
    def mismatches(self) -> tuple[ReplayEntry, ...]:
        return tuple(e for e in self.entries if not e.ok)


def replay(record: RunRecord, dataset, scorer=None) -> ReplayReport:
    """Re-fit every fit_ok candidate and verify the stored scores."""
    config = record.config
    if not config.metadata:
        from .render import anonymize

        dataset = anonymize(dataset)
    if scorer is None:
        scorer = make_scorer(config.backend, dataset, **config.scorer_options)
    tol = SCORE_TOLERANCE[config.backend]
    entries = []
    for cand in record.candidates():
        if cand.status != "fit_ok":
            continue
        try:
            outcome = scorer.score(cand.source, cand.seed)
        except Exception as exc:
            entries.append(
                ReplayEntry(
                    key=cand.key,
                    stored_score=cand.score,
                    recomputed_score=None,
                    ok=False,
                    detail=f"refit failed: {type(exc).__name__}: {exc}",
                )
            )
            continue
        new = float(outcome.score)
        diff = abs(new - cand.score)
        ok = diff <= tol
        entries.append(
            ReplayEntry(
                key=cand.key,
                stored_score=cand.score,
                recomputed_score=new,
                ok=ok,
                detail="" if ok else f"score drifted by {diff:.3e} (tolerance {tol:g})",
            )
        )
    return ReplayReport(entries=tuple(entries), n_checked=len(entries))


def replay_dir(run_dir, dataset, scorer=None) -> ReplayReport:
    return replay(load_run(run_dir), dataset, scorer=scorer)
