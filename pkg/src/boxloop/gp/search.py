"""Greedy structure search over kernel expressions.

Depth 1 picks the best single base kernel; each further depth enumerates
every single mutation (AddBase / MulBase on any subtree, ReplaceBase on
leaves) of the incumbent, fits them all, and accepts the best challenger
if it improves the marginal likelihood by more than min_gain nats.

Fitting every candidate at the full optimizer budget is wasted effort:
candidates only need to be ranked. So each depth runs a cheap ranking
pass (one restart, one period initialization, short Adam budget), then
refits the top few candidates properly and compares the best of those
against the incumbent. Candidates whose printed form coincides under
sum/product associativity are fitted once.

Picking the argmax lml over ~10 x depth noisy fits inflates the winner's
score (selection bias), which at later depths manufactures spurious
"improvements" and drives structure bloat. So before the acceptance test
the selected challenger is refit once more under an independent seed and
that unbiased score is what must clear the incumbent by min_gain.

Ties break toward the smaller expression (fewest parameters), then
toward enumeration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fit import GPFitError, GPFitResult, fit_gp
from .kernels import BASE_KINDS, Base, enumerate_mutations, n_params
from .parser import print_kernel


@dataclass(frozen=True)
class DepthRecord:
    depth: int
    incumbent: str
    lml: float
    n_candidates: int
    accepted: str  # mutation description, or "init" / "stop"


@dataclass
class SearchResult:
    best: GPFitResult
    expr_text: str
    depths: list = field(default_factory=list)
    stopped_early: bool = False

    @property
    def lml(self) -> float:
        return self.best.lml


def _cand_seed(seed: int, depth: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, depth, index]).generate_state(1)[0])


def greedy_search(
    x,
    y,
    kinds=BASE_KINDS,
    max_depth: int = 10,
    min_gain: float = 1e-4,
    seed: int = 0,
    restarts: int = 1,
    rank_steps: int = 120,
    top_refit: int = 2,
    progress=None,
    **fit_kwargs,
) -> SearchResult:
    """Greedy compositional search; returns the incumbent trail and best fit.

    Accepted lml is nondecreasing by construction (the incumbent only
    changes when a fully refit challenger beats it). Individual candidate
    fit failures are skipped, not fatal; a depth where every candidate
    fails stops the search.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)

    def rank_fit(expr, depth, i):
        return fit_gp(
            expr,
            x,
            y,
            restarts=1,
            seed=_cand_seed(seed, depth, i),
            steps=rank_steps,
            tol=1e-4,
            patience=10,
            period_divisors=(5.0,),
            **fit_kwargs,
        )

    def full_fit(expr, depth, i):
        return fit_gp(expr, x, y, restarts=restarts, seed=_cand_seed(seed, depth, i), **fit_kwargs)

    def best_of(cands, depth):
        # ties: prefer fewer parameters, then enumeration order
        ranked = []
        for i, (label, expr) in enumerate(cands):
            try:
                ranked.append((-rank_fit(expr, depth, i).lml, n_params(expr), i, label, expr))
            except GPFitError:
                continue
        ranked.sort(key=lambda t: t[:3])
        finals = []
        for _, np_, i, label, expr in ranked[:top_refit]:
            try:
                res = full_fit(expr, depth, i)
            except GPFitError:
                continue
            finals.append((-res.lml, np_, i, label, res))
        if not finals:
            return None, None
        _, _, _, label, res = min(finals, key=lambda t: t[:3])
        return res, label

    depths = []
    roots = [(kind, Base(kind)) for kind in kinds]
    incumbent, _ = best_of(roots, depth=1)
    if incumbent is None:
        raise GPFitError("every base kernel failed to fit")
    depths.append(DepthRecord(1, print_kernel(incumbent.model.expr), incumbent.lml, len(roots), "init"))
    if progress:
        progress(depths[-1])

    stopped_early = False
    for depth in range(2, max_depth + 1):
        seen = {print_kernel(incumbent.model.expr)}
        cands = []
        for op, pos, kind, expr in enumerate_mutations(incumbent.model.expr, kinds):
            text = print_kernel(expr)
            if text in seen:
                continue
            seen.add(text)
            cands.append((f"{op}@{pos}:{kind}", expr))
        challenger, chal_label = best_of(cands, depth)
        # refresh the incumbent under this depth's seed so challengers must
        # beat structure, not fresh-restart luck
        try:
            refreshed = full_fit(incumbent.model.expr, depth, len(cands))
            if refreshed.lml > incumbent.lml:
                incumbent = refreshed
        except GPFitError:
            pass
        gain = -np.inf
        if challenger is not None:
            # confirmation refit under a fresh seed: the acceptance test uses
            # a score that was not itself the argmax over the candidate pool
            try:
                confirm = full_fit(challenger.model.expr, depth, len(cands) + 1)
            except GPFitError:
                confirm = challenger
            if confirm.lml > challenger.lml:
                challenger = confirm
            gain = confirm.lml - incumbent.lml
        if gain <= min_gain:
            depths.append(DepthRecord(depth, print_kernel(incumbent.model.expr), incumbent.lml, len(cands), "stop"))
            stopped_early = True
            if progress:
                progress(depths[-1])
            break
        incumbent = challenger
        depths.append(DepthRecord(depth, print_kernel(incumbent.model.expr), incumbent.lml, len(cands), chal_label))
        if progress:
            progress(depths[-1])

    return SearchResult(
        best=incumbent,
        expr_text=print_kernel(incumbent.model.expr),
        depths=depths,
        stopped_early=stopped_early,
    )
