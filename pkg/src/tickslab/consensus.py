"""Parallel branch racing and confidence-vote consensus.

k clones of a seed state reason concurrently; each clone's synchrony-pair
evaluation order is reshuffled by a stream derived from (episode seed,
branch id), which makes clones diverge deterministically with zero extra
parameters.  Completion order may vary with scheduling; branch content may
not.  Outcomes are merged by entropy-based confidence weights after a
canonical sort, so the merge is bitwise order-independent.

Exactly one consensus result is produced per decision step: the normal path
and the timeout path are mutually exclusive through a once-only latch, and
the timeout path is total (it falls back to the cached result, or to a zero
no-op result on the first step).

This is the only concurrent module.  Workers own their states exclusively;
the single collector does all merging; no lock is held while a branch
computes.
"""

from __future__ import annotations

import enum
import logging
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .engine import BranchState, CtmParams, certainty, run_until_halt
from .errors import BranchPanic, EmptyOutcomeList
from .rng import SplitMix64, derive_seed

logger = logging.getLogger("tickslab.consensus")

ZERO_CONFIDENCE = 1e-9


class WaitPolicy(enum.Enum):
    OFF = "off"
    ONE = "one"


@dataclass(frozen=True)
class BranchOutcome:
    branch_id: int
    sync: np.ndarray           # final synchrony vector
    logits: np.ndarray         # final scaled logits
    confidence: float
    ticks_used: int            # ticks spent in this run (not lifetime)
    reached_threshold: bool


@dataclass(frozen=True)
class ConsensusResult:
    sync_merged: np.ndarray
    confidence_merged: float
    contributors: tuple        # sorted branch ids; empty on the no-cache fallback
    fallback: bool


@dataclass(frozen=True)
class DecisionDeadline:
    """Deadline in logical ticks (deterministic mode) and/or wall-clock ms."""

    logical_tick_limit: Optional[int] = None
    wall_clock_ms: Optional[float] = None

    def __post_init__(self):
        if self.logical_tick_limit is None and self.wall_clock_ms is None:
            raise ValueError("a deadline needs at least one limit")


def default_deadline(params: CtmParams) -> DecisionDeadline:
    """Default logical window: 4 slabs' worth of ticks after the first halt."""
    return DecisionDeadline(logical_tick_limit=4 * params.ticks_per_slab, wall_clock_ms=250.0)


def perturb_for_branch(params: CtmParams, episode_seed: int, branch_id: int) -> CtmParams:
    """Branch-specific params: synchrony pairs reshuffled by the branch stream.

    Accumulator k of branch b tracks pair perm_b[k]; the certainty head and
    everything downstream read the reshuffled vector, so branches genuinely
    diverge while staying reproducible.
    """
    stream = SplitMix64(derive_seed(episode_seed, f"branch/{branch_id}"))
    perm = stream.permutation(params.pair_count)
    return replace(params, pair_p=params.pair_p[perm], pair_q=params.pair_q[perm])


def run_branch(
    seed_state: BranchState,
    f: np.ndarray,
    params: CtmParams,
    epsilon: float,
    episode_seed: int,
    branch_id: int,
) -> tuple[BranchOutcome, BranchState]:
    """Run one clone to its halt decision; pure given its arguments."""
    branch_params = perturb_for_branch(params, episode_seed, branch_id)
    state, last = run_until_halt(seed_state.clone(), f, branch_params, epsilon)
    reached = last.certainty >= min(epsilon, params.halt_cap)
    outcome = BranchOutcome(
        branch_id=branch_id,
        sync=last.sync,
        logits=last.logits,
        confidence=last.certainty,
        ticks_used=state.tick - seed_state.tick,
        reached_threshold=reached,
    )
    return outcome, state


def spawn_branches_with_states(
    seed_state: BranchState,
    f: np.ndarray,
    k: int,
    params: CtmParams,
    epsilon: float,
    episode_seed: int,
    branch_hook: Optional[Callable[[int], None]] = None,
) -> list[tuple[BranchOutcome, BranchState]]:
    """Run k clones on worker threads; failed branches are logged and dropped.

    Returns (outcome, final state) pairs in completion order.  ``branch_hook``
    runs at the start of each worker (tests inject delays or faults there).
    """
    if k < 1:
        raise ValueError("need at least one branch")
    results: queue.SimpleQueue = queue.SimpleQueue()

    def worker(branch_id: int) -> None:
        if branch_hook is not None:
            branch_hook(branch_id)
        results.put(run_branch(seed_state, f, params, epsilon, episode_seed, branch_id))

    collected: list[tuple[BranchOutcome, BranchState]] = []
    with ThreadPoolExecutor(max_workers=k) as pool:
        futures = {pool.submit(worker, i): i for i in range(k)}
        for future, branch_id in futures.items():
            exc = future.exception()
            if exc is not None:
                logger.warning("%s", BranchPanic(branch_id, exc))
    while True:
        try:
            collected.append(results.get_nowait())
        except queue.Empty:
            break
    return collected


def spawn_branches(
    seed_state: BranchState,
    f: np.ndarray,
    k: int,
    params: CtmParams,
    epsilon: float,
    episode_seed: int,
    branch_hook: Optional[Callable[[int], None]] = None,
) -> list[BranchOutcome]:
    """Outcomes of k concurrent clones, in completion order."""
    return [
        outcome
        for outcome, _ in spawn_branches_with_states(
            seed_state, f, k, params, epsilon, episode_seed, branch_hook
        )
    ]


def merge(outcomes: list[BranchOutcome], params: CtmParams) -> ConsensusResult:
    """Confidence-weighted merge: S = sum(c_i s_i) / sum(c_i).

    Outcomes are sorted by branch id before any summation, so the result is
    bitwise independent of arrival order.  If every confidence is below
    1e-9 the weights fall back to the unweighted mean (avoids 0/0).  The
    merged confidence is re-read from the merged vector by the certainty
    head.
    """
    if not outcomes:
        raise EmptyOutcomeList("merge needs at least one outcome")
    if len({o.sync.shape[0] for o in outcomes}) > 1:
        raise ValueError("outcomes disagree on sync width")
    if len({o.logits.shape[0] for o in outcomes}) > 1:
        raise ValueError("outcomes disagree on logit width")
    ordered = sorted(outcomes, key=lambda o: o.branch_id)
    conf = np.array([o.confidence for o in ordered], dtype=np.float64)
    if np.all(conf < ZERO_CONFIDENCE):
        weights = np.full(len(ordered), 1.0 / len(ordered))
    else:
        weights = conf / np.sum(conf)
    stack = np.stack([o.sync for o in ordered]).astype(np.float64)
    merged = np.sum(weights[:, None] * stack, axis=0).astype(np.float32)
    _, conf_merged = certainty(merged, params.certainty_w, params)
    return ConsensusResult(
        sync_merged=merged,
        confidence_merged=conf_merged,
        contributors=tuple(o.branch_id for o in ordered),
        fallback=False,
    )


def wait_extra_slab(
    first: BranchOutcome,
    later: list[BranchOutcome],
    policy: WaitPolicy,
    deadline_tick: Optional[int] = None,
) -> list[BranchOutcome]:
    """Merge set after the first branch passes the threshold.

    ``later`` holds the completions after ``first`` in completion order.
    Policy OFF keeps only the winner; ONE admits the next completion inside
    the remaining deadline (measured in the same logical ticks as
    ``ticks_used``); an expired or empty wait keeps only the winner.
    """
    if not first.reached_threshold:
        raise ValueError("wait_extra_slab requires a threshold-reaching winner")
    if policy is WaitPolicy.OFF:
        return [first]
    for outcome in later:
        if deadline_tick is None or outcome.ticks_used <= deadline_tick:
            return [first, outcome]
    return [first]


def timeout_safe_pass(
    cache: Optional[ConsensusResult], pair_count: int
) -> ConsensusResult:
    """Total fallback: cached consensus, or the zero no-op result.

    The zero result (silent sync vector, confidence 0) routes to the noop
    tool downstream; either way fallback=True.
    """
    if cache is not None:
        return replace(cache, fallback=True)
    return ConsensusResult(
        sync_merged=np.zeros(pair_count, dtype=np.float32),
        confidence_merged=0.0,
        contributors=(),
        fallback=True,
    )


class DecisionLatch:
    """Once-only gate: exactly one of the normal/timeout paths may fire."""

    def __init__(self):
        self._lock = threading.Lock()
        self.fired = 0

    def fire(self) -> bool:
        with self._lock:
            if self.fired:
                return False
            self.fired = 1
            return True


@dataclass(frozen=True)
class StepDecision:
    """One decision step's consensus plus the state that seeds the next round."""

    result: ConsensusResult
    next_seed: Optional[BranchState]   # None if every branch failed
    slab_count: int
    ticks: int


def decide_step(
    seed_state: BranchState,
    f: np.ndarray,
    params: CtmParams,
    epsilon: float,
    k: int,
    episode_seed: int,
    cache: Optional[ConsensusResult],
    wait_policy: WaitPolicy = WaitPolicy.OFF,
    deadline: Optional[DecisionDeadline] = None,
    branch_hook: Optional[Callable[[int], None]] = None,
    threaded: bool = True,
) -> StepDecision:
    """Deterministic decision step: race k branches on logical ticks.

    All branches run to their halt decision (losers run to budget).
    Completion order is canonicalized as (ticks_used, branch_id); the
    deadline window opens at the earliest completion.  The winner's final
    state seeds the next round, with its accumulators overwritten by the
    merged vector on the normal path.

    ``threaded=False`` runs the same pure per-branch function in-line;
    branch content is identical either way (that equality is under test),
    it just skips worker overhead where logical time makes real
    concurrency unobservable.
    """
    deadline = deadline or default_deadline(params)
    if threaded:
        pairs = spawn_branches_with_states(
            seed_state, f, k, params, epsilon, episode_seed, branch_hook
        )
    else:
        pairs = []
        for i in range(k):
            try:
                if branch_hook is not None:
                    branch_hook(i)
                pairs.append(run_branch(seed_state, f, params, epsilon, episode_seed, i))
            except Exception as exc:
                logger.warning("%s", BranchPanic(i, exc))
    pairs.sort(key=lambda ps: (ps[0].ticks_used, ps[0].branch_id))
    if not pairs:
        result = timeout_safe_pass(cache, params.pair_count)
        return StepDecision(result, None, seed_state.slab, seed_state.tick)

    limit = deadline.logical_tick_limit
    cutoff = None if limit is None else pairs[0][0].ticks_used + limit
    in_time = [
        ps for ps in pairs if cutoff is None or ps[0].ticks_used <= cutoff
    ]
    winners = [ps for ps in in_time if ps[0].reached_threshold]

    if winners:
        first_outcome, first_state = winners[0]
        position = next(i for i, ps in enumerate(in_time) if ps is winners[0])
        later = [o for o, _ in in_time[position + 1 :]]
        merge_set = wait_extra_slab(first_outcome, later, wait_policy, cutoff)
        result = merge(merge_set, params)
        next_seed = replace(first_state, sync=result.sync_merged.copy())
    else:
        result = timeout_safe_pass(cache, params.pair_count)
        _, next_seed = pairs[0]

    return StepDecision(result, next_seed, next_seed.slab, next_seed.tick)


def decide_step_live(
    seed_state: BranchState,
    f: np.ndarray,
    params: CtmParams,
    epsilon: float,
    k: int,
    episode_seed: int,
    cache: Optional[ConsensusResult],
    deadline: DecisionDeadline,
    wait_policy: WaitPolicy = WaitPolicy.OFF,
    branch_hook: Optional[Callable[[int], None]] = None,
    latch: Optional[DecisionLatch] = None,
) -> StepDecision:
    """Wall-clock decision step for live mode.

    A single collector consumes completions from the worker queue; the
    first threshold-reaching completion inside the deadline wins.  When the
    deadline expires first, the timeout path fires instead.  The two paths
    are mutually exclusive through the latch, so exactly one consensus
    result is emitted no matter how completions interleave with expiry.
    """
    if deadline.wall_clock_ms is None:
        raise ValueError("live mode needs a wall-clock deadline")
    latch = latch or DecisionLatch()
    results: queue.SimpleQueue = queue.SimpleQueue()

    def worker(branch_id: int) -> None:
        if branch_hook is not None:
            branch_hook(branch_id)
        results.put(run_branch(seed_state, f, params, epsilon, episode_seed, branch_id))

    start = time.monotonic()
    budget_s = deadline.wall_clock_ms / 1000.0
    collected: list[tuple[BranchOutcome, BranchState]] = []
    winner: Optional[tuple[BranchOutcome, BranchState]] = None

    pool = ThreadPoolExecutor(max_workers=k)
    try:
        futures = [pool.submit(worker, i) for i in range(k)]
        while len(collected) < k:
            remaining = budget_s - (time.monotonic() - start)
            if remaining <= 0:
                break
            try:
                item = results.get(timeout=remaining)
            except queue.Empty:
                break
            collected.append(item)
            if item[0].reached_threshold:
                winner = item
                break

        if winner is not None and latch.fire():
            merge_set = [winner[0]]
            if wait_policy is WaitPolicy.ONE:
                remaining = budget_s - (time.monotonic() - start)
                if remaining > 0:
                    try:
                        extra = results.get(timeout=remaining)
                        collected.append(extra)
                        merge_set.append(extra[0])
                    except queue.Empty:
                        pass
            result = merge(merge_set, params)
            next_seed = replace(winner[1], sync=result.sync_merged.copy())
            return StepDecision(result, next_seed, next_seed.slab, next_seed.tick)

        if latch.fire():
            result = timeout_safe_pass(cache, params.pair_count)
            if collected:
                collected.sort(key=lambda ps: (ps[0].ticks_used, ps[0].branch_id))
                next_seed = collected[0][1]
                return StepDecision(result, next_seed, next_seed.slab, next_seed.tick)
            return StepDecision(result, None, seed_state.slab, seed_state.tick)

        raise RuntimeError("decision latch fired twice")  # pragma: no cover
    finally:
        pool.shutdown(wait=True)
