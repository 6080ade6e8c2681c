"""CTC prefix beam search.

Searches over collapsed prefixes, keeping separate blank-ending and
nonblank-ending probability mass per prefix so that alignments merging into
the same prefix are summed, not max-reduced.  With a beam wide enough to
hold every reachable prefix the returned score of a hypothesis equals its
full CTC posterior.

The per-frame extension step is vectorized: one (beam x vocab) score matrix
per frame, then a partition-based top-k with an exact lexicographic
tie-break on token sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HanjointError
from .lattice_io import BLANK_INDEX, EmissionLattice, Vocabulary

NEG_INF = -np.inf


@dataclass(frozen=True)
class BeamConfig:
    """beam_width live prefixes; up to max_output returned (defaults to
    beam_width).  token_cutoff, when set, restricts extensions at each frame
    to the N most probable tokens (off by default)."""

    beam_width: int = 100
    max_output: int | None = None
    token_cutoff: int | None = None

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_output is not None and not 1 <= self.max_output <= self.beam_width:
            raise ValueError("max_output must lie in [1, beam_width]")
        if self.token_cutoff is not None and self.token_cutoff < 1:
            raise ValueError("token_cutoff must be >= 1")

    @property
    def effective_max_output(self) -> int:
        return self.max_output if self.max_output is not None else self.beam_width


@dataclass(frozen=True)
class Hypothesis:
    """A collapsed token sequence with its accumulated CTC log-probability."""

    tokens: tuple[int, ...]
    log_prob: float
    level: str | None = None


def prefix_beam_search(
    lattice: EmissionLattice,
    vocab: Vocabulary,
    config: BeamConfig = BeamConfig(),
    level: str | None = None,
) -> list[Hypothesis]:
    """Top hypotheses of a normalized lattice, best first.

    Ranking and pruning use total prefix mass with ties broken by
    lexicographic token order, so results are deterministic.
    """
    if not lattice.normalized:
        raise HanjointError("lattice must be normalized (log-probabilities)")
    if lattice.vocab_size != vocab.size:
        raise HanjointError(
            f"lattice vocab size {lattice.vocab_size} != vocabulary size {vocab.size}"
        )
    if lattice.frames == 0:
        return [Hypothesis((), 0.0, level)]

    width = config.beam_width
    V = lattice.vocab_size

    prefixes: list[tuple[int, ...]] = [()]
    slot = {(): 0}
    pb = np.array([0.0])
    pnb = np.array([NEG_INF])

    for lp in lattice.scores:
        n = len(prefixes)
        total = np.logaddexp(pb, pnb)

        last = np.fromiter(
            (p[-1] if p else -1 for p in prefixes), dtype=np.int64, count=n
        )
        has_last = last >= 0

        kept_pb = total + lp[BLANK_INDEX]
        kept_pnb = np.where(has_last, pnb + lp[np.where(has_last, last, 0)], NEG_INF)

        # extension scores: prefix i extended by token c
        ext = total[:, None] + lp[None, :]
        rows = np.nonzero(has_last)[0]
        ext[rows, last[rows]] = pb[rows] + lp[last[rows]]
        ext[:, BLANK_INDEX] = NEG_INF
        if config.token_cutoff is not None and config.token_cutoff < V - 1:
            order = np.argsort(-lp, kind="stable")
            keep = order[order != BLANK_INDEX][: config.token_cutoff]
            mask = np.ones(V, dtype=bool)
            mask[keep] = False
            ext[:, mask] = NEG_INF

        # an extension recreating a live prefix merges into it
        for j in rows:
            parent = slot.get(prefixes[j][:-1])
            if parent is not None:
                kept_pnb[j] = np.logaddexp(kept_pnb[j], ext[parent, last[j]])
                ext[parent, last[j]] = NEG_INF

        kept_total = np.logaddexp(kept_pb, kept_pnb)
        scores = np.concatenate([kept_total, ext.ravel()])

        def candidate_key(c: int) -> tuple[int, ...]:
            if c < n:
                return prefixes[c]
            i, tok = divmod(int(c) - n, V)
            return prefixes[i] + (tok,)

        if scores.size > width:
            cutoff = np.partition(scores, scores.size - width)[scores.size - width]
            chosen = np.nonzero(scores > cutoff)[0]
            need = width - chosen.size
            if need > 0 and cutoff > NEG_INF:
                tied = np.nonzero(scores == cutoff)[0]
                tied = sorted(tied, key=candidate_key)
                chosen = np.concatenate([chosen, np.asarray(tied[:need], dtype=np.int64)])
        else:
            chosen = np.nonzero(scores > NEG_INF)[0]

        new_prefixes: list[tuple[int, ...]] = []
        new_pb = np.empty(chosen.size)
        new_pnb = np.empty(chosen.size)
        for k, c in enumerate(chosen):
            if c < n:
                new_prefixes.append(prefixes[c])
                new_pb[k] = kept_pb[c]
                new_pnb[k] = kept_pnb[c]
            else:
                i, tok = divmod(int(c) - n, V)
                new_prefixes.append(prefixes[i] + (tok,))
                new_pb[k] = NEG_INF
                new_pnb[k] = ext[i, tok]
        prefixes = new_prefixes
        slot = {p: k for k, p in enumerate(prefixes)}
        pb, pnb = new_pb, new_pnb

        if not prefixes:  # unreachable with finite lattices
            raise HanjointError("beam search retained no candidates")

    total = np.logaddexp(pb, pnb)
    order = sorted(range(len(prefixes)), key=lambda i: (-total[i], prefixes[i]))
    return [
        Hypothesis(prefixes[i], float(total[i]), level)
        for i in order[: config.effective_max_output]
    ]
