"""Joint decoding over syllable and grapheme beam candidates.

Both beams are searched independently, grapheme hypotheses are composed
into syllable text (non-composable ones are dropped and counted), the union
is deduplicated by text, and every candidate is rescored with a full CTC
forward pass on each lattice.  The joint score mixes the two posteriors in
the probability domain:

    score(Y) = log( gamma * p_syll(Y) + (1 - gamma) * p_grap(Y) )

A candidate that is out-of-vocabulary at one level simply contributes zero
probability at that level, which is what lets grapheme candidates recover
syllables missing from the syllable vocabulary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .beam import BeamConfig, Hypothesis, prefix_beam_search
from .ctc import ctc_log_prob
from .errors import BothBeamsEmpty, OutOfVocabulary
from .hangul import try_compose
from .lattice_io import EmissionLattice, Vocabulary, text_to_tokens, tokens_to_text, tokens_to_units

NEG_INF = -math.inf


@dataclass(frozen=True)
class JointConfig:
    gamma: float = 0.5
    beam: BeamConfig = field(default_factory=BeamConfig)

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class ScoredCandidate:
    """One rescored candidate.  A per-head log-probability is None when the
    candidate cannot be tokenized at that level."""

    text: str
    syll_log_prob: float | None
    grap_log_prob: float | None
    joint_score: float
    provenance: frozenset[str] = frozenset()


@dataclass
class JointDecodeResult:
    candidates: list[ScoredCandidate]
    dropped_non_composable: int = 0

    @property
    def best(self) -> ScoredCandidate:
        return self.candidates[0]


def _head_log_prob(text: str, lattice: EmissionLattice, vocab: Vocabulary, level: str) -> float | None:
    try:
        tokens = text_to_tokens(text, vocab, level)
    except OutOfVocabulary:
        return None
    return ctc_log_prob(lattice, tokens)


def combine_heads(syll_log_prob: float | None, grap_log_prob: float | None, gamma: float) -> float:
    """Weighted log-sum-exp of the present heads; absent heads contribute
    zero probability, as does a head whose weight is exactly zero."""
    score = NEG_INF
    if syll_log_prob is not None and gamma > 0.0:
        score = math.log(gamma) + syll_log_prob
    if grap_log_prob is not None and gamma < 1.0:
        term = math.log1p(-gamma) + grap_log_prob
        if score == NEG_INF:
            score = term
        elif term != NEG_INF:
            hi, lo = (score, term) if score >= term else (term, score)
            score = hi + math.log1p(math.exp(lo - hi))
    return score


def rescore_candidate(
    text: str,
    syll_lattice: EmissionLattice,
    grap_lattice: EmissionLattice,
    syll_vocab: Vocabulary,
    grap_vocab: Vocabulary,
    gamma: float,
    provenance: frozenset[str] = frozenset(),
) -> ScoredCandidate:
    """Score one text against both lattices, independent of any beam."""
    syll_lp = _head_log_prob(text, syll_lattice, syll_vocab, "syllable")
    grap_lp = _head_log_prob(text, grap_lattice, grap_vocab, "grapheme")
    return ScoredCandidate(text, syll_lp, grap_lp, combine_heads(syll_lp, grap_lp, gamma), provenance)


def compose_hypothesis(hyp: Hypothesis, grap_vocab: Vocabulary) -> str | None:
    """Syllable text of a grapheme hypothesis, or None if not composable."""
    return try_compose(tokens_to_units(list(hyp.tokens), grap_vocab))


def joint_decode(
    syll_lattice: EmissionLattice,
    grap_lattice: EmissionLattice,
    syll_vocab: Vocabulary,
    grap_vocab: Vocabulary,
    config: JointConfig = JointConfig(),
) -> JointDecodeResult:
    """Rescored union of the two beams, best candidate first.

    Ties in joint score break lexicographically on text, so the ranking is
    deterministic.
    """
    syll_hyps = prefix_beam_search(syll_lattice, syll_vocab, config.beam, level="syllable")
    grap_hyps = prefix_beam_search(grap_lattice, grap_vocab, config.beam, level="grapheme")

    provenance: dict[str, set[str]] = {}
    dropped = 0
    for hyp in syll_hyps:
        text = tokens_to_text(list(hyp.tokens), syll_vocab, "syllable")
        provenance.setdefault(text, set()).add("syllable_beam")
    for hyp in grap_hyps:
        text = compose_hypothesis(hyp, grap_vocab)
        if text is None:
            dropped += 1
            continue
        provenance.setdefault(text, set()).add("grapheme_beam")

    if not provenance:
        raise BothBeamsEmpty("no candidate survived either beam")

    candidates = [
        rescore_candidate(
            text, syll_lattice, grap_lattice, syll_vocab, grap_vocab,
            config.gamma, frozenset(sources),
        )
        for text, sources in provenance.items()
    ]
    candidates.sort(key=lambda c: (-c.joint_score, c.text))
    return JointDecodeResult(candidates, dropped)


def beam_decode_texts(
    lattice: EmissionLattice,
    vocab: Vocabulary,
    level: str,
    config: BeamConfig = BeamConfig(),
) -> list[tuple[str, float]]:
    """Single-level beam decoding as (text, log_prob) pairs, best first.
    Grapheme hypotheses are composed; non-composable ones are skipped."""
    out: list[tuple[str, float]] = []
    for hyp in prefix_beam_search(lattice, vocab, config, level=level):
        if level == "grapheme":
            text = compose_hypothesis(hyp, vocab)
            if text is None:
                continue
        else:
            text = tokens_to_text(list(hyp.tokens), vocab, "syllable")
        out.append((text, hyp.log_prob))
    return out
