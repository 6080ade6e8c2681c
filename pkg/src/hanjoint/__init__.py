"""Joint grapheme/syllable CTC decoding for Korean ASR.

Library surface: Hangul jamo conversion, emission-lattice I/O, CTC
scoring/loss/gradients, prefix beam search, joint two-level decoding with
OOV recovery, CER/WER/sWER metrics, and the synthetic oracles everything
is validated against.  The ``hanjoint`` command wires these into batch
workflows.
"""

from ._kernels import backend as kernel_backend
from .beam import BeamConfig, Hypothesis, prefix_beam_search
from .ctc import (
    LossResult,
    MultiTaskLossConfig,
    ctc_log_prob,
    ctc_loss_and_grad,
    greedy_decode,
    label_feasible,
    multitask_loss,
)
from .hangul import compose_jamo, decompose_syllable, decompose_text
from .joint import (
    JointConfig,
    JointDecodeResult,
    ScoredCandidate,
    beam_decode_texts,
    joint_decode,
    rescore_candidate,
)
from .lattice_io import (
    EmissionLattice,
    Utterance,
    Vocabulary,
    load_lattice,
    load_vocab,
    normalize,
    save_lattice,
    text_to_tokens,
    tokens_to_text,
)
from .metrics import EditSummary, EvalReport, cer, levenshtein, space_normalize, swer, wer
from .synth import SynthSpec, brute_force_best, brute_force_ctc, gen_lattice, gen_oov_corpus

__version__ = "0.1.0"

__all__ = [
    "BeamConfig",
    "EditSummary",
    "EmissionLattice",
    "EvalReport",
    "Hypothesis",
    "JointConfig",
    "JointDecodeResult",
    "LossResult",
    "MultiTaskLossConfig",
    "ScoredCandidate",
    "SynthSpec",
    "Utterance",
    "Vocabulary",
    "beam_decode_texts",
    "brute_force_best",
    "brute_force_ctc",
    "cer",
    "compose_jamo",
    "ctc_log_prob",
    "ctc_loss_and_grad",
    "decompose_syllable",
    "decompose_text",
    "gen_lattice",
    "gen_oov_corpus",
    "greedy_decode",
    "joint_decode",
    "kernel_backend",
    "label_feasible",
    "levenshtein",
    "load_lattice",
    "load_vocab",
    "multitask_loss",
    "normalize",
    "prefix_beam_search",
    "rescore_candidate",
    "save_lattice",
    "space_normalize",
    "swer",
    "text_to_tokens",
    "tokens_to_text",
    "wer",
    "__version__",
]
