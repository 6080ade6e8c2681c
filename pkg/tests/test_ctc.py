import math

import numpy as np
import pytest

from hanjoint.ctc import (
    MultiTaskLossConfig,
    collapse,
    ctc_log_prob,
    ctc_loss_and_grad,
    greedy_decode,
    label_feasible,
    multitask_loss,
)
from hanjoint.errors import BlankInLabel, HanjointError, InfeasibleLabel, OutOfVocabulary
from hanjoint.lattice_io import EmissionLattice, Vocabulary, normalize
from hanjoint.synth import brute_force_all, brute_force_ctc, random_lattice

AB_VOCAB = Vocabulary(("<ctc_blank>", "|", "a", "b"))


def uniform_lattice(frames, vocab_size):
    return EmissionLattice(np.full((frames, vocab_size), math.log(1.0 / vocab_size)), normalized=True)


def test_uniform_two_frames():
    # alignments for [a] in 2 frames: aa, a-, -a -> 3/4
    lattice = uniform_lattice(2, 2)
    vocab_ab = EmissionLattice(lattice.scores, normalized=True)
    assert ctc_log_prob(vocab_ab, [1]) == pytest.approx(math.log(0.75), abs=1e-12)


def test_single_frame():
    lattice = EmissionLattice(np.log(np.array([[0.1, 0.9]])), normalized=True)
    assert ctc_log_prob(lattice, [1]) == pytest.approx(math.log(0.9), abs=1e-12)


def test_infeasible_repeat():
    lattice = uniform_lattice(1, 2)
    assert not label_feasible([1, 1], 1)
    assert ctc_log_prob(lattice, [1, 1]) == -math.inf
    # feasible with a blank frame between the repeats
    assert label_feasible([1, 1], 3)


def test_blank_in_label_rejected():
    with pytest.raises(BlankInLabel):
        ctc_log_prob(uniform_lattice(2, 2), [0])


def test_requires_normalized():
    with pytest.raises(HanjointError):
        ctc_log_prob(EmissionLattice(np.zeros((2, 2))), [1])


def test_empty_label_and_empty_lattice():
    lattice = EmissionLattice(np.log(np.array([[0.7, 0.3]])), normalized=True)
    assert ctc_log_prob(lattice, []) == pytest.approx(math.log(0.7))
    empty = EmissionLattice(np.zeros((0, 2)), normalized=True)
    assert ctc_log_prob(empty, []) == 0.0
    assert ctc_log_prob(empty, [1]) == -math.inf


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(23)
    for _ in range(100):
        F = int(rng.integers(1, 7))
        V = int(rng.integers(2, 5))
        lattice = random_lattice(rng, F, V)
        L = int(rng.integers(0, 4))
        label = [int(rng.integers(1, V)) for _ in range(L)]
        expected = brute_force_ctc(lattice, label)
        got = ctc_log_prob(lattice, label)
        if expected == -math.inf:
            assert got == -math.inf
        else:
            assert got == pytest.approx(expected, abs=1e-9)


def test_total_mass_is_one():
    rng = np.random.default_rng(3)
    for _ in range(10):
        lattice = random_lattice(rng, int(rng.integers(1, 6)), int(rng.integers(2, 5)))
        masses = brute_force_all(lattice)
        assert sum(math.exp(lp) for lp in masses.values()) == pytest.approx(1.0, abs=1e-9)
        # the DP agrees label by label, so its exp-sum is also 1
        total = sum(math.exp(ctc_log_prob(lattice, list(label))) for label in masses)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_more_frames_never_lose_feasibility():
    rng = np.random.default_rng(9)
    for _ in range(50):
        F = int(rng.integers(1, 6))
        lattice = random_lattice(rng, F, 3)
        extended = EmissionLattice(
            np.vstack([lattice.scores, random_lattice(rng, 2, 3).scores]), normalized=True
        )
        for label in ([1], [1, 2], [2, 2], [1, 1, 2]):
            if ctc_log_prob(lattice, label) > -math.inf:
                assert ctc_log_prob(extended, label) > -math.inf


# ---- gradients ----


def fd_gradient(logits: np.ndarray, label, eps=1e-4):
    grad = np.zeros_like(logits)
    for t in range(logits.shape[0]):
        for k in range(logits.shape[1]):
            plus, minus = logits.copy(), logits.copy()
            plus[t, k] += eps
            minus[t, k] -= eps
            hi = ctc_log_prob(normalize(EmissionLattice(plus)), label)
            lo = ctc_log_prob(normalize(EmissionLattice(minus)), label)
            grad[t, k] = (hi - lo) / (2 * eps)
    return grad


def relative_error(a, b):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-3)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(41)
    for _ in range(25):
        F = int(rng.integers(1, 7))
        V = int(rng.integers(2, 5))
        logits = rng.normal(size=(F, V))
        label = [int(rng.integers(1, V)) for _ in range(int(rng.integers(0, 4)))]
        if not label_feasible(label, F):
            continue
        result = ctc_loss_and_grad(EmissionLattice(logits), label)
        assert relative_error(result.grad, fd_gradient(logits, label)).max() <= 1e-3


def test_gradient_closed_form_single_frame():
    logits = np.array([[0.3, 1.1, -0.4]])
    result = ctc_loss_and_grad(EmissionLattice(logits), [1])
    probs = np.exp(normalize(EmissionLattice(logits)).scores[0])
    assert result.grad[0, 1] == pytest.approx(1.0 - probs[1], abs=1e-12)
    assert result.grad[0, 0] == pytest.approx(-probs[0], abs=1e-12)
    assert result.grad[0, 2] == pytest.approx(-probs[2], abs=1e-12)


def test_gradient_symmetric_frames():
    # uniform rows and a palindromic label are invariant under time
    # reversal, so frames t and F-1-t carry identical gradients
    for frames, label in ((3, [2]), (4, [1]), (5, [1, 2, 1])):
        result = ctc_loss_and_grad(EmissionLattice(np.zeros((frames, 3))), label)
        np.testing.assert_allclose(result.grad, result.grad[::-1], atol=1e-12)


def test_gradient_infeasible_flag():
    result = ctc_loss_and_grad(EmissionLattice(np.zeros((1, 3))), [1, 1])
    assert result.infeasible
    assert result.log_prob == -math.inf
    assert result.grad is None


# ---- multi-task loss ----

SYLL_VOCAB = Vocabulary(("<ctc_blank>", "|", "가", "나"))
GRAP_VOCAB = Vocabulary(("<ctc_blank>", "|", "ㄱ", "ㄴ", "ㅏ"))


def make_loss_inputs(rng):
    return (
        EmissionLattice(rng.normal(size=(6, SYLL_VOCAB.size))),
        EmissionLattice(rng.normal(size=(8, GRAP_VOCAB.size))),
    )


def test_multitask_endpoints_and_mean():
    rng = np.random.default_rng(8)
    syll, grap = make_loss_inputs(rng)
    text = "가 나"
    at_one = multitask_loss(syll, grap, text, SYLL_VOCAB, GRAP_VOCAB, MultiTaskLossConfig(1.0))
    assert at_one.total == at_one.syllable_log_prob
    at_zero = multitask_loss(syll, grap, text, SYLL_VOCAB, GRAP_VOCAB, MultiTaskLossConfig(0.0))
    assert at_zero.total == at_zero.grapheme_log_prob
    mid = multitask_loss(syll, grap, text, SYLL_VOCAB, GRAP_VOCAB, MultiTaskLossConfig(0.5))
    assert mid.total == pytest.approx(
        (mid.syllable_log_prob + mid.grapheme_log_prob) / 2, abs=1e-12
    )
    assert mid.syllable_log_prob <= 0 and mid.grapheme_log_prob <= 0


def test_multitask_gradients():
    rng = np.random.default_rng(12)
    syll, grap = make_loss_inputs(rng)
    result = multitask_loss(syll, grap, "가", SYLL_VOCAB, GRAP_VOCAB, MultiTaskLossConfig(0.25), with_grad=True)
    syll_head = ctc_loss_and_grad(syll, [2])
    np.testing.assert_allclose(result.gradients[0], 0.25 * syll_head.grad, atol=1e-12)


def test_multitask_oov_names_head():
    rng = np.random.default_rng(13)
    syll, grap = make_loss_inputs(rng)
    with pytest.raises(OutOfVocabulary) as info:
        multitask_loss(syll, grap, "다", SYLL_VOCAB, GRAP_VOCAB)
    assert info.value.head == "syllable"
    # "나나" decomposes fine but needs a grapheme the vocab lacks? use latin char
    with pytest.raises(OutOfVocabulary) as info:
        multitask_loss(syll, grap, "가X", Vocabulary(("<ctc_blank>", "|", "가", "X")), GRAP_VOCAB)
    assert info.value.head == "grapheme"


def test_multitask_infeasible_names_head():
    rng = np.random.default_rng(14)
    _, grap = make_loss_inputs(rng)
    tiny = EmissionLattice(rng.normal(size=(1, SYLL_VOCAB.size)))
    with pytest.raises(InfeasibleLabel) as info:
        multitask_loss(tiny, grap, "가 나", SYLL_VOCAB, GRAP_VOCAB)
    assert info.value.head == "syllable"
    assert multitask_loss(tiny, grap, "가", SYLL_VOCAB, GRAP_VOCAB).total <= 0


def test_lambda_validation():
    with pytest.raises(ValueError):
        MultiTaskLossConfig(1.5)


# ---- greedy decoding ----


def peaked(rows, vocab_size):
    scores = np.full((len(rows), vocab_size), 0.05 / (vocab_size - 1))
    for t, tok in enumerate(rows):
        scores[t] = 0.05 / (vocab_size - 1)
        scores[t, tok] = 0.95
    return EmissionLattice(np.log(scores), normalized=True)


def test_collapse():
    assert collapse([0, 2, 2, 0, 3]) == [2, 3]
    assert collapse([0, 0, 0]) == []
    assert collapse([2, 0, 2]) == [2, 2]


def test_greedy_examples():
    assert greedy_decode(peaked([0, 2, 2, 0, 3], 4), AB_VOCAB) == "ab"
    assert greedy_decode(peaked([0, 0, 0], 4), AB_VOCAB) == ""
    assert greedy_decode(peaked([2, 0, 2], 4), AB_VOCAB) == "aa"
    assert greedy_decode(peaked([2, 1, 3], 4), AB_VOCAB) == "a b"


def test_greedy_ties_take_lowest_index():
    lattice = uniform_lattice(2, 3)
    assert greedy_decode(lattice, Vocabulary(("<ctc_blank>", "|", "a"))) == ""


def test_greedy_invariant_under_row_rescaling():
    rng = np.random.default_rng(77)
    for _ in range(20):
        lattice = random_lattice(rng, 6, 4)
        rescaled = normalize(EmissionLattice(lattice.scores * 2.5 + 1.0))
        assert greedy_decode(lattice, AB_VOCAB) == greedy_decode(rescaled, AB_VOCAB)
