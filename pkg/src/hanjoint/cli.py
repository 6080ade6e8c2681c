"""Command-line interface.

Subcommands: ``synth`` builds a synthetic corpus on disk, ``decode`` runs
greedy/beam/joint decoding over a corpus directory, ``eval`` scores
hypotheses against references, ``loss`` computes the multi-task loss,
``vocab-stats`` and ``oov-report`` reproduce the vocabulary/OOV accounting
tables, and ``selfcheck`` replays the oracle validation suites.

Machine output is line-delimited JSON with sorted keys; every file-producing
run also writes a ``<out>.manifest.json`` capturing the exact configuration,
and re-running a command with the same arguments reproduces the output
byte for byte.  Exit codes: 0 on success, 1 when any utterance failed,
2 on configuration or file-format errors.

A corpus directory contains ``syllable.vocab``, ``grapheme.vocab``,
``refs.tsv`` (id<TAB>text), and per-utterance ``<id>.syll.lat`` /
``<id>.grap.lat`` lattice files in either lattice format.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, hangul, selfcheck
from .beam import BeamConfig, prefix_beam_search
from .ctc import MultiTaskLossConfig, greedy_decode, multitask_loss
from .errors import HanjointError, InfeasibleLabel, OutOfVocabulary, UnmatchedId
from .joint import JointConfig, compose_hypothesis, joint_decode
from .lattice_io import (
    EmissionLattice,
    Vocabulary,
    load_lattice,
    normalize,
    save_lattice,
    tokens_to_text,
)
from .metrics import EvalReport, levenshtein
from .synth import SynthSpec, gen_oov_corpus

SYLLABLE_POOL = "가나다라마바사아자차카타파하간존물꿈별빛손길말글강산바람닭흙값몫앉"


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: list[str]
    version: str
    seed: int | None

    def write(self, out_path: Path) -> None:
        path = out_path.with_name(out_path.name + ".manifest.json")
        path.write_text(
            json.dumps(asdict(self), ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def _emit(lines: list[str], out: str | None, manifest: RunManifest | None = None) -> None:
    text = "".join(line + "\n" for line in lines)
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        if manifest is not None:
            manifest.write(path)


def _thread_count(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("HANJOINT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise HanjointError(f"HANJOINT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _read_refs(path: Path) -> dict[str, str]:
    refs: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        utt_id, _, text = line.partition("\t")
        refs[utt_id] = text
    return refs


def _read_hyps(path: Path) -> dict[str, str]:
    """TSV id<TAB>text, or decode JSONL (top-1 hypothesis per record)."""
    text = path.read_text(encoding="utf-8")
    hyps: dict[str, str] = {}
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("{"):
            record = json.loads(line)
            if "error" in record or "id" not in record:
                continue
            hypotheses = record.get("hypotheses", [])
            hyps[record["id"]] = hypotheses[0]["text"] if hypotheses else ""
        else:
            utt_id, _, hyp = line.partition("\t")
            hyps[utt_id] = hyp
    return hyps


@dataclass
class CorpusUtterance:
    id: str
    reference: str | None
    syll_path: Path | None
    grap_path: Path | None


def _scan_corpus(corpus: Path) -> tuple[Vocabulary | None, Vocabulary | None, list[CorpusUtterance]]:
    syll_vocab_path = corpus / "syllable.vocab"
    grap_vocab_path = corpus / "grapheme.vocab"
    syll_vocab = Vocabulary.load(syll_vocab_path) if syll_vocab_path.exists() else None
    grap_vocab = Vocabulary.load(grap_vocab_path) if grap_vocab_path.exists() else None

    refs_path = corpus / "refs.tsv"
    refs = _read_refs(refs_path) if refs_path.exists() else {}

    ids: dict[str, None] = dict.fromkeys(refs)
    for path in sorted(corpus.glob("*.syll.lat")) + sorted(corpus.glob("*.grap.lat")):
        ids.setdefault(path.name.split(".")[0], None)

    utterances = []
    for utt_id in ids:
        syll_path = corpus / f"{utt_id}.syll.lat"
        grap_path = corpus / f"{utt_id}.grap.lat"
        utterances.append(
            CorpusUtterance(
                utt_id,
                refs.get(utt_id),
                syll_path if syll_path.exists() else None,
                grap_path if grap_path.exists() else None,
            )
        )
    return syll_vocab, grap_vocab, utterances


def _load_normalized(path: Path, format: str = "auto") -> EmissionLattice:
    lattice = load_lattice(path, format)
    return lattice if lattice.normalized else normalize(lattice)


# ---------------------------------------------------------------------------
# decode
# ---------------------------------------------------------------------------

def _decode_one(utt, mode, level, syll_vocab, grap_vocab, beam_cfg, gamma, top_k, format="auto"):
    try:
        if mode == "joint":
            if utt.syll_path is None or utt.grap_path is None:
                raise HanjointError("joint decoding needs both syllable and grapheme lattices")
            result = joint_decode(
                _load_normalized(utt.syll_path, format),
                _load_normalized(utt.grap_path, format),
                syll_vocab,
                grap_vocab,
                JointConfig(gamma=gamma, beam=beam_cfg),
            )
            hyps = [
                {
                    "text": c.text,
                    "joint_score": c.joint_score,
                    "syll_log_prob": c.syll_log_prob,
                    "grap_log_prob": c.grap_log_prob,
                    "provenance": sorted(c.provenance),
                }
                for c in result.candidates[:top_k]
            ]
            return {
                "id": utt.id,
                "mode": mode,
                "hypotheses": hyps,
                "dropped_non_composable": result.dropped_non_composable,
            }

        use_level = level or ("syllable" if utt.syll_path is not None else "grapheme")
        path = utt.syll_path if use_level == "syllable" else utt.grap_path
        vocab = syll_vocab if use_level == "syllable" else grap_vocab
        if path is None:
            raise HanjointError(f"no {use_level} lattice present")
        lattice = _load_normalized(path, format)

        if mode == "greedy":
            raw = greedy_decode(lattice, vocab)
            if use_level == "grapheme":
                composed = hangul.try_compose(list(raw))
                text = composed if composed is not None else raw
            else:
                text = raw
            hyps = [{"text": text, "level": use_level}]
        else:  # beam
            hyps = []
            for hyp in prefix_beam_search(lattice, vocab, beam_cfg, level=use_level):
                if use_level == "grapheme":
                    text = compose_hypothesis(hyp, vocab)
                    if text is None:
                        continue
                else:
                    text = tokens_to_text(list(hyp.tokens), vocab, "syllable")
                hyps.append({"text": text, "log_prob": hyp.log_prob, "level": use_level})
                if len(hyps) >= top_k:
                    break
        return {"id": utt.id, "mode": mode, "level": use_level, "hypotheses": hyps}
    except HanjointError as exc:
        return {"id": utt.id, "mode": mode, "error": str(exc)}


def cmd_decode(args) -> int:
    corpus = Path(args.corpus)
    syll_vocab, grap_vocab, utterances = _scan_corpus(corpus)
    if not utterances:
        raise HanjointError(f"no utterances found in {corpus}")
    if args.mode in ("joint",) and (syll_vocab is None or grap_vocab is None):
        raise HanjointError("joint decoding needs both vocabularies in the corpus")

    beam_cfg = BeamConfig(beam_width=args.beam, token_cutoff=args.token_cutoff)
    threads = _thread_count(args.threads)

    def work(utt):
        return _decode_one(
            utt, args.mode, args.level, syll_vocab, grap_vocab, beam_cfg,
            args.gamma, args.top_k, args.format,
        )

    if threads == 1:
        records = [work(u) for u in utterances]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, utterances))

    manifest = RunManifest(
        command="decode",
        config={
            "mode": args.mode,
            "level": args.level,
            "beam": args.beam,
            "gamma": args.gamma,
            "top_k": args.top_k,
            "token_cutoff": args.token_cutoff,
            "format": args.format,
        },
        inputs=[str(corpus)],
        version=__version__,
        seed=None,
    )
    _emit([_dump(r) for r in records], args.out, manifest)
    failed = sum(1 for r in records if "error" in r)
    if failed:
        print(f"{failed}/{len(records)} utterances failed", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    refs = _read_refs(Path(args.refs))
    hyps = _read_hyps(Path(args.hyps))
    for utt_id in refs:
        if utt_id not in hyps:
            raise UnmatchedId(utt_id)
    for utt_id in hyps:
        if utt_id not in refs:
            raise UnmatchedId(utt_id)

    report = EvalReport.from_pairs([(uid, refs[uid], hyps[uid]) for uid in refs])
    lines = []
    for u in report.utterances:
        lines.append(
            _dump(
                {
                    "id": u.id,
                    "cer": {"rate": u.cer.rate, "sub": u.cer.substitutions,
                            "ins": u.cer.insertions, "del": u.cer.deletions,
                            "ref_len": u.cer.reference_length},
                    "wer": {"rate": u.wer.rate, "sub": u.wer.substitutions,
                            "ins": u.wer.insertions, "del": u.wer.deletions,
                            "ref_len": u.wer.reference_length},
                    "swer": {"rate": u.swer.rate, "sub": u.swer.substitutions,
                             "ins": u.swer.insertions, "del": u.swer.deletions,
                             "ref_len": u.swer.reference_length},
                }
            )
        )
    lines.append(
        _dump(
            {
                "corpus": {
                    "cer": report.corpus_cer,
                    "wer": report.corpus_wer,
                    "swer": report.corpus_swer,
                    "utterances": len(report.utterances),
                }
            }
        )
    )
    manifest = RunManifest("eval", {}, [args.refs, args.hyps], __version__, None)
    _emit(lines, args.out, manifest)
    print(
        f"{'':12s} {'CER':>8s} {'WER':>8s} {'sWER':>8s}\n"
        f"{'corpus':12s} {100 * report.corpus_cer:7.3f}% {100 * report.corpus_wer:7.3f}% "
        f"{100 * report.corpus_swer:7.3f}%",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def cmd_loss(args) -> int:
    corpus = Path(args.corpus)
    syll_vocab, grap_vocab, utterances = _scan_corpus(corpus)
    if syll_vocab is None or grap_vocab is None:
        raise HanjointError("loss needs both vocabularies in the corpus")
    config = MultiTaskLossConfig(args.lam)

    records = []
    totals = []
    for utt in utterances:
        if utt.reference is None:
            records.append({"id": utt.id, "error": "no reference"})
            continue
        if utt.syll_path is None or utt.grap_path is None:
            records.append({"id": utt.id, "error": "needs both lattices"})
            continue
        try:
            result = multitask_loss(
                load_lattice(utt.syll_path, args.format),
                load_lattice(utt.grap_path, args.format),
                utt.reference,
                syll_vocab,
                grap_vocab,
                config,
            )
        except (OutOfVocabulary, InfeasibleLabel) as exc:
            records.append({"id": utt.id, "error": str(exc), "head": exc.head})
            continue
        totals.append(result.total)
        records.append(
            {
                "id": utt.id,
                "total": result.total,
                "syllable_log_prob": result.syllable_log_prob,
                "grapheme_log_prob": result.grapheme_log_prob,
            }
        )
    if totals:
        records.append({"corpus_mean_total": float(np.mean(totals)), "scored": len(totals)})

    manifest = RunManifest("loss", {"lambda": args.lam}, [str(corpus)], __version__, None)
    _emit([_dump(r) for r in records], args.out, manifest)
    failed = sum(1 for r in records if "error" in r)
    if failed:
        print(f"{failed} utterances failed", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# vocab-stats
# ---------------------------------------------------------------------------

def _read_corpus_texts(path: str) -> list[str]:
    return [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln]


def cmd_vocab_stats(args) -> int:
    train = _read_corpus_texts(args.train)
    eval_sets = {Path(p).name: _read_corpus_texts(p) for p in args.eval}
    levels = ("syllable", "grapheme") if args.level == "both" else (args.level,)

    train_syll = set(hangul.syllable_inventory(train))
    train_grap = set(hangul.grapheme_inventory(train))
    records = []
    for level in levels:
        train_units = train_syll if level == "syllable" else train_grap
        row = {"unit": level, "vocab_size": len(train_units), "oov": {}}
        for name, texts in eval_sets.items():
            inventory = (
                hangul.syllable_inventory(texts)
                if level == "syllable"
                else hangul.grapheme_inventory(texts)
            )
            oov = sorted(u for u in inventory if u not in train_units)
            entry = {"count": len(oov)}
            if level == "syllable":
                constructible = [
                    u
                    for u in oov
                    if hangul.is_syllable(u)
                    and all(j in train_grap for j in hangul.decompose_syllable(u))
                ]
                entry["constructible"] = len(constructible)
                entry["unconstructible"] = len(oov) - len(constructible)
            row["oov"][name] = entry
        records.append(row)

    manifest = RunManifest(
        "vocab-stats", {"level": args.level}, [args.train, *args.eval], __version__, None
    )
    _emit([_dump(r) for r in records], args.out, manifest)

    names = list(eval_sets)
    header = f"{'unit':10s} {'#vocab':>8s}" + "".join(f" {('#OOV ' + n)[:18]:>18s}" for n in names)
    table = [header]
    for row in records:
        cells = "".join(f" {row['oov'][n]['count']:>18d}" for n in names)
        table.append(f"{row['unit']:10s} {row['vocab_size']:>8d}{cells}")
    print("\n".join(table), file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# oov-report
# ---------------------------------------------------------------------------

def _recovered_positions(reference: str, hypothesis: str, oov_units: set[str]) -> set[int]:
    """Indices of reference OOV syllables reproduced by the hypothesis,
    judged by the deterministic character alignment."""
    ref_chars = [ch for ch in reference if ch != " "]
    hyp_chars = [ch for ch in hypothesis if ch != " "]
    _, ops = levenshtein(ref_chars, hyp_chars)
    return {
        i for op, i, _ in ops if op == "match" and i is not None and ref_chars[i] in oov_units
    }


def cmd_oov_report(args) -> int:
    refs = _read_refs(Path(args.refs))
    train_vocab = Vocabulary.load(args.train_vocab)
    grap_vocab = Vocabulary.load(args.grapheme_vocab)

    ref_units: dict[str, int] = {}
    for text in refs.values():
        for ch in text:
            if ch != " ":
                ref_units[ch] = ref_units.get(ch, 0) + 1

    oov_all = {u for u in ref_units if u not in train_vocab}
    constructible = {
        u
        for u in oov_all
        if hangul.is_syllable(u) and all(j in grap_vocab for j in hangul.decompose_syllable(u))
    }
    oov_occurrences = sum(ref_units[u] for u in constructible)

    recovery = {}
    for decode_path in args.decodes:
        hyps = _read_hyps(Path(decode_path))
        mode = None
        for line in Path(decode_path).read_text(encoding="utf-8").splitlines():
            if line.startswith("{"):
                record = json.loads(line)
                mode = record.get("mode")
                if mode and record.get("level"):
                    mode = f"{mode}:{record['level']}"
                break
        recovered_types: set[str] = set()
        recovered_occ = 0
        for utt_id, reference in refs.items():
            hypothesis = hyps.get(utt_id)
            if hypothesis is None:
                raise UnmatchedId(utt_id)
            ref_chars = [ch for ch in reference if ch != " "]
            positions = _recovered_positions(reference, hypothesis, constructible)
            recovered_occ += len(positions)
            recovered_types.update(ref_chars[i] for i in positions)
        key = mode or Path(decode_path).name
        if key in recovery:
            key = f"{key}:{Path(decode_path).name}"
        recovery[key] = {
            "vocab": len(recovered_types),
            "occurrences": recovered_occ,
        }

    record = {
        "total_vocab": len(ref_units),
        "total_occurrences": sum(ref_units.values()),
        "oov_vocab": len(constructible),
        "oov_occurrences": oov_occurrences,
        "unconstructible_vocab": len(oov_all) - len(constructible),
        "recovery": recovery,
    }
    manifest = RunManifest(
        "oov-report", {}, [args.refs, *args.decodes, args.train_vocab, args.grapheme_vocab],
        __version__, None,
    )
    _emit([_dump(record)], args.out, manifest)

    def pct(n, d):
        return f"{n}({100 * n / d:.1f}%)" if d else "0(0.0%)"

    modes = list(recovery)
    head = f"{'':10s} {'Total':>8s} {'OOV':>6s}" + "".join(f" {'Recovery(' + m + ')':>20s}" for m in modes)
    v = record
    row1 = f"{'# Vocab.':10s} {v['total_vocab']:>8d} {v['oov_vocab']:>6d}" + "".join(
        f" {pct(recovery[m]['vocab'], v['oov_vocab']):>20s}" for m in modes
    )
    row2 = f"{'# Occur.':10s} {v['total_occurrences']:>8d} {v['oov_occurrences']:>6d}" + "".join(
        f" {pct(recovery[m]['occurrences'], v['oov_occurrences']):>20s}" for m in modes
    )
    print("\n".join([head, row1, row2]), file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def _random_texts(rng: np.random.Generator, count: int) -> list[str]:
    pool = list(SYLLABLE_POOL)
    texts = []
    for _ in range(count):
        words = []
        for _ in range(int(rng.integers(1, 4))):
            length = int(rng.integers(1, 5))
            words.append("".join(str(rng.choice(pool)) for _ in range(length)))
        texts.append(" ".join(words))
    return texts


def cmd_synth(args) -> int:
    if args.texts:
        texts = _read_corpus_texts(args.texts)
    else:
        texts = _random_texts(np.random.default_rng(args.seed), args.random)
    holdouts = [s for s in (args.holdouts.split(",") if args.holdouts else []) if s]

    spec = SynthSpec(
        "", frames_per_token=args.frames_per_token, blank_gap=args.blank_gap,
        noise=args.noise, seed=args.seed,
    )
    corpus = gen_oov_corpus(texts, holdouts, spec)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus.syllable_vocab.save(out / "syllable.vocab")
    corpus.grapheme_vocab.save(out / "grapheme.vocab")
    refs_lines = [f"{u.id}\t{u.text}" for u in corpus.utterances]
    (out / "refs.tsv").write_text("\n".join(refs_lines) + "\n", encoding="utf-8")
    for utt in corpus.utterances:
        save_lattice(utt.syllable_lattice, out / f"{utt.id}.syll.lat", args.format)
        save_lattice(utt.grapheme_lattice, out / f"{utt.id}.grap.lat", args.format)

    manifest = RunManifest(
        "synth",
        {
            "frames_per_token": args.frames_per_token,
            "blank_gap": args.blank_gap,
            "noise": args.noise,
            "holdouts": holdouts,
            "format": args.format,
            "utterances": len(texts),
        },
        [args.texts] if args.texts else [],
        __version__,
        args.seed,
    )
    manifest.write(out / "corpus")
    print(f"wrote {len(texts)} utterances to {out}", file=sys.stderr)
    return 0


def cmd_selfcheck(args) -> int:
    results = selfcheck.run_all()
    for result in results:
        print(result.line())
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hanjoint",
        description="Joint grapheme/syllable CTC decoding and evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"hanjoint {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode a corpus directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("greedy", "beam", "joint"), default="joint")
    p.add_argument("--level", choices=("syllable", "grapheme"), default=None,
                   help="lattice level for greedy/beam modes (default: syllable when present)")
    p.add_argument("--beam", type=int, default=100)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--token-cutoff", type=int, default=None)
    p.add_argument("--format", choices=("auto", "binary", "text"), default="auto")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: HANJOINT_THREADS or all cores)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score hypotheses against references")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loss", help="multi-task CTC loss over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--format", choices=("auto", "binary", "text"), default="auto")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("vocab-stats", help="vocabulary sizes and OOV counts")
    p.add_argument("--train", required=True)
    p.add_argument("--eval", action="append", required=True)
    p.add_argument("--level", choices=("syllable", "grapheme", "both"), default="both")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_vocab_stats)

    p = sub.add_parser("oov-report", help="OOV recovery accounting per decoding mode")
    p.add_argument("--refs", required=True)
    p.add_argument("--decodes", action="append", required=True)
    p.add_argument("--train-vocab", required=True)
    p.add_argument("--grapheme-vocab", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oov_report)

    p = sub.add_parser("synth", help="generate a synthetic paired corpus")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--texts", default=None, help="file of reference texts, one per line")
    group.add_argument("--random", type=int, default=None, help="number of random utterances")
    p.add_argument("--holdouts", default="", help="comma-separated syllables to hold out")
    p.add_argument("--frames-per-token", type=int, default=3)
    p.add_argument("--blank-gap", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("selfcheck", help="run the oracle validation suites")
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HanjointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
