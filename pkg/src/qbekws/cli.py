"""Command-line entry point.

Exit status: 0 on success, 1 on usage errors, 2 on data or format errors.
Machine-readable results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import evaluation, negatives, threshold
from .decoder import DecoderConfig, score_window, spot_stream
from .dtw import DtwConfig, sdtw
from .enrollment import build_fst, max_decode, read_hypothesis, write_hypothesis
from .errors import DataError, UsageError
from .posteriorgram import MAGIC, Posteriorgram, SynthSpec, load_pgram, save_pgram, synthesize

log = logging.getLogger("qbekws")

SCORE_FIELDS = ("utterance_id", "hypothesis_id", "normalized", "raw", "t0", "end", "nonblank")
PROFILE_NAME = "profile.prof"
CONFIG_KEYS = {
    "tau": float,
    "beam_width": lambda v: None if v.lower() in ("none", "unlimited") else int(v),
    "overlap": int,
    "kl_direction": str,
    "dtw_norm": str,
}
DEFAULTS = {"tau": threshold.DEFAULT_TAU, "beam_width": None,
            "overlap": negatives.DEFAULT_OVERLAP, "kl_direction": "query_test",
            "dtw_norm": "path"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def read_config(path) -> Dict[str, object]:
    """Parse ``key=value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def _setting(args, key):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return args.config_values.get(key, DEFAULTS[key])


def _decoder_cfg(args) -> DecoderConfig:
    return DecoderConfig(beam_width=_setting(args, "beam_width"),
                         streaming_stride=getattr(args, "stride", 1))


def _write_csv(rows, header):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _score_row(utt, hyp, s):
    return [utt, hyp, _fmt(s.normalized_log_likelihood), _fmt(s.raw_log_likelihood),
            s.start_frame, s.end_frame, s.non_blank_frames]


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _hypothesis_files(enroll_dir: Path) -> List[Path]:
    prof = enroll_dir / PROFILE_NAME
    if prof.exists():
        return [enroll_dir / name for name in threshold.load_profile(prof).hypothesis_files]
    files = sorted(enroll_dir.glob("*.hyp"))
    if not files:
        raise UsageError(f"no hypothesis manifests in {enroll_dir}")
    return files


def _load_fsts(files: Sequence[Path], alphabet):
    return [build_fst(read_hypothesis(f.read_text(), alphabet)) for f in files]


# -- subcommands ------------------------------------------------------------

def cmd_synth(args):
    from .phonetics import default_alphabet

    alphabet = default_alphabet()
    spec = SynthSpec(alphabet.encode(args.labels.split()), args.frames_per_label,
                     args.blank_frames, args.peak_mass, args.seed, alphabet)
    save_pgram(synthesize(spec), args.output)
    print(args.output)


def cmd_enroll(args):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for q in args.queries:
        q = Path(q)
        hyp = max_decode(load_pgram(q), source_id=q.stem)
        dest = out / f"{q.stem}.hyp"
        dest.write_text(write_hypothesis(hyp))
        log.info("%s: %s", q.stem, hyp.text())
        print(dest)


def cmd_gen_negatives(args):
    src = Path(args.input)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    data = src.read_bytes()
    overlap = _setting(args, "overlap")
    if data[:4] == MAGIC:
        from .posteriorgram import read_pgram, write_pgram
        made = negatives.generate_negatives_pgram(read_pgram(data), args.parts)
        blobs, ext = [write_pgram(p) for p in made], "pgm"
    elif data[:4] == b"RIFF":
        made = negatives.generate_negatives(negatives.read_wav(data), overlap, args.parts)
        blobs, ext = [negatives.write_wav(w) for w in made], "wav"
    else:
        raise DataError(f"{src}: neither a PGRAM nor a WAV file")
    for k, blob in enumerate(blobs, 1):
        dest = out / f"{src.stem}.neg{k}.{ext}"
        dest.write_bytes(blob)
        print(dest)


def cmd_threshold(args):
    enroll_dir = Path(args.enrollment)
    queries = [load_pgram(q) for q in args.queries]
    stems = [Path(q).stem for q in args.queries]
    hyp_files = [enroll_dir / f"{stem}.hyp" for stem in stems]
    for f in hyp_files:
        if not f.exists():
            raise UsageError(f"missing hypothesis manifest {f}; run enroll first")
    fsts = _load_fsts(hyp_files, queries[0].alphabet)

    if args.negatives:
        negs = [load_pgram(z) for z in args.negatives]
    else:
        negs = []
        for q, stem in zip(args.queries, stems):
            where = Path(args.negatives_dir) if args.negatives_dir else Path(q).parent
            found = sorted(where.glob(f"{stem}.neg*.pgm"))
            if not found:
                raise UsageError(f"no generated negatives {stem}.neg*.pgm in {where}")
            negs.append([load_pgram(z) for z in found])
    cfg = threshold.ThresholdConfig(_setting(args, "tau"))
    profile = threshold.predict_threshold(queries, fsts, negs, cfg, _decoder_cfg(args))
    text = threshold.write_profile(profile, [f.name for f in hyp_files])
    (enroll_dir / PROFILE_NAME).write_text(text)
    print(_fmt(profile.delta))


def cmd_score(args):
    enroll_dir = Path(args.enrollment)
    files = _hypothesis_files(enroll_dir)
    cfg = _decoder_cfg(args)

    def run(path):
        post = load_pgram(path)
        fsts = _load_fsts(files, post.alphabet)
        return Path(path).stem, [score_window(f, post, cfg) for f in fsts]

    results = _map(run, args.tests, args.jobs)
    if not args.average:
        _write_csv([_score_row(utt, f.stem, s) for utt, scores in results
                    for f, s in zip(files, scores)], SCORE_FIELDS)
        return
    prof = enroll_dir / PROFILE_NAME
    profile = threshold.load_profile(prof) if prof.exists() else None
    rows = []
    for utt, scores in results:
        avg = threshold._mean([s.normalized_log_likelihood for s in scores])
        row = [utt, _fmt(avg)]
        if profile is not None:
            row.append(int(threshold.decide(avg, profile)))
        rows.append(row)
    header = ["utterance_id", "score"] + (["accept"] if profile is not None else [])
    _write_csv(rows, header)


def cmd_spot(args):
    files = _hypothesis_files(Path(args.enrollment))
    post = load_pgram(args.stream)
    cfg = _decoder_cfg(args)
    utt = Path(args.stream).stem
    rows = []
    for f, fst in zip(files, _load_fsts(files, post.alphabet)):
        rows += [_score_row(utt, f.stem, s) for s in spot_stream(fst, post, cfg)]
    _write_csv(rows, SCORE_FIELDS)


def cmd_dtw(args):
    cfg = DtwConfig(_setting(args, "kl_direction"), _setting(args, "dtw_norm"))
    queries = [(Path(q).stem, load_pgram(q)) for q in args.queries]

    def run(path):
        test = load_pgram(path)
        return Path(path).stem, [(qid, sdtw(q, test, cfg)) for qid, q in queries]

    rows = []
    for utt, results in _map(run, args.tests, args.jobs):
        for qid, r in results:
            rows.append([utt, qid, _fmt(-r.normalized_distance), _fmt(-r.accumulated_distance),
                         r.test_start, r.test_end, r.path_length])
    _write_csv(rows, SCORE_FIELDS)


def cmd_eval(args):
    trials = evaluation.read_trials(Path(args.trials).read_text())
    if args.curve:
        Path(args.curve).write_text(evaluation.write_curve(evaluation.sweep(trials)))
    if not args.target_fa:
        if not args.curve:
            sys.stdout.write(evaluation.write_curve(evaluation.sweep(trials)))
        return
    rows = []
    for target in args.target_fa:
        point = evaluation.frr_at_fa(trials, target)
        if point is None:
            log.warning("FA/hr target %s is unreachable", target)
            rows.append([_fmt(target), "", "", ""])
        else:
            rows.append([_fmt(target), _fmt(point.threshold), _fmt(point.frr_percent),
                         _fmt(point.fa_per_hour)])
    _write_csv(rows, ("target_fa_per_hour",) + evaluation.CURVE_FIELDS)


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qbekws", description="Query-by-example keyword spotting.")
    p.add_argument("--config", help="key=value file (tau, beam_width, overlap, kl_direction, dtw_norm)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def beam(sp):
        sp.add_argument("--beam-width", dest="beam_width", type=CONFIG_KEYS["beam_width"],
                        help="prune to this many FST states per frame (default: exact)")

    s = sub.add_parser("synth", help="write a synthetic posteriorgram")
    s.add_argument("--labels", required=True, help='space-separated symbols, e.g. "HH EY"')
    s.add_argument("--frames-per-label", type=int, default=3)
    s.add_argument("--blank-frames", type=int, default=1)
    s.add_argument("--peak-mass", type=float, default=0.9)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("enroll", help="max-decode queries into hypothesis manifests")
    s.add_argument("queries", nargs="+")
    s.add_argument("-o", "--output", required=True, help="enrollment directory")
    s.set_defaults(func=cmd_enroll)

    s = sub.add_parser("gen-negatives", help="shuffle a query (WAV or PGRAM) into negatives")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--overlap", type=int)
    s.add_argument("--parts", type=int, default=negatives.DEFAULT_PARTS)
    s.set_defaults(func=cmd_gen_negatives)

    s = sub.add_parser("threshold", help="predict the decision threshold for an enrollment")
    s.add_argument("enrollment")
    s.add_argument("queries", nargs="+")
    s.add_argument("--negatives", nargs="+", help="shared negative pool instead of generated negatives")
    s.add_argument("--negatives-dir", help="where <query>.neg*.pgm live (default: next to each query)")
    s.add_argument("--tau", type=float)
    beam(s)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("score", help="score test posteriorgrams against enrolled hypotheses")
    s.add_argument("enrollment")
    s.add_argument("tests", nargs="+")
    s.add_argument("--average", action="store_true", help="one averaged score per utterance")
    s.add_argument("--jobs", type=int, default=1)
    beam(s)
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("spot", help="score every end frame of a long posteriorgram")
    s.add_argument("enrollment")
    s.add_argument("stream")
    s.add_argument("--stride", type=int, default=1)
    beam(s)
    s.set_defaults(func=cmd_spot)

    s = sub.add_parser("dtw", help="subsequence-DTW baseline scores")
    s.add_argument("--queries", nargs="+", required=True)
    s.add_argument("tests", nargs="+")
    s.add_argument("--kl-direction", dest="kl_direction", choices=("query_test", "test_query"))
    s.add_argument("--dtw-norm", dest="dtw_norm", choices=("path", "test_span"))
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_dtw)

    s = sub.add_parser("eval", help="FRR / FA-per-hour curve from a trial CSV")
    s.add_argument("trials")
    s.add_argument("--target-fa", type=float, nargs="+", help="report FRR at these FA/hr levels")
    s.add_argument("--curve", help="also write the full curve CSV here")
    s.set_defaults(func=cmd_eval)
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s", stream=sys.stderr)
        args.config_values = read_config(args.config) if args.config else {}
        args.func(args)
    except UsageError as e:
        print(f"qbekws: usage error: {e}", file=sys.stderr)
        return 1
    except (DataError, OSError) as e:
        print(f"qbekws: {e}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
