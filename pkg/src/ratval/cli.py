"""Command-line entry point: ``ratval <command> ...``.

Exit codes: 0 success, 1 usage error, 2 input-format error, 3 resource bound hit.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import cbr, deontic, pipeline, ranking
from .derivation import DerivationBoundError
from .kb import KBSyntaxError, parse_kb, parse_literal
from .specificity import IntractableComparison, warranted

EXIT_USAGE, EXIT_INPUT, EXIT_BOUND = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--limit", type=int, default=d(200), help="candidate passages kept (default 200)")
    p.add_argument("--top", type=int, default=d(5), help="answers reported (default 5)")
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--explain", action="store_true", default=d(False), help="show derivation trees")
    p.add_argument("--json", action="store_true", default=d(False), help="JSON instead of tab-delimited output")


def _config(args) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(candidate_limit=args.limit, top_k=args.top, seed=args.seed)


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(args, data, table: str):
    print(json.dumps(data, indent=2, sort_keys=True) if args.json else table)


# --------------------------------------------------------------------------


def cmd_answer(args):
    kb = parse_kb(_read(args.kb))
    corpus = pipeline.load_corpus(args.corpus)
    ranker = ranking.Ranker.from_json(_read(args.ranker)) if args.ranker else None
    base = cbr.CaseBase(cbr.load_cases(args.cases)) if args.cases else None
    question = args.question or args.query.replace("(", " ").replace(")", " ").replace(",", " ")
    results = pipeline.answer(question, args.query, corpus, kb, _config(args), ranker, base)
    lines = ["rank\tpassage\tscore\tanswer"]
    for n, c in enumerate(results, 1):
        lines.append(f"{n}\t{c.passage_id}\t{c.score:.4f}\t{c.text()}")
        if args.explain:
            for a in c.winners:
                lines.append(a.tree.format(1))
    _emit(args, [c.to_dict(args.explain) for c in results], "\n".join(lines))


def cmd_eval(args):
    kb = parse_kb(_read(args.kb)) if args.kb else None
    report = pipeline.evaluate(pipeline.load_dataset(args.dataset, kb), _config(args))
    text = report.to_json(include_timings=args.timings)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    if args.figure:
        from .plotting import plot_rank_histogram

        plot_rank_histogram(report.data, args.figure)
    print(text if args.json else report.format())


def cmd_synth(args):
    path = pipeline.write_synthetic_dataset(args.out_dir, args.questions, args.seed)
    print(path)


def cmd_spec_compare(args):
    kb = parse_kb(_read(args.kb_file))
    query = parse_literal(args.literal)
    w = warranted(kb, query)
    data = {"query": str(query), "verdict": w.verdict, "preorder": w.preorder.to_dict()}
    lines = [f"verdict\t{w.verdict}", "", w.preorder.format()]
    if args.explain:
        data["pro"] = [a.tree.to_dict() for a in w.pro]
        data["con"] = [a.tree.to_dict() for a in w.con]
        for i, a in enumerate(w.preorder.args):
            lines += ["", f"A{i}:", a.tree.format(1)]
    _emit(args, data, "\n".join(lines))


def cmd_deontic_check(args):
    norms, background = deontic.parse_norm_file(_read(args.norms))
    facts = deontic.parse_facts(_read(args.facts))
    report = deontic.norm_status(norms, background, facts)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(report.format())
        print()
        print(json.dumps(report.to_dict(), sort_keys=True))


def cmd_cbr_classify(args):
    base = cbr.CaseBase(cbr.load_cases(args.cases))
    queries = cbr.load_cases(args.query)
    rows = [cbr.classify(base, q, args.k) for q in queries]
    data = [{"label": lbl, "confidence": conf} for lbl, conf in rows]
    _emit(args, data, "\n".join(["query\tlabel\tconfidence"] + [f"{i}\t{l}\t{c:.4f}" for i, (l, c) in enumerate(rows)]))


def cmd_cbr_curve(args):
    checkpoints = [int(x) for x in args.checkpoints.split(",") if x]
    if args.cases:
        streams = [cbr.load_cases(args.cases)]
    else:
        streams = [cbr.synthetic_stream(max(checkpoints or [0]), seed=args.seed + s) for s in range(args.seeds)]
    curves = [cbr.interaction_curve(s, checkpoints, args.k) for s in streams]
    median = cbr.median_curve(curves)
    first = curves[0]
    data = dict(first.to_dict(), median_overall=median, seeds=len(curves))
    lines = ["cases\toverall\tcorrect\tincorrect\tmedian_overall"]
    fmt = lambda v: "nan" if v is None else f"{v:.4f}"
    for (n, o, c, i), m in zip(first.rows(), median):
        lines.append(f"{n}\t{fmt(o)}\t{fmt(c)}\t{fmt(i)}\t{fmt(m)}")
    if args.figure:
        from .plotting import plot_learning_curve

        plot_learning_curve(first, args.figure, median if len(curves) > 1 else None)
    _emit(args, data, "\n".join(lines))


def _load_samples(path):
    records = json.loads(_read(path))
    out = []
    for i, rec in enumerate(records):
        label = rec.get("label")
        if label in (cbr.CORRECT, 1, True):
            y = 1
        elif label in (cbr.INCORRECT, 0, False):
            y = 0
        else:
            raise ValueError(f"record {i}: bad label {label!r}")
        out.append(({k: float(v) for k, v in rec["features"].items()}, y))
    return out


def cmd_rank_train(args):
    samples = _load_samples(args.data)
    model = ranking.train_bagged_trees(samples, n_trees=args.trees, seed=args.seed)
    Path(args.out).write_text(model.to_json() + "\n", encoding="utf-8")
    usage = ranking.feature_usage(model)
    _emit(args, {"trees": len(model.trees), "feature_usage": usage},
          "\n".join(["feature\tsplit_share"] + [f"{k}\t{v:.4f}" for k, v in usage.items()]))


def cmd_rank_apply(args):
    model = ranking.Ranker.from_json(_read(args.ranker))
    records = json.loads(_read(args.data))
    feats = [{k: float(v) for k, v in (r["features"] if "features" in r else r).items()} for r in records]
    ranked = ranking.rank(model, feats)
    _emit(args, [{"index": r.index, "score": r.score} for r in ranked],
          "\n".join(["rank\tindex\tscore"] + [f"{n}\t{r.index}\t{r.score:.4f}" for n, r in enumerate(ranked, 1)]))


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ratval", description="Rational answer validation: specificity, deontic checks, CBR ranking.")
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def leaf(subparsers, name, func, **kw):
        p = subparsers.add_parser(name, **kw)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = leaf(sub, "answer", cmd_answer, help="answer a query from a corpus")
    p.add_argument("--kb", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--query", required=True, help="ground literal, e.g. flies(tom)")
    p.add_argument("--question", help="question text for retrieval (default: words of the query)")
    p.add_argument("--ranker", help="trained ranker JSON")
    p.add_argument("--cases", help="case base JSON for CBR features")

    p = leaf(sub, "eval", cmd_eval, help="evaluate on a dataset")
    p.add_argument("dataset")
    p.add_argument("--kb", help="knowledge base for records without kb_ref")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--figure", help="write a rank histogram (PNG/PDF/SVG)")
    p.add_argument("--timings", action="store_true", help="include stage timings in JSON")

    p = leaf(sub, "synth", cmd_synth, help="write a synthetic evaluation dataset")
    p.add_argument("out_dir")
    p.add_argument("--questions", type=int, default=50)

    p = leaf(sub, "spec-compare", cmd_spec_compare, help="decide a literal by specificity")
    p.add_argument("kb_file")
    p.add_argument("literal")

    dp = sub.add_parser("deontic", help="deontic logic tools")
    dsub = dp.add_subparsers(dest="deontic_command", required=True, parser_class=_Parser)
    p = leaf(dsub, "check", cmd_deontic_check, help="norm status report")
    p.add_argument("--norms", required=True)
    p.add_argument("--facts", required=True)

    cp = sub.add_parser("cbr", help="case-based validation")
    csub = cp.add_subparsers(dest="cbr_command", required=True, parser_class=_Parser)
    p = leaf(csub, "classify", cmd_cbr_classify)
    p.add_argument("--cases", required=True)
    p.add_argument("--query", required=True, help="JSON case (or list) without label")
    p.add_argument("-k", type=int, default=3)
    p = leaf(csub, "curve", cmd_cbr_curve, help="user-feedback learning curve")
    p.add_argument("--checkpoints", default="10,50,100,200")
    p.add_argument("--cases", help="labeled case stream (default: synthetic)")
    p.add_argument("--seeds", type=int, default=10, help="synthetic streams to median over")
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--figure", help="write the curve figure (PNG/PDF/SVG)")

    rp = sub.add_parser("rank", help="bagged decision-tree ranker")
    rsub = rp.add_subparsers(dest="rank_command", required=True, parser_class=_Parser)
    p = leaf(rsub, "train", cmd_rank_train)
    p.add_argument("--data", required=True, help="JSON list of {features, label}")
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=ranking.N_TREES)
    p = leaf(rsub, "apply", cmd_rank_apply)
    p.add_argument("--ranker", required=True)
    p.add_argument("--data", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if not 1 <= args.top <= args.limit:
            parser.error("need 1 <= --top <= --limit")
        args.func(args)
    except SystemExit as exc:
        return exc.code
    except (DerivationBoundError, IntractableComparison) as exc:
        print(f"ratval: resource bound: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except (KBSyntaxError, deontic.FormulaSyntaxError, pipeline.DatasetError, json.JSONDecodeError,
            OSError, KeyError, ValueError) as exc:
        print(f"ratval: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
