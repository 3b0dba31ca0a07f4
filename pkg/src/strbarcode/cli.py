"""Command-line front end.

Exit codes: 0 success, 1 partial coverage or failed verification, 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import gzip
import json
import math
import shutil
import statistics
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .candidates import GenerationConfig, generate_candidates, gc_content, melting_temperature
from .greedy import Candidate, SelectionConfig, Solution, UncoveredPair, barcode_rows, edit_distance, select_greedy, verify_solution
from .instances import RandomSpec, containment_probability, random_instance
from .sequence_model import FastaError, InstanceSet, format_fasta, read_fasta

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT = 0, 1, 2

SYNTHETIC = "synthetic_genomes.fa.gz"


class InputError(Exception):
    """Bad input file or flag combination; maps to exit code 2."""


def data_path(name: str = SYNTHETIC) -> Path:
    return Path(str(resources.files("strbarcode") / "data" / name))


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    generation: GenerationConfig
    selection: SelectionConfig
    source_names: list[str] | None
    forbidden_names: list[str]
    seed: int
    threads: int
    fmt: str

    def as_dict(self) -> dict:
        g, s = self.generation, self.selection
        # thread count is deliberately left out so reports compare across it
        return {
            "l_min": g.l_min,
            "l_max": g.l_max,
            "sources": self.source_names,
            "gc_min": g.gc_min,
            "gc_max": g.gc_max,
            "tm_min": g.tm_min,
            "tm_max": g.tm_max,
            "forbidden": self.forbidden_names,
            "uncertain_occurrences": g.uncertain_occurrences,
            "redundancy": s.redundancy,
            "min_edit_distance": s.min_edit_distance,
            "seed": self.seed,
        }


def _resolve_sources(spec: str | None, instance: InstanceSet) -> list[int] | None:
    """A bare integer k means the first k sequences; otherwise a comma list of names."""
    if spec is None:
        return None
    spec = spec.strip()
    if spec.isdigit() and spec not in instance.names:
        k = int(spec)
        if not 1 <= k <= instance.n:
            raise InputError(f"--sources {k}: need 1..{instance.n}")
        return list(range(k))
    ids = []
    for name in filter(None, (s.strip() for s in spec.split(","))):
        try:
            ids.append(instance.index_of(name))
        except KeyError:
            raise InputError(f"--sources: no sequence named {name!r}") from None
    if not ids:
        raise InputError("--sources is empty")
    return ids


def _load(path: str) -> InstanceSet:
    try:
        return read_fasta(path)
    except FastaError as e:
        raise InputError(f"{path}: {e}") from None
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"{path}: {e}") from None


def build_run_config(args, instance: InstanceSet) -> RunConfig:
    forbidden = _load(args.forbidden) if args.forbidden else None
    sources = _resolve_sources(args.sources, instance)
    try:
        gen = GenerationConfig(
            l_min=args.min_length,
            l_max=args.max_length,
            source_ids=sources,
            gc_min=args.gc_min,
            gc_max=args.gc_max,
            tm_min=args.tm_min,
            tm_max=args.tm_max,
            forbidden=tuple(s.text for s in forbidden) if forbidden else (),
        )
        sel = SelectionConfig(redundancy=args.redundancy, min_edit_distance=args.min_edit, threads=args.threads)
    except ValueError as e:
        raise InputError(str(e)) from None
    return RunConfig(
        generation=gen,
        selection=sel,
        source_names=None if sources is None else [instance[i].name for i in gen.source_ids],
        forbidden_names=forbidden.names if forbidden else [],
        seed=args.seed,
        threads=args.threads,
        fmt=args.format,
    )


# ---------------------------------------------------------------------------
# reports


def solution_report(solution: Solution, pool_stats, run: RunConfig, timings: dict | None) -> dict:
    inst = solution.instance
    report = {
        "config": run.as_dict(),
        "n": inst.n,
        "sequences": inst.names,
        "pool_stats": {
            "candidates": pool_stats.candidates,
            "matches": pool_stats.matches,
            "max_length": pool_stats.max_length,
        },
        "distinguishers": [
            {
                "id": c.cand_id,
                "text": c.text,
                "length": len(c.text),
                "gc": round(gc_content(c.text), 6),
                "tm": melting_temperature(c.text),
                "perfect_ids": sorted(c.perfect),
                "uncertain_ids": sorted(c.uncertain),
            }
            for c in solution.distinguishers
        ],
        "barcodes": solution.barcodes,
        "uncovered_pairs": [
            {"i": p.i, "j": p.j, "count": p.count, "impossible": p.impossible} for p in solution.uncovered
        ],
        "iterations": solution.iterations,
    }
    if timings is not None:
        report["wall_times"] = timings
    return report


def barcode_tsv(solution: Solution) -> str:
    lines = ["sequence\t" + "\t".join(solution.texts)]
    for name, row in zip(solution.instance.names, solution.barcodes):
        lines.append(name + "\t" + "\t".join(row))
    return "\n".join(lines) + "\n"


SUMMARY_FIELDS = ("n", "#Candidates", "#Matches", "Gen. time", "Selection time", "#Distinguishers")


def summary_table(n: int, stats, gen_time: float, sel_time: float, size: int) -> str:
    values = (str(n), str(stats.candidates), str(stats.matches), f"{gen_time:.2f}", f"{sel_time:.2f}", str(size))
    widths = [max(len(f), len(v)) for f, v in zip(SUMMARY_FIELDS, values)]
    head = "  ".join(f.rjust(w) for f, w in zip(SUMMARY_FIELDS, widths))
    row = "  ".join(v.rjust(w) for v, w in zip(values, widths))
    return head + "\n" + row + "\n"


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def run_selection(instance: InstanceSet, run: RunConfig):
    pool = generate_candidates(instance, run.generation, threads=run.threads)
    solution = select_greedy(pool, run.selection)
    return pool, solution


# ---------------------------------------------------------------------------
# subcommands


def cmd_select(args) -> int:
    instance = _load(args.fasta)
    run = build_run_config(args, instance)
    pool, solution = run_selection(instance, run)
    check = verify_solution(solution)
    if not check.ok:
        for p in check.problems:
            print(f"error: internal verification failed: {p}", file=sys.stderr)
        return EXIT_PARTIAL
    timings = None if args.reproducible else {
        "generation": round(pool.stats.generation_time, 4),
        "selection": round(solution.selection_time, 4),
    }
    if run.fmt == "json":
        text = json.dumps(solution_report(solution, pool.stats, run, timings), indent=2) + "\n"
    else:
        text = barcode_tsv(solution)
    _write(text, args.output)
    summary = summary_table(instance.n, pool.stats, pool.stats.generation_time, solution.selection_time, solution.size)
    print(summary, end="", file=sys.stdout if args.output not in (None, "-") else sys.stderr)
    if solution.uncovered:
        impossible = sum(p.impossible for p in solution.uncovered)
        print(
            f"warning: {len(solution.uncovered)} pair(s) below redundancy {run.selection.redundancy}"
            f" ({impossible} impossible)",
            file=sys.stderr,
        )
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_random(args) -> int:
    try:
        spec = RandomSpec(args.n, args.length, args.seed)
    except ValueError as e:
        raise InputError(str(e)) from None
    _write(format_fasta(random_instance(spec)), args.output)
    return EXIT_OK


def _solution_from_report(report: dict, instance: InstanceSet) -> Solution:
    names = report.get("sequences")
    if names is None:
        raise InputError("report has no 'sequences' list")
    missing = [nm for nm in names if nm not in instance.names]
    if missing:
        raise InputError(f"report references sequence(s) not in the FASTA: {', '.join(missing[:5])}")
    if names != instance.names:
        raise InputError("report sequence order differs from the FASTA")
    distinguishers = [
        Candidate(
            cand_id=int(d.get("id", k)),
            text=d["text"],
            source=(-1, 0),
            perfect=frozenset(d.get("perfect_ids", [])),
            uncertain=frozenset(d.get("uncertain_ids", [])),
            n=instance.n,
        )
        for k, d in enumerate(report.get("distinguishers", []))
    ]
    uncovered = [UncoveredPair(p["i"], p["j"], p["count"], p.get("impossible", False)) for p in report.get("uncovered_pairs", [])]
    m = report.get("config", {}).get("redundancy", 1)
    return Solution(instance, distinguishers, report.get("barcodes", []), uncovered, redundancy=m)


def _constraint_problems(solution: Solution, config: dict) -> list[str]:
    problems = []
    l_min, l_max = config.get("l_min", 1), config.get("l_max")
    gc_min, gc_max = config.get("gc_min", 0.0), config.get("gc_max", 1.0)
    tm_min, tm_max = config.get("tm_min"), config.get("tm_max")
    for c in solution.distinguishers:
        t = c.text
        if len(t) < l_min or (l_max is not None and len(t) > l_max):
            problems.append(f"{t}: length {len(t)} outside [{l_min}, {l_max}]")
        if not gc_min - 1e-12 <= gc_content(t) <= gc_max + 1e-12:
            problems.append(f"{t}: GC content outside [{gc_min}, {gc_max}]")
        tm = melting_temperature(t)
        if (tm_min is not None and tm < tm_min) or (tm_max is not None and tm > tm_max):
            problems.append(f"{t}: melting temperature {tm} outside bounds")
    d = config.get("min_edit_distance", 0)
    texts = solution.texts
    for a in range(len(texts)):
        for b in range(a + 1, len(texts)):
            if d and edit_distance(texts[a], texts[b]) < d:
                problems.append(f"{texts[a]} / {texts[b]}: edit distance below {d}")
    return problems


def _tsv_problems(text: str, instance: InstanceSet) -> list[str]:
    lines = text.rstrip("\n").split("\n")
    texts = lines[0].split("\t")[1:]
    rows = [ln.split("\t") for ln in lines[1:]]
    missing = [r[0] for r in rows if r[0] not in instance.names]
    if missing:
        raise InputError(f"report references sequence(s) not in the FASTA: {', '.join(missing[:5])}")
    pool_like = [Candidate(k, t.lower(), (-1, 0), frozenset(), frozenset(), instance.n) for k, t in enumerate(texts)]
    want = dict(zip(instance.names, barcode_rows(_recompute(pool_like, instance), instance.n)))
    return [f"barcode of {r[0]} differs" for r in rows if "".join(r[1:]) != want[r[0]]]


def _recompute(cands, instance):
    from .sequence_model import OccurrenceClass, occurrence_class

    out = []
    for c in cands:
        cls = [occurrence_class(c.text, s) for s in instance]
        P = frozenset(i for i, k in enumerate(cls) if k is OccurrenceClass.HAS_PERFECT)
        U = frozenset(i for i, k in enumerate(cls) if k is OccurrenceClass.UNCERTAIN_ONLY)
        out.append(Candidate(c.cand_id, c.text, c.source, P, U, c.n))
    return out


def cmd_verify(args) -> int:
    instance = _load(args.fasta)
    try:
        text = Path(args.report).read_text()
    except OSError as e:
        raise InputError(f"{args.report}: {e}") from None
    if not text.lstrip().startswith("{"):
        problems = _tsv_problems(text, instance)
    else:
        try:
            report = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputError(f"{args.report}: not valid JSON ({e})") from None
        try:
            solution = _solution_from_report(report, instance)
        except (KeyError, TypeError) as e:
            raise InputError(f"{args.report}: malformed report ({e})") from None
        try:
            check = verify_solution(solution)
        except ValueError as e:
            return _fail([f"invalid distinguisher: {e}"])
        problems = list(check.problems)
        for c, r in zip(solution.distinguishers, _recompute(solution.distinguishers, instance)):
            if c.perfect != r.perfect or c.uncertain != r.uncertain:
                problems.append(f"{c.text}: recorded match sets differ from the sequences")
        problems += _constraint_problems(solution, report.get("config", {}))
    if problems:
        return _fail(problems)
    print("PASS")
    return EXIT_OK


def _fail(problems: list[str]) -> int:
    print("FAIL")
    for p in problems:
        print(f"  {p}")
    return EXIT_PARTIAL


# ---------------------------------------------------------------------------
# bench


TABLE2_CELLS = [(10, 1), (20, 1), (50, 1), (100, 1), (10, 2), (10, 5), (50, 10)]


def _stats(values: list[float]) -> tuple[float, float]:
    return statistics.fmean(values), statistics.stdev(values) if len(values) > 1 else 0.0


def bench_table2(seed: int, seeds: int, length: int = 10_000, cells=None):
    rows = []
    for n, r in cells or TABLE2_CELLS:
        t0 = time.perf_counter()
        sizes = []
        for k in range(seeds):
            inst = random_instance(RandomSpec(n, length, seed + k))
            pool = generate_candidates(inst)
            sizes.append(select_greedy(pool, SelectionConfig(redundancy=r)).size)
        rows.append(("table2-desk", f"n={n},r={r}", seeds, *_stats(sizes), time.perf_counter() - t0))
    return rows


def bench_table1(seed: int, seeds: int, n: int = 100, length: int = 10_000, source_counts=(100, 10, 1)):
    acc: dict[tuple[int, str], list[float]] = {}
    wall: dict[int, float] = {}
    for k in range(seeds):
        inst = random_instance(RandomSpec(n, length, seed + k))
        for s in source_counts:
            t0 = time.perf_counter()
            pool = generate_candidates(inst, GenerationConfig(source_ids=tuple(range(s))))
            sol = select_greedy(pool)
            wall[s] = wall.get(s, 0.0) + time.perf_counter() - t0
            for key, v in (
                ("candidates", pool.stats.candidates),
                ("matches", pool.stats.matches),
                ("gen_time", pool.stats.generation_time),
                ("selection_time", sol.selection_time),
                ("distinguishers", sol.size),
            ):
                acc.setdefault((s, key), []).append(float(v))
    return [
        ("table1-desk", f"n={n},sources={s}:{key}", seeds, *_stats(v), wall[s])
        for (s, key), v in acc.items()
    ]


SPEEDUP_VARIANTS = {
    "naive": SelectionConfig(gain="matrix", lazy=False),
    "partition": SelectionConfig(gain="partition", lazy=False),
    "partition+lazy": SelectionConfig(gain="partition", lazy=True),
}


def warm_up() -> None:
    """Compile the gain kernels once so timings exclude JIT work."""
    inst = InstanceSet.from_texts(["acgtac", "ttgtca", "gacctg"])
    select_greedy(generate_candidates(inst), SelectionConfig(gain="partition"))


def bench_speedup(seed: int, seeds: int, n: int = 200, length: int = 10_000, variants=None):
    warm_up()
    variants = variants or list(SPEEDUP_VARIANTS)
    times: dict[str, list[float]] = {v: [] for v in variants}
    sizes: dict[str, list[int]] = {v: [] for v in variants}
    for k in range(seeds):
        pool = generate_candidates(random_instance(RandomSpec(n, length, seed + k)))
        for v in variants:
            sol = select_greedy(pool, SPEEDUP_VARIANTS[v])
            times[v].append(sol.selection_time)
            sizes[v].append(sol.size)
    return [
        ("speedup-desk", f"n={n}:{v}:selection_time", seeds, *_stats(times[v]), sum(times[v]))
        for v in variants
    ]


def bench_theorem1(seed: int, seeds: int, length: int = 10_000, ks=(6, 7, 8, 9, 10), trials: int = 10_000):
    rows = []
    for k in ks:
        t0 = time.perf_counter()
        est = [containment_probability(length, k, trials, seed + s) for s in range(seeds)]
        rows.append(("theorem1", f"l={length},k={k},trials={trials}", seeds, *_stats(est), time.perf_counter() - t0))
    return rows


SUITES = {
    "table2-desk": bench_table2,
    "table1-desk": bench_table1,
    "speedup-desk": bench_speedup,
    "theorem1": bench_theorem1,
}


def bench_tsv(rows) -> str:
    out = ["suite\tcell\tseed_count\tmean\tstddev\twall_time"]
    for suite, cell, count, mean, sd, wall in rows:
        out.append(f"{suite}\t{cell}\t{count}\t{mean:.10g}\t{sd:.6g}\t{wall:.3f}")
    return "\n".join(out) + "\n"


def cmd_bench(args) -> int:
    if args.suite not in SUITES:
        raise InputError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    seeds = args.seeds if args.seeds is not None else (1 if args.suite == "theorem1" else 10)
    if seeds < 1:
        raise InputError("--seeds must be >= 1")
    _write(bench_tsv(SUITES[args.suite](args.seed, seeds)), args.output)
    return EXIT_OK


def cmd_synth(args) -> int:
    src = data_path()
    if args.output in (None, "-"):
        with gzip.open(src, "rt") as fh:
            shutil.copyfileobj(fh, sys.stdout)
    elif args.output.endswith(".gz"):
        shutil.copyfile(src, args.output)
    else:
        with gzip.open(src, "rt") as fh, open(args.output, "w") as out:
            shutil.copyfileobj(fh, out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import OracleGuardError, enumerate_signatures, exact_minimum, log2_lower_bound

    instance = _load(args.fasta)
    try:
        classes = enumerate_signatures(instance, l_max=args.l_max)
        best = exact_minimum(instance, m=args.redundancy, l_max=args.l_max)
    except OracleGuardError as e:
        raise InputError(str(e)) from None
    greedy = select_greedy(generate_candidates(instance), SelectionConfig(redundancy=args.redundancy))
    print(json.dumps({
        "n": instance.n,
        "signature_classes": len(classes),
        "exact_minimum": best,
        "greedy": greedy.size,
        "log2_lower_bound": log2_lower_bound(instance.n),
        "ratio_bound": 1 + 2 * math.log(instance.n) if instance.n > 1 else 1.0,
    }, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strbarcode", description="Select DNA string barcodes for a set of sequences.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{select,random,verify,bench,synth}")

    p = sub.add_parser("select", help="generate candidates and select distinguishers")
    p.add_argument("fasta")
    p.add_argument("-o", "--output", help="report path (default: stdout, summary goes to stderr)")
    p.add_argument("--redundancy", type=int, default=1)
    p.add_argument("--min-length", type=int, default=1)
    p.add_argument("--max-length", type=int, default=None)
    p.add_argument("--min-edit", type=int, default=0)
    p.add_argument("--gc-min", type=float, default=0.0)
    p.add_argument("--gc-max", type=float, default=1.0)
    p.add_argument("--tm-min", type=float, default=None)
    p.add_argument("--tm-max", type=float, default=None)
    p.add_argument("--sources", help="first K sequences (integer) or a comma list of names")
    p.add_argument("--forbidden", help="FASTA of contaminant sequences")
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="recorded in the report; selection itself is deterministic")
    p.add_argument("--reproducible", action="store_true", help="omit wall times so reports are byte-comparable")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("random", help="write a random instance as FASTA")
    p.add_argument("n", type=int)
    p.add_argument("length", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("verify", help="re-check a report against the sequences")
    p.add_argument("fasta")
    p.add_argument("report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="desk-scale experiment suites")
    p.add_argument("suite", help=", ".join(SUITES))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--seeds", type=int, default=None, help="instances per cell (default 10)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write the bundled synthetic genome FASTA")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_synth)

    # not listed in --help: exact optimum on tiny inputs for acceptance runs
    p = sub.add_parser("oracle")
    p.add_argument("fasta")
    p.add_argument("--l-max", type=int, default=16)
    p.add_argument("--redundancy", type=int, default=1)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
