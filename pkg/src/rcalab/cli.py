"""Batch experiment runner: one process, one config file, deterministic
output files.

Subcommands mirror the experiment kinds (analyze-rule, evolve-exact,
simulate, mixing-scan, verify-bounds, circuit-mix).  Every run writes its
results into --out with a metadata header recording the artifact version,
the config hash, and the seed; re-running a config reproduces the files
byte-identically except for the timestamp line.

Exit codes: 0 ok, 1 config/schema error, 2 state-space cap exceeded,
3 bound violation in verify-bounds mode.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import importlib.resources
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .analysis import analyze_rule
from .bounds import (
    BoundReport,
    bootstrap_layout,
    check_block_superadditivity,
    main_theorem_bound,
    noise_lemma_suite,
    theorem_applicable,
)
from .circuits import network_from_json, worst_case_curve
from .entropy import (
    CapExceededError,
    WindowDistribution,
    deficiency,
    entropy,
    estimate_entropy,
    pinsker_bound,
    tv_to_uniform,
)
from .exact import ConeProblem, check_evolution_bound, exact_window_marginal
from .lattice import Alphabet, CellSet, hypercube
from .montecarlo import SimulationPlan, mixing_scan, window_pattern_counts
from .noise import kappa, noise_from_json
from .rules import rule_from_json

KINDS = (
    "analyze-rule",
    "evolve-exact",
    "simulate",
    "mixing-scan",
    "verify-bounds",
    "circuit-mix",
)

EXIT_CONFIG = 1
EXIT_CAP = 2
EXIT_BOUND = 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # bad usage is a config error, exit 1
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _load_schema() -> dict:
    ref = importlib.resources.files("rcalab") / "schemas" / "experiment-config.schema.json"
    return json.loads(ref.read_text())


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        jsonschema.validate(config, _load_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc
    return config


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _parse_window(doc, dim: int) -> CellSet:
    if isinstance(doc, dict) and "hypercube" in doc:
        return hypercube(int(doc["hypercube"]), int(doc.get("dim", dim)))
    if isinstance(doc, dict) and "cells" in doc:
        return CellSet([tuple(c) if isinstance(c, list) else c for c in doc["cells"]])
    raise ConfigError("window must give 'hypercube' or 'cells'")


def _window_label(window: CellSet) -> str:
    from .lattice import diameter

    n = diameter(window)
    if window == hypercube(n, window.dim):
        return f"S_{n}"
    return f"cells({len(window)})"


class OutputWriter:
    """CSV / JSON-lines emitter with the reproducibility header."""

    def __init__(self, out_dir: str, config: dict, seed: int, fmt: str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.meta = {
            "rcalab-version": __version__,
            "config-sha256": config_hash(config),
            "seed": seed,
            "generated-at": datetime.now(timezone.utc).isoformat(),
        }
        self.fmt = fmt
        self.files: list[Path] = []

    def table(self, name: str, columns: list[str], rows: list[list]):
        if self.fmt == "jsonl":
            path = self.out_dir / f"{name}.jsonl"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps({"metadata": self.meta}, sort_keys=True) + "\n")
                for row in rows:
                    fh.write(json.dumps(dict(zip(columns, row)), sort_keys=True) + "\n")
        else:
            path = self.out_dir / f"{name}.csv"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                for key, val in self.meta.items():
                    fh.write(f"# {key}={val}\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(columns)
                for row in rows:
                    writer.writerow([_fmt_cell(v) for v in row])
        self.files.append(path)
        return path

    def json_doc(self, name: str, doc: dict):
        path = self.out_dir / f"{name}.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({"metadata": self.meta, **doc}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.files.append(path)
        return path

    def json_lines(self, name: str, lines: list[str]):
        path = self.out_dir / f"{name}.jsonl"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"metadata": self.meta}, sort_keys=True) + "\n")
            for line in lines:
                fh.write(line + "\n")
        self.files.append(path)
        return path


def _fmt_cell(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError("non-finite value in output")
        return repr(v)
    return v


def _check_finite(rows):
    for row in rows:
        for v in row:
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError("non-finite value in output row")
    return rows


def _parse_rule(doc):
    if "elementary" in doc:
        from .rules import build_elementary

        return build_elementary(int(doc["elementary"]))
    return rule_from_json(doc)


def run_analyze_rule(params: dict, seed: int, writer: OutputWriter) -> int:
    rule = _parse_rule(params["rule"])
    verdict = analyze_rule(rule)
    doc = {"rule": params["rule"], **verdict}
    writer.json_doc("analyze-rule", doc)
    print(json.dumps(doc, sort_keys=True))
    return 0


def run_evolve_exact(params: dict, seed: int, writer: OutputWriter) -> int:
    rule = _parse_rule(params["rule"])
    noise = noise_from_json(params["noise"])
    window = _parse_window(params["window"], rule.dim)
    horizon = int(params["horizon"])
    initial_kind = params.get("initial", "all-zeros")
    surjective = params.get("surjective")
    cap = int(params["cap"]) if "cap" in params else None
    rows = []
    label = _window_label(window)
    ln2 = math.log(2.0)
    for t in range(horizon + 1):
        problem = ConeProblem(
            rule, noise, window, t, _initial_on_cone(initial_kind, rule, window, t), cap=cap
        )
        marginal = exact_window_marginal(problem)
        h = entropy(marginal)
        xi = deficiency(marginal)
        tv = tv_to_uniform(marginal)
        bound = check_evolution_bound(problem, surjective=surjective)
        rows.append([t, label, h, h / ln2, xi, tv, bound.rhs, bound.ok])
    writer.table(
        "evolve-exact",
        ["t", "window", "H_nats", "H_bits", "deficiency", "tv_to_uniform", "bound_rhs", "ok"],
        _check_finite(rows),
    )
    return 0


def _initial_on_cone(kind, rule, window, t):
    from .exact import dependence_cone

    cone = dependence_cone(window, rule, t)
    n = len(cone)
    if kind == "all-zeros":
        return np.zeros(n, dtype=np.int64)
    if kind == "all-ones":
        return np.ones(n, dtype=np.int64)
    if isinstance(kind, dict) and "pattern" in kind:
        return np.asarray(kind["pattern"], dtype=np.int64)
    raise ConfigError(f"unknown initial {kind!r}")


def run_simulate(params: dict, seed: int, writer: OutputWriter, threads: int) -> int:
    rule = _parse_rule(params["rule"])
    noise = noise_from_json(params["noise"])
    window = _parse_window(params["window"], rule.dim)
    estimator = params.get("estimator", "miller-madow")
    generator = params.get("generator", "all-zeros")
    if isinstance(generator, list):  # explicit user pattern
        generator = np.asarray(generator, dtype=np.int64)
    plan = SimulationPlan(
        rule,
        noise,
        tuple(params["sides"]),
        generator,
        int(params["horizon"]),
        int(params["replicates"]),
        seed,
        window,
        allow_wrap=bool(params.get("allow_wrap", False)),
    )
    counts = window_pattern_counts(plan, threads=threads)
    from .lattice import diameter

    n = diameter(window)
    rows = []
    for t in range(plan.horizon + 1):
        phat = counts[t] / plan.replicates
        dist = WindowDistribution(window, rule.alphabet, phat)
        tv = tv_to_uniform(dist)
        dev = phat - 1.0 / phat.size
        m = float((np.sign(dev) * phat).sum())
        se = 0.5 * math.sqrt(max(1.0 - m * m, 0.0) / plan.replicates)
        h_hat = _entropy_from_counts(counts[t], estimator)
        rows.append(
            [n, t, plan.generator_label, tv, se, h_hat, estimator, plan.replicates, seed]
        )
    writer.meta["wrap-contaminated"] = plan.wrap_contaminated
    writer.table(
        "simulate",
        ["n", "t", "generator", "tv_hat", "se", "H_hat_nats", "estimator", "R", "seed"],
        _check_finite(rows),
    )
    return 0


def _entropy_from_counts(counts: np.ndarray, estimator: str) -> float:
    codes = np.repeat(np.arange(counts.size), counts)
    return estimate_entropy(codes, method=estimator)


def run_mixing_scan(params: dict, seed: int, writer: OutputWriter, threads: int) -> int:
    rule = _parse_rule(params["rule"])
    noise = noise_from_json(params["noise"])
    estimates = mixing_scan(
        rule,
        noise,
        params["windows"],
        float(params["epsilon"]),
        int(params["horizon"]),
        int(params["replicates"]),
        seed,
        dim=int(params.get("dim", 1)),
        threads=threads,
        n_random=int(params.get("n_random", 8)),
    )
    rows = []
    curve_rows = []
    for n, est in sorted(estimates.items()):
        rows.append(
            [n, est.epsilon, est.t_mix, est.converged, est.monotone_within_3sigma,
             int(params["replicates"]), seed]
        )
        for label, curve in est.curves.items():
            for t, (tv, se) in enumerate(curve):
                curve_rows.append([n, t, label, float(tv), float(se)])
    writer.table(
        "mixing-scan",
        ["n", "epsilon", "t_mix", "converged", "monotone_within_3sigma", "R", "seed"],
        _check_finite(rows),
    )
    writer.table(
        "mixing-curves", ["n", "t", "generator", "tv_hat", "se"], _check_finite(curve_rows)
    )
    return 0


def run_verify_bounds(params: dict, seed: int, writer: OutputWriter) -> int:
    checks = params.get("checks", ["noise-lemma", "bootstrap", "superadditivity", "evolution", "pinsker"])
    reports: list[BoundReport] = []
    rng = np.random.default_rng(seed)
    if "noise-lemma" in checks:
        reports += noise_lemma_suite(
            params.get("alphabets", [[2], [3]]),
            int(params.get("instances", 100)),
            seed,
        )
    if "bootstrap" in checks:
        n_tuples = int(params.get("layout_tuples", 200))
        for _ in range(n_tuples):
            n = int(rng.integers(1, 5))
            k = int(rng.integers(1, 4))
            r = int(rng.integers(0, 3))
            t = int(rng.integers(0, 5))
            d = int(rng.integers(1, 3))
            layout = bootstrap_layout(n, k, r, t, d)
            reports.append(
                BoundReport(
                    claim="bootstrap/layout",
                    lhs=float(k * (n + 2 * r * t)),
                    rhs=float(layout.m),
                    ok=True,
                    params={"n": n, "k": k, "r": r, "t": t, "d": d},
                )
            )
    if "superadditivity" in checks:
        for _ in range(int(params.get("superadditivity_instances", 20))):
            n = int(rng.integers(1, 3))
            k = 2
            t = int(rng.integers(0, 3))
            window = hypercube(n, 1)
            alphabet = Alphabet((2,))
            probs = rng.dirichlet(np.ones(2 ** n))
            block = WindowDistribution(window, alphabet, probs)
            reports.append(check_block_superadditivity(block, k, r=1, t=t))
    if "evolution" in checks and "evolution_instance" in params:
        inst = params["evolution_instance"]
        rule = _parse_rule(inst["rule"])
        noise = noise_from_json(inst["noise"])
        window = _parse_window(inst["window"], rule.dim)
        for t in range(int(inst["horizon"]) + 1):
            problem = ConeProblem(
                rule, noise, window, t, _initial_on_cone(inst.get("initial", "all-zeros"), rule, window, t)
            )
            res = check_evolution_bound(problem, surjective=inst.get("surjective"))
            reports.append(
                BoundReport(
                    claim="evolution/entropy-floor",
                    lhs=res.lhs,
                    rhs=res.rhs,
                    ok=res.ok,
                    params={"t": t, "window": _window_label(window)},
                )
            )
            marginal = exact_window_marginal(problem)
            reports.append(
                BoundReport(
                    claim="pinsker/tv-vs-deficiency",
                    lhs=tv_to_uniform(marginal),
                    rhs=pinsker_bound(marginal),
                    ok=tv_to_uniform(marginal) <= pinsker_bound(marginal) + 1e-12,
                    params={"t": t, "window": _window_label(window)},
                )
            )
    if "decay-envelope" in checks and "decay_instance" in params:
        reports += _decay_envelope_reports(params["decay_instance"])
    writer.json_lines("verify-bounds", [r.to_json_line() for r in reports])
    failed = [r for r in reports if not r.ok and not r.caveat]
    print(f"verify-bounds: {len(reports) - len(failed)}/{len(reports)} ok")
    return EXIT_BOUND if failed else 0


def _decay_envelope_reports(inst: dict) -> list[BoundReport]:
    """User-supplied (alpha, beta) envelope against the exact TV curve: checks
    TV(t) <= alpha e^(-beta t) n^((d-1)/2) wherever t >= a log n + b."""
    from .lattice import diameter

    rule = _parse_rule(inst["rule"])
    noise = noise_from_json(inst["noise"])
    window = _parse_window(inst["window"], rule.dim)
    alpha, beta = float(inst["alpha"]), float(inst["beta"])
    gate_a, gate_b = float(inst.get("a", 0.0)), float(inst.get("b", 0.0))
    n = diameter(window)
    reports = []
    for t in range(int(inst["horizon"]) + 1):
        if not theorem_applicable(t, n, gate_a, gate_b):
            continue
        problem = ConeProblem(
            rule, noise, window, t, _initial_on_cone(inst.get("initial", "all-zeros"), rule, window, t)
        )
        tv = tv_to_uniform(exact_window_marginal(problem))
        envelope = main_theorem_bound(n, t, alpha, beta, rule.dim)
        reports.append(
            BoundReport(
                claim="main-theorem/decay-envelope",
                lhs=tv,
                rhs=envelope,
                ok=tv <= envelope + 1e-9,
                params={"t": t, "n": n, "alpha": alpha, "beta": beta},
            )
        )
    return reports


def run_circuit_mix(params: dict, seed: int, writer: OutputWriter) -> int:
    network = network_from_json(params["network"])
    noise = noise_from_json(params["noise"])
    horizon = int(params["horizon"])
    epsilon = float(params.get("epsilon", 0.01))
    exact_cap = int(params.get("exact_cap", 2 ** 20))
    d_curve, xi_curve, mode = worst_case_curve(network, noise, horizon, exact_cap=exact_cap)
    k = kappa(noise)
    h = network.alphabet.h_max
    n = network.n_sites
    rows = []
    for t in range(horizon + 1):
        rhs = math.sqrt(h / 2.0) * math.sqrt(n) * (1.0 - k) ** (t / 2.0)
        h_min = n * h - xi_curve[t]
        rows.append([t, float(d_curve[t]), rhs, float(h_min), float(xi_curve[t])])
    writer.meta["sup-mode"] = mode
    writer.table("circuit-mix", ["t", "d_phi", "bound_rhs", "H", "Xi"], _check_finite(rows))
    hit = np.nonzero(d_curve <= epsilon)[0]
    converged = bool(hit.size)
    writer.table(
        "circuit-mix-summary",
        ["epsilon", "t_mix", "converged", "mode"],
        [[epsilon, int(hit[0]) if converged else horizon + 1, converged, mode]],
    )
    return 0


def main(argv=None) -> int:
    parser = _Parser(prog="rcalab", description=__doc__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("RCA_LAB_THREADS", "1")),
            help="worker threads (default: RCA_LAB_THREADS or 1)",
        )
        p.add_argument("--format", choices=["csv", "jsonl"], help="table format")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if config["kind"] != args.kind:
            raise ConfigError(
                f"config kind {config['kind']!r} does not match subcommand {args.kind!r}"
            )
        seed = args.seed if args.seed is not None else config.get("seed")
        if seed is None and args.kind in ("simulate", "mixing-scan", "verify-bounds"):
            raise ConfigError("stochastic kinds require a seed")
        seed = int(seed or 0)
        fmt = args.format or config.get("format", "csv")
        params = config.get("params", {})
        writer = OutputWriter(args.out, config, seed, fmt)
        if args.kind == "analyze-rule":
            return run_analyze_rule(params, seed, writer)
        if args.kind == "evolve-exact":
            return run_evolve_exact(params, seed, writer)
        if args.kind == "simulate":
            return run_simulate(params, seed, writer, args.threads)
        if args.kind == "mixing-scan":
            return run_mixing_scan(params, seed, writer, args.threads)
        if args.kind == "verify-bounds":
            return run_verify_bounds(params, seed, writer)
        return run_circuit_mix(params, seed, writer)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError, TypeError) as exc:
        print(f"error: invalid config value: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
