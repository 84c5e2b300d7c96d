"""
Command-line front end.

    phaseplane <command> [--config PATH] [--seed N] [--out DIR] [--threads N] [--set KEY=VALUE]

Exit codes: 0 on success, 1 on other library errors, 2 when the config
does not validate, 3 on a numerical-floor violation.
"""

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from phaseplane.config import ExperimentConfig, load_config
from phaseplane.density_energy import DensityContext, EnergyContext, full_decomposition
from phaseplane.geometry import TileCollection
from phaseplane.operators import convergence_errors, schatten_test_function
from phaseplane.reports import ArtifactWriter, collect_summaries, read_json
from phaseplane.tile_type import (
    EXPERIMENTS,
    cached_wavelet,
    decomposition_level_sum,
    large_p_sum,
    major_subset,
    make_instance,
    operator_experiment,
    run_experiment,
)
from phaseplane.utils import ConfigError, NumericalFloorError, PhasePlaneError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL_FLOOR = 3

HILBERT_CHAIN = ("hilbert_basic", "weak_type", "log_tile_type")
TILE_TYPE_DEFAULT = HILBERT_CHAIN + ("fourier_tile_type", "improved_energy")
PAIRING_EXPERIMENTS = ("restricted_weak_type",)
# Sides that do not depend on p
PAIRING_SPLITS = ("restricted_weak_type_case", "two_case", "two_case_inside")
CONVERGENCE_DEGREES = (1, 2, 4, 8, 16, 32, 64)
CONVERGENCE_EXPONENTS = (4 / 3, 2.0, 4.0)
# Largest sup error allowed at the top degree
CONVERGENCE_TOLERANCE = 1e-3


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


# Commands


def wavelet_verify(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    mw = cached_wavelet(config.sampling.N, config.sampling.L)
    result = mw.verify()
    out.write_csv(
        "orthogonality",
        _csv(["shift", "error"], [(20 * n, err) for n, err in result["orthogonality"].items()]),
    )
    orthogonality = {str(k): v for k, v in result["orthogonality"].items()}
    out.write_json("wavelet", {**result, "orthogonality": orthogonality})
    return {"periodization_error": result["periodization_error"]}


def gen_tiles(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    sizes = [args.size] if args.size else list(config.ensemble.sizes)
    counts = {}
    for size in sizes:
        ensemble = make_instance(config, config.ensemble.seed, size).ensemble
        out.write_json(
            f"tiles-size{size}",
            {
                **ensemble.collection().to_json(),
                "trees": [
                    {"top": T.top.to_json(), "tiles": [P.to_json() for P in T.sorted_tiles]}
                    for T in ensemble.trees
                ],
                "evicted": [P.to_json() for P in ensemble.evicted],
                "dropped": ensemble.dropped,
            },
        )
        counts[str(size)] = len(ensemble.collection())
    return {"tile_counts": counts}


def decompose(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    if args.tiles:
        collection = TileCollection.from_json(read_json(args.tiles))
        instance = make_instance(config, config.ensemble.seed, 1, with_trees=False)
    else:
        instance = make_instance(config, config.ensemble.seed, args.size or 1)
        collection = instance.ensemble.collection()
    f, g, N, F, E = instance.pairing_inputs("E")
    decomposition = full_decomposition(
        collection.tiles,
        DensityContext(E, N),
        EnergyContext(instance.mw, f, config.q, F),
        config.alpha,
        collection.universe,
    )
    out.write_csv("trees", decomposition.to_csv())
    sums = {
        f"{p:g}": dataclasses.asdict(large_p_sum(E.measure, F.measure, config.q, config.alpha, p))
        for p in config.p_list
    }
    out.write_json(
        "decomposition",
        {
            **decomposition.to_json(),
            "level_sum": decomposition_level_sum(decomposition),
            "large_p_sums": sums,
        },
    )
    return {"tiles": len(collection), "trees": len(decomposition.trees)}


def _run_reports(config: ExperimentConfig, names, out: ArtifactWriter, exponents=(None,)):
    summary = {}
    for name in names:
        for p in exponents:
            report = run_experiment(name, config, p=p)
            stem = report.experiment.replace("[", "-").replace("]", "").replace("=", "")
            out.write_csv(stem, report.to_csv())
            out.write_json(f"{stem}-summary", report.summary())
            summary[report.experiment] = {
                "max": report.max,
                "drift": report.drift,
                "stable": report.stable(),
            }
    return summary


def tile_type(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    names = args.experiment or list(TILE_TYPE_DEFAULT)
    return _run_reports(config, names, out)


def carleson_pairing(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    summary = _run_reports(config, PAIRING_EXPERIMENTS, out, exponents=config.p_list)
    summary.update(_run_reports(config, PAIRING_SPLITS, out))
    return summary


def converge(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    rows, decreasing, converged = [], {}, {}
    for p in CONVERGENCE_EXPONENTS:
        f = schatten_test_function(config.periodic_samples, p)
        errors = convergence_errors(f, CONVERGENCE_DEGREES)
        rows.extend((p, n, err) for n, err in errors.items())
        values = list(errors.values())
        key = f"{p:g}"
        decreasing[key] = all(b <= 1.1 * a for a, b in zip(values, values[1:]))
        converged[key] = values[-1] < CONVERGENCE_TOLERANCE
        if not converged[key]:
            logger.warning("p=%g: error %.3g at degree %d", p, values[-1], CONVERGENCE_DEGREES[-1])
    out.write_csv("errors", _csv(["p", "n", "error"], rows))
    out.write_json(
        "convergence",
        {
            "degrees": list(CONVERGENCE_DEGREES),
            "decreasing": decreasing,
            "tolerance": CONVERGENCE_TOLERANCE,
            "converged": converged,
        },
    )
    return {"decreasing": decreasing, "converged": converged}


def operator_norms(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    names = [operator_experiment(name) for name in config.operators]
    summary = _run_reports(config, names, out)
    return {
        **summary,
        "maximal_level": config.maximal_level,
        "frequency_bound": config.frequency_bound,
    }


def major_subset_command(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    ensemble = config.ensemble
    rows = []
    for seed in range(ensemble.seed, ensemble.seed + ensemble.seed_count):
        F, E = make_instance(config, seed, 1, with_trees=False).sets("E")
        subset = major_subset(E, F, config.K)
        rows.append((seed, E.measure, F.measure, subset.E_tilde.measure, subset.K))
    out.write_csv("subsets", _csv(["seed", "measure_E", "measure_F", "measure_E_tilde", "K"], rows))
    halves = [r[3] >= r[1] / 2 for r in rows]
    return {"instances": len(rows), "major": int(np.sum(halves)), "max_K": max(r[4] for r in rows)}


def report(config: ExperimentConfig, args, out: ArtifactWriter) -> Dict[str, Any]:
    summaries = collect_summaries(config.output_dir)
    rows = [
        (s["file"], s["experiment"], s["instances"], s["max"], s["p95"], s["drift"])
        for s in summaries
    ]
    out.write_csv(
        "table", _csv(["file", "experiment", "instances", "max", "p95", "drift"], rows)
    )
    return {"summaries": len(rows)}


COMMANDS: Dict[str, Callable[..., Dict[str, Any]]] = {
    "wavelet-verify": wavelet_verify,
    "gen-tiles": gen_tiles,
    "decompose": decompose,
    "tile-type": tile_type,
    "carleson-pairing": carleson_pairing,
    "converge": converge,
    "operator-norms": operator_norms,
    "major-subset": major_subset_command,
    "report": report,
}


# Entry point


def _assignment(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE but got: {text}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON config file.")
    common.add_argument("--seed", type=int, default=None, help="First ensemble seed.")
    common.add_argument("--out", type=str, default=None, help="Output directory.")
    common.add_argument("--threads", type=int, default=None, help="Parallel workers (-1: all cores).")
    common.add_argument(
        "--set",
        type=_assignment,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config field by dotted path, e.g. --set alpha=0.5.",
    )
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="phaseplane", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        command = sub.add_parser(name, parents=[common])
        if name in ("gen-tiles", "decompose"):
            command.add_argument("--size", type=int, default=None, help="Ensemble size factor.")
        if name == "decompose":
            command.add_argument("--tiles", type=str, default=None, help="Tile collection JSON.")
        if name == "tile-type":
            command.add_argument(
                "--experiment", action="append", choices=sorted(EXPERIMENTS), default=None
            )
    return parser


def run(command: str, config: ExperimentConfig, args) -> int:
    out = ArtifactWriter(command, config)
    extra = COMMANDS[command](config, args, out)
    manifest = out.finish({"result": extra})
    logger.info("%s finished; manifest at %s", command, manifest)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    overrides = {
        "ensemble.seed": args.seed,
        "output_dir": args.out,
        "ensemble.threads": args.threads,
        **dict(args.set),
    }
    try:
        config = load_config(args.config, overrides)
        return run(args.command, config, args)
    except ConfigError as e:
        print(f"phaseplane: invalid config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFloorError as e:
        print(f"phaseplane: numerical floor violated: {e}", file=sys.stderr)
        return EXIT_NUMERICAL_FLOOR
    except PhasePlaneError as e:
        print(f"phaseplane: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
