from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from fredholm import granger, laurent, oracle, settings, utils
from fredholm.exceptions import FredholmError, MalformedInput, NotSingular
from fredholm.laurent import ComplementPolicy, LaurentExpansion
from fredholm.pencil import TaylorPencil

"""
Example usage:
fredholm pencil classify pencil.json
fredholm pencil laurent pencil.json --max-order 3 --complements random --seed 7
fredholm pencil verify pencil.json --nodes 256
fredholm ar classify model.json
fredholm ar represent model.json
fredholm ar simulate model.json --t 300 --output path.json
fredholm ar crossval model.json --t 300

Exit codes: 0 success, 1 verification failed, 2 invalid input,
3 unsupported pole order or no singularity, 4 unit root assumption violated.
"""

EXIT_SUCCESS = 0
EXIT_FAIL = 1


def parse_entry(entry) -> complex:
    """A number or a [re, im] pair"""
    if isinstance(entry, bool):
        raise MalformedInput(f"Invalid matrix entry {entry!r}")
    try:
        if isinstance(entry, (int, float)):
            return complex(entry)
        if (
            isinstance(entry, list)
            and len(entry) == 2
            and all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry
            )
        ):
            return complex(entry[0], entry[1])
    except OverflowError:
        raise MalformedInput(f"Matrix entry out of range {str(entry)[:40]}")
    raise MalformedInput(f"Invalid matrix entry {entry!r}")


def parse_matrix(rows, dim: int) -> np.ndarray:
    """A dim x dim matrix given as a list of rows, rejects ragged input"""
    if not isinstance(rows, list) or len(rows) != dim:
        raise MalformedInput(f"Expected {dim} rows")
    matrix = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise MalformedInput(f"Row {i} does not have {dim} entries")
        for k, entry in enumerate(row):
            matrix[i, k] = parse_entry(entry)
    if not np.all(np.isfinite(matrix)):
        raise MalformedInput("Matrix has non finite entries")
    return matrix


def serialize_matrix(matrix: np.ndarray) -> list:
    """Row major nested lists with [re, im] entries"""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix)]


def serialize_vectors(vectors: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(vectors)]


def load_document(path) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as document_file:
            document = json.load(document_file)
    except OSError as e:
        raise MalformedInput(f"Cannot read {path}: {e}")
    except (ValueError, RecursionError) as e:
        # JSONDecodeError and UnicodeDecodeError are ValueErrors
        raise MalformedInput(f"Invalid JSON in {path}: {e}")
    if not isinstance(document, dict):
        raise MalformedInput(f"{path} does not contain a JSON object")
    return document


def _dim(document: dict) -> int:
    dim = document.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise MalformedInput("dim must be a positive integer")
    return dim


def parse_pencil_doc(document: dict) -> TaylorPencil:
    """{"center": [re, im], "dim": n, "coefficients": [A_0, A_1, ...]}"""
    dim = _dim(document)
    center = parse_entry(document.get("center", 0))
    coefficients = document.get("coefficients")
    if not isinstance(coefficients, list) or len(coefficients) == 0:
        raise MalformedInput("coefficients must be a non empty list")
    return TaylorPencil([parse_matrix(c, dim) for c in coefficients], center)


def parse_model_doc(document: dict) -> tuple[granger.ARModel, granger.NoiseSpec]:
    """{"dim": n, "ar": [Phi_1, ...], "noise": {"covariance": S, "seed": s}}

    The noise defaults to identity covariance with seed 0.
    """
    dim = _dim(document)
    ar = document.get("ar")
    if not isinstance(ar, list) or len(ar) == 0:
        raise MalformedInput("ar must be a non empty list")
    model = granger.ARModel([parse_matrix(phi, dim) for phi in ar])
    noise_document = document.get("noise", {})
    if not isinstance(noise_document, dict):
        raise MalformedInput("noise must be a JSON object")
    covariance = noise_document.get("covariance")
    covariance = np.eye(dim) if covariance is None else parse_matrix(covariance, dim)
    seed = noise_document.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise MalformedInput("noise seed must be an integer")
    return model, granger.NoiseSpec(covariance, seed)


def parse_expansion_doc(
    document: dict, center: complex, dim: int
) -> LaurentExpansion:
    """Reads the report of `fredholm pencil laurent` back into an expansion

    Every coefficient must be dim x dim, the dimension of the pencil.
    """
    m = document.get("m")
    coefficients = document.get("N")
    if m not in (1, 2) or not isinstance(coefficients, dict):
        raise MalformedInput("Expansion document needs m in {1, 2} and N")
    try:
        by_index = {int(j): n_j for j, n_j in coefficients.items()}
    except ValueError:
        raise MalformedInput("Coefficient keys must be integers")
    indices = sorted(by_index)
    if len(indices) == 0 or indices[0] != -m or indices != list(
        range(-m, indices[-1] + 1)
    ):
        raise MalformedInput("Coefficients must run from -m without gaps")
    matrices = {j: parse_matrix(by_index[j], dim) for j in indices}
    return LaurentExpansion(center, m, matrices, indices[-1])


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _policy(args) -> ComplementPolicy:
    if args.complements == "random":
        return ComplementPolicy.seeded_random(args.seed)
    return ComplementPolicy.orthogonal()


def _print(report: dict):
    print(json.dumps(report, indent=2))


def classify_pencil(args) -> int:
    """Pole order of A(z)^-1 at the pencil's center."""
    pencil = parse_pencil_doc(load_document(args.input))
    policy = _policy(args)
    analysis = laurent.analyze(pencil, policy, args.rank_tol)
    _print(
        {
            "order": analysis.order,
            "dim_K": analysis.dim_K,
            "dim_K1": analysis.dim_K1,
            "dim_R_defect": analysis.defect,
            "complements_mode": policy.name,
            "rank_tol": args.rank_tol,
        }
    )
    return EXIT_SUCCESS


def _expansion(pencil: TaylorPencil, args) -> LaurentExpansion:
    analysis = laurent.analyze(pencil, _policy(args), args.rank_tol)
    if analysis.order == 0:
        raise NotSingular("no singularity at center")
    return laurent.laurent_expansion(analysis, pencil, args.max_order)


def laurent_pencil(args) -> int:
    """Laurent coefficients N_-m .. N_J."""
    pencil = parse_pencil_doc(load_document(args.input))
    expansion = _expansion(pencil, args)
    _print(
        {
            "m": expansion.order,
            "center": [expansion.center.real, expansion.center.imag],
            "J": expansion.J,
            "complements_mode": _policy(args).name,
            "rank_tol": args.rank_tol,
            "N": {str(j): serialize_matrix(n_j) for j, n_j in expansion.items()},
        }
    )
    return EXIT_SUCCESS


def verify_pencil(args) -> int:
    """Checks an expansion against contour integrals and the identity expansion."""
    pencil = parse_pencil_doc(load_document(args.input))
    analysis = laurent.analyze(pencil, _policy(args), args.rank_tol)
    if analysis.order == 0:
        raise NotSingular("no singularity at center")
    if args.expansion is not None:
        expansion = parse_expansion_doc(
            load_document(args.expansion), pencil.center, pencil.dim
        )
    else:
        expansion = laurent.laurent_expansion(analysis, pencil, args.max_order)
    if args.radius is None:
        spec = oracle.default_contour(pencil, nodes=args.nodes)
    else:
        spec = oracle.ContourSpec(pencil.center, args.radius, args.nodes)
        oracle.validate_contour(pencil, spec)
    deviations = oracle.compare_expansion(expansion, pencil, spec)
    residuals = {
        k: laurent.identity_residual(expansion, pencil, k)
        for k in range(-expansion.order, expansion.J - expansion.order + 1)
    }
    display_deviation = None
    if analysis.order == expansion.order:
        displayed = laurent.displayed_expansion(analysis, pencil, expansion.J)
        display_deviation = laurent.max_deviation(expansion, displayed)
        if display_deviation > settings.verify_tol:
            utils.warning("verify", "closed form deviation", display_deviation)
    worst = max(list(deviations.values()) + list(residuals.values()))
    passed = worst <= settings.verify_tol and analysis.order == expansion.order
    _print(
        {
            "status": "PASS" if passed else "FAIL",
            "m": expansion.order,
            "detected_order": analysis.order,
            "contour": {
                "radius": spec.radius,
                "nodes": spec.nodes,
                "deviation": {str(j): d for j, d in deviations.items()},
            },
            "identity_residual": {str(k): r for k, r in residuals.items()},
            "closed_form_deviation": display_deviation,
            "max_deviation": worst,
            "tolerance": settings.verify_tol,
        }
    )
    return EXIT_SUCCESS if passed else EXIT_FAIL


def _model(args) -> tuple[granger.ARModel, granger.NoiseSpec]:
    model, noise = parse_model_doc(load_document(args.input))
    if getattr(args, "seed", None) is not None:
        noise = granger.NoiseSpec(noise.covariance, args.seed)
    return model, noise


def classify_ar(args) -> int:
    """Order of integration of an AR model."""
    model, _ = _model(args)
    representation = granger.classify_integration(model, rank_tol=args.rank_tol)
    analysis = representation.expansion.analysis
    _print(
        {
            "d": representation.d,
            "N_minus1": serialize_matrix(representation.N_minus1),
            "N_minus2": serialize_matrix(representation.N_minus2),
            "dim_K": analysis.dim_K if analysis is not None else None,
            "dim_K1": analysis.dim_K1 if analysis is not None else None,
            "rank_tol": args.rank_tol,
        }
    )
    return EXIT_SUCCESS


def represent_ar(args) -> int:
    """Random walk coefficients and truncated moving average filter."""
    model, _ = _model(args)
    representation = granger.represent(
        model,
        rank_tol=args.rank_tol,
        max_ma=args.max_ma,
        method=granger.ma_method_mapping[args.method.upper()],
    )
    _print(
        {
            "d": representation.d,
            "N_minus1": serialize_matrix(representation.N_minus1),
            "N_minus2": serialize_matrix(representation.N_minus2),
            "J": representation.J,
            "tail_bound": _finite_or_none(representation.tail_bound),
            "ma": [serialize_matrix(phi) for phi in representation.ma],
            "tail_tol": settings.ma_tail_tol,
        }
    )
    return EXIT_SUCCESS


def simulate_ar(args) -> int:
    """Simulates the AR recursion."""
    model, noise = _model(args)
    burnin = 100 if args.burnin is None else args.burnin
    path = granger.simulate_ar(model, noise, args.t, burnin)
    document = {
        "T": path.T,
        "burnin": path.burnin,
        "seed": noise.seed,
        "values": serialize_vectors(path.values),
    }
    if args.output is None:
        _print(document)
    else:
        with open(args.output, "w", encoding="utf-8") as output_file:
            json.dump(document, output_file, indent=2)
        _print({"output": str(Path(args.output)), "T": path.T, "seed": noise.seed})
    return EXIT_SUCCESS


def crossval_ar(args) -> int:
    """Compares the AR recursion with the representation on shared innovations."""
    model, noise = _model(args)
    representation = granger.represent(
        model, rank_tol=args.rank_tol, max_ma=args.max_ma
    )
    report = granger.cross_validate(model, representation, noise, args.t, args.burnin)
    _print(
        {
            "status": "PASS" if report.passed else "FAIL",
            "d": report.d,
            "T": report.T,
            "J": representation.J,
            "residual": report.residual,
            "tau0": serialize_vectors([report.tau0])[0],
            "tau1": serialize_vectors([report.tau1])[0],
            "tolerance": report.tol,
            "seed": noise.seed,
        }
    )
    return EXIT_SUCCESS if report.passed else EXIT_FAIL


def _error_report(e: FredholmError) -> dict:
    report: dict[str, Any] = {"error": type(e).__name__, "message": str(e)}
    roots = getattr(e, "roots", None)
    if roots:
        report["roots"] = [[float(r.real), float(r.imag)] for r in roots]
    analysis = getattr(e, "analysis", None)
    if analysis is not None:
        report["dim_K"] = analysis.dim_K
        report["dim_K1"] = analysis.dim_K1
    return report


def _add_pencil_flags(parser: argparse.ArgumentParser):
    parser.add_argument("input", help="Pencil JSON document")
    parser.add_argument(
        "--rank-tol",
        type=float,
        default=settings.rank_tol,
        help="Relative rank tolerance",
    )
    parser.add_argument(
        "--complements",
        choices=["orthogonal", "random"],
        default=(
            "random"
            if settings.complement_mode == settings.ComplementMode.SEEDED_RANDOM
            else "orthogonal"
        ),
        help="Choice of complementary subspaces",
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="Seed of random complements"
    )


def _add_model_flags(parser: argparse.ArgumentParser):
    parser.add_argument("input", help="Model JSON document")
    parser.add_argument(
        "--rank-tol",
        type=float,
        default=settings.rank_tol,
        help="Relative rank tolerance",
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="Overrides the noise seed"
    )
    parser.add_argument(
        "--max-ma",
        type=int,
        default=settings.ma_cap,
        help="Cap on moving average coefficients",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fredholm", description=settings.fredholm_about_text
    )
    parser.add_argument("--debug", action="store_true", help="Debug logging")
    groups = parser.add_subparsers(help="Available commands.")

    pencil_parser = groups.add_parser("pencil", help="Matrix pencil inversion.")
    pencil_commands = pencil_parser.add_subparsers(help="Pencil commands.")

    classify_parser = pencil_commands.add_parser(
        "classify", help="Pole order at the center."
    )
    _add_pencil_flags(classify_parser)
    classify_parser.set_defaults(callback=classify_pencil)

    laurent_parser = pencil_commands.add_parser(
        "laurent", help="Laurent coefficients of the inverse."
    )
    _add_pencil_flags(laurent_parser)
    laurent_parser.add_argument(
        "--max-order", type=int, default=3, help="Last coefficient index J"
    )
    laurent_parser.set_defaults(callback=laurent_pencil)

    verify_parser = pencil_commands.add_parser(
        "verify", help="Check the expansion against contour integrals."
    )
    _add_pencil_flags(verify_parser)
    verify_parser.add_argument(
        "--max-order", type=int, default=3, help="Last coefficient index J"
    )
    verify_parser.add_argument("--radius", type=float, help="Contour radius")
    verify_parser.add_argument(
        "--nodes", type=int, default=settings.contour_nodes, help="Contour nodes"
    )
    verify_parser.add_argument(
        "--expansion", help="Laurent report to check instead of recomputing"
    )
    verify_parser.set_defaults(callback=verify_pencil)

    ar_parser = groups.add_parser("ar", help="Autoregressive models.")
    ar_commands = ar_parser.add_subparsers(help="AR commands.")

    ar_classify_parser = ar_commands.add_parser(
        "classify", help="Order of integration."
    )
    _add_model_flags(ar_classify_parser)
    ar_classify_parser.set_defaults(callback=classify_ar)

    represent_parser = ar_commands.add_parser(
        "represent", help="Granger-Johansen representation."
    )
    _add_model_flags(represent_parser)
    represent_parser.add_argument(
        "--method",
        choices=["auto", "laurent", "recursion"],
        default="auto",
        help="Moving average coefficient method",
    )
    represent_parser.set_defaults(callback=represent_ar)

    simulate_parser = ar_commands.add_parser("simulate", help="Simulate a path.")
    _add_model_flags(simulate_parser)
    simulate_parser.add_argument("--t", type=int, default=300, help="Path length")
    simulate_parser.add_argument("--burnin", type=int, help="Pre-sample innovations")
    simulate_parser.add_argument("--output", help="Path JSON file")
    simulate_parser.set_defaults(callback=simulate_ar)

    crossval_parser = ar_commands.add_parser(
        "crossval", help="Cross validate the representation."
    )
    _add_model_flags(crossval_parser)
    crossval_parser.add_argument("--t", type=int, default=300, help="Path length")
    crossval_parser.add_argument("--burnin", type=int, help="Pre-sample innovations")
    crossval_parser.set_defaults(callback=crossval_ar)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Run the fredholm command line program"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.debug:
        utils.enable_debug()
    if not hasattr(args, "callback"):
        parser.print_help()
        return EXIT_SUCCESS
    try:
        return args.callback(args)
    except FredholmError as e:
        utils.info("fredholm", type(e).__name__, str(e))
        _print(_error_report(e))
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
