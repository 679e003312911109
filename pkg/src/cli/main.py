import argparse
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from src.cli.reports import FORMATS, CommandOutput, emit_report
from src.config.logging_config import setup_logging
from src.config.settings import settings
from src.core.point import PARAMETER_NAMES, EWPoint, to_spherical
from src.core.spectrum import spectrum
from src.data.point_loader import point_from_json, points_from_csv
from src.geometry.curvature import curvature_closed_form, scalar_curvature_fd
from src.geometry.metric import (
    VolumeElementCase,
    bures_tensor,
    pullback_to_cartesian,
    sd_tensor_cartesian,
    sd_tensor_spherical,
    volume_element,
)
from src.montecarlo.boundary import SAMPLING_MODES, boundary_area_ratio
from src.montecarlo.estimator import conditional_probability, estimate_probabilities
from src.montecarlo.sampler import sample_ew
from src.oracle.density import (
    DensityMatrix,
    max_relative_deviation,
    random_density_matrix,
    sd_tensor_direct,
    twirl,
)
from src.quadrature.targets import run_target
from src.regions.predicates import resolve_region
from src.regions.raster import AXES, cross_section_raster
from src.regions.spec import load_region_spec
from src.schemas.reports import QuadratureTarget, RunConfig
from src.utils.exceptions import (
    ConsistencyError,
    DegenerateSpectrum,
    EWGeometryError,
    InvalidParameters,
)
from src.utils.validators import validate, validate_with_slack

# flags recorded with a report but kept out of its digest
EXECUTION_FLAGS = ("workers", "format", "out", "log_level")
NOT_RECORDED = {"command", "handler"}


def _count(text: str) -> int:
    """Integer flag that also accepts 1e8-style values"""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count, got {text!r}")
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer count, got {text!r}")
    return int(value)


def _case(args: argparse.Namespace) -> VolumeElementCase:
    return VolumeElementCase(args.case)


def _points(args: argparse.Namespace) -> List[EWPoint]:
    if getattr(args, "point", None):
        return [point_from_json(args.point)]
    if getattr(args, "points", None):
        return points_from_csv(args.points)
    raise InvalidParameters("give a point with --point or a CSV file with --points")


def _single_point(args: argparse.Namespace) -> EWPoint:
    if not args.point:
        raise InvalidParameters("--point is required")
    return point_from_json(args.point)


def cmd_validate(args: argparse.Namespace) -> CommandOutput:
    qubit = _case(args) is VolumeElementCase.QUBIT
    rows = []
    for p in _points(args):
        result = validate_with_slack(p, args.slack, qubit=qubit) if args.slack else validate(p, qubit=qubit)
        rows.append({"point": p.to_document(), "valid": result.valid, "violations": result.violations})
    frame = pd.DataFrame([
        dict(zip(PARAMETER_NAMES, (r["point"]["r_minus"], r["point"]["r_plus"], *r["point"]["r"])),
             valid=r["valid"], violations="; ".join(r["violations"]))
        for r in rows
    ])
    logger.info(f"{sum(r['valid'] for r in rows)}/{len(rows)} point(s) valid")
    return CommandOutput(result=rows, frame=frame)


def cmd_tensor(args: argparse.Namespace) -> CommandOutput:
    p = _single_point(args)
    case = _case(args)
    if args.oracle_d:
        tensor = sd_tensor_direct(p, args.oracle_d)
        method = f"direct eigendecomposition at d={args.oracle_d}"
    elif args.coords == "spherical":
        tensor = sd_tensor_spherical(to_spherical(p), case)
        method = "closed form, spherical coordinates"
    else:
        tensor = sd_tensor_cartesian(p, case)
        method = "closed form, Cartesian coordinates"
    if args.bures:
        tensor = bures_tensor(tensor)
    document = dict(tensor.to_document(), point=p.to_document(), case=case.value,
                    normalization="bures" if args.bures else "sd", method=method)
    # the spherical chart needs sin(theta) > 0
    if args.coords == "cartesian" and not args.oracle_d and np.hypot(p.r2, p.r3) > 0:
        pulled = pullback_to_cartesian(sd_tensor_spherical(to_spherical(p), case), p)
        reference = sd_tensor_cartesian(p, case)
        document["pullback_max_relative_deviation"] = max_relative_deviation(pulled.matrix, reference.matrix)
    frame = pd.DataFrame(tensor.matrix, columns=list(tensor.labels))
    frame.insert(0, "row", list(tensor.labels))
    return CommandOutput(result=document, frame=frame)


def cmd_volume_element(args: argparse.Namespace) -> CommandOutput:
    case = _case(args)
    rows = [{"point": p.to_document(), "volume_element": volume_element(p, case)} for p in _points(args)]
    frame = pd.DataFrame([
        dict(zip(PARAMETER_NAMES, (r["point"]["r_minus"], r["point"]["r_plus"], *r["point"]["r"])),
             volume_element=r["volume_element"])
        for r in rows
    ])
    return CommandOutput(result={"case": case.value, "values": rows}, frame=frame)


def cmd_spectrum(args: argparse.Namespace) -> CommandOutput:
    p = _single_point(args)
    spec = spectrum(p, args.d)
    entries = [{"eigenvalue": e.eigenvalue, "multiplicity": e.multiplicity} for e in spec]
    document = {
        "point": p.to_document(),
        "d": args.d,
        "entries": entries,
        "weighted_sum": spec.weighted_sum(),
        "min_eigenvalue": spec.min_eigenvalue(),
    }
    return CommandOutput(result=document, frame=pd.DataFrame(entries))


def cmd_oracle_check(args: argparse.Namespace) -> CommandOutput:
    """Closed-form tensor against the direct computation at random interior points"""
    case = VolumeElementCase.QUBIT if args.d == 2 else VolumeElementCase.GENERAL
    candidates, _ = sample_ew(case, max(args.n * 200, 10_000), args.seed)
    rows, skipped = [], 0
    for x in candidates:
        if len(rows) == args.n:
            break
        p = EWPoint.from_array(x)
        if p.r0 - p.R < args.margin or p.r_plus < args.margin or (case is VolumeElementCase.GENERAL
                                                                  and p.r_minus < args.margin):
            continue
        try:
            direct = sd_tensor_direct(p, args.d)
        except DegenerateSpectrum:
            skipped += 1
            continue
        closed = sd_tensor_cartesian(p, case)
        rows.append(dict(zip(PARAMETER_NAMES, x.tolist()),
                         max_relative_deviation=max_relative_deviation(direct.matrix, closed.matrix)))
    if len(rows) < args.n:
        raise InvalidParameters(f"only {len(rows)} interior point(s) found; lower --margin")
    frame = pd.DataFrame(rows)
    worst = float(frame["max_relative_deviation"].max())
    document = {"d": args.d, "case": case.value, "points": len(rows), "skipped_degenerate": skipped,
                "tolerance": args.tol, "max_relative_deviation": worst, "passed": worst <= args.tol}
    if worst > args.tol:
        logger.error(f"closed form and direct tensor differ by {worst:.3g} (tolerance {args.tol:g})")
        raise ConsistencyError(f"oracle mismatch {worst:.3g} exceeds {args.tol:g} at d={args.d}")
    logger.success(f"oracle agreement at d={args.d}: max relative deviation {worst:.3g}")
    return CommandOutput(result=document, frame=frame)


def cmd_curvature(args: argparse.Namespace) -> CommandOutput:
    p = _single_point(args)
    s = to_spherical(p)
    value = scalar_curvature_fd(s, args.step, sd=args.sd)
    closed = curvature_closed_form(p.r0, sd=args.sd)
    document = {
        "point": p.to_document(),
        "normalization": "sd" if args.sd else "bures",
        "finite_difference": value,
        "closed_form": closed,
        "relative_deviation": abs(value - closed) / abs(closed),
    }
    frame = pd.DataFrame([dict(zip(PARAMETER_NAMES, p.as_array().tolist()), finite_difference=value,
                               closed_form=closed)])
    return CommandOutput(result=document, frame=frame)


def cmd_estimate(args: argparse.Namespace) -> CommandOutput:
    case = _case(args)
    regions = [resolve_region(name, case, args.d) for name in args.region]
    if args.given:
        given = resolve_region(args.given, case, args.d)
        reports = [
            conditional_probability(region, given, case, args.subsamples, args.points_per, args.seed,
                                    args.workers, args.chunk_size)
            for region in regions
        ]
    else:
        reports = estimate_probabilities(regions, case, args.subsamples, args.points_per, args.seed,
                                         args.workers, args.chunk_size, dump_path=args.dump)
    frame = pd.DataFrame([
        dict(region=r.region, **s.model_dump()) for r in reports for s in r.subsamples
    ])
    return CommandOutput(result=reports if len(reports) > 1 else reports[0], frame=frame)


def cmd_quadrature(args: argparse.Namespace) -> CommandOutput:
    region = load_region_spec(Path(args.region)) if args.region else None
    report = run_target(QuadratureTarget(args.target), region, args.tol)
    labeled = report.values + [v for v in (report.upper_bound, report.reproduced, report.total_ratio) if v]
    frame = pd.DataFrame([v.model_dump(mode="json") for v in labeled]) if labeled else None
    return CommandOutput(result=report, frame=frame)


def cmd_boundary(args: argparse.Namespace) -> CommandOutput:
    case = _case(args)
    report = boundary_area_ratio(
        resolve_region(args.numerator, case, args.d),
        resolve_region(args.denominator, case, args.d),
        case, args.n, seed=args.seed, sampling=args.sampling, chunk_size=args.chunk_size, workers=args.workers,
    )
    frame = pd.DataFrame([report.numerator.model_dump(), report.denominator.model_dump()])
    return CommandOutput(result=report, frame=frame)


def cmd_raster(args: argparse.Namespace) -> CommandOutput:
    plane = tuple(axis.strip() for axis in args.plane.split(","))
    specs = [load_region_spec(Path(path)) for path in args.region] if args.region else None
    grid = cross_section_raster(args.rminus, args.rplus, plane, args.res, specs, args.offset)
    return CommandOutput(result=grid.legend(), frame=grid.to_frame(), grid=grid)


def cmd_twirl(args: argparse.Namespace) -> CommandOutput:
    if args.matrix:
        try:
            matrix = np.load(args.matrix)
        except (OSError, ValueError) as e:
            raise InvalidParameters(f"cannot load density matrix from {args.matrix!r}: {e}") from e
        rho = DensityMatrix.from_matrix(matrix, args.d)
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
        rho = random_density_matrix(args.d, rng, args.rank)
    p = twirl(rho)
    result = validate_with_slack(p, qubit=False)
    document = {"d": rho.d, "point": p.to_document(), "valid": result.valid, "violations": result.violations}
    frame = pd.DataFrame([dict(zip(PARAMETER_NAMES, p.as_array().tolist()), valid=result.valid)])
    return CommandOutput(result=document, frame=frame)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=None, help="report format (default json; pgm for raster)")
    common.add_argument("--out", default=None, help="output path; stdout when omitted")
    common.add_argument("--log-level", default=None, help="loguru level for stderr logging")
    return common


def _add_case(parser: argparse.ArgumentParser, default: str = "general"):
    parser.add_argument("--case", choices=[c.value for c in VolumeElementCase], default=default)


def _add_points(parser: argparse.ArgumentParser):
    parser.add_argument("--point", help='JSON point, e.g. {"r_minus": 0.1, "r_plus": 0.2, "r": [0.3, 0, 0]}')
    parser.add_argument("--points", help="CSV file with columns r_minus, r_plus, r1, r2, r3")


def _add_sampling(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=settings.default_seed)
    parser.add_argument("--workers", type=int, default=settings.default_workers)
    parser.add_argument("--chunk-size", type=_count, default=settings.chunk_size)
    parser.add_argument("--d", type=int, default=None, help="dimension for the PPT oracle (2 qubit, 3 general)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewgeo",
        description="Bures / statistical-distinguishability geometry of Eggeling-Werner tripartite states",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    p = sub.add_parser("validate", parents=[common], help="check EW point validity")
    _add_case(p)
    _add_points(p)
    p.add_argument("--slack", type=float, default=0.0, help="relax every inequality by this amount")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("tensor", parents=[common], help="SD metric tensor at a point")
    _add_case(p)
    p.add_argument("--point", required=True)
    p.add_argument("--coords", choices=("cartesian", "spherical"), default="cartesian")
    p.add_argument("--bures", action="store_true", help="Bures normalization (SD / 4)")
    p.add_argument("--oracle-d", type=int, default=None, help="compute from the explicit density matrix at this d")
    p.set_defaults(handler=cmd_tensor)

    p = sub.add_parser("volume-element", parents=[common], help="SD volume element")
    _add_case(p)
    _add_points(p)
    p.set_defaults(handler=cmd_volume_element)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues and multiplicities")
    p.add_argument("--point", required=True)
    p.add_argument("--d", type=int, default=3)
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("oracle-check", parents=[common], help="closed-form tensor against the density-matrix oracle")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--n", type=_count, default=100)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--margin", type=float, default=1e-3, help="minimum distance from the singular set")
    p.set_defaults(handler=cmd_oracle_check)

    p = sub.add_parser("curvature", parents=[common], help="finite-difference scalar curvature")
    p.add_argument("--point", required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--sd", action="store_true", help="SD normalization instead of Bures")
    p.set_defaults(handler=cmd_curvature)

    p = sub.add_parser("estimate", parents=[common], help="Monte Carlo SD probabilities")
    _add_case(p)
    p.add_argument("--region", action="append", required=True,
                   help="ppt-oracle, all, a shipped spec name or a spec file; repeatable")
    p.add_argument("--given", default=None, help="condition on this region")
    p.add_argument("--subsamples", type=_count, default=settings.subsamples)
    p.add_argument("--points-per", type=_count, default=settings.points_per_subsample)
    p.add_argument("--dump", default=None, help="CSV dump of accepted points with weights")
    _add_sampling(p)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("quadrature", parents=[common], help="deterministic integrals")
    p.add_argument("--target", choices=[t.value for t in QuadratureTarget], required=True)
    p.add_argument("--region", default=None, help="region spec file overriding the target's default")
    p.add_argument("--tol", type=float, default=settings.quadrature_tolerance)
    p.set_defaults(handler=cmd_quadrature)

    p = sub.add_parser("boundary", parents=[common], help="ratio of SD boundary areas")
    _add_case(p)
    p.add_argument("--numerator", default="trisep_quoted")
    p.add_argument("--denominator", default="bisep_necessary")
    p.add_argument("--n", type=_count, default=1_000_000)
    p.add_argument("--sampling", choices=SAMPLING_MODES, default="cube")
    _add_sampling(p)
    p.set_defaults(handler=cmd_boundary)

    p = sub.add_parser("raster", parents=[common], help="labeled Bloch-ball cross-section")
    p.add_argument("--rminus", type=float, required=True)
    p.add_argument("--rplus", type=float, required=True)
    p.add_argument("--res", type=int, default=512)
    p.add_argument("--plane", default="r1,r2", help=f"two axes among {','.join(AXES)}")
    p.add_argument("--offset", type=float, default=0.0, help="value of the third Bloch axis")
    p.add_argument("--region", action="append", default=None, help="spec file(s); conjoined")
    p.set_defaults(handler=cmd_raster)

    p = sub.add_parser("twirl", parents=[common], help="project a tripartite state onto the EW family")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--matrix", default=None, help=".npy file holding a d^3 x d^3 density matrix")
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--rank", type=int, default=None)
    p.set_defaults(handler=cmd_twirl)

    return parser


def _json_safe(value: Any) -> Any:
    return str(value) if isinstance(value, Path) else value


def run_config(args: argparse.Namespace) -> RunConfig:
    """Every flag of the run, split into result-shaping arguments and execution settings"""
    flags = {key: _json_safe(value) for key, value in sorted(vars(args).items()) if key not in NOT_RECORDED}
    return RunConfig(
        command=args.command,
        arguments={k: v for k, v in flags.items() if k not in EXECUTION_FLAGS},
        execution={k: flags.get(k) for k in EXECUTION_FLAGS},
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run one subcommand and write its report

    Returns:
        Exit code: 0 success, 2 invalid input, 3 non-convergence, 4 boundary
        singularity, 5 degenerate spectrum, 6 consistency failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(args.log_level)
    handler: Callable[[argparse.Namespace], CommandOutput] = args.handler
    fmt = args.format or ("pgm" if args.command == "raster" else "json")
    logger.info(f"ewgeo {args.command}")
    try:
        output = handler(args)
        emit_report(output, fmt, args.out, run_config(args))
    except EWGeometryError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return 0


def main():
    sys.exit(run())
