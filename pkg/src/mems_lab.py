"""
MEMS Lab command line
Criterion scans, branch continuation, stability, certificates and Hardy-Rellich checks

Exit codes: 0 all checks passed, 1 a check failed, 2 inconclusive or invalid input
"""

import logging
import time
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional

import typer
from joblib import Parallel, delayed
from rich.console import Console
from rich.table import Table

from backend.calculus.grid import RadialGrid, make_grid
from backend.hardy_rellich.bessel_pair import POSITIVITY_FLOOR
from backend.hardy_rellich.verification import DEFAULT_TOLERANCE, verify_constituent_pairs, verify_weight_rayleigh
from backend.hardy_rellich.weights import weight_by_name
from backend.models.report import ReportDocument, merge_reports
from backend.solver.branch import (
    SAFETY_MARGIN,
    BranchResult,
    branch_on_grid,
    certified_table_bound,
    continue_branch,
    minimal_solution,
)
from backend.solver.navier import NavierSolver
from backend.solver.params import ProblemParams
from backend.stability.eigen import mu1_of_solution, navier_eigen_smallest
from backend.stability.rayleigh import K_MAX
from backend.subsolutions.cases import CaseRouter, CertificationCase
from backend.subsolutions.certificate import table1_verify, touchdown_profile_check, weight_pointwise_margin
from backend.subsolutions.profiles import H_N, canonical_weight_name, lambda_bar, regularity_criterion
from backend.utils.config import LabSettings, load_settings
from backend.utils.errors import MemsLabError, NonConvergence, SolverFailure, SpectralFailure
from backend.utils.log import setup_logging
from backend.utils.validation import ParameterValidator

logger = logging.getLogger("mems_lab")

EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2

app = typer.Typer(
    help="Numerical lab for beta Delta^2 u - tau Delta u = lambda / (1 - u)^2 on the unit ball",
    no_args_is_help=True,
    add_completion=False,
)
console = Console(stderr=True)


class OutputFormat(str, Enum):
    json = "json"
    csv = "csv"


# ==================== SHARED HELPERS ====================
def _invalid(message: str) -> typer.Exit:
    console.print(f"❌ {message}")
    return typer.Exit(EXIT_INCONCLUSIVE)


def _dimensions(dimension: Optional[int], dimension_range: Optional[str], default: str, low: int) -> List[int]:
    text = str(dimension) if dimension is not None else (dimension_range or default)
    dims, ok, message = ParameterValidator.parse_dimension_range(text, low=low)
    if not ok:
        raise _invalid(message)
    return dims


def _grid(grid_size: Optional[int], r_min: Optional[float], default_size: int, default_r_min: float) -> RadialGrid:
    size = grid_size or default_size
    r0 = r_min or default_r_min
    ok, message = ParameterValidator.validate_grid(size, r0)
    if not ok:
        raise _invalid(message)
    return make_grid(size, r0)


def _problem(N: int, beta: float, tau: float, alpha: float, gamma: float) -> ProblemParams:
    ok, message = ParameterValidator.validate_problem(N, beta, tau, alpha, gamma)
    if not ok:
        raise _invalid(message)
    return ProblemParams(N=N, beta=beta, tau=tau, alpha=alpha, gamma=gamma)


def _fan_out(job: Callable[..., Dict[str, Any]], items: Iterable[Any], n_jobs: int) -> List[Dict[str, Any]]:
    """Run independent jobs; results come back in input order"""
    return Parallel(n_jobs=n_jobs)(delayed(job)(item) for item in items)


def _provenance(started: float, settings: LabSettings, **extra: Any) -> Dict[str, Any]:
    return {"wall_time_s": time.perf_counter() - started, "settings": settings.model_dump(), **extra}


def _emit(document: ReportDocument, output: OutputFormat, out_file: Optional[Path]) -> None:
    if output is not OutputFormat.json:
        raise _invalid("CSV output exists for branch tables only")
    logger.debug("emitting %s report with %d results", document.command.get("name"), len(document.results))
    if out_file is not None:
        document.write(out_file)
    else:
        typer.echo(document.to_json().decode())


def _mark(ok: Optional[bool]) -> str:
    if ok is None:
        return "⚠️"
    return "✅" if ok else "❌"


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    """Set up logging once per invocation"""
    settings = load_settings()
    setup_logging("DEBUG" if verbose else settings.log_level)


# ==================== CRITERION ====================
def _criterion_row(N: int) -> Dict[str, Any]:
    lam, H = lambda_bar(N), H_N(N)
    return {
        "N": N,
        "lambda_bar": float(lam),
        "lambda_bar_exact": str(lam),
        "H_N": float(H),
        "H_N_exact": str(H),
        "two_lambda_bar": float(2 * lam),
        "regular": regularity_criterion(N),
        "tolerance": 0.0,
    }


@app.command()
def criterion(
    dimension: Optional[int] = typer.Option(None, "--dimension", "-N", help="Single dimension"),
    dimension_range: Optional[str] = typer.Option(None, "--dimension-range", help="e.g. 5..12"),
    output: OutputFormat = typer.Option(OutputFormat.json, "--output"),
    out_file: Optional[Path] = typer.Option(None, "--out-file"),
):
    """Regularity criterion 2 lambda_bar <= H_N, evaluated in exact rationals"""
    started = time.perf_counter()
    settings = load_settings()
    dims = _dimensions(dimension, dimension_range, "5..12", low=5)
    rows = _fan_out(_criterion_row, dims, settings.n_jobs)

    table = Table(title="Regularity criterion")
    for column in ("N", "lambda_bar", "H_N", "2 lambda_bar <= H_N"):
        table.add_column(column)
    for row in rows:
        table.add_row(str(row["N"]), f"{row['lambda_bar']:.4f}", f"{row['H_N']:.4f}", _mark(row["regular"]))
    console.print(table)

    document = ReportDocument(
        command={"name": "criterion"},
        parameters={"dimensions": dims},
        results=rows,
        provenance=_provenance(started, settings, arithmetic="exact rational"),
    )
    _emit(document, output, out_file)


# ==================== BRANCH ====================
def _branch_document(
    branch: BranchResult, tolerance: float, safety_margin: float, touchdown: Optional[Dict[str, Any]]
) -> List[Dict[str, Any]]:
    params = branch.params
    summary = {"kind": "summary", **branch.summary(), "tolerance": tolerance}
    if branch.meta.get("mode") != "fixed":
        certified = certified_table_bound(params)
        best = branch.upper_bound if certified is None else min(branch.upper_bound, certified)
        summary["upper_bounds"] = {"spectral": branch.upper_bound, "certified": certified, "best": best}
    if touchdown is not None:
        summary["touchdown_profile"] = touchdown
    points = [
        {
            "kind": "point",
            **p.to_row(),
            "energy_gap": p.energy_gap,
            "residual": p.residual,
            "tolerance": safety_margin,
        }
        for p in branch.points
    ]
    return [summary, *points]


@app.command()
def branch(
    dimension: int = typer.Option(9, "--dimension", "-N"),
    beta: float = typer.Option(1.0, "--beta"),
    tau: float = typer.Option(0.0, "--tau"),
    alpha: float = typer.Option(0.0, "--alpha", help="u on the boundary"),
    gamma: float = typer.Option(0.0, "--gamma", help="Delta u on the boundary"),
    lambdas: Optional[List[float]] = typer.Option(None, "--lambda", help="Solve at these lambdas only"),
    with_mu1: bool = typer.Option(False, "--mu1", help="Linearized first eigenvalue per point"),
    grid_size: Optional[int] = typer.Option(None, "--grid-size"),
    r_min: Optional[float] = typer.Option(None, "--r-min"),
    tolerance: float = typer.Option(1e-3, "--tolerance", help="Relative width of the lambda* bracket"),
    safety_margin: float = typer.Option(SAFETY_MARGIN, "--safety-margin"),
    output: OutputFormat = typer.Option(OutputFormat.json, "--output"),
    out_file: Optional[Path] = typer.Option(None, "--out-file"),
):
    """Minimal-solution branch and the pull-in bracket"""
    started = time.perf_counter()
    settings = load_settings()
    params = _problem(dimension, beta, tau, alpha, gamma)
    grid = _grid(grid_size, r_min, settings.grid_size, settings.r_min)

    try:
        if lambdas:
            result = branch_on_grid(params, lambdas, grid=grid, with_mu1=with_mu1, safety_margin=safety_margin)
        else:
            result = continue_branch(
                params, rel_width=tolerance, grid=grid, with_mu1=with_mu1, safety_margin=safety_margin,
            )
    except SolverFailure as exc:
        console.print(f"❌ continuation failed: {exc}")
        raise typer.Exit(EXIT_FAIL)
    except MemsLabError as exc:
        raise _invalid(str(exc))

    if not result.points:
        console.print("❌ no accepted branch point")
        raise typer.Exit(EXIT_FAIL)

    touchdown = None
    if dimension >= 5 and result.meta.get("mode") != "fixed":
        touchdown = touchdown_profile_check(result, dimension, beta)

    table = Table(title=f"Minimal branch N={dimension}")
    for column in ("lambda", "sup u", "energy", "int (1-u)^-3", "mu1"):
        table.add_column(column)
    for p in result.points:
        mu = "-" if p.mu1 is None else f"{p.mu1:.4f}"
        table.add_row(f"{p.lam:.6g}", f"{p.sup_norm:.6f}", f"{p.energy:.6g}", f"{p.inverse_cubed_mass:.6g}", mu)
    console.print(table)
    console.print(f"📌 lambda* in [{result.lambda_star_low:.6g}, {result.lambda_star_high:.6g}]")

    if output is OutputFormat.csv:
        if out_file is not None:
            result.to_csv(out_file)
        else:
            typer.echo(result.to_frame().to_csv(index=False), nl=False)
        return

    document = ReportDocument(
        command={"name": "branch"},
        parameters={**params.describe(), "lambdas": sorted(lambdas) if lambdas else None, "with_mu1": with_mu1},
        results=_branch_document(result, tolerance, safety_margin, touchdown),
        provenance=_provenance(
            started, settings, grid=grid.descriptor(), tolerances={"bracket": tolerance, "safety_margin": safety_margin},
        ),
    )
    _emit(document, output, out_file)


# ==================== STABILITY ====================
@app.command()
def stability(
    dimension: int = typer.Option(9, "--dimension", "-N"),
    beta: float = typer.Option(1.0, "--beta"),
    tau: float = typer.Option(0.0, "--tau"),
    alpha: float = typer.Option(0.0, "--alpha"),
    gamma: float = typer.Option(0.0, "--gamma"),
    lambdas: Optional[List[float]] = typer.Option(None, "--lambda", help="Linearize at these lambdas"),
    grid_size: Optional[int] = typer.Option(None, "--grid-size"),
    r_min: Optional[float] = typer.Option(None, "--r-min"),
    tolerance: float = typer.Option(1e-8, "--tolerance", help="mu1 above -tolerance counts as stable"),
    output: OutputFormat = typer.Option(OutputFormat.json, "--output"),
    out_file: Optional[Path] = typer.Option(None, "--out-file"),
):
    """First eigenvalue of the operator and of its linearization along the branch"""
    started = time.perf_counter()
    settings = load_settings()
    params = _problem(dimension, beta, tau, alpha, gamma)
    grid = _grid(grid_size, r_min, settings.grid_size, settings.r_min)

    try:
        base = navier_eigen_smallest(params, 0.0, grid=grid)
    except SpectralFailure as exc:
        raise _invalid(f"eigen solve failed: {exc}")
    results: List[Dict[str, Any]] = [
        {"kind": "operator", **base.to_dict(), "lambda_bound": 4.0 * base.mu / 27.0, "tolerance": base.residual_bound()}
    ]

    solver = NavierSolver(params, grid)
    previous = None
    unresolved = False
    for lam in sorted(set(lambdas or [])):
        entry: Dict[str, Any] = {"kind": "linearized", "lambda": lam, "tolerance": tolerance}
        try:
            point = minimal_solution(params, lam, solver=solver, start=previous.u if previous else None)
            mu = mu1_of_solution(params, lam, point.u)
        except (NonConvergence, SpectralFailure) as exc:
            entry.update(status="unresolved", reason=str(exc))
            unresolved = True
            results.append(entry)
            break
        entry.update(status="ok", mu1=mu, sup_norm=point.sup_norm, stable=mu > -tolerance)
        results.append(entry)
        previous = point

    table = Table(title=f"Stability N={dimension}")
    for column in ("lambda", "mu1", "stable"):
        table.add_column(column)
    table.add_row("0 (operator)", f"{base.mu:.6f}", _mark(base.mu > 0))
    for entry in results[1:]:
        mu = entry.get("mu1")
        table.add_row(f"{entry['lambda']:.6g}", "-" if mu is None else f"{mu:.6f}", _mark(entry.get("stable")))
    console.print(table)

    document = ReportDocument(
        command={"name": "stability"},
        parameters={**params.describe(), "lambdas": sorted(set(lambdas or []))},
        results=results,
        provenance=_provenance(started, settings, grid=grid.descriptor(), tolerances={"stable": tolerance}),
    )
    _emit(document, output, out_file)

    if any(entry.get("stable") is False for entry in results):
        raise typer.Exit(EXIT_FAIL)
    if unresolved:
        raise typer.Exit(EXIT_INCONCLUSIVE)


# ==================== CERTIFY ====================
def _certify_job(job: Dict[str, Any]) -> Dict[str, Any]:
    job = dict(job)
    case = CertificationCase(job.pop("case"))
    primary = job.pop("primary")
    tolerance = job["tolerance"]
    report = table1_verify(case=case, **job)
    return {**report.to_dict(), "primary": primary, "tolerance": 0.0, "weight_tolerance": tolerance}


@app.command()
def certify(
    dimension: Optional[int] = typer.Option(None, "--dimension", "-N"),
    dimension_range: Optional[str] = typer.Option(None, "--dimension-range", help="e.g. 9..15"),
    lambda_prime: Optional[float] = typer.Option(None, "--lambda-prime", help="Replace the tabulated lambda'"),
    tau_ratio: float = typer.Option(0.0, "--tau-ratio", help="tau / beta for the perturbed condition"),
    lambda_target: Optional[float] = typer.Option(None, "--lambda-target", help="lambda'' of the perturbed condition"),
    grid_size: Optional[int] = typer.Option(None, "--grid-size", help="Certification samples"),
    r_min: Optional[float] = typer.Option(None, "--r-min"),
    k_max: int = typer.Option(K_MAX, "--k-max"),
    tolerance: float = typer.Option(DEFAULT_TOLERANCE, "--tolerance", help="Weight quotient tolerance"),
    verify_weight: bool = typer.Option(True, "--verify-weight/--no-verify-weight"),
    output: OutputFormat = typer.Option(OutputFormat.json, "--output"),
    out_file: Optional[Path] = typer.Option(None, "--out-file"),
):
    """Certify the singular sub-solutions dimension by dimension"""
    started = time.perf_counter()
    settings = load_settings()
    dims = _dimensions(dimension, dimension_range, "9..15", low=9)
    if lambda_prime is not None and len(dims) != 1:
        raise _invalid("--lambda-prime needs a single dimension")
    M = grid_size or settings.cert_grid_size
    cut = r_min or settings.cert_r_min
    ok, message = ParameterValidator.validate_grid(M, cut)
    if not ok:
        raise _invalid(message)

    router = CaseRouter()
    jobs = []
    for N in dims:
        primary = router.route(N)
        for case in router.boundary_cases(N):
            jobs.append({
                "N": N, "case": case.value, "primary": case is primary, "M": M, "r_min": cut,
                "k_max": k_max, "verify_weight": verify_weight, "tolerance": tolerance,
                "lambda_prime": lambda_prime, "tau_ratio": tau_ratio, "lambda_target": lambda_target,
            })
    try:
        rows = _fan_out(_certify_job, jobs, settings.n_jobs)
    except MemsLabError as exc:
        raise _invalid(str(exc))

    table = Table(title="Sub-solution certificates")
    for column in ("N", "case", "lambda'", "sigma", "pde margin", "stability margin", "verdict"):
        table.add_column(column)
    for row in rows:
        marker = {"certified": True, "violated": False}.get(row["verdict"])
        label = row["case"] if row["primary"] else f"{row['case']} (alt)"
        table.add_row(
            str(row["N"]), label, f"{row['lambda_prime']:.6g}", f"{row['sigma']:.6g}",
            f"{row['margins']['pde']:.4g}", f"{row['margins']['stability']:.4g}", _mark(marker),
        )
    console.print(table)

    document = ReportDocument(
        command={"name": "certify"},
        parameters={
            "dimensions": dims, "lambda_prime": lambda_prime, "tau_ratio": tau_ratio,
            "lambda_target": lambda_target, "k_max": k_max, "verify_weight": verify_weight,
        },
        results=rows,
        provenance=_provenance(
            started, settings, grid={"M": M, "r_min": cut}, tolerances={"margin": 0.0, "weight": tolerance},
        ),
    )
    _emit(document, output, out_file)

    primary_rows = [row for row in rows if row["primary"]]
    violated = [row for row in primary_rows if row["verdict"] == "violated"]
    if violated:
        first = violated[0]
        where = first["violation"] or {}
        console.print(f"❌ N={first['N']}: {where.get('margin')} violated at r={where.get('radius')}")
        raise typer.Exit(EXIT_FAIL)
    if any(row["verdict"] != "certified" for row in primary_rows):
        raise typer.Exit(EXIT_INCONCLUSIVE)


# ==================== HARDY-RELLICH ====================
@app.command("hr-verify")
def hr_verify(
    dimension: int = typer.Option(..., "--dimension", "-N"),
    weight: str = typer.Option("classical", "--weight", help="classical | improved_31 | improved_32"),
    k_max: int = typer.Option(K_MAX, "--k-max"),
    tolerance: float = typer.Option(DEFAULT_TOLERANCE, "--tolerance"),
    scale: float = typer.Option(1.0, "--scale", help="Multiply the weight before checking"),
    pairs: bool = typer.Option(True, "--pairs/--no-pairs", help="Run the Bessel-pair ODE test"),
    grid_size: Optional[int] = typer.Option(None, "--grid-size"),
    r_min: Optional[float] = typer.Option(None, "--r-min"),
    output: OutputFormat = typer.Option(OutputFormat.json, "--output"),
    out_file: Optional[Path] = typer.Option(None, "--out-file"),
):
    """Rayleigh-quotient and pointwise checks of a Hardy-Rellich weight"""
    started = time.perf_counter()
    settings = load_settings()
    if not 0.0 <= tolerance < 1.0:
        raise _invalid(f"tolerance must lie in [0, 1), got {tolerance}")
    if scale <= 0.0:
        raise _invalid(f"scale must be positive, got {scale}")
    grid = _grid(grid_size, r_min, settings.rayleigh_grid_size, settings.rayleigh_r_min)

    try:
        candidate = weight_by_name(weight, dimension)
        if scale != 1.0:
            candidate = candidate.scaled(scale)
        verification = verify_weight_rayleigh(dimension, candidate, k_max=k_max, grid=grid, tolerance=tolerance)
        pointwise = None
        name = canonical_weight_name(weight)
        if dimension >= 9 and CaseRouter().parameters(dimension).weight == name:
            pointwise = weight_pointwise_margin(dimension, candidate)
        ode = verify_constituent_pairs(name, dimension) if pairs else []
    except MemsLabError as exc:
        raise _invalid(str(exc))

    threshold = verification.threshold
    results: List[Dict[str, Any]] = [{"kind": "weight", **candidate.to_dict(), "tolerance": tolerance}]
    results += [
        {"kind": "mode", "k": k, "quotient": q, "passed": q >= threshold, "tolerance": tolerance}
        for k, q in enumerate(verification.quotients)
    ]
    for variant, q in (("hardy", verification.hardy_quotient), ("boundary", verification.boundary_quotient)):
        if q is not None:
            results.append(
                {"kind": "first_order", "variant": variant, "quotient": q, "passed": q >= threshold,
                 "tolerance": tolerance}
            )
    if pointwise is not None:
        results.append({"kind": "pointwise", **pointwise, "tolerance": 0.0})
    results += [
        {"kind": "bessel_pair", **pair, "tolerance": POSITIVITY_FLOOR} for pair in ode
    ]

    table = Table(title=f"{candidate.name} N={dimension}")
    for column in ("check", "value", "status"):
        table.add_column(column)
    for entry in results[1:]:
        if entry["kind"] == "mode":
            table.add_row(f"mode k={entry['k']}", f"{entry['quotient']:.6f}", _mark(entry["passed"]))
        elif entry["kind"] == "first_order":
            table.add_row(f"first order ({entry['variant']})", f"{entry['quotient']:.6f}", _mark(entry["passed"]))
        elif entry["kind"] == "pointwise":
            table.add_row(
                f"W (1-w)^3 - {entry['two_sigma']:g}", f"{entry['min_margin']:.6g}", _mark(entry["passed"])
            )
        else:
            verdict = entry["verdict"]
            table.add_row(f"pair {entry['label']}", verdict, _mark({"positive": True}.get(verdict)))
    console.print(table)

    document = ReportDocument(
        command={"name": "hr-verify"},
        parameters={"N": dimension, "weight": name, "k_max": k_max, "scale": scale, "pairs": pairs},
        results=results,
        provenance=_provenance(started, settings, grid=grid.descriptor(), tolerances={"quotient": tolerance}),
    )
    _emit(document, output, out_file)

    if not verification.passed or (pointwise is not None and not pointwise["passed"]):
        raise typer.Exit(EXIT_FAIL)
    if any(pair["verdict"] == "inconclusive" for pair in ode):
        raise typer.Exit(EXIT_INCONCLUSIVE)


# ==================== REPORTS ====================
@app.command("report-merge")
def report_merge(
    files: List[Path] = typer.Argument(..., help="Reports to merge, in order"),
    out_file: Optional[Path] = typer.Option(None, "--out-file"),
):
    """Concatenate several reports into one"""
    try:
        merged = merge_reports(ReportDocument.load(path) for path in files)
    except MemsLabError as exc:
        raise _invalid(str(exc))
    console.print(f"✅ merged {len(files)} reports ({len(merged.results)} results)")
    _emit(merged, OutputFormat.json, out_file)


if __name__ == "__main__":
    app()
