"""
Command line front end.

    faltings-height eval ghyp 1+0i
    faltings-height height cyclotomic:6
    faltings-height lower --replay frozen_families.json
    faltings-height upper --center 0.205
    faltings-height scan --max_degree 8 --threshold -0.748623
    faltings-height verify propB

Exit codes: 0 success, 2 invalid input, 3 non convergence, 4 failed
certificate or inconsistent bounds. With `--out DIR` every run writes its
reports, `manifest.json` and `run.log.jsonl` to `DIR/<command>-<hash12>/`,
and `--csv FILE` writes the tabular part of any report to FILE.
"""

import sys
from contextlib import contextmanager

from fire import Fire
from fire.core import FireExit

import faltings_height
from faltings_height.bounds.circles import (
    BoundInconsistency,
    analytic_upper_bound,
    circle_integral,
    circle_integral_hhat,
    optimize_center,
    sweep_centers,
    zhang_bound,
)
from faltings_height.bounds.sections import (
    SectionFamily,
    global_infimum,
    optimize_exponents,
    replay_families,
)
from faltings_height.distortion.certificates import CertificateFailure, run_suite
from faltings_height.general.config import load_config
from faltings_height.general.constants import MU_LOWER, MU_UPPER
from faltings_height.general.errors import DomainError, NonConvergence
from faltings_height.general.reports import (
    RunManifest,
    dumps,
    inputs_hash,
    run_directory,
    write_csv,
    write_json,
    write_manifest,
)
from faltings_height.general.time import timed
from faltings_height.heights.height import G_HYP_TOL, faltings_height as height_of
from faltings_height.heights.polynomials import IntegerPolynomial
from faltings_height.logging.logger import add_run_log, get_logger, remove_run_log
from faltings_height.modular import core
from faltings_height.modular.inversion import invert_j
from faltings_height.spectrum.scan import (
    scan_cyclotomics,
    scan_polynomials,
    spectrum_report,
)

logger = get_logger("faltings_height")

EVAL_FUNCTIONS = ("j", "ginf", "ghyp", "E2", "E4", "E6", "E2star", "delta")


def parse_complex(point) -> complex:
    """Read `a+bi` (or a plain number) into a complex"""
    if isinstance(point, (int, float, complex)):
        return complex(point)
    text = str(point).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(text)
    except ValueError as err:
        raise DomainError(f"Cannot read a complex number from {point=}") from err


def _parse_pair(value) -> tuple[float, float]:
    if isinstance(value, str):
        value = value.split(",")
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as err:
        raise DomainError(f"Expected lo,hi but got {value=}") from err
    return lo, hi


class _Run:
    """Output handling of a single command"""

    def __init__(
        self, command: str, inputs: dict, out: str | None, json: bool, csv: str | None = None
    ):
        self.command = command
        self.inputs = inputs
        self.json = json
        self.csv = csv
        self.digest = inputs_hash({"command": command, **inputs})
        self.dir = None if out is None else run_directory(out, command, self.digest)
        self.manifest = RunManifest(
            command=command,
            inputs_hash=self.digest,
            tool_version=faltings_height.__version__,
            inputs=inputs,
        )

    def emit(self, name: str, obj, summary: str):
        """Print the summary or the json, and write the report file"""
        print(dumps(obj) if self.json else summary)
        if self.dir is not None:
            path = write_json(self.dir / f"{name}.json", obj)
            self.manifest.outputs.append(path.name)

    def table(self, name: str, rows: list[dict]):
        """Write the rows to the run directory and to `--csv`, when given"""
        if self.dir is not None:
            path = write_csv(self.dir / f"{name}.csv", rows)
            self.manifest.outputs.append(path.name)
        if self.csv is not None:
            write_csv(self.csv, rows)


@contextmanager
def _run(
    command: str,
    inputs: dict,
    out: str | None = None,
    json: bool = False,
    csv: str | None = None,
):
    run = _Run(command, inputs, out, json, csv)
    hdl = None
    if run.dir is not None:
        hdl = add_run_log(logger, run.dir / "run.log.jsonl")
    try:
        with timed(run.manifest.timings, command):
            yield run
    except BaseException as err:
        run.manifest.exit_code = exit_code(err)
        raise
    finally:
        if run.dir is not None:
            write_manifest(run.dir, run.manifest)
            remove_run_log(logger, hdl)


def exit_code(err: BaseException) -> int:
    if isinstance(err, (CertificateFailure, BoundInconsistency)):
        return 4
    if isinstance(err, NonConvergence):
        return 3
    if isinstance(err, DomainError):
        return 2
    return 1


class FaltingsHeightCLI:
    """Faltings heights of algebraic numbers and bounds for their essential minimum"""

    def eval(
        self,
        what: str,
        point,
        order: int = None,
        json: bool = False,
        out: str = None,
        csv: str = None,
    ):
        """
        Evaluate a modular function. `point` is tau for j, ginf, E2, E4, E6,
        E2star and delta, and zeta for ghyp.
        """
        if what not in EVAL_FUNCTIONS:
            raise DomainError(f"Unknown function {what=}, valid: {EVAL_FUNCTIONS}")
        cfg = load_config(**{"series.order": order})
        order = cfg["series"]["order"]
        z = parse_complex(point)

        with _run("eval", {"what": what, "point": z, "order": order}, out, json, csv) as run:
            if what == "ghyp":
                res = invert_j(z, order=order)
                value = core.g_infinity(res.tau, order)
                error = G_HYP_TOL
            elif what == "j":
                value, error = core.j_invariant(z, order), 0.0
            elif what == "ginf":
                value, error = core.g_infinity(z, order), 0.0
            elif what == "delta":
                res = core.delta(z, order)
                value, error = res.value, res.tail_bound
            else:
                res = core.eisenstein(what, z, order)
                value, error = res.value, res.tail_bound
            row = {"function": what, "point": z, "value": value, "error_estimate": error}
            run.table("eval", [row])
            run.emit(
                "eval",
                row,
                f"{what}({z}) = {value} +- {error:.1e}",
            )

    def height(
        self, poly, order: int = None, json: bool = False, out: str = None, csv: str = None
    ):
        """Stable Faltings height of a root of `poly` ("c0,c1,..." or "cyclotomic:n")"""
        cfg = load_config(**{"series.order": order})
        poly = IntegerPolynomial.parse(poly)
        with _run("height", {"poly": str(poly)}, out, json, csv) as run:
            res = height_of(poly, cfg["series"]["order"])
            run.table(
                "height",
                [
                    {
                        "poly": str(poly),
                        "archimedean": res.archimedean,
                        "finite": res.finite,
                        "height": res.total,
                        "error_estimate": res.error_estimate,
                    }
                ],
            )
            run.emit(
                "height",
                res,
                f"archimedean {res.archimedean:.12f}\nfinite {res.finite:.12f}\n"
                f"height {res.total:.12f} +- {res.error_estimate:.1e}",
            )

    def lower(
        self,
        config: str = None,
        replay=None,
        polys=None,
        init=None,
        grid: int = None,
        tol: float = None,
        workers: int = None,
        json: bool = False,
        out: str = None,
        csv: str = None,
    ):
        """
        Lower bound from section families. Either `--replay FILE` (frozen
        families), a json `--config` with polys and init_exponents or
        replay_exponents, or `--polys` with optional `--init`.
        """
        cfg = load_config(config, **{"sections.grid": grid, "sections.fatol": tol, "workers": workers})
        s = cfg["sections"]
        kwargs = {
            "grid": s["grid"],
            "ymax": s["ymax"],
            "refine_top_k": s["refine_top_k"],
            "xatol": s["xatol"],
            "fatol": s["fatol"],
            "workers": cfg["workers"],
        }
        inputs = {"config": cfg, "replay": replay, "polys": polys, "init": init}

        with _run("lower", inputs, out, json, csv) as run:
            if replay is not None or ("polys" not in cfg and polys is None):
                path = None if replay in (None, True) else replay
                results = replay_families(path, **kwargs)
                rows = [
                    {"name": fam["name"], "infimum": rep.infimum, "expected": fam.get("expected")}
                    for fam, rep in results
                ]
                run.table("lower", rows)
                run.emit(
                    "lower",
                    [{"name": fam["name"], **rep.to_dict()} for fam, rep in results],
                    "\n".join(f"{r['name']}: {r['infimum']:.10f}" for r in rows),
                )
                return

            poly_list = cfg.get("polys", polys)
            if isinstance(poly_list, str):
                poly_list = poly_list.split(";")
            if "replay_exponents" in cfg:
                family = SectionFamily.from_lists(poly_list, cfg["replay_exponents"])
                report = global_infimum(family, **kwargs)
            else:
                init = cfg.get("init_exponents", init)
                report = optimize_exponents(
                    poly_list,
                    None if init is None else list(init),
                    exponent_box=s["exponent_box"],
                    initial_step=s["initial_step"],
                    min_step=s["min_step"],
                    cycle_tol=s["cycle_tol"],
                    max_cycles=s["max_cycles"],
                    **kwargs,
                )
            run.table(
                "lower",
                [{"name": "family", "infimum": report.infimum, "argmin": report.argmin}],
            )
            run.emit(
                "lower",
                report,
                f"infimum {report.infimum:.10f} at {report.argmin}\n"
                f"exponents {report.family.exponents.tolist()}",
            )
            if report.stagnated:
                raise NonConvergence(
                    "Exponent optimization stagnated, partial report written",
                    best_residual=report.infimum,
                )

    def upper(
        self,
        center: float = None,
        sweep=None,
        analytic: bool = False,
        hhat: bool = False,
        nodes: int = None,
        tol: float = None,
        workers: int = None,
        json: bool = False,
        out: str = None,
        csv: str = None,
    ):
        """Upper bound from circle integrals at `--center`, or optimized over `--sweep lo,hi`"""
        cfg = load_config(**{"circles.nodes": nodes, "circles.tol": tol, "workers": workers})
        c = cfg["circles"]
        kwargs = {"nodes": c["nodes"], "tol": c["tol"], "max_nodes": c["max_nodes"]}
        inputs = {"center": center, "sweep": sweep, "analytic": analytic, "hhat": hhat, "circles": c}

        with _run("upper", inputs, out, json, csv) as run:
            if sweep is not None:
                lo, hi = _parse_pair(sweep)
                reports = [optimize_center(lo, hi, c["center_tol"], workers=cfg["workers"], **kwargs)]
            elif center is None:
                reports = sweep_centers(c["centers"], workers=cfg["workers"], **kwargs)
            else:
                reports = [circle_integral(float(center), workers=cfg["workers"], **kwargs)]
            extra = []
            for rep in reports:
                if hhat:
                    extra.append(circle_integral_hhat(rep.center, workers=cfg["workers"], **kwargs))
                if analytic:
                    extra.append(analytic_upper_bound(rep.center, **kwargs))
            reports += extra

            run.table("upper", [r.to_dict() for r in reports])
            run.emit(
                "upper",
                {"reports": reports, "zhang_bound": zhang_bound()},
                "\n".join(
                    f"{r.method} center {r.center:.6f}: {r.value:.10f}"
                    f" (doubling change {r.node_doubling_delta:.1e})"
                    for r in reports
                ),
            )
            loose = [r for r in reports if not r.node_doubling_delta <= c["tol"]]
            if loose:
                raise NonConvergence(
                    f"Quadrature did not reach {c['tol']=} for {len(loose)} reports",
                    best_residual=max(r.node_doubling_delta for r in loose),
                )

    def scan(
        self,
        max_order: int = None,
        max_degree: int = None,
        max_coeff: int = None,
        threshold: float = None,
        report: bool = False,
        upper_bound: float = MU_UPPER,
        lower_bound: float = MU_LOWER,
        checkpoint: str = None,
        workers: int = None,
        json: bool = False,
        out: str = None,
        csv: str = None,
    ):
        """Roots of unity and a polynomial box below a height threshold"""
        cfg = load_config(
            **{
                "scan.max_order": max_order,
                "scan.max_degree": max_degree,
                "scan.max_coeff": max_coeff,
                "scan.threshold": threshold,
                "workers": workers,
            }
        )
        s = cfg["scan"]
        inputs = {"scan": s, "report": report, "upper_bound": upper_bound, "lower_bound": lower_bound}

        with _run("scan", inputs, out, json, csv) as run:
            entries = scan_cyclotomics(s["max_order"], workers=cfg["workers"])
            entries += scan_polynomials(
                s["max_degree"],
                s["max_coeff"],
                s["threshold"],
                s["chunk_size"],
                s["checkpoint_every"],
                s["max_candidates"],
                checkpoint=checkpoint,
                workers=cfg["workers"],
            )
            if report:
                result = spectrum_report(upper_bound, lower_bound, entries=entries)
                run.table("spectrum", [e.to_row() for e in result.isolated + result.pending])
                run.emit(
                    "spectrum",
                    result,
                    "\n".join(
                        [f"isolated {e.label}: {e.height.total:.10f}" for e in result.isolated]
                        + [f"pending {e.label}: {e.height.total:.10f}" for e in result.pending]
                        + [f"density interval starts at {result.density_interval_start:.10f}"]
                    ),
                )
            else:
                rows = [e.to_row() for e in sorted(entries, key=lambda e: e.height.total)]
                run.table("scan", rows)
                run.emit(
                    "scan",
                    rows,
                    "\n".join(f"{r['label']}: {r['height']:.10f}" for r in rows),
                )

    def verify(
        self,
        suite: str = "all",
        tol: float = None,
        workers: int = None,
        json: bool = False,
        out: str = None,
        csv: str = None,
    ):
        """
        Run certificate suites (constants, distortion, propB, special_values,
        all) or a single certificate by name, e.g. `koebe` or `zeta_w`.
        """
        cfg = load_config(**{"certificates.tolerance": tol, "workers": workers})
        tolerance = cfg["certificates"]["tolerance"]

        with _run("verify", {"suite": suite, "tolerance": tolerance}, out, json, csv) as run:
            reports = run_suite(suite, tolerance, cfg["workers"])

            run.table("verify", [r.to_dict() for r in reports])
            run.emit(
                "verify",
                reports,
                "\n".join(
                    f"{'PASS' if r.passed else 'FAIL'} {r.name}:"
                    f" max violation {r.max_violation:.3e} over {r.samples} samples"
                    for r in reports
                ),
            )
            for r in reports:
                if not r.passed:
                    raise CertificateFailure(r)


def main(argv: list[str] | None = None) -> int:
    try:
        Fire(FaltingsHeightCLI, command=argv, name="faltings-height")
    except FireExit as err:
        return 0 if err.code is None else int(err.code)
    except Exception as err:
        code = exit_code(err)
        if code == 1:
            raise
        logger.error(f"{type(err).__name__}: {err}")
        return code
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
