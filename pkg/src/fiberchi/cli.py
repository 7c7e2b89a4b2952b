"""Command-line front end.

Subcommands: formulas, verify, openbook, tameness, catalog, sample.
Every run that produces files also writes run_record.json with the full
parameter set, seeds and timestamps.  The record is the only file that
carries wall-clock data; every report proper is a pure function of the
command line, so reruns with the same seed are byte-identical.

Exit codes: 0 all good, 2 usage or hypothesis error, 3 at least one
UNSTABLE verdict, 4 at least one FAIL.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from typing import Optional

import numpy as np

from . import __version__, catalog, estimator, formulas, germs, sampling

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNSTABLE = 3
EXIT_FAIL = 4

RECORD_SCHEMA_VERSION = 1
VERDICT_SCHEMA_VERSION = 1

# arbitrary distinct offsets so each (stage, kind) measurement owns a seed
_KIND_SEED = {"fiber": 11, "boundary": 23, "link": 37, "page": 53}


def _measure_seed(seed: int, I: int, kind: str) -> int:
    return seed + 101 * I + _KIND_SEED[kind]


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _out_dir(args) -> str:
    out = args.out_dir or os.environ.get("FIBERCHI_OUT_DIR") or "fiberchi-out"
    os.makedirs(out, exist_ok=True)
    return out


def _load_germ(spec_arg: str) -> germs.MapGerm:
    """A path to a germ file, or the name of a catalog entry."""
    if os.path.exists(spec_arg):
        return germs.load_germ(spec_arg)
    if spec_arg in catalog.ENTRIES:
        return catalog.get(spec_arg).load()
    raise germs.GermError(
        f"{spec_arg!r} is neither a germ file nor a catalog name "
        f"(catalog: {', '.join(catalog.names())})"
    )


def _radii_for(args, f: germs.MapGerm, certify_stage: int = 1) -> sampling.Radii:
    if args.epsilon is not None:
        return sampling.Radii.auto(args.epsilon)
    chosen = sampling.choose_radii(f, certify_stage, seed=args.seed)
    print(f"radius search: epsilon = {chosen.radii.epsilon}")
    return chosen.radii


def _expected_chi(M: int, K: int, I: int, kind: str, chiF: int) -> int:
    if kind == "fiber":
        return chiF
    if kind == "boundary":
        return formulas.chi_boundary(M, K, I, chiF)
    if kind == "link":
        return formulas.chi_link(M, K, I, chiF)
    raise ValueError(f"no closed form for kind {kind!r}")


def _verdict_of(est, expected: int) -> str:
    if est.confidence != "stable":
        return "UNSTABLE"
    return "PASS" if est.chi == expected else "FAIL"


def _measure(f, I, kind, radii, chiF, n_points, seed, threads,
             sample_budget=None, svg_path=None) -> dict:
    est = estimator.estimate_stage(
        f, I, kind,
        radii=radii,
        n_points=n_points,
        seed=_measure_seed(seed, I, kind),
        sample_budget=sample_budget,
        threads=threads,
    )
    expected = _expected_chi(f.source_dim, f.target_dim, I, kind, chiF)
    verdict = _verdict_of(est, expected)
    if svg_path is not None:
        estimator.write_scan_svg(est, svg_path)
    r_min, r_max, length = est.plateau
    row = {
        "stage": I,
        "kind": kind,
        "expected": expected,
        "measured": int(est.chi),
        "confidence": est.confidence,
        "plateau_length": int(length),
        "plateau_r": [float(r_min), float(r_max)],
        "n_points": int(est.diagnostics.get("cloud", {}).get("n_points", 0)),
        "verdict": verdict,
    }
    comps = est.diagnostics.get("plateau_components")
    if comps is not None:
        row["n_components"] = int(comps)
    note = est.diagnostics.get("note") or est.diagnostics.get("cloud", {}).get("note")
    if note:
        row["note"] = note
    print(
        f"  {kind} I={I}: measured {est.chi} expected {expected} "
        f"({est.confidence}, plateau {length}) [{verdict}]"
    )
    return row


def _exit_code(verdicts) -> int:
    if any(v == "FAIL" for v in verdicts):
        return EXIT_FAIL
    if any(v == "UNSTABLE" for v in verdicts):
        return EXIT_UNSTABLE
    return EXIT_OK


def _record_params(args) -> dict:
    skip = {"func"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, (list, tuple)):
            v = list(v)
        out[k] = v
    return out


def _write_record(out_dir, args, started, outputs, verdicts) -> None:
    rec = {
        "schema_version": RECORD_SCHEMA_VERSION,
        "tool_version": __version__,
        "command": " ".join(sys.argv) if sys.argv else "",
        "parameters": _record_params(args),
        "outputs": sorted(outputs),
        "verdicts": verdicts,
        "started_utc": started,
        "finished_utc": _utc_now(),
    }
    _write_json(os.path.join(out_dir, "run_record.json"), rec)


# ---------------------------------------------------------------------------
# formulas
# ---------------------------------------------------------------------------


def _print_stage_table(rep: formulas.StageReport) -> None:
    cols = formulas.STAGE_COLUMNS
    rows = [rep.stage_row(I) for I in range(1, rep.K + 1)]
    widths = [max(len(c), *(len(str(r[c])) for r in rows)) for c in cols]
    print("  ".join(c.rjust(w) for c, w in zip(cols, widths)))
    for r in rows:
        print("  ".join(str(r[c]).rjust(w) for c, w in zip(cols, widths)))
    print(f"db = {rep.db}  ({rep.parity_class})")


def cmd_formulas(args, out_dir: str, started: str) -> int:
    try:
        rep = formulas.build_stage_report(
            args.m, args.k, args.chi_f,
            isolated_critical_point=args.isolated_critical_point,
        )
    except formulas.InvariantBreach as e:
        # reachable only by asserting a flag that contradicts chi-f
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "csv":
        path = os.path.join(out_dir, "stage_report.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(rep.to_csv())
    else:
        path = os.path.join(out_dir, "stage_report.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json())
    _print_stage_table(rep)
    print(f"wrote {path}")
    _write_record(out_dir, args, started, [os.path.basename(path)], {})
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _bootstrap_chi(f, radii, args) -> dict:
    """Measure chi(F_f) from the deepest-stage fiber."""
    K = f.target_dim
    est = estimator.estimate_stage(
        f, K, "fiber",
        radii=radii,
        n_points=args.n_points,
        seed=_measure_seed(args.seed, K, "fiber") + 499,
        sample_budget=args.sample_budget,
        threads=args.threads,
    )
    return {
        "value": int(est.chi),
        "source": "measured",
        "confidence": est.confidence,
        "plateau_length": int(est.plateau[2]),
    }


def _run_verify(f, stages, kinds, radii, chiF_info, args, out_dir,
                report_name, svg_prefix=None):
    """Shared engine behind `verify` and `catalog run`."""
    M, K = f.source_dim, f.target_dim
    chiF = chiF_info["value"]
    measurements = []
    if chiF_info["source"] == "measured" and chiF_info["confidence"] != "stable":
        overall = "UNSTABLE"
        print(f"chi(F_f) bootstrap unstable (got {chiF}); not proceeding")
    else:
        try:
            formulas.build_stage_report(
                M, K, chiF,
                isolated_critical_point=f.flags.isolated_critical_point,
            )
            flag_problem = None
        except formulas.InvariantBreach as e:
            flag_problem = str(e)
        if flag_problem is not None:
            overall = "FAIL"
            measurements.append(
                {"kind": "chiF-consistency", "verdict": "FAIL", "note": flag_problem}
            )
            print(f"  chiF consistency: {flag_problem} [FAIL]")
        else:
            for I in stages:
                for kind in kinds:
                    svg = None
                    if svg_prefix is not None:
                        svg = os.path.join(out_dir, f"{svg_prefix}_scan_I{I}_{kind}.svg")
                    measurements.append(
                        _measure(f, I, kind, radii, chiF, args.n_points,
                                 args.seed, args.threads,
                                 sample_budget=args.sample_budget, svg_path=svg)
                    )
            overall_code = _exit_code([m["verdict"] for m in measurements])
            overall = {EXIT_OK: "PASS", EXIT_UNSTABLE: "UNSTABLE",
                       EXIT_FAIL: "FAIL"}[overall_code]

    report = {
        "schema_version": VERDICT_SCHEMA_VERSION,
        "germ": f.name or "",
        "M": M,
        "K": K,
        "chi_fiber_smallest": chiF_info,
        "radii": {"epsilon": radii.epsilon, "eta": radii.eta, "tau": radii.tau},
        "db_expected": formulas.db_invariant(M, K, chiF),
        "measurements": measurements,
        "overall": overall,
    }
    path = os.path.join(out_dir, report_name)
    _write_json(path, report)
    print(f"overall: {overall}; wrote {path}")
    return report, path


def cmd_verify(args, out_dir: str, started: str) -> int:
    f = _load_germ(args.germ)
    K = f.target_dim
    stages = args.stage or list(range(1, K + 1))
    for I in stages:
        if not 1 <= I <= K:
            raise sampling.SamplingError(f"stage {I} out of range 1..{K}")
    kinds = args.kind or ["fiber", "boundary", "link"]
    radii = _radii_for(args, f, certify_stage=min(stages))

    if args.chi_f is not None:
        chiF_info = {"value": args.chi_f, "source": "pinned"}
    elif args.germ in catalog.ENTRIES and catalog.get(args.germ).chi_fiber is not None:
        entry = catalog.get(args.germ)
        chiF_info = {"value": entry.chi_fiber, "source": "catalog",
                     "note": entry.chi_note}
    else:
        chiF_info = _bootstrap_chi(f, radii, args)
        print(f"measured chi(F_f) = {chiF_info['value']} ({chiF_info['confidence']})")

    report, path = _run_verify(
        f, stages, kinds, radii, chiF_info, args, out_dir,
        "verify_report.json", svg_prefix="verify" if args.svg else None,
    )
    outputs = [os.path.basename(path)]
    if args.svg:
        outputs += [x for x in sorted(os.listdir(out_dir)) if x.startswith("verify_scan_")]
    verdicts = {f"{m.get('kind')}@{m.get('stage', '-')}": m["verdict"]
                for m in report["measurements"]}
    _write_record(out_dir, args, started, outputs, verdicts)
    if report["overall"] == "PASS":
        return EXIT_OK
    return EXIT_UNSTABLE if report["overall"] == "UNSTABLE" else EXIT_FAIL


# ---------------------------------------------------------------------------
# openbook
# ---------------------------------------------------------------------------


def _page_directions(kmi: int, num_angles: int) -> list:
    """Deterministic unit directions in R^{K-I}.

    For one trailing component the book has exactly two pages.  For more,
    num_angles directions evenly spaced on the coordinate circle of the
    first two trailing axes.
    """
    if kmi == 1:
        return [np.array([1.0]), np.array([-1.0])]
    out = []
    for j in range(num_angles):
        phi = 2.0 * np.pi * j / num_angles
        theta = np.zeros(kmi)
        theta[0] = np.cos(phi)
        theta[1] = np.sin(phi)
        out.append(theta)
    return out


def cmd_openbook(args, out_dir: str, started: str) -> int:
    f = _load_germ(args.germ)
    M, K = f.source_dim, f.target_dim
    I = args.stage
    if not 1 <= I <= K:
        raise sampling.SamplingError(f"stage {I} out of range 1..{K}")
    kmi = K - I
    if kmi < 1:
        raise sampling.SamplingError("openbook needs K - I >= 1")
    if args.num_angles < 1:
        raise sampling.SamplingError("num_angles must be >= 1")
    radii = _radii_for(args, f, certify_stage=I)

    if args.chi_f is not None:
        chiF_info = {"value": args.chi_f, "source": "pinned"}
    elif args.germ in catalog.ENTRIES and catalog.get(args.germ).chi_fiber is not None:
        chiF_info = {"value": catalog.get(args.germ).chi_fiber, "source": "catalog"}
    else:
        chiF_info = _bootstrap_chi(f, radii, args)

    thetas = _page_directions(kmi, args.num_angles)
    if kmi == 1 and args.num_angles != 2:
        print("one trailing component: the book has exactly two pages")

    pages = []
    for j, theta in enumerate(thetas):
        est = estimator.estimate_stage(
            f, I, "page",
            radii=radii,
            n_points=args.n_points,
            seed=args.seed + 71 * j + _KIND_SEED["page"],
            sample_budget=args.sample_budget,
            threads=args.threads,
        )
        cloud_meta = est.diagnostics.get("cloud", {})
        pages.append({
            "theta": [float(t) for t in theta],
            "chi": int(est.chi),
            "confidence": est.confidence,
            "plateau_length": int(est.plateau[2]),
            "n_points": int(cloud_meta.get("n_points", 0)),
            "max_angle_dev": float(cloud_meta.get("max_angle_dev", 0.0)),
        })
        print(f"  page {j}: chi {est.chi} ({est.confidence})")

    stable = [p for p in pages if p["confidence"] == "stable"]
    all_stable = len(stable) == len(pages)
    chis = sorted({p["chi"] for p in pages})
    pages_equal = len(chis) == 1
    if not all_stable:
        overall = "UNSTABLE"
    elif pages_equal:
        overall = "PASS"
    else:
        overall = "FAIL"

    chiF = chiF_info["value"]
    report = {
        "schema_version": VERDICT_SCHEMA_VERSION,
        "germ": f.name or "",
        "M": M,
        "K": K,
        "stage": I,
        "book_codimension": kmi,
        "chi_fiber_smallest": chiF_info,
        "radii": {"epsilon": radii.epsilon, "eta": radii.eta, "tau": radii.tau},
        "pages": pages,
        "pages_equal": pages_equal,
        # Reported, deliberately not enforced: whether the common page chi
        # agrees with chi of the smallest closed fiber.
        "page_equals_fiber": pages_equal and chis[0] == chiF,
        "overall": overall,
    }
    path = os.path.join(out_dir, "openbook_report.json")
    _write_json(path, report)
    print(f"pages_equal={pages_equal}, page chi {chis} vs chi(F_f)={chiF}")
    print(f"overall: {overall}; wrote {path}")
    _write_record(out_dir, args, started, [os.path.basename(path)],
                  {"pages": overall})
    return {"PASS": EXIT_OK, "UNSTABLE": EXIT_UNSTABLE, "FAIL": EXIT_FAIL}[overall]


# ---------------------------------------------------------------------------
# tameness
# ---------------------------------------------------------------------------


def cmd_tameness(args, out_dir: str, started: str) -> int:
    f = _load_germ(args.germ)
    radii = sampling.Radii.auto(args.epsilon if args.epsilon is not None else 0.5)
    report = sampling.tameness_evidence(f, radii, n=args.n_starts, seed=args.seed)
    path = os.path.join(out_dir, "tameness_report.json")
    _write_json(path, report)
    print(f"{report['hit_count']} hit(s); {report['verdict_hint']}")
    print(f"wrote {path}")
    _write_record(out_dir, args, started, [os.path.basename(path)],
                  {"tameness": report["verdict_hint"]})
    return EXIT_OK


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _run_catalog_entry(entry, args, out_dir: str) -> tuple:
    f = entry.load()
    outputs = []
    print(f"[{entry.name}] {entry.summary}")

    if not entry.tame:
        # The negative control: the ladder must reject it and the badness
        # probe must produce witnesses.
        try:
            sampling.choose_radii(f, 1, seed=args.seed)
            rejected = False
            ladder_diag = []
        except sampling.RadiusSearchError as e:
            rejected = True
            ladder_diag = e.diagnostics
        evidence = sampling.tameness_evidence(
            f, sampling.Radii.auto(entry.epsilon), n=200, seed=args.seed
        )
        found = evidence["hit_count"] > 0
        verdict = "PASS" if (rejected and found) else "FAIL"
        print(f"  ladder rejected: {rejected}; badness hits: {evidence['hit_count']} "
              f"[{verdict}]")
        report = {
            "schema_version": VERDICT_SCHEMA_VERSION,
            "germ": entry.name,
            "expected": "radius search rejects; badness witnesses exist",
            "ladder_rejected": rejected,
            "ladder_diagnostics": ladder_diag,
            "evidence": evidence,
            "overall": verdict,
        }
        path = os.path.join(out_dir, f"{entry.name}_verdicts.json")
        _write_json(path, report)
        outputs.append(os.path.basename(path))
        return verdict, outputs, {entry.name: verdict}

    radii = sampling.Radii.auto(entry.epsilon)
    expected = entry.expected_report()
    if args.format == "csv":
        rep_path = os.path.join(out_dir, f"{entry.name}_stage_report.csv")
        with open(rep_path, "w", encoding="utf-8") as fh:
            fh.write(expected.to_csv())
    else:
        rep_path = os.path.join(out_dir, f"{entry.name}_stage_report.json")
        with open(rep_path, "w", encoding="utf-8") as fh:
            fh.write(expected.to_json())
    outputs.append(os.path.basename(rep_path))

    chiF_info = {"value": entry.chi_fiber, "source": "catalog", "note": entry.chi_note}
    n_pts = args.n_points if args.n_points is not None else entry.n_points

    measurements = []
    for I, kind in entry.plan:
        svg = None
        if args.svg:
            svg = os.path.join(out_dir, f"{entry.name}_scan_I{I}_{kind}.svg")
            outputs.append(os.path.basename(svg))
        measurements.append(
            _measure(f, I, kind, radii, entry.chi_fiber, n_pts,
                     args.seed, args.threads, sample_budget=args.sample_budget,
                     svg_path=svg)
        )
    code = _exit_code([m["verdict"] for m in measurements])
    overall = {EXIT_OK: "PASS", EXIT_UNSTABLE: "UNSTABLE", EXIT_FAIL: "FAIL"}[code]
    report = {
        "schema_version": VERDICT_SCHEMA_VERSION,
        "germ": entry.name,
        "M": f.source_dim,
        "K": f.target_dim,
        "chi_fiber_smallest": chiF_info,
        "radii": {"epsilon": radii.epsilon, "eta": radii.eta, "tau": radii.tau},
        "measurements": measurements,
        "overall": overall,
    }
    path = os.path.join(out_dir, f"{entry.name}_verdicts.json")
    _write_json(path, report)
    print(f"  overall: {overall}")
    verdicts = {f"{m['kind']}@{m['stage']}": m["verdict"] for m in measurements}
    return overall, outputs + [os.path.basename(path)], verdicts


def cmd_catalog(args, out_dir: str, started: str) -> int:
    if args.action == "list":
        for name in catalog.names():
            e = catalog.get(name)
            g = e.load()
            chi = "-" if e.chi_fiber is None else str(e.chi_fiber)
            print(f"{name:14s} M={g.source_dim} K={g.target_dim} chiF={chi:2s} "
                  f"[{', '.join(e.tags)}]")
            print(f"{'':14s} {e.summary}")
        return EXIT_OK

    entry = catalog.get(args.name)
    overall, outputs, verdicts = _run_catalog_entry(entry, args, out_dir)
    _write_record(out_dir, args, started, outputs, verdicts)
    return {"PASS": EXIT_OK, "UNSTABLE": EXIT_UNSTABLE, "FAIL": EXIT_FAIL}[overall]


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def _parse_vector(text: Optional[str]) -> Optional[np.ndarray]:
    if text is None:
        return None
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise sampling.SamplingError(f"cannot parse vector {text!r}") from None


def cmd_sample(args, out_dir: str, started: str) -> int:
    f = _load_germ(args.germ)
    I = args.stage
    radii = _radii_for(args, f, certify_stage=I)
    y = _parse_vector(args.y)
    kw = {}
    if args.sample_budget is not None:
        kw["budget"] = args.sample_budget

    if args.kind == "fiber":
        y = y if y is not None else sampling.default_regular_value(I, radii.eta)
        cloud = sampling.sample_fiber(f, I, y, radii, args.n_points, args.seed,
                                      threads=args.threads, **kw)
    elif args.kind == "boundary":
        y = y if y is not None else sampling.default_regular_value(I, radii.eta)
        cloud = sampling.sample_boundary(f, I, y, radii, args.n_points, args.seed,
                                         threads=args.threads, **kw)
    elif args.kind == "link":
        cloud = sampling.sample_link(f, I, radii, args.n_points, args.seed,
                                     threads=args.threads, **kw)
    else:
        kmi = f.target_dim - I
        theta = _parse_vector(args.theta)
        if theta is None:
            theta = np.zeros(max(kmi, 1))
            theta[0] = 1.0
        book = sampling.sample_openbook_page(
            f, I, theta, radii, args.n_points, args.seed, y=y,
            threads=args.threads, **kw
        )
        cloud = book.page_cloud

    base = os.path.join(out_dir, "cloud")
    cloud.save_binary(base + ".fcpc")
    cloud.save_csv(base + ".csv")
    print(f"{len(cloud)} point(s), kind={cloud.kind}, stage={cloud.stage}, "
          f"residual_eq={cloud.residual_eq:.2e}, saturated={cloud.saturated}")
    if cloud.note:
        print(f"note: {cloud.note}")
    print(f"wrote {base}.fcpc and {base}.csv")
    _write_record(out_dir, args, started, ["cloud.fcpc", "cloud.csv"],
                  {"n_points": len(cloud)})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for scans and waves")
    common.add_argument("--out-dir", default=None,
                        help="output directory (default: $FIBERCHI_OUT_DIR or ./fiberchi-out)")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="stage-report format")

    sampler_opts = argparse.ArgumentParser(add_help=False)
    sampler_opts.add_argument("--epsilon", type=float, default=None,
                              help="ball radius; omit to run the radius search")
    sampler_opts.add_argument("--n-points", type=int, default=None,
                              help="points per sampled set")
    sampler_opts.add_argument("--sample-budget", type=int, default=None,
                              help="max Newton proposals per sampled set")

    p = argparse.ArgumentParser(
        prog="fiberchi",
        description="Euler characteristics of fibration stages of polynomial "
                    "map-germs: exact formulas and numerical cross-checks.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    q = sub.add_parser("formulas", parents=[common],
                       help="closed-form stage report for (M, K, chiF)")
    q.add_argument("--m", type=int, required=True, help="source dimension M")
    q.add_argument("--k", type=int, required=True, help="target dimension K")
    q.add_argument("--chi-f", type=int, required=True,
                   help="Euler characteristic of the smallest fiber")
    q.add_argument("--isolated-critical-point", action="store_true",
                   help="assert the germ has an isolated critical point")
    q.set_defaults(func=cmd_formulas)

    q = sub.add_parser("verify", parents=[common, sampler_opts],
                       help="measure chi for stages/kinds and compare to formulas")
    q.add_argument("germ", help="germ file path or catalog name")
    q.add_argument("--stage", type=int, action="append",
                   help="stage to verify (repeatable; default all)")
    q.add_argument("--kind", action="append",
                   choices=("fiber", "boundary", "link"),
                   help="kind to verify (repeatable; default all three)")
    q.add_argument("--chi-f", type=int, default=None,
                   help="pin chi(F_f) instead of measuring it")
    q.add_argument("--svg", action="store_true", help="write scan charts")
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("openbook", parents=[common, sampler_opts],
                       help="sample pages of the boundary open book at stage I")
    q.add_argument("germ")
    q.add_argument("--stage", type=int, required=True)
    q.add_argument("--num-angles", type=int, default=8)
    q.add_argument("--chi-f", type=int, default=None)
    q.set_defaults(func=cmd_openbook)

    q = sub.add_parser("tameness", parents=[common],
                       help="search a shell for evidence against tameness")
    q.add_argument("germ")
    q.add_argument("--epsilon", type=float, default=None)
    q.add_argument("--n-starts", type=int, default=200)
    q.set_defaults(func=cmd_tameness)

    q = sub.add_parser("catalog", parents=[common, sampler_opts],
                       help="list built-in germs or run one end to end")
    q.add_argument("action", choices=("list", "run"))
    q.add_argument("name", nargs="?", default=None)
    q.add_argument("--svg", action="store_true")
    q.set_defaults(func=cmd_catalog)

    q = sub.add_parser("sample", parents=[common, sampler_opts],
                       help="export one raw point cloud")
    q.add_argument("germ")
    q.add_argument("--kind", required=True,
                   choices=("fiber", "boundary", "link", "page"))
    q.add_argument("--stage", type=int, required=True)
    q.add_argument("--y", default=None, help="regular value, comma-separated")
    q.add_argument("--theta", default=None,
                   help="page direction, comma-separated (page kind)")
    q.set_defaults(func=cmd_sample)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.cmd == "catalog" and args.action == "run" and not args.name:
        print("catalog run needs a germ name", file=sys.stderr)
        return EXIT_USAGE
    if args.cmd == "catalog" and args.action == "list":
        return cmd_catalog(args, ".", _utc_now())

    # `verify` defaults n_points per command; entries pin their own.
    if getattr(args, "n_points", None) is None and args.cmd in ("verify", "openbook", "sample"):
        args.n_points = {"verify": 600, "openbook": 400, "sample": 500}[args.cmd]

    started = _utc_now()
    try:
        out_dir = _out_dir(args)
        return args.func(args, out_dir, started)
    except (germs.GermError, formulas.FormulaHypothesisError,
            catalog.CatalogError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except sampling.RadiusSearchError as e:
        print(f"radius search failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    except sampling.EmptySampleError as e:
        print(f"sampling produced nothing: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (sampling.SamplingError, estimator.EstimatorError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
