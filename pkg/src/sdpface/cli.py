"""Command-line front end: solve, reduce, classify, sweep, verify, gallery.

Every subcommand is a thin adapter over the library; no numerical logic
lives here.  Exit codes: 0 on success, 1 on a domain failure (infeasible,
failed audit, unknown classification), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import facial, gallery, hinf, sensitivity
from .ipm import SolveStatus, SolverConfig, solve
from .mpla import DEFAULT_PRECISION, MpScalar, format_mpfr
from .sdpmodel import read_sdpa, write_sdpa


def _config_from_args(args) -> SolverConfig:
    if getattr(args, "param", None):
        cfg = SolverConfig.from_param_file(args.param)
    else:
        cfg = SolverConfig(epsilonStar="1e-50", epsilonDash="1e-50")
    overrides = {}
    if getattr(args, "epsilon", None):
        overrides["epsilonStar"] = args.epsilon
        overrides["epsilonDash"] = args.epsilon
    if getattr(args, "precision", None):
        overrides["precision_bits"] = args.precision
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg


def _emit(args, payload: dict, text: str) -> None:
    out = json.dumps(payload, indent=2) if args.json else text
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)


def _cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    prob = read_sdpa(args.problem, cfg.precision_bits)
    report = solve(prob, cfg)
    digits = 40
    payload = {
        "status": report.status.value,
        "iterations": report.iterations,
        "primal_objective": format_mpfr(report.primal_value.value, digits),
        "dual_objective": format_mpfr(report.dual_value.value, digits),
        "duality_gap": format_mpfr(report.solution.duality_gap.value, digits),
        "final_mu": format_mpfr(report.final_mu.value, digits),
    }
    text = (
        f"status     : {payload['status']}\n"
        f"iterations : {report.iterations}\n"
        f"sup (P)    : {payload['primal_objective']}\n"
        f"inf (D)    : {payload['dual_objective']}\n"
        f"gap        : {payload['duality_gap']}"
    )
    _emit(args, payload, text)
    return 0 if report.status is SolveStatus.Optimal else 1


def _cmd_reduce(args) -> int:
    cfg = _config_from_args(args)
    prob = read_sdpa(args.problem, cfg.precision_bits)
    result = facial.facial_reduction(prob, cfg, seed=args.seed)
    payload = {
        "status": result.status.value,
        "degree": result.degree,
        "residual_dims": list(result.minimal_face.signature()),
        "searches": [
            {"lambda_star": r.lambda_star, "accepted": r.accepted, "reason": r.reason} for r in result.reports
        ],
    }
    text = (
        f"status        : {payload['status']}\n"
        f"degree        : {result.degree}\n"
        f"residual dims : {tuple(payload['residual_dims'])}"
    )
    if args.out and not args.json:
        with open(args.out, "w") as fh:
            fh.write(facial.reduction_to_json(result) + "\n")
        print(text)
        print(f"reduction manifest written to {args.out}")
    else:
        if args.json:
            payload["manifest"] = json.loads(facial.reduction_to_json(result))
        _emit(args, payload, text)
    return 0 if result.status is facial.ReductionStatus.MinimalFaceFound else 1


def _cmd_classify(args) -> int:
    plant = hinf.ControlSystem.load(args.plant)
    probes = tuple(args.probe) if args.probe else ("1e-16", "1e-8")
    verdicts = hinf.classify_all(plant, eps_probes=probes, workers=args.workers)
    order = ("a11", "a12", "a21", "a22", "b1", "b2")
    right = ("c11", "c12", "c21", "c22", "d1", "d2")
    lines = ["Perturbation  Face               Perturbation  Face"]
    for lhs, rhs in zip(order, right):
        lines.append(
            f"{lhs:<12}  {verdicts[lhs].value:<17}  {rhs:<12}  {verdicts[rhs].value}"
        )
    payload = {k: v.value for k, v in verdicts.items()}
    _emit(args, payload, "\n".join(lines))
    return 0 if all(v is not hinf.FaceBehavior.Unknown for v in verdicts.values()) else 1


def _parse_grid(text: str, bits: int) -> list[MpScalar]:
    text = text.strip()
    for token in ("±k*", "+-k*", "k*"):
        if text.startswith(token):
            body = text[len(token):]
            mag, _, span = body.partition(":")
            lo, _, hi = span.partition("..")
            lo_i, hi_i = int(lo), int(hi)
            out = [MpScalar(0, bits)]
            for k in range(lo_i, hi_i + 1):
                s = MpScalar(mag, bits)
                kv = MpScalar(k, bits) * s
                out.append(kv)
                out.append(-kv)
            return out
    return [MpScalar(v.strip(), bits) for v in text.split(",") if v.strip()]


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    plant = hinf.ControlSystem.load(args.plant)
    family = hinf.matrixwise_family(plant, args.target)
    grid = _parse_grid(args.grid, cfg.precision_bits)
    spec = sensitivity.SweepSpec(
        family=family,
        t_grid=grid,
        solver=cfg,
        with_faces=not args.no_faces,
        with_rank=not args.no_faces,
        seed=args.seed,
        workers=args.workers,
    )
    rows = sensitivity.run_sweep(spec)
    if args.out:
        sensitivity.write_sweep_csv(rows, args.out)
    if args.plot_data:
        sensitivity.write_plot_data(rows, args.plot_data)
    diag = sensitivity.continuity_diagnostic(rows, jump_tol=args.jump_tol)
    payload = {
        "points": len(rows),
        "max_jump": diag.max_jump,
        "modulus_estimate": diag.modulus_estimate,
        "verdict": diag.verdict.value,
    }
    text = (
        f"points           : {len(rows)}\n"
        f"max |dvalue|     : {diag.max_jump:.6e}\n"
        f"modulus estimate : {diag.modulus_estimate:.6e}\n"
        f"verdict          : {diag.verdict.value}"
    )
    _emit(args, payload, text)
    return 0


def _cmd_verify(args) -> int:
    if args.builtin:
        report = sensitivity.verify_value_certificates()
        lines = [f"[{'ok' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in report.checks]
        payload = {
            "passed": report.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in report.checks],
        }
        _emit(args, payload, "\n".join(lines))
        return 0 if report.passed else 1
    if not args.problem or not args.reduction:
        print("verify needs PROBLEM and --reduction FILE (or --builtin)", file=sys.stderr)
        return 2
    cfg = _config_from_args(args)
    prob = read_sdpa(args.problem, cfg.precision_bits)
    with open(args.reduction) as fh:
        result = facial.reduction_from_json(fh.read())
    checks = []
    ok = True
    for i, cert in enumerate(result.certificates):
        good = facial.verify_certificate(prob, result.faces[i], cert, tol=args.tol)
        checks.append({"certificate": i, "verified": good})
        ok = ok and good
    payload = {"passed": ok, "checks": checks, "degree": result.degree}
    text = "\n".join(
        f"[{'ok' if c['verified'] else 'FAIL'}] certificate {c['certificate']}" for c in checks
    ) or "no certificates to audit"
    _emit(args, payload, text)
    return 0 if ok else 1


def _cmd_gallery(args) -> int:
    import os

    os.makedirs(args.dir, exist_ok=True)
    bits = args.precision or DEFAULT_PRECISION
    write_sdpa(gallery.expprimal(bits), os.path.join(args.dir, "expprimal.dat-s"))
    for name, fam in (
        ("p1", gallery.perturbation_p1(bits=bits)),
        ("p2", gallery.perturbation_p2(bits=bits)),
        ("p3", gallery.perturbation_p3(bits=bits)),
    ):
        write_sdpa(fam.apply(1), os.path.join(args.dir, f"{name}.dat-s"), manifest={"family": fam.label})
    gallery.state_feedback_plant(bits).save(os.path.join(args.dir, "system2.json"))
    SolverConfig(epsilonStar="1e-50", epsilonDash="1e-50", precision_bits=bits).to_param_file(
        os.path.join(args.dir, "table1.prm")
    )
    print(f"fixtures written to {args.dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdpface", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_seed=False):
        sp.add_argument("--param", help="solver parameter file (key = value)")
        sp.add_argument("--epsilon", help="sets epsilonStar and epsilonDash")
        sp.add_argument("--precision", type=int, help="mantissa bits")
        sp.add_argument("--json", action="store_true", help="emit JSON")
        sp.add_argument("--out", help="write the report to a file")
        if with_seed:
            sp.add_argument("--seed", type=int, default=None, help="auxiliary-search shuffle seed")

    sp = sub.add_parser("solve", help="solve a problem file")
    sp.add_argument("problem")
    common(sp)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("reduce", help="facial reduction of the dual")
    sp.add_argument("problem")
    common(sp, with_seed=True)
    sp.set_defaults(func=_cmd_reduce)

    sp = sub.add_parser("classify", help="face behavior of plant perturbations")
    sp.add_argument("plant")
    sp.add_argument("--probe", action="append", help="probe magnitude (repeatable)")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("sweep", help="perturbation sweep over a grid")
    sp.add_argument("--plant", required=True)
    sp.add_argument("--target", required=True, choices=hinf.PARAMETERS)
    sp.add_argument("--grid", default="±k*1e-5:1..100", help='e.g. "±k*1e-5:1..100" or "0,1e-8,-1e-8"')
    sp.add_argument("--jump-tol", dest="jump_tol", default="1e-6")
    sp.add_argument("--no-faces", action="store_true", help="skip per-point facial reduction")
    sp.add_argument("--plot-data", dest="plot_data", help="write (t, dvalue) pairs")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("verify", help="audit certificates or built-in value facts")
    sp.add_argument("problem", nargs="?")
    sp.add_argument("--reduction", help="reduction manifest JSON to audit")
    sp.add_argument("--builtin", action="store_true", help="run the built-in value-certificate suite")
    sp.add_argument("--tol", default="1e-30")
    common(sp)
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("gallery", help="write the built-in fixtures to a directory")
    sp.add_argument("--dir", default="fixtures")
    sp.add_argument("--precision", type=int, default=None)
    sp.set_defaults(func=_cmd_gallery)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
