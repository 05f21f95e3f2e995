"""Perturbation sweeps, continuity diagnostics and value-certificate audits.

A sweep drives the solver (and optionally facial reduction and the rank
condition) over a grid of perturbation parameters t and collects one row
per grid point; rows never abort the sweep, per-point failures are
recorded in the row's status.  The continuity diagnostic then compares
optimal values near t = 0 against the unperturbed value and flags a
suspected jump when the smallest-|t| decile of the grid still shows a
deviation above ``jump_tol``.

The module also houses the optimal-value audits of the flagship fixture:
the explicit feasible sequence approaching -sqrt(5), the rank-one dual
optimizer attaining it, the complementarity argument showing the supremum
itself is not attained, and the eigenvalue reduction giving -sqrt(2) for
the first perturbed problem.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from . import facial, gallery
from .ipm import SolveStatus, SolverConfig, solve
from .mpla import (
    MpMatrix,
    MpScalar,
    Number,
    _ctx,
    _jacobi_raw,
    _mat_mul,
    _sorted_eig,
    decimal_digits,
    format_mpfr,
    mp,
    pseudoinverse,
    sym_eig,
)
from .sdpmodel import BlockMatrix, PerturbedFamily, SdpProblem, dot


class RankAmbiguity(ValueError):
    """The kernel of the dual optimizer is numerically ill-defined at tol."""


class ContinuityVerdict(enum.Enum):
    Continuous = "Continuous"
    SuspectedJump = "SuspectedJump"


@dataclass
class SweepSpec:
    family: PerturbedFamily  # or a (plant, param_name) pair
    t_grid: list
    solver: SolverConfig | None = None
    with_faces: bool = True
    with_rank: bool = True
    aux_solver: SolverConfig | None = None
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if isinstance(self.family, tuple):
            from .hinf import matrixwise_family

            plant, param = self.family
            self.family = matrixwise_family(plant, param)

    def grid_values(self) -> list[MpScalar]:
        bits = self.family.base.precision_bits
        vals = [v if isinstance(v, MpScalar) else MpScalar(v, bits) for v in self.t_grid]
        if not any(v.value == 0 for v in vals):
            vals.append(MpScalar(0, bits))
        return vals


@dataclass
class SweepRow:
    t: MpScalar
    primal_value: MpScalar | None
    dual_value: MpScalar | None
    duality_gap: MpScalar | None
    degree: int | None
    face_signature: tuple | None
    rank_condition_holds: bool | None
    feasibility_status: str
    solve_iterations: int


def symmetric_grid(magnitude: str = "1e-5", count: int = 100, bits: int | None = None) -> list[MpScalar]:
    """The grid +-k*magnitude for k = 1..count, plus zero."""
    from .mpla import DEFAULT_PRECISION

    bits = bits or DEFAULT_PRECISION
    out = [MpScalar(0, bits)]
    with _ctx(bits):
        step = mp(magnitude, bits)
        for k in range(1, count + 1):
            out.append(MpScalar(k * step, bits))
            out.append(MpScalar(-(k * step), bits))
    return out


def _sweep_point(family: PerturbedFamily, t: MpScalar, spec: SweepSpec, base_face):
    bits = family.base.precision_bits
    cfg = spec.solver or SolverConfig(epsilonStar="1e-50", epsilonDash="1e-50", precision_bits=bits)
    prob = family.apply(t)
    try:
        rep = solve(prob, cfg)
        primal, dual, gap = rep.solution.primal_obj, rep.solution.dual_obj, rep.solution.duality_gap
        status = rep.status.value
        iters = rep.iterations
    except Exception as exc:  # never abort the sweep on a single point
        return SweepRow(t, None, None, None, None, None, None, f"error: {exc}", 0)
    degree = None
    signature = None
    rank_ok = None
    if spec.with_faces:
        try:
            aux_cfg = spec.aux_solver or cfg
            res = facial.facial_reduction(prob, aux_cfg, seed=spec.seed)
            if res.status is facial.ReductionStatus.MinimalFaceFound:
                degree = res.degree
                signature = res.minimal_face.signature()
            else:
                status += "+dual-infeasible"
        except facial.SolverFailure as exc:
            status += f"+reduction-failed({exc})"
    if spec.with_rank and base_face is not None:
        try:
            ranks = facial.rank_condition(family.base, family, base_face, [t])
            rank_ok = ranks[t]
        except Exception as exc:
            status += f"+rank-failed({exc})"
    return SweepRow(t, primal, dual, gap, degree, signature, rank_ok, status, iters)


def _sweep_worker(args):
    spec, t, base_face = args
    return _sweep_point(spec.family, t, spec, base_face)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per grid point, ordered by the grid; deterministic per spec."""
    grid = spec.grid_values()
    base_face = None
    if spec.with_rank or spec.with_faces:
        aux_cfg = spec.aux_solver or spec.solver or SolverConfig(
            epsilonStar="1e-50", epsilonDash="1e-50", precision_bits=spec.family.base.precision_bits
        )
        base_res = facial.facial_reduction(spec.family.base, aux_cfg, seed=spec.seed)
        if base_res.status is facial.ReductionStatus.MinimalFaceFound:
            base_face = base_res.minimal_face
    jobs = [(spec, t, base_face) for t in grid]
    if spec.workers == 0 or len(jobs) == 1:
        rows = [_sweep_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    order = sorted(range(len(grid)), key=lambda i: (float(grid[i]), i))
    return [rows[i] for i in order]


@dataclass
class ContinuityReport:
    max_jump: float
    modulus_estimate: float
    verdict: ContinuityVerdict
    reference_value: MpScalar | None = None


def continuity_diagnostic(rows: list[SweepRow], jump_tol: Number = "1e-6") -> ContinuityReport:
    """Estimate lim sup |value(t) - value(0)| as t -> 0 from the grid.

    Over the smallest-|t| decile of the nonzero grid the deviations are
    fitted linearly in |t| and extrapolated to t = 0; the (clamped)
    intercept is ``modulus_estimate`` and the verdict is SuspectedJump
    when it exceeds ``jump_tol``.  A family whose value moves linearly in
    t is therefore Continuous however steep its slope, while an on/off
    discontinuity keeps its gap in the limit.  When the decile holds a
    single |t| magnitude the raw maximum is used instead.
    """
    base = next((r for r in rows if r.t.value == 0), None)
    if base is None or base.primal_value is None:
        raise ValueError("rows must include a solved t = 0 entry")
    bits = base.primal_value.precision_bits
    ref = base.primal_value.value
    nz = [r for r in rows if r.t.value != 0 and r.primal_value is not None]
    if not nz:
        return ContinuityReport(0.0, 0.0, ContinuityVerdict.Continuous, base.primal_value)
    with _ctx(bits):
        deltas = [(abs(r.t.value), abs(r.primal_value.value - ref)) for r in nz]
        max_jump = max(d for _, d in deltas)
        deltas.sort(key=lambda p: p[0])
        decile = deltas[: max(1, len(deltas) // 10)]
        magnitudes = {float(t) for t, _ in decile}
        if len(magnitudes) < 2:
            modulus = max(d for _, d in decile)
        else:
            # least-squares intercept of |delta| = a + b |t|
            n = mpfr(len(decile))
            sx = sy = sxx = sxy = mpfr(0)
            for x, yv in decile:
                sx += x
                sy += yv
                sxx += x * x
                sxy += x * yv
            denom = n * sxx - sx * sx
            intercept = (sy * sxx - sx * sxy) / denom
            modulus = max(intercept, mpfr(0))
        tol = mp(jump_tol, bits)
        verdict = ContinuityVerdict.SuspectedJump if modulus > tol else ContinuityVerdict.Continuous
    return ContinuityReport(float(max_jump), float(modulus), verdict, base.primal_value)


def write_sweep_csv(rows: list[SweepRow], path: str) -> None:
    bits = max((r.t.precision_bits for r in rows), default=64)
    digits = decimal_digits(bits)

    def fmt(v):
        if v is None:
            return ""
        return format_mpfr(v.value, digits)

    lines = ["t,primal,dual,gap,degree,r_blocks,rank_ok,status"]
    for r in rows:
        rb = "" if r.face_signature is None else "(" + " ".join(str(x) for x in r.face_signature) + ")"
        rank = "" if r.rank_condition_holds is None else str(r.rank_condition_holds).lower()
        deg = "" if r.degree is None else str(r.degree)
        lines.append(
            f"{fmt(r.t)},{fmt(r.primal_value)},{fmt(r.dual_value)},{fmt(r.duality_gap)},{deg},{rb},{rank},{r.feasibility_status}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_plot_data(rows: list[SweepRow], path: str) -> None:
    """Two columns (t, value(t) - value(0)) for external plotting."""
    base = next((r for r in rows if r.t.value == 0), None)
    if base is None or base.primal_value is None:
        raise ValueError("rows must include a solved t = 0 entry")
    bits = base.primal_value.precision_bits
    digits = decimal_digits(bits)
    lines = []
    with _ctx(bits):
        for r in rows:
            if r.primal_value is None:
                continue
            d = r.primal_value.value - base.primal_value.value
            lines.append(f"{format_mpfr(r.t.value, digits)} {format_mpfr(d, digits)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# attainment via complementarity
# ---------------------------------------------------------------------------


@dataclass
class AttainmentReport:
    attained: bool
    witness: list[MpScalar] | None = None
    contradiction: str = ""
    residual: float = 0.0


def attainment_check(prob: SdpProblem, dual_opt_X: BlockMatrix, tol: Number = "1e-30") -> AttainmentReport:
    """Test whether the primal supremum is attained, given a dual optimizer.

    Complementary slackness forces any primal optimal (y, Z) to annihilate
    the range of the dual optimizer; together with b^T y = (dual value)
    this is a linear system in y.  If that system is infeasible (checked
    by a least-squares residual at ``tol``) the supremum is not attained;
    otherwise the least-squares y is returned as a candidate witness for
    further verification.  Raises :class:`RankAmbiguity` when the rank
    split of the dual optimizer is unclear at ``tol``.
    """
    bits = prob.precision_bits
    with _ctx(bits):
        t = mp(tol, bits)
        range_vectors: list[tuple[int, list]] = []
        for bi, blk in enumerate(dual_opt_X.blocks):
            eig = sym_eig(blk.symmetrize())
            lam_max = max(abs(eig.eigenvalues[0].value), abs(eig.eigenvalues[-1].value))
            if lam_max == 0:
                continue
            for p, lam in enumerate(eig.eigenvalues):
                rel = abs(lam.value) / lam_max
                if t * mpfr("1e-2") < rel < t * mpfr("1e2") and rel != 1:
                    raise RankAmbiguity(f"block {bi}: relative eigenvalue {float(rel):.3e} sits at the rank cut")
                if lam.value < -t * lam_max:
                    raise RankAmbiguity(f"block {bi}: dual optimizer is not PSD at tol ({float(lam.value):.3e})")
                if rel >= t:
                    q = eig.eigenvectors.column(p)
                    range_vectors.append((bi, q))
        m = prob.m
        rows: list[list] = []
        rhs: list = []
        # (A_0 - sum_k y_k A_k) q = 0  per range vector
        for bi, q in range_vectors:
            d = prob.block_dims[bi]
            a0q = _mat_mul(prob.A[0].blocks[bi].data, q, d, d, 1)
            cols = []
            for k in range(1, m + 1):
                cols.append(_mat_mul(prob.A[k].blocks[bi].data, q, d, d, 1))
            for i in range(d):
                rows.append([cols[k][i] for k in range(m)])
                rhs.append(a0q[i])
        # b^T y equals the dual optimal value
        vstar = dot(prob.A[0], dual_opt_X).value
        rows.append([mp(v, bits) for v in prob.b])
        rhs.append(vstar)

        nrows = len(rows)
        S = MpMatrix._wrap(nrows, m, [v for row in rows for v in row], bits)
        Sp = pseudoinverse(S)
        y = _mat_mul(Sp.data, rhs, m, nrows, 1)
        back = _mat_mul(S.data, y, nrows, m, 1)
        scale = max(mpfr(1), max((abs(v) for v in rhs), default=mpfr(0)))
        resid = max(abs(back[i] - rhs[i]) for i in range(nrows)) / scale
        if resid > t:
            return AttainmentReport(
                False,
                None,
                "complementarity system for a primal optimizer is inconsistent",
                float(resid),
            )
        return AttainmentReport(True, [MpScalar(v, bits) for v in y], "", float(resid))


# ---------------------------------------------------------------------------
# value-certificate audits of the flagship fixture
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CertificateAuditReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = ""):
        self.checks.append(CheckResult(name, bool(passed), detail))


def verify_value_certificates(bits: int | None = None, tol_exp: int = -200) -> CertificateAuditReport:
    """Audit the hand-checkable optimal-value facts of the built-in fixture.

    (a) the explicit feasible points at n = 1, 10, 100, 1000 are feasible
    with objective -sqrt(5) - 1/n; (b) the rank-one dual point is feasible
    with objective -sqrt(5); (c) the eigenvalue reduction of the first
    perturbed problem evaluates to -sqrt(2).
    """
    from .mpla import DEFAULT_PRECISION

    bits = bits or DEFAULT_PRECISION
    report = CertificateAuditReport()
    prob = gallery.expprimal(bits)
    with _ctx(bits):
        tol = mpfr(2) ** tol_exp
        s5 = gallery.sqrt5(bits).value

        for n in (1, 10, 100, 1000):
            y = gallery.feasible_sequence_point(n, bits)
            Z = prob.primal_matrix(y)
            lam_min = mpfr(0)
            for blk in Z.blocks:
                vals, _, _ = _jacobi_raw(blk.data, blk.rows, bits, mpfr(2) ** (-bits + 24))
                lam_min = min(lam_min, min(vals))
            obj = prob.objective_value_primal(y).value
            target = -s5 - mpfr(1) / n
            report.add(
                f"feasible-sequence n={n}",
                lam_min >= -tol and abs(obj - target) <= tol,
                f"min eig {float(lam_min):.3e}, |obj - target| {float(abs(obj - target)):.3e}",
            )

        X = gallery.dual_optimal_point(bits)
        resid = mpfr(0)
        for k in range(1, prob.m + 1):
            resid = max(resid, abs(dot(prob.A[k], X).value - mp(prob.b[k - 1], bits)))
        objd = dot(prob.A[0], X).value
        lam_min = mpfr(0)
        rank1 = None
        for bi, blk in enumerate(X.blocks):
            vals, _, _ = _jacobi_raw(blk.data, blk.rows, bits, mpfr(2) ** (-bits + 24))
            lam_min = min(lam_min, min(vals))
            if bi == 0:
                top = max(vals)
                rank1 = sum(1 for v in vals if v > top * mpfr("1e-100"))
        report.add(
            "dual-point feasibility",
            resid <= tol and lam_min >= -tol,
            f"constraint residual {float(resid):.3e}, min eig {float(lam_min):.3e}",
        )
        report.add(
            "dual-point objective",
            abs(objd + s5) <= tol,
            f"|A0.X + sqrt5| = {float(abs(objd + s5)):.3e}",
        )
        report.add("dual-point first block rank one", rank1 == 1, f"numerical rank {rank1}")

        s2 = gallery.sqrt2(bits).value
        m4 = gallery.appendix_b_eigen_matrix(bits)
        vals, _, _ = _jacobi_raw(m4.data, 4, bits, mpfr(2) ** (-bits + 24))
        report.add(
            "perturbed-problem eigenvalue reduction",
            abs(min(vals) + s2) <= tol,
            f"|min eig + sqrt2| = {float(abs(min(vals) + s2)):.3e}",
        )
    return report
