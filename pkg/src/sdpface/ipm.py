"""Arbitrary-precision primal-dual path-following solver.

Mehrotra-type predictor-corrector with the HRVW/KSH direction on the pair

    (P)  sup  b^T y   s.t.  A_0 - sum_k y_k A_k = Z >= 0
    (D)  inf  A_0 . X s.t.  A_k . X = b_k,  X >= 0.

The iteration keeps X and Z positive definite (interiority is re-verified
by Cholesky after every step), starts from X = Z = lambdaStar * I, y = 0,
and stops when both feasibility errors fall below epsilonStar and the
relative duality gap below epsilonDash.  Linearly dependent constraint
matrices are allowed: when the Schur complement is singular its Newton
system is solved through an eigenvalue pseudo-solve instead of Cholesky.

On singular problems whose optimum is not attained the path stalls rather
than converges; the report then carries the last interior iterate together
with its gap, which is exactly the behaviour the tolerance studies probe.

Parameter names follow the solver-parameter file convention
(maxIteration, epsilonStar, lambdaStar, omegaStar, lowerBound, upperBound,
betaStar, betaBar, gammaStar, epsilonDash, precision).  omegaStar is
parsed and stored for file fidelity but the plain lambdaStar initial point
above is used.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .mpla import (
    DEFAULT_PRECISION,
    MpMatrix,
    MpScalar,
    Number,
    ShapeMismatch,
    _cholesky_raw,
    _chol_solve,
    _ctx,
    _inverse_from_cholesky,
    _jacobi_raw,
    _mat_mul,
    _solve_lower,
    format_mpfr,
    mp,
    pseudoinverse,
)
from .sdpmodel import BlockMatrix, SdpProblem, SolutionPair, dot, lagrangian

try:
    import numpy as _np
except ImportError:  # pragma: no cover - numpy is a hard dependency in practice
    _np = None


class Infeasible(RuntimeError):
    """b(t) is not in the range of the constraint map; carries the residual."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"right-hand side outside the constraint range (residual {residual:.3e})")


class SolveStatus(enum.Enum):
    Optimal = "Optimal"
    PrimalInfeasibleDetected = "PrimalInfeasibleDetected"
    DualInfeasibleDetected = "DualInfeasibleDetected"
    Unbounded = "Unbounded"
    IterationCap = "IterationCap"
    NumericalBreakdown = "NumericalBreakdown"


@dataclass
class SolverConfig:
    maxIteration: int = 10000
    epsilonStar: MpScalar | str = "1e-30"
    epsilonDash: MpScalar | str = "1e-30"
    lambdaStar: MpScalar | str = "1e4"
    omegaStar: MpScalar | str = "2.0"
    lowerBound: MpScalar | str = "-1e5"
    upperBound: MpScalar | str = "1e5"
    betaStar: MpScalar | str = "0.5"
    betaBar: MpScalar | str = "0.5"
    gammaStar: MpScalar | str = "0.5"
    precision_bits: int = DEFAULT_PRECISION

    def __post_init__(self):
        for name in (
            "epsilonStar",
            "epsilonDash",
            "lambdaStar",
            "omegaStar",
            "lowerBound",
            "upperBound",
            "betaStar",
            "betaBar",
            "gammaStar",
        ):
            v = getattr(self, name)
            if not isinstance(v, MpScalar):
                setattr(self, name, MpScalar(v, self.precision_bits))
        if not (0 < float(self.gammaStar) < 1):
            raise ValueError("gammaStar must lie strictly between 0 and 1")
        if not (0 <= float(self.betaStar) <= float(self.betaBar) < 1):
            raise ValueError("need 0 <= betaStar <= betaBar < 1")
        if not float(self.lowerBound) < float(self.upperBound):
            raise ValueError("lowerBound must be below upperBound")
        if self.maxIteration <= 0:
            raise ValueError("maxIteration must be positive")

    def replace(self, **kwargs) -> "SolverConfig":
        data = {
            "maxIteration": self.maxIteration,
            "epsilonStar": self.epsilonStar,
            "epsilonDash": self.epsilonDash,
            "lambdaStar": self.lambdaStar,
            "omegaStar": self.omegaStar,
            "lowerBound": self.lowerBound,
            "upperBound": self.upperBound,
            "betaStar": self.betaStar,
            "betaBar": self.betaBar,
            "gammaStar": self.gammaStar,
            "precision_bits": self.precision_bits,
        }
        data.update(kwargs)
        return SolverConfig(**data)

    # -- parameter files -------------------------------------------------
    _FILE_KEYS = (
        "maxIteration",
        "epsilonStar",
        "lambdaStar",
        "omegaStar",
        "lowerBound",
        "upperBound",
        "betaStar",
        "betaBar",
        "gammaStar",
        "epsilonDash",
        "precision",
    )

    @classmethod
    def from_param_file(cls, path: str) -> "SolverConfig":
        values: dict[str, str] = {}
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#")[0].split("*")[0].strip()
                if not line:
                    continue
                if "=" in line:
                    key, _, val = line.partition("=")
                else:
                    parts = line.split()
                    if len(parts) != 2:
                        raise ValueError(f"cannot parse parameter line: {raw!r}")
                    key, val = parts
                key = key.strip()
                if key not in cls._FILE_KEYS:
                    raise ValueError(f"unknown solver parameter {key!r}")
                values[key] = val.strip()
        kwargs: dict = {}
        if "maxIteration" in values:
            kwargs["maxIteration"] = int(values.pop("maxIteration"))
        if "precision" in values:
            kwargs["precision_bits"] = int(values.pop("precision"))
        kwargs.update(values)
        return cls(**kwargs)

    def to_param_file(self, path: str) -> None:
        with open(path, "w") as fh:
            for key in self._FILE_KEYS:
                if key == "precision":
                    fh.write(f"precision = {self.precision_bits}\n")
                elif key == "maxIteration":
                    fh.write(f"maxIteration = {self.maxIteration}\n")
                else:
                    fh.write(f"{key} = {format_mpfr(getattr(self, key).value, 20)}\n")


@dataclass
class SolveReport:
    status: SolveStatus
    solution: SolutionPair
    iterations: int
    final_mu: MpScalar
    residual_history: list = field(default_factory=list)

    @property
    def primal_value(self) -> MpScalar:
        return self.solution.primal_obj

    @property
    def dual_value(self) -> MpScalar:
        return self.solution.dual_obj


# ---------------------------------------------------------------------------
# solver internals (flat per-block arrays, one precision context)
# ---------------------------------------------------------------------------


def _block_dot(a: list[list], b: list[list]) -> mpfr:
    s = mpfr(0)
    for pa, pb in zip(a, b):
        for x, y in zip(pa, pb):
            s += x * y
    return s


def _sym_flat(a: list, n: int) -> list:
    half = mpfr(1) / 2
    out = list(a)
    for i in range(n):
        for j in range(i + 1, n):
            v = (a[i * n + j] + a[j * n + i]) * half
            out[i * n + j] = v
            out[j * n + i] = v
    return out


def _max_abs_blocks(blocks: list[list]) -> mpfr:
    m = mpfr(0)
    for blk in blocks:
        for v in blk:
            a = abs(v)
            if a > m:
                m = a
    return m


def _min_eig_estimate(w: list, n: int, bits: int) -> float:
    """Cheap lower-eigenvalue estimate of a symmetric flat matrix.

    Used only to size step lengths (a generous safety factor is applied on
    top), so float64 accuracy is enough; falls back to a low-precision
    Jacobi sweep when the conversion under/overflows.
    """
    scale = mpfr(0)
    for v in w:
        a = abs(v)
        if a > scale:
            scale = a
    if scale == 0:
        return 0.0
    inv = 1 / scale
    if _np is not None:
        try:
            arr = _np.array([float(v * inv) for v in w], dtype=float).reshape(n, n)
            if _np.isfinite(arr).all():
                lam = float(_np.linalg.eigvalsh((arr + arr.T) / 2)[0])
                return lam * float(scale)
        except (OverflowError, ValueError, FloatingPointError):
            pass
    with _ctx(64):
        scaled = [mpfr(v * inv) for v in w]
        vals, _, _ = _jacobi_raw(_sym_flat(scaled, n), n, 64, mpfr("1e-10"))
    return float(min(vals)) * float(scale)


def _solve_lower_cols(L, B, n):
    """Solve L W = B for a flat row-major B (column by column)."""
    out = [mpfr(0)] * (n * n)
    for c in range(n):
        col = [B[r * n + c] for r in range(n)]
        x = _solve_lower(L, col, n)
        for r in range(n):
            out[r * n + c] = x[r]
    return out


def _transpose_flat(B, n):
    return [B[c * n + r] for r in range(n) for c in range(n)]


def _max_step(L_blocks, d_blocks, dims, bits) -> float | None:
    """Largest alpha with S + alpha dS >= 0, or None when unconstrained."""
    worst = None
    for L, dS, n in zip(L_blocks, d_blocks, dims):
        # W = L^{-1} dS L^{-T}; eigenvalues of W^T match those of W
        Y = _solve_lower_cols(L, dS, n)
        Wt = _solve_lower_cols(L, _transpose_flat(Y, n), n)
        lam = _min_eig_estimate(Wt, n, bits)
        if lam < 0:
            a = -1.0 / lam
            if worst is None or a < worst:
                worst = a
    return worst


class _Kernel:
    """Per-solve state over flat arrays; lives inside one precision context."""

    def __init__(self, prob: SdpProblem, cfg: SolverConfig):
        self.bits = cfg.precision_bits
        self.dims = list(prob.block_dims)
        self.nb = len(self.dims)
        self.m = prob.m
        self.A = [[blk.data[:] for blk in prob.A[k].blocks] for k in range(prob.m + 1)]
        self.b = [mp(v, self.bits) for v in prob.b]
        self.ntot = sum(self.dims)

    def av_dot(self, k: int, blocks: list[list]) -> mpfr:
        s = mpfr(0)
        for pa, pb in zip(self.A[k], blocks):
            for x, y in zip(pa, pb):
                s += x * y
        return s

    def combine(self, coeffs: list, base: list[list] | None = None, sign: int = -1) -> list[list]:
        """base + sign * sum_k coeffs[k] A_{k+1} blockwise."""
        out = []
        for bi, n in enumerate(self.dims):
            acc = list(base[bi]) if base is not None else [mpfr(0)] * (n * n)
            for k in range(self.m):
                c = coeffs[k]
                if c:
                    blk = self.A[k + 1][bi]
                    if sign < 0:
                        for idx in range(n * n):
                            acc[idx] -= c * blk[idx]
                    else:
                        for idx in range(n * n):
                            acc[idx] += c * blk[idx]
            out.append(acc)
        return out


def _solve_schur(B: list, m: int, bits: int, rhs: list) -> list | None:
    """Solve the (PSD) Schur system; eigenvalue pseudo-solve on rank defect."""
    L, fail = _cholesky_raw(B, m)
    if fail is None:
        return _chol_solve(L, rhs, m)
    vals, V, _ = _jacobi_raw(B, m, bits, mpfr(2) ** (-bits + 24))
    lam_max = max(max(vals), mpfr(0))
    if lam_max <= 0:
        return None
    cutoff = lam_max * mpfr(2) ** (-(bits // 2))
    coeffs = []
    for p in range(m):
        if vals[p] > cutoff:
            num = mpfr(0)
            for i in range(m):
                num += V[i * m + p] * rhs[i]
            coeffs.append(num / vals[p])
        else:
            coeffs.append(mpfr(0))
    out = []
    for i in range(m):
        s = mpfr(0)
        for p in range(m):
            if coeffs[p]:
                s += V[i * m + p] * coeffs[p]
        out.append(s)
    return out


def solve(prob: SdpProblem, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the predictor-corrector iteration on a problem.

    Returns a :class:`SolveReport`; ``status`` is ``Optimal`` only when the
    feasibility and gap criteria hold at the configured tolerances.  The
    objective guards map to ``Unbounded`` (primal objective passed
    upperBound) and ``PrimalInfeasibleDetected`` (dual objective passed
    lowerBound); an interiority or Schur failure yields
    ``NumericalBreakdown`` with the last iterate attached.
    """
    if cfg is None:
        cfg = SolverConfig(precision_bits=prob.precision_bits)
    if prob.precision_bits != cfg.precision_bits:
        prob = prob.with_precision(cfg.precision_bits)
    bits = cfg.precision_bits
    with _ctx(bits):
        return _solve_inner(prob, cfg, bits)


def _solve_inner(prob: SdpProblem, cfg: SolverConfig, bits: int) -> SolveReport:
    ker = _Kernel(prob, cfg)
    dims, m, nb = ker.dims, ker.m, ker.nb
    lam0 = mp(cfg.lambdaStar, bits)
    eps_star = mp(cfg.epsilonStar, bits)
    eps_dash = mp(cfg.epsilonDash, bits)
    gamma = mp(cfg.gammaStar, bits)
    beta_star = mp(cfg.betaStar, bits)
    beta_bar = mp(cfg.betaBar, bits)
    upper = mp(cfg.upperBound, bits)
    lower = mp(cfg.lowerBound, bits)

    X = [[lam0 if i % (n + 1) == 0 else mpfr(0) for i in range(n * n)] for n in dims]
    Z = [[lam0 if i % (n + 1) == 0 else mpfr(0) for i in range(n * n)] for n in dims]
    y = [mpfr(0)] * m

    history: list[dict] = []
    status = SolveStatus.IterationCap
    it = 0
    final_mu = mpfr(0)
    stall = 0

    for it in range(1, cfg.maxIteration + 1):
        # residuals and objective values
        p_res = [ker.b[k] - ker.av_dot(k + 1, X) for k in range(m)]
        Dres = ker.combine(y, base=ker.A[0])
        for bi, n in enumerate(dims):
            zblk = Z[bi]
            dblk = Dres[bi]
            for idx in range(n * n):
                dblk[idx] -= zblk[idx]
        p_err = max((abs(v) for v in p_res), default=mpfr(0))
        d_err = _max_abs_blocks(Dres)
        gap = _block_dot(X, Z)
        mu = gap / ker.ntot
        final_mu = mu
        obj_p = mpfr(0)
        for bk, yk in zip(ker.b, y):
            obj_p += bk * yk
        obj_d = ker.av_dot(0, X)
        denom = max(mpfr(1), (abs(obj_p) + abs(obj_d)) / 2)
        relgap = abs(obj_p - obj_d) / denom
        history.append(
            {
                "iteration": it - 1,
                "mu": float(mu),
                "gap": float(gap),
                "primal_error": float(p_err),
                "dual_error": float(d_err),
                "objP": float(obj_p),
                "objD": float(obj_d),
            }
        )

        feasible = p_err <= eps_star and d_err <= eps_star
        if feasible and relgap <= eps_dash:
            status = SolveStatus.Optimal
            break
        if obj_p > upper:
            status = SolveStatus.Unbounded
            break
        if obj_d < lower:
            status = SolveStatus.PrimalInfeasibleDetected
            break

        # factorizations
        LX, LZ, Zinv = [], [], []
        broken = False
        for bi, n in enumerate(dims):
            lx, failx = _cholesky_raw(_sym_flat(X[bi], n), n)
            lz, failz = _cholesky_raw(_sym_flat(Z[bi], n), n)
            if failx is not None or failz is not None:
                broken = True
                break
            LX.append(lx)
            LZ.append(lz)
            Zinv.append(_inverse_from_cholesky(lz, n))
        if broken:
            status = SolveStatus.NumericalBreakdown
            break

        # Schur complement B_kj = sum_blocks tr(Z^-1 A_k X A_j)
        P = []  # P[k][bi] = Zinv A_{k+1} X per block
        for k in range(m):
            rows = []
            for bi, n in enumerate(dims):
                t = _mat_mul(Zinv[bi], ker.A[k + 1][bi], n, n, n)
                rows.append(_mat_mul(t, X[bi], n, n, n))
            P.append(rows)
        B = [mpfr(0)] * (m * m)
        for k in range(m):
            for j in range(k, m):
                s = mpfr(0)
                for bi in range(nb):
                    blk = ker.A[j + 1][bi]
                    pk = P[k][bi]
                    for idx in range(len(blk)):
                        s += pk[idx] * blk[idx]
                B[k * m + j] = s
                B[j * m + k] = s

        # shared pieces: G = X * Dres * Z^-1
        G = []
        for bi, n in enumerate(dims):
            t = _mat_mul(X[bi], Dres[bi], n, n, n)
            G.append(_mat_mul(t, Zinv[bi], n, n, n))

        def newton(rc_zinv: list[list]):
            """Newton step for A_k.dX = p, dZ + sum dy A = Dres, given Rc Z^-1."""
            rhs = []
            for k in range(m):
                s = p_res[k] - ker.av_dot(k + 1, rc_zinv) + ker.av_dot(k + 1, G)
                rhs.append(s)
            dy = _solve_schur(B, m, bits, rhs)
            if dy is None:
                return None
            dZ = ker.combine(dy, base=Dres)
            dX = []
            for bi, n in enumerate(dims):
                t = _mat_mul(X[bi], dZ[bi], n, n, n)
                t = _mat_mul(t, Zinv[bi], n, n, n)
                raw = [rc_zinv[bi][idx] - t[idx] for idx in range(n * n)]
                dX.append(_sym_flat(raw, n))
            return dy, dX, dZ

        # predictor: beta = 0, Rc = -XZ so Rc Z^-1 = -X
        rc_zinv_pred = [[-v for v in X[bi]] for bi in range(nb)]
        pred = newton(rc_zinv_pred)
        if pred is None:
            status = SolveStatus.NumericalBreakdown
            break
        dy_p, dX_p, dZ_p = pred

        a_p = _max_step(LX, dX_p, dims, bits)
        a_d = _max_step(LZ, dZ_p, dims, bits)
        alpha_p = mpfr(1) if a_p is None else min(mpfr(1), gamma * mpfr(a_p))
        alpha_d = mpfr(1) if a_d is None else min(mpfr(1), gamma * mpfr(a_d))

        # centering via the predicted gap
        gap_aff = (
            gap
            + alpha_p * _block_dot(dX_p, Z)
            + alpha_d * _block_dot(X, dZ_p)
            + alpha_p * alpha_d * _block_dot(dX_p, dZ_p)
        )
        ratio = gap_aff / gap if gap > 0 else mpfr(1)
        if ratio < 0:
            ratio = mpfr(0)
        beta_aux = ratio * ratio
        floor = beta_star if feasible else beta_bar
        beta = min(mpfr(1), max(floor, beta_aux))

        # corrector: Rc = beta mu I - XZ - dXp dZp
        rc_zinv = []
        bm = beta * mu
        for bi, n in enumerate(dims):
            cross = _mat_mul(dX_p[bi], dZ_p[bi], n, n, n)
            cz = _mat_mul(cross, Zinv[bi], n, n, n)
            raw = [bm * Zinv[bi][idx] - X[bi][idx] - cz[idx] for idx in range(n * n)]
            rc_zinv.append(raw)
        corr = newton(rc_zinv)
        if corr is None:
            status = SolveStatus.NumericalBreakdown
            break
        dy, dX, dZ = corr

        a_p = _max_step(LX, dX, dims, bits)
        a_d = _max_step(LZ, dZ, dims, bits)
        alpha_p = mpfr(1) if a_p is None else min(mpfr(1), gamma * mpfr(a_p))
        alpha_d = mpfr(1) if a_d is None else min(mpfr(1), gamma * mpfr(a_d))

        # step, re-verifying interiority
        for _ in range(60):
            X_new = [
                _sym_flat([X[bi][idx] + alpha_p * dX[bi][idx] for idx in range(dims[bi] ** 2)], dims[bi])
                for bi in range(nb)
            ]
            Z_new = [
                _sym_flat([Z[bi][idx] + alpha_d * dZ[bi][idx] for idx in range(dims[bi] ** 2)], dims[bi])
                for bi in range(nb)
            ]
            ok = True
            for bi, n in enumerate(dims):
                _, fx = _cholesky_raw(X_new[bi], n)
                _, fz = _cholesky_raw(Z_new[bi], n)
                if fx is not None or fz is not None:
                    ok = False
                    break
            if ok:
                break
            alpha_p /= 2
            alpha_d /= 2
        else:
            status = SolveStatus.NumericalBreakdown
            break

        X = X_new
        Z = Z_new
        y = [y[k] + alpha_d * dy[k] for k in range(m)]

        if max(alpha_p, alpha_d) < mpfr("1e-40"):
            stall += 1
            if stall >= 5:
                status = SolveStatus.NumericalBreakdown
                break
        else:
            stall = 0

    X_m = BlockMatrix([MpMatrix._wrap(n, n, X[bi], bits, symmetric=True) for bi, n in enumerate(dims)])
    Z_m = BlockMatrix([MpMatrix._wrap(n, n, _sym_flat(Z[bi], n), bits, symmetric=True) for bi, n in enumerate(dims)])
    y_m = [MpScalar(v, bits) for v in y]
    obj_p = prob.objective_value_primal(y_m)
    obj_d = prob.objective_value_dual(X_m)
    sol = SolutionPair(
        y=y_m,
        Z=Z_m,
        X=X_m,
        primal_obj=obj_p,
        dual_obj=obj_d,
        duality_gap=MpScalar(obj_d.value - obj_p.value, bits),
    )
    return SolveReport(status=status, solution=sol, iterations=it, final_mu=MpScalar(final_mu, bits), residual_history=history)


# ---------------------------------------------------------------------------
# feasibility helpers
# ---------------------------------------------------------------------------


def _stack_columns(prob: SdpProblem) -> MpMatrix:
    """S with one column vec(A_k) per constraint, blocks stacked."""
    bits = prob.precision_bits
    total = sum(d * d for d in prob.block_dims)
    raw = [mp(0, bits)] * (total * prob.m)
    for k in range(1, prob.m + 1):
        offset = 0
        for blk in prob.A[k].blocks:
            for idx, v in enumerate(blk.data):
                raw[(offset + idx) * prob.m + (k - 1)] = v
            offset += blk.rows * blk.cols
    return MpMatrix._wrap(total, prob.m, raw, bits)


def _unstack(prob: SdpProblem, flat: list) -> BlockMatrix:
    blocks = []
    offset = 0
    for d in prob.block_dims:
        blocks.append(MpMatrix._wrap(d, d, list(flat[offset : offset + d * d]), prob.precision_bits))
        offset += d * d
    return BlockMatrix(blocks)


def strictly_feasible_point(prob: SdpProblem, X0: BlockMatrix, tol: Number | None = None) -> BlockMatrix:
    """Project a reference point onto the perturbed constraint affine space.

    Computes X_t with vec(X_t) = (I - S S^+) vec(X_0) + (S^+)^T b, where S
    has columns vec(A_k); at the unperturbed data this reproduces X_0
    exactly.  Raises :class:`Infeasible` when b is outside the range of the
    constraint map (the least-squares residual is reported); positive
    definiteness of the result is the caller's check.
    """
    bits = prob.precision_bits
    if X0.dims != list(prob.block_dims):
        raise ShapeMismatch("X0 does not match the problem block structure")
    S = _stack_columns(prob)
    Sp = pseudoinverse(S)  # m x total
    with _ctx(bits):
        x0 = [v for blk in X0.blocks for v in blk.data]
        # S^+ vec(X0) and the particular solution (S^+)^T b
        proj = _mat_mul(S.data, _mat_mul(Sp.data, x0, prob.m, S.rows, 1), S.rows, prob.m, 1)
        part = _mat_mul(Sp.transpose().data, [mp(v, bits) for v in prob.b], S.rows, prob.m, 1)
        xt = [x0[i] - proj[i] + part[i] for i in range(S.rows)]
        # containment check: S^T xt must reproduce b
        resid = mpfr(0)
        st = S.transpose()
        vals = _mat_mul(st.data, xt, prob.m, S.rows, 1)
        scale = max(mpfr(1), max((abs(v) for v in vals), default=mpfr(0)))
        for k in range(prob.m):
            r = abs(vals[k] - mp(prob.b[k], bits))
            if r > resid:
                resid = r
        t = mp(tol, bits) if tol is not None else mpfr(2) ** (-(bits // 2))
        if resid / scale > t:
            raise Infeasible(float(resid / scale))
    out = _unstack(prob, xt)
    return BlockMatrix([blk.symmetrize() for blk in out.blocks])


def check_saddle_point(
    prob: SdpProblem,
    X_tilde: BlockMatrix,
    y_tilde,
    probes,
    tol: Number = "1e-30",
) -> bool:
    """Falsification test of the saddle-point inequalities.

    True iff L(X~, y) <= L(X~, y~) <= L(X, y~) holds for every probe pair
    (X, y) within ``tol``; a necessary condition for joint optimality, not
    a proof.
    """
    bits = prob.precision_bits
    t = mp(tol, bits)
    mid = lagrangian(prob, X_tilde, y_tilde).value
    for X, yv in probes:
        left = lagrangian(prob, X_tilde, yv).value
        right = lagrangian(prob, X, y_tilde).value
        scale = max(mpfr(1), abs(left), abs(mid), abs(right))
        if left - mid > t * scale or mid - right > t * scale:
            return False
    return True
