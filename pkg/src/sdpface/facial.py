"""Facial reduction engine for the dual side of a block SDP.

A face of the product cone S^{d1}_+ x ... x S^{dk}_+ is stored per block
as an orthogonal matrix Q and a residual dimension r, meaning the set
{ Q (0 (+) X) Q^T : X in S^r_+ }.  A *reducing certificate* is a triple
(y, U, V) with

    b^T y = 0,   -sum_k y_k A_k = U + V,   U >= 0,   V in F^perp,
    U + V not in F^perp,

whose existence proves the current face F is not minimal; intersecting F
with the kernel of U then strictly shrinks it.  The engine solves the
certificate system through an auxiliary max-lambda SDP (the homogeneity
is broken by normalizing the residual trace to one), verifies every
certificate independently by eigendecomposition, and iterates to the
minimal face, counting the number of steps.  Infeasibility of the
restricted dual is detected both affinely (b outside the range of the
restricted constraint map) and conically (a Farkas direction with
b^T y = 1).

The second half of the module evaluates perturbation criteria: the rank
condition on face-restricted coefficient spans and the certificate-based
face-invariance tests (support, orthogonality, eigenvector-span and
proportional-direction conditions).
"""

from __future__ import annotations

import enum
import json
import logging
import random
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .mpla import (
    DEFAULT_PRECISION,
    MpMatrix,
    MpScalar,
    Number,
    ShapeMismatch,
    _ctx,
    _jacobi_raw,
    _mat_mul,
    _sorted_eig,
    decimal_digits,
    format_mpfr,
    mp,
    numeric_rank,
    pseudoinverse,
)
from .sdpmodel import BlockMatrix, PerturbedFamily, SdpProblem, dot
from .ipm import SolveStatus, SolverConfig, solve

log = logging.getLogger(__name__)


class NotPSD(ValueError):
    """The matrix used to cut a face is not positive semidefinite."""


class SolverFailure(RuntimeError):
    """The auxiliary certificate solve broke down; carries partial results."""


class FaceRelation(enum.Enum):
    Equal = "Equal"
    FSubsetG = "FSubsetG"
    GSubsetF = "GSubsetF"
    Incomparable = "Incomparable"


class ReductionStatus(enum.Enum):
    MinimalFaceFound = "MinimalFaceFound"
    InfeasibleDetected = "InfeasibleDetected"


class Verdict(enum.Enum):
    Holds = "Holds"
    Fails = "Fails"
    NotFactorable = "NotFactorable"


class SupportVerdict(enum.Enum):
    CriterionHolds = "CriterionHolds"
    CriterionFails = "CriterionFails"


# ---------------------------------------------------------------------------
# faces
# ---------------------------------------------------------------------------


@dataclass
class FaceBlock:
    q: MpMatrix  # orthogonal, residual directions in the last r columns
    r: int

    @property
    def dim(self) -> int:
        return self.q.rows


class Face:
    """A face of a product PSD cone: per block, Q (0 (+) S^r_+) Q^T."""

    def __init__(self, blocks: list[FaceBlock], check: bool = True):
        self.blocks = blocks
        if check:
            for blk in blocks:
                if not 0 <= blk.r <= blk.dim:
                    raise ValueError("residual dimension out of range")
                if not _is_orthogonal(blk.q):
                    raise ValueError("face basis is not orthogonal")

    @classmethod
    def full(cls, dims: list[int], bits: int = DEFAULT_PRECISION) -> "Face":
        return cls([FaceBlock(MpMatrix.identity(d, bits), d) for d in dims], check=False)

    @property
    def dims(self) -> list[int]:
        return [blk.dim for blk in self.blocks]

    @property
    def residual_dims(self) -> list[int]:
        return [blk.r for blk in self.blocks]

    @property
    def precision_bits(self) -> int:
        return max(blk.q.precision_bits for blk in self.blocks)

    def is_whole_cone(self) -> bool:
        return all(blk.r == blk.dim for blk in self.blocks)

    def total_residual(self) -> int:
        return sum(blk.r for blk in self.blocks)

    def restricted_block(self, bi: int, m: MpMatrix) -> MpMatrix | None:
        """(Q^T M Q)_3 of one block; None when the block has r = 0."""
        blk = self.blocks[bi]
        if blk.r == 0:
            return None
        bits = max(m.precision_bits, blk.q.precision_bits)
        n, r = blk.dim, blk.r
        with _ctx(bits):
            qt = blk.q.transpose()
            t = _mat_mul(qt.data, m.data, n, n, n)
            full = _mat_mul(t, blk.q.data, n, n, n)
            raw = [full[i * n + j] for i in range(n - r, n) for j in range(n - r, n)]
        out = MpMatrix._wrap(r, r, raw, bits)
        return out.symmetrize()

    def restricted(self, mat: BlockMatrix) -> list[MpMatrix]:
        """(Q^T M Q)_3 for every block with positive residual dimension."""
        out = []
        for bi in range(len(self.blocks)):
            rb = self.restricted_block(bi, mat.blocks[bi])
            if rb is not None:
                out.append(rb)
        return out

    def restricted_offblock_norm(self, bi: int, m: MpMatrix) -> MpScalar:
        """Frobenius norm of Q^T M Q minus its residual (3) block."""
        blk = self.blocks[bi]
        bits = max(m.precision_bits, blk.q.precision_bits)
        n, r = blk.dim, blk.r
        with _ctx(bits):
            qt = blk.q.transpose()
            t = _mat_mul(qt.data, m.data, n, n, n)
            full = _mat_mul(t, blk.q.data, n, n, n)
            s = mpfr(0)
            for i in range(n):
                for j in range(n):
                    if i >= n - r and j >= n - r:
                        continue
                    v = full[i * n + j]
                    s += v * v
            return MpScalar(gmpy2.sqrt(s), bits)

    def lift_block(self, bi: int, reduced: MpMatrix | None) -> MpMatrix:
        """Q (0 (+) X) Q^T of one block (X = None for an r = 0 block)."""
        blk = self.blocks[bi]
        n, r = blk.dim, blk.r
        bits = blk.q.precision_bits
        if r == 0 or reduced is None:
            return MpMatrix.zeros(n, n, bits)
        with _ctx(bits):
            padded = [mpfr(0)] * (n * n)
            for i in range(r):
                for j in range(r):
                    padded[(n - r + i) * n + (n - r + j)] = mp(reduced.data[i * r + j], bits)
            t = _mat_mul(blk.q.data, padded, n, n, n)
            raw = _mat_mul(t, blk.q.transpose().data, n, n, n)
        return MpMatrix._wrap(n, n, raw, bits).symmetrize()

    def lift(self, reduced_blocks: list[MpMatrix]) -> BlockMatrix:
        """Inverse of :meth:`restricted` into the ambient block structure."""
        out = []
        it = iter(reduced_blocks)
        for bi, blk in enumerate(self.blocks):
            out.append(self.lift_block(bi, next(it) if blk.r > 0 else None))
        return BlockMatrix(out)

    def residual_basis(self, bi: int) -> MpMatrix:
        """The last r columns of Q: an orthonormal basis of the residual space."""
        blk = self.blocks[bi]
        n, r = blk.dim, blk.r
        return blk.q.submatrix(range(n), range(n - r, n))

    def signature(self) -> tuple[int, ...]:
        return tuple(self.residual_dims)

    # -- serialization ---------------------------------------------------
    def to_json_dict(self) -> dict:
        digits = decimal_digits(self.precision_bits)
        return {
            "precision_bits": self.precision_bits,
            "blocks": [
                {
                    "dim": blk.dim,
                    "r": blk.r,
                    "q": [[format_mpfr(blk.q.data[i * blk.dim + j], digits) for j in range(blk.dim)] for i in range(blk.dim)],
                }
                for blk in self.blocks
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Face":
        bits = int(data.get("precision_bits", DEFAULT_PRECISION))
        blocks = []
        for blk in data["blocks"]:
            q = MpMatrix.from_rows(blk["q"], bits)
            blocks.append(FaceBlock(q, int(blk["r"])))
        return cls(blocks)


def _is_orthogonal(q: MpMatrix, tol: Number | None = None) -> bool:
    n = q.rows
    bits = q.precision_bits
    with _ctx(bits):
        t = mp(tol, bits) if tol is not None else mpfr(2) ** (-(bits // 2))
        g = _mat_mul(q.transpose().data, q.data, n, n, n)
        err = mpfr(0)
        for i in range(n):
            for j in range(n):
                target = mpfr(1) if i == j else mpfr(0)
                err = max(err, abs(g[i * n + j] - target))
        return err <= t


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class ReducingCertificate:
    """A solution (y, U, V) of the discriminant system."""

    y: list[MpScalar]
    U: BlockMatrix
    V: BlockMatrix

    def to_json_dict(self) -> dict:
        bits = max(v.precision_bits for v in self.y)
        digits = decimal_digits(bits)

        def matdump(m: BlockMatrix):
            return [
                [[format_mpfr(blk.data[i * blk.rows + j], digits) for j in range(blk.rows)] for i in range(blk.rows)]
                for blk in m.blocks
            ]

        return {
            "precision_bits": bits,
            "y": [format_mpfr(v.value, digits) for v in self.y],
            "U": matdump(self.U),
            "V": matdump(self.V),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ReducingCertificate":
        bits = int(data.get("precision_bits", DEFAULT_PRECISION))

        def matload(rows):
            return BlockMatrix([MpMatrix.from_rows(blk, bits) for blk in rows])

        return cls(
            y=[MpScalar(v, bits) for v in data["y"]],
            U=matload(data["U"]),
            V=matload(data["V"]),
        )


def verify_certificate(
    prob: SdpProblem,
    face: Face,
    cert: ReducingCertificate,
    tol: Number = "1e-30",
    cert_tol: Number | None = None,
) -> bool:
    """Independent audit of a reducing certificate.

    Re-derives every condition from scratch: b^T y = 0, the splitting
    -sum y_k A_k = U + V, positive semidefiniteness of U (by
    eigendecomposition), membership V in F^perp, and U + V outside F^perp
    (the residual part of U must have an eigenvalue above ``cert_tol``).
    """
    bits = prob.precision_bits
    t = mp(tol, bits)
    with _ctx(bits):
        # b^T y = 0
        s = mpfr(0)
        for bk, yk in zip(prob.b, cert.y):
            s += bk.value * mp(yk, bits)
        yscale = max(mpfr(1), max((abs(mp(v, bits)) for v in cert.y), default=mpfr(0)))
        if abs(s) > t * yscale:
            return False
        # -sum y_k A_k = U + V
        W = prob.combination(cert.y)
        scale = max(mpfr(1), W.max_abs().value, cert.U.max_abs().value, cert.V.max_abs().value)
        resid = (W - cert.U - cert.V).max_abs().value
        if resid > t * scale:
            return False
        # U >= 0
        uscale = max(mpfr(1), cert.U.max_abs().value)
        for blk in cert.U.blocks:
            vals, _, _ = _jacobi_raw(blk.symmetrize().data, blk.rows, bits, mpfr(2) ** (-bits + 24))
            if min(vals) < -t * uscale:
                return False
        # V in F^perp
        for bi, blk in enumerate(cert.V.blocks):
            if face.blocks[bi].r == 0:
                continue
            rb = face.restricted_block(bi, blk.symmetrize())
            vscale = max(mpfr(1), cert.V.max_abs().value)
            if rb is not None and rb.max_abs().value > t * vscale:
                return False
        # U + V outside F^perp: residual part of U has spectrum above cert_tol
        ct = mp(cert_tol, bits) if cert_tol is not None else mpfr(2) ** (-(bits // 4))
        lam_max = mpfr(0)
        for bi, blk in enumerate(cert.U.blocks):
            rb = face.restricted_block(bi, blk.symmetrize())
            if rb is None:
                continue
            vals, _, _ = _jacobi_raw(rb.data, rb.rows, bits, mpfr(2) ** (-bits + 24))
            lam_max = max(lam_max, max(vals))
        if lam_max <= ct:
            return False
    return True


# ---------------------------------------------------------------------------
# certificate search (auxiliary max-lambda SDP)
# ---------------------------------------------------------------------------


@dataclass
class DiscriminantReport:
    """Diagnostics of one certificate search."""

    lambda_star: float
    iterations: int
    accepted: bool
    reason: str
    min_residual_eig: float = 0.0


def _nullspace_and_particular(K_rows: list[list], d: list, m: int, bits: int):
    """Solve K y = d; returns (y_p, N, consistent) with N orthonormal."""
    k = len(K_rows)
    Kmat = MpMatrix._wrap(k, m, [v for row in K_rows for v in row], bits)
    Kp = pseudoinverse(Kmat)
    with _ctx(bits):
        y_p = _mat_mul(Kp.data, list(d), m, k, 1)
        back = _mat_mul(Kmat.data, y_p, k, m, 1)
        scale = max(mpfr(1), max((abs(v) for v in d), default=mpfr(0)))
        consistent = all(abs(back[i] - d[i]) <= scale * mpfr(2) ** (-(bits // 2)) for i in range(k))
        # orthonormal nullspace basis from the Gram spectrum of K^T K
        gram = _mat_mul(Kmat.transpose().data, Kmat.data, m, k, m)
        half = mpfr(1) / 2
        for i in range(m):
            for j in range(i + 1, m):
                v = (gram[i * m + j] + gram[j * m + i]) * half
                gram[i * m + j] = v
                gram[j * m + i] = v
        vals, V, _ = _jacobi_raw(gram, m, bits, mpfr(2) ** (-bits + 24))
        vals, V = _sorted_eig(vals, V, m)
        lam_max = max(max(vals), mpfr(0))
        cutoff = lam_max * mpfr(2) ** (-(bits // 2)) if lam_max > 0 else mpfr(0)
        null_cols = [j for j in range(m) if vals[j] <= cutoff]
        N = [[V[i * m + j] for j in null_cols] for i in range(m)]
    return y_p, N, consistent


def _mix_nullspace(N: list[list], seed: int | None, bits: int) -> list[list]:
    """Randomly rotate the nullspace basis (deterministic per seed)."""
    if seed is None or not N or not N[0]:
        return N
    q = len(N[0])
    rng = random.Random(seed)
    with _ctx(bits):
        cols = [[mp(rng.gauss(0.0, 1.0), bits) for _ in range(len(N))] for _ in range(q)]
        # express in the nullspace, then Gram-Schmidt
        proj = []
        for c in cols:
            coeffs = [sum(N[i][j] * c[i] for i in range(len(N))) for j in range(q)]
            proj.append([sum(N[i][j] * coeffs[j] for j in range(q)) for i in range(len(N))])
        basis: list[list] = []
        for v in proj:
            w = list(v)
            for u in basis:
                h = sum(a * b for a, b in zip(w, u))
                w = [a - h * b for a, b in zip(w, u)]
            nrm = gmpy2.sqrt(sum(a * a for a in w))
            if nrm < mpfr(2) ** (-(bits // 2)):
                continue
            basis.append([a / nrm for a in w])
        if len(basis) < q:
            return N
        return [[basis[j][i] for j in range(q)] for i in range(len(N))]


def _lambda_feasibility_problem(
    h_blocks: list[list[MpMatrix]],
    bits: int,
    guard: int = 2,
) -> SdpProblem:
    """sup lambda s.t. H_0 + sum_j z_j H_j - lambda I >= 0, lambda <= guard.

    ``h_blocks[j]`` holds the per-block data of H_j; index 0 is the
    constant term.  Variables are (z_1..z_q, lambda) and the objective
    selects lambda.
    """
    nb = len(h_blocks[0])
    dims = [m.rows for m in h_blocks[0]] + [1]
    q = len(h_blocks) - 1
    A = [BlockMatrix(list(h_blocks[0]) + [MpMatrix.from_rows([[guard]], bits)])]
    for j in range(1, q + 1):
        A.append(BlockMatrix([-m for m in h_blocks[j]] + [MpMatrix.zeros(1, 1, bits)]))
    A.append(BlockMatrix([MpMatrix.identity(d, bits) for d in dims[:-1]] + [MpMatrix.from_rows([[1]], bits)]))
    b = [MpScalar(0, bits)] * q + [MpScalar(1, bits)]
    return SdpProblem(dims, A, b, precision_bits=bits)


def _restricted_constraints(prob: SdpProblem, face: Face) -> list[list[MpMatrix]]:
    """SA[k-1] = the face restriction of A_k, for k = 1..m."""
    return [face.restricted(prob.A[k]) for k in range(1, prob.m + 1)]


def _combo_restricted(sa: list[list[MpMatrix]], y: list, bits: int) -> list[MpMatrix]:
    """-sum_k y_k (Q^T A_k Q)_3 blockwise, from precomputed restrictions."""
    if not sa:
        return []
    out = []
    nb = len(sa[0])
    for bi in range(nb):
        r = sa[0][bi].rows
        acc = [mpfr(0)] * (r * r)
        for k, yk in enumerate(y):
            if yk:
                blk = sa[k][bi].data
                for idx in range(r * r):
                    acc[idx] -= yk * blk[idx]
        out.append(MpMatrix._wrap(r, r, acc, bits, symmetric=True))
    return out


def _search_y(
    sa: list[list[MpMatrix]],
    m: int,
    cfg: SolverConfig,
    eq_rows: list[list],
    eq_rhs: list,
    seed: int | None,
):
    """Maximize the residual spectral floor over {y : eq_rows y = eq_rhs}.

    Returns (y, lambda_star, iterations) or None when the equality system
    itself is inconsistent.
    """
    bits = cfg.precision_bits
    y_p, N, consistent = _nullspace_and_particular(eq_rows, eq_rhs, m, bits)
    if not consistent:
        return None
    N = _mix_nullspace(N, seed, bits)
    q = len(N[0]) if N else 0

    with _ctx(bits):
        h = [_combo_restricted(sa, y_p, bits)]
        for j in range(q):
            direction = [N[i][j] for i in range(m)]
            h.append(_combo_restricted(sa, direction, bits))
    aux = _lambda_feasibility_problem(h, bits)
    report = solve(aux, cfg)
    if report.status in (SolveStatus.Unbounded, SolveStatus.PrimalInfeasibleDetected):
        raise SolverFailure(f"auxiliary certificate solve ended with {report.status.value}")
    if report.status is SolveStatus.NumericalBreakdown:
        log.info("auxiliary solve stalled at iteration %d; using its last interior iterate", report.iterations)
    z = report.solution.y[:q]
    lam = float(report.solution.primal_obj)
    with _ctx(bits):
        y = list(y_p)
        for j in range(q):
            zj = mp(z[j], bits)
            for i in range(m):
                y[i] += N[i][j] * zj
    return y, lam, report.iterations


def _purify_y(
    sa: list[list[MpMatrix]],
    y0: list,
    eq_rows: list[list],
    eq_rhs: list,
    bits: int,
    accept_tol,
    purify_tol,
):
    """Sharpen an accepted y by imposing its apparent zero pattern exactly.

    The residual combination G(y) = -sum y_k (Q^T A_k Q)_3 of an interior
    auxiliary solution carries the solver tolerance in the entries that the
    true certificate sets to zero; left alone this noise re-enters the next
    face basis and produces spurious follow-up certificates at scale
    1/noise.  Entries of G(y0) below ``purify_tol`` (relative) are declared
    zero, y is re-projected onto the corresponding affine set (least-squares
    minimal correction), and the result is kept only when it still passes
    the PSD acceptance.
    """
    m = len(y0)
    G0 = _combo_restricted(sa, y0, bits)
    gmax = mpfr(0)
    for blk in G0:
        for v in blk.data:
            a = abs(v)
            if a > gmax:
                gmax = a
    if gmax == 0:
        return y0
    cut = purify_tol * gmax
    rows = [list(r) for r in eq_rows]
    rhs = list(eq_rhs)
    for bi, blk in enumerate(G0):
        r = blk.rows
        for i in range(r):
            for j in range(i, r):
                if abs(blk.data[i * r + j]) <= cut:
                    # coefficient row of the entry map y -> G(y)_[bi,i,j]
                    rows.append([-sa[k][bi].data[i * r + j] for k in range(m)])
                    rhs.append(mpfr(0))
    # minimal correction: y0 + K^+ (d - K y0), kept only if still acceptable
    Kflat = MpMatrix._wrap(len(rows), m, [v for row in rows for v in row], bits)
    Kp = pseudoinverse(Kflat)
    corr_rhs = [rhs[i] - sum(rows[i][j] * y0[j] for j in range(m)) for i in range(len(rows))]
    delta = _mat_mul(Kp.data, corr_rhs, m, len(rows), 1)
    y_cand = [y0[i] + delta[i] for i in range(m)]
    back = _mat_mul(Kflat.data, y_cand, len(rows), m, 1)
    kscale = max(mpfr(1), max((abs(v) for v in rhs), default=mpfr(0)))
    if any(abs(back[i] - rhs[i]) > kscale * mpfr(2) ** (-(bits // 2)) for i in range(len(rows))):
        return y0
    G1 = _combo_restricted(sa, y_cand, bits)
    min_eig = mpfr(0)
    for blk in G1:
        vals, _, _ = _jacobi_raw(blk.data, blk.rows, bits, mpfr(2) ** (-bits + 24))
        min_eig = min(min_eig, min(vals))
    if min_eig < -accept_tol:
        return y0
    return y_cand


def solve_discriminant(
    prob: SdpProblem,
    face: Face,
    cfg: SolverConfig | None = None,
    seed: int | None = None,
    accept_tol: Number = "1e-40",
    face_tol: Number = "1e-30",
    cert_tol: Number | None = None,
    purify_tol: Number = "1e-10",
    max_y_norm: Number = "1e30",
) -> tuple[ReducingCertificate | None, DiscriminantReport]:
    """Search for a reducing certificate of (D) restricted to ``face``.

    The homogeneous system is normalized by requiring the residual trace
    of -sum y_k A_k to equal one, then solved as a max-lambda feasibility
    SDP over the equality-constrained affine space.  The returned y is
    accepted only if the exact minimum eigenvalue of its residual part is
    above ``-accept_tol``, after which its zero pattern is sharpened (see
    :func:`_purify_y`); the PSD part is then split at ``face_tol``
    (relative) to form U, and V collects the remainder (which lies in
    F^perp by construction, up to the clipped slack).  Solutions with
    ``max |y|`` beyond ``max_y_norm`` are treated as numerical artifacts
    of the homogeneous system and rejected.

    Returns (certificate, diagnostics); certificate is None when the
    system is infeasible within tolerance (no reduction possible), which
    by the reduction theory certifies a relative-interior feasible point.
    """
    if cfg is None:
        cfg = SolverConfig(epsilonStar="1e-50", epsilonDash="1e-50", precision_bits=prob.precision_bits)
    bits = cfg.precision_bits
    if prob.precision_bits != bits:
        prob = prob.with_precision(bits)
    m = prob.m
    if face.total_residual() == 0:
        return None, DiscriminantReport(0.0, 0, False, "face is already the zero face")

    with _ctx(bits):
        sa = _restricted_constraints(prob, face)
        brow = [mp(v, bits) for v in prob.b]
        tau = []
        for k in range(m):
            s = mpfr(0)
            for rb in sa[k]:
                for i in range(rb.rows):
                    s -= rb.data[i * rb.rows + i]  # trace of -(Q^T A_k Q)_3
            tau.append(s)
        eq_rows = [brow, tau]
        eq_rhs = [mpfr(0), mpfr(1)]

    found = _search_y(sa, m, cfg, eq_rows, eq_rhs, seed)
    if found is None:
        return None, DiscriminantReport(0.0, 0, False, "trace normalization unreachable")
    y, lam_star, iters = found

    with _ctx(bits):
        a_tol = mp(accept_tol, bits)
        g_blocks = _combo_restricted(sa, y, bits)
        min_eig = mpfr(0)
        for rb in g_blocks:
            vals, _, _ = _jacobi_raw(rb.data, rb.rows, bits, mpfr(2) ** (-bits + 24))
            min_eig = min(min_eig, min(vals))
        if min_eig < -a_tol:
            return None, DiscriminantReport(
                lam_star, iters, False, "no PSD combination within tolerance", float(min_eig)
            )
        y = _purify_y(sa, y, eq_rows, eq_rhs, bits, a_tol, mp(purify_tol, bits))
        if max(abs(v) for v in y) > mp(max_y_norm, bits):
            return None, DiscriminantReport(lam_star, iters, False, "solution norm above max_y_norm", float(min_eig))
        g_blocks = _combo_restricted(sa, y, bits)
        min_eig = mpfr(0)
        lam_max = mpfr(0)
        eigs = []
        for rb in g_blocks:
            vals, V, _ = _jacobi_raw(rb.data, rb.rows, bits, mpfr(2) ** (-bits + 24))
            vals, V = _sorted_eig(vals, V, rb.rows)
            eigs.append((vals, V, rb.rows))
            min_eig = min(min_eig, min(vals))
            lam_max = max(lam_max, max(vals))
        ct = mp(cert_tol, bits) if cert_tol is not None else mpfr(2) ** (-(bits // 4))
        if lam_max < ct:
            log.warning("discriminant solution is ambiguous: max residual eigenvalue %.3e", float(lam_max))
            return None, DiscriminantReport(lam_star, iters, False, "AmbiguousCertificate", float(min_eig))

        # clip to the PSD part: U3 = sum_{lam > face_tol * lam_max} lam q q^T
        f_tol = mp(face_tol, bits) * lam_max
        u3_blocks = []
        gi = 0
        for bi, blk in enumerate(face.blocks):
            if blk.r == 0:
                u3_blocks.append(None)
                continue
            vals, V, r = eigs[gi]
            gi += 1
            u3 = [mpfr(0)] * (r * r)
            for p in range(r):
                if vals[p] > f_tol:
                    lamp = vals[p]
                    col = [V[i * r + p] for i in range(r)]
                    for i in range(r):
                        ci = col[i] * lamp
                        for j in range(r):
                            u3[i * r + j] += ci * col[j]
            u3_blocks.append(MpMatrix._wrap(r, r, u3, bits).symmetrize())
        U = BlockMatrix([face.lift_block(bi, u3_blocks[bi]) for bi in range(len(face.blocks))])
        W = prob.combination(y)
        V_mat = W - U
    cert = ReducingCertificate(y=[MpScalar(v, bits) for v in y], U=U, V=V_mat)
    return cert, DiscriminantReport(lam_star, iters, True, "certificate found", float(min_eig))


def farkas_infeasibility_probe(
    prob: SdpProblem,
    face: Face,
    cfg: SolverConfig | None = None,
    accept_tol: Number = "1e-40",
) -> list[MpScalar] | None:
    """Look for y with b^T y = 1 and -sum y_k A_k PSD on the face.

    Such a y proves the restricted dual infeasible (weak Farkas direction).
    Returns the direction or None.
    """
    if cfg is None:
        cfg = SolverConfig(epsilonStar="1e-50", epsilonDash="1e-50", precision_bits=prob.precision_bits)
    bits = cfg.precision_bits
    if prob.precision_bits != bits:
        prob = prob.with_precision(bits)
    if face.total_residual() == 0:
        return None
    with _ctx(bits):
        sa = _restricted_constraints(prob, face)
        brow = [mp(v, bits) for v in prob.b]
    found = _search_y(sa, prob.m, cfg, [brow], [mp(1, bits)], None)
    if found is None:
        return None
    y, lam_star, _ = found
    with _ctx(bits):
        a_tol = mp(accept_tol, bits)
        y = _purify_y(sa, y, [brow], [mp(1, bits)], bits, a_tol, mpfr("1e-10"))
        scale = mpfr(1)
        min_eig = mpfr(0)
        for rb in _combo_restricted(sa, y, bits):
            vals, _, _ = _jacobi_raw(rb.data, rb.rows, bits, mpfr(2) ** (-bits + 24))
            min_eig = min(min_eig, min(vals))
            scale = max(scale, max(abs(v) for v in vals))
        if min_eig >= -a_tol * scale:
            return [MpScalar(v, bits) for v in y]
    return None


def restricted_affinely_feasible(prob: SdpProblem, face: Face, tol: Number | None = None) -> bool:
    """Whether b lies in the range of the face-restricted constraint map."""
    bits = prob.precision_bits
    rows = []
    with _ctx(bits):
        for k in range(1, prob.m + 1):
            rows.append([v for rb in face.restricted(prob.A[k]) for v in rb.data])
        if not rows or not rows[0]:
            return all(v == 0 for v in prob.b)
        m = prob.m
        L = len(rows[0])
        S = MpMatrix._wrap(m, L, [v for row in rows for v in row], bits)
        Sp = pseudoinverse(S)
        bvec = [mp(v, bits) for v in prob.b]
        back = _mat_mul(S.data, _mat_mul(Sp.data, bvec, L, m, 1), m, L, 1)
        scale = max(mpfr(1), max(abs(v) for v in bvec))
        t = mp(tol, bits) if tol is not None else mpfr(2) ** (-(bits // 2))
        return all(abs(back[k] - bvec[k]) <= t * scale for k in range(m))


# ---------------------------------------------------------------------------
# face operations
# ---------------------------------------------------------------------------


def intersect_face(face: Face, U: BlockMatrix, tol: Number = "1e-30", psd_tol: Number = "1e-40") -> Face:
    """F cap {U}^perp for PSD U: residual space becomes the kernel of (Q^T U Q)_3.

    Blocks where the restricted part of U vanishes are left untouched; on
    the others Q is composed with the eigenbasis so that the kernel
    occupies the trailing columns.
    """
    bits = max(face.precision_bits, U.precision_bits)
    out = []
    with _ctx(bits):
        t = mp(tol, bits)
        pt = mp(psd_tol, bits)
        uscale = max(mpfr(1), U.max_abs().value)
        for bi, blk in enumerate(face.blocks):
            rb = face.restricted_block(bi, U.blocks[bi])
            if rb is None:
                out.append(FaceBlock(blk.q, blk.r))
                continue
            r = rb.rows
            vals, V, _ = _jacobi_raw(rb.data, r, bits, mpfr(2) ** (-bits + 24))
            vals, V = _sorted_eig(vals, V, r)
            if min(vals) < -pt * uscale:
                raise NotPSD(f"block {bi}: eigenvalue {float(min(vals)):.3e} below zero")
            lam_max = max(vals)
            if lam_max <= t * uscale:
                out.append(FaceBlock(blk.q, blk.r))
                continue
            cut = t * lam_max
            keep = [p for p in range(r) if vals[p] <= cut]  # kernel directions
            drop = [p for p in range(r) if vals[p] > cut]
            new_r = len(keep)
            n = blk.dim
            # compose: new Q = Q * (I_{n-r} (+) [V_drop | V_keep])
            mix = [mpfr(0)] * (n * n)
            for i in range(n - r):
                mix[i * n + i] = mpfr(1)
            for cidx, p in enumerate(drop + keep):
                for i in range(r):
                    mix[(n - r + i) * n + (n - r + cidx)] = V[i * r + p]
            q_new = _mat_mul(blk.q.data, mix, n, n, n)
            out.append(FaceBlock(MpMatrix._wrap(n, n, q_new, bits), new_r))
    return Face(out)


def restrict_to_face(prob: SdpProblem, face: Face) -> SdpProblem:
    """The reduced problem over the face's residual blocks (r = 0 dropped)."""
    bits = prob.precision_bits
    keep = [bi for bi, blk in enumerate(face.blocks) if blk.r > 0]
    dims = [face.blocks[bi].r for bi in keep]
    if not dims:
        raise ValueError("face has no residual blocks; the reduced problem is empty")
    A = []
    for k in range(prob.m + 1):
        blocks = []
        for bi in keep:
            blocks.append(face.restricted_block(bi, prob.A[k].blocks[bi]))
        A.append(BlockMatrix(blocks))
    return SdpProblem(dims, A, list(prob.b), precision_bits=bits)


def compare_faces(f: Face, g: Face, tol: Number | None = None) -> FaceRelation:
    """Subspace-inclusion comparison of the residual ranges, blockwise."""
    if f.dims != g.dims:
        raise ShapeMismatch("faces live on different block structures")
    f_in_g = _face_contained(f, g, tol)
    g_in_f = _face_contained(g, f, tol)
    if f_in_g and g_in_f:
        return FaceRelation.Equal
    if f_in_g:
        return FaceRelation.FSubsetG
    if g_in_f:
        return FaceRelation.GSubsetF
    return FaceRelation.Incomparable


def _face_contained(f: Face, g: Face, tol: Number | None) -> bool:
    bits = max(f.precision_bits, g.precision_bits)
    with _ctx(bits):
        t = mp(tol, bits) if tol is not None else mpfr(2) ** (-(bits // 4))
        for bi in range(len(f.blocks)):
            rf, rg = f.blocks[bi].r, g.blocks[bi].r
            if rf == 0:
                continue
            if rf > rg:
                return False
            n = f.blocks[bi].dim
            bf = f.residual_basis(bi)
            bg = g.residual_basis(bi)
            # residual of (I - P_g) bf with P_g = bg bg^T
            coeffs = _mat_mul(bg.transpose().data, bf.data, rg, n, rf)
            back = _mat_mul(bg.data, coeffs, n, rg, rf)
            err = mpfr(0)
            for idx in range(n * rf):
                err = max(err, abs(back[idx] - bf.data[idx]))
            if err > t:
                return False
    return True


# ---------------------------------------------------------------------------
# the reduction loop
# ---------------------------------------------------------------------------


@dataclass
class FacialReductionResult:
    faces: list[Face]  # F_0 (whole cone) .. F_s
    certificates: list[ReducingCertificate]
    degree: int
    status: ReductionStatus
    reports: list[DiscriminantReport] = field(default_factory=list)

    @property
    def minimal_face(self) -> Face:
        return self.faces[-1]


def facial_reduction(
    prob: SdpProblem,
    cfg: SolverConfig | None = None,
    seed: int | None = None,
    accept_tol: Number = "1e-40",
    face_tol: Number = "1e-30",
    verify_tol: Number = "1e-30",
    check_infeasibility: bool = True,
) -> FacialReductionResult:
    """Iterate certificate search and face intersection to the minimal face.

    Every certificate is audited with :func:`verify_certificate` before it
    is used.  When no certificate exists the restricted dual is probed for
    infeasibility (affine range test plus a Farkas direction search); a
    hit yields ``InfeasibleDetected``, otherwise the current face is
    minimal and ``degree`` counts the certificates used.  The loop is
    bounded by the total matrix dimension minus one.
    """
    if cfg is None:
        cfg = SolverConfig(epsilonStar="1e-50", epsilonDash="1e-50", precision_bits=prob.precision_bits)
    if prob.precision_bits != cfg.precision_bits:
        prob = prob.with_precision(cfg.precision_bits)
    face = Face.full(list(prob.block_dims), cfg.precision_bits)
    faces = [face]
    certs: list[ReducingCertificate] = []
    reports: list[DiscriminantReport] = []

    if check_infeasibility and not restricted_affinely_feasible(prob, face):
        return FacialReductionResult(faces, certs, 0, ReductionStatus.InfeasibleDetected, reports)

    for _ in range(max(prob.total_dim - 1, 1)):
        cert, rep = solve_discriminant(
            prob, face, cfg, seed=seed, accept_tol=accept_tol, face_tol=face_tol
        )
        reports.append(rep)
        if cert is None:
            if check_infeasibility:
                direction = farkas_infeasibility_probe(prob, face, cfg, accept_tol=accept_tol)
                if direction is not None:
                    return FacialReductionResult(
                        faces, certs, len(certs), ReductionStatus.InfeasibleDetected, reports
                    )
            return FacialReductionResult(faces, certs, len(certs), ReductionStatus.MinimalFaceFound, reports)
        if not verify_certificate(prob, face, cert, tol=verify_tol):
            raise SolverFailure("produced certificate failed its independent audit")
        certs.append(cert)
        new_face = intersect_face(face, cert.U, tol=face_tol)
        if new_face.total_residual() >= face.total_residual():
            raise SolverFailure("certificate did not shrink the face")
        face = new_face
        faces.append(face)
        if check_infeasibility and not restricted_affinely_feasible(prob, face):
            return FacialReductionResult(faces, certs, len(certs), ReductionStatus.InfeasibleDetected, reports)
        if face.total_residual() == 0:
            break
    return FacialReductionResult(faces, certs, len(certs), ReductionStatus.MinimalFaceFound, reports)


# ---------------------------------------------------------------------------
# perturbation criteria
# ---------------------------------------------------------------------------


def _stacked_restricted(face: Face, mats: list[BlockMatrix], bits: int) -> list[MpMatrix]:
    """Each matrix's face restriction flattened to one row vector."""
    out = []
    for mat in mats:
        flat = [v for rb in face.restricted(mat) for v in rb.data]
        out.append(MpMatrix._wrap(1, len(flat), flat, bits))
    return out


def rank_condition(
    base: SdpProblem,
    fam: PerturbedFamily,
    f_min: Face,
    t_grid,
    tol: Number | None = None,
) -> dict:
    """Face-restricted span-rank equality at each grid point.

    True at t when rank < (Q^T A_k(t) Q)_3 > equals the base rank (the
    orthogonal basis Q of the unperturbed minimal face is used throughout).
    """
    bits = base.precision_bits
    base_rows = _stacked_restricted(f_min, [base.A[k] for k in range(1, base.m + 1)], bits)
    base_rank = numeric_rank(base_rows, tol)
    out = {}
    for t in t_grid:
        pt = fam.apply(t)
        rows = _stacked_restricted(f_min, [pt.A[k] for k in range(1, pt.m + 1)], bits)
        out[t] = numeric_rank(rows, tol) == base_rank
    return out


def certificate_support(seq: FacialReductionResult, tol: Number = "1e-30") -> set[int]:
    """K-hat: the 1-based constraint indices with y-hat zero in every certificate."""
    if not seq.certificates:
        return set()
    m = len(seq.certificates[0].y)
    bits = max(v.precision_bits for v in seq.certificates[0].y)
    out = set()
    with _ctx(bits):
        t = mp(tol, bits)
        for k in range(m):
            if all(abs(mp(c.y[k], bits)) <= t * max(mpfr(1), max(abs(mp(v, bits)) for v in c.y)) for c in seq.certificates):
                out.add(k + 1)
    return out


def invariance_by_support(seq: FacialReductionResult, fam: PerturbedFamily, tol: Number = "1e-30") -> SupportVerdict:
    """Perturbations allowed only where every certificate's y vanishes.

    Together with the rank condition this is sufficient for the minimal
    face to survive the perturbation.
    """
    khat = certificate_support(seq, tol)
    if all(k in khat for k in fam.perturbed_indices()):
        return SupportVerdict.CriterionHolds
    return SupportVerdict.CriterionFails


def invariance_by_orthogonality(seq: FacialReductionResult, fam: PerturbedFamily, tol: Number = "1e-30") -> Verdict:
    """Support condition plus every direction inside F_min^perp.

    When both hold the restricted coefficient blocks are untouched, so the
    rank condition holds automatically and the minimal face is invariant.
    """
    if invariance_by_support(seq, fam, tol) is SupportVerdict.CriterionFails:
        return Verdict.Fails
    f_min = seq.minimal_face
    bits = f_min.precision_bits
    with _ctx(bits):
        t = mp(tol, bits)
        for k in fam.perturbed_indices():
            d = fam.delta(k)
            scale = max(mpfr(1), d.max_abs().value)
            for rb in f_min.restricted(d):
                if rb.max_abs().value > t * scale:
                    return Verdict.Fails
    return Verdict.Holds


def invariance_by_eigenspan(
    seq: FacialReductionResult,
    fam: PerturbedFamily,
    tol: Number = "1e-25",
) -> Verdict:
    """Certificate-row combinations inside span{q q^T} + F_{i-1}^perp.

    For each step i the combination sum_k y-hat^i_k E_k must decompose
    over the positive eigenvectors q of U-hat^i modulo F_{i-1}^perp; the
    test projects the face-restricted part onto the span of the restricted
    q q^T and checks the residual.
    """
    bits = seq.minimal_face.precision_bits
    with _ctx(bits):
        t = mp(tol, bits)
        for i, cert in enumerate(seq.certificates):
            prev_face = seq.faces[i]
            combo = None
            for k in fam.perturbed_indices():
                d = fam.delta(k).scale(cert.y[k - 1])
                combo = d if combo is None else combo + d
            if combo is None:
                continue
            target = prev_face.restricted(combo)
            norm2 = mpfr(0)
            for rb in target:
                for v in rb.data:
                    norm2 += v * v
            if norm2 == 0:
                continue
            # span generators: restricted q q^T over positive eigenvectors of U
            gens: list[list] = []
            for bi, blk in enumerate(cert.U.blocks):
                rb = prev_face.restricted_block(bi, blk.symmetrize())
                if rb is None:
                    continue
                r = rb.rows
                vals, V, _ = _jacobi_raw(rb.data, r, bits, mpfr(2) ** (-bits + 24))
                vals, V = _sorted_eig(vals, V, r)
                lam_max = max(max(vals), mpfr(0))
                for p in range(r):
                    if vals[p] > lam_max * mpfr("1e-30"):
                        outer = [mpfr(0)] * (r * r)
                        for a in range(r):
                            va = V[a * r + p]
                            for c in range(r):
                                outer[a * r + c] = va * V[c * r + p]
                        flat = []
                        for bj in range(len(prev_face.blocks)):
                            if prev_face.blocks[bj].r == 0:
                                continue
                            if bj == bi:
                                flat.extend(outer)
                            else:
                                flat.extend([mpfr(0)] * (prev_face.blocks[bj].r ** 2))
                        gens.append(flat)
            tvec = [v for rb in target for v in rb.data]
            resid2 = _least_squares_residual(gens, tvec, bits)
            if gmpy2.sqrt(resid2) > t * max(mpfr(1), gmpy2.sqrt(norm2)):
                return Verdict.Fails
    return Verdict.Holds


def _least_squares_residual(gens: list[list], target: list, bits: int) -> mpfr:
    """Squared distance of target to span(gens), via the Gram pseudo-solve."""
    if not gens:
        return sum(v * v for v in target)
    g = len(gens)
    gram = [mpfr(0)] * (g * g)
    rhs = [mpfr(0)] * g
    for i in range(g):
        rhs[i] = sum(a * b for a, b in zip(gens[i], target))
        for j in range(i, g):
            s = sum(a * b for a, b in zip(gens[i], gens[j]))
            gram[i * g + j] = s
            gram[j * g + i] = s
    vals, V, _ = _jacobi_raw(gram, g, bits, mpfr(2) ** (-bits + 24))
    lam_max = max(max(vals), mpfr(0))
    cutoff = lam_max * mpfr(2) ** (-(bits // 2)) if lam_max > 0 else mpfr(0)
    coeff = [mpfr(0)] * g
    for p in range(g):
        if vals[p] > cutoff:
            num = sum(V[i * g + p] * rhs[i] for i in range(g))
            w = num / vals[p]
            for i in range(g):
                coeff[i] += V[i * g + p] * w
    resid2 = mpfr(0)
    for idx in range(len(target)):
        approx = mpfr(0)
        for i in range(g):
            if coeff[i]:
                approx += coeff[i] * gens[i][idx]
        d = target[idx] - approx
        resid2 += d * d
    return resid2


def invariance_by_proportionality(
    seq: FacialReductionResult,
    fam: PerturbedFamily,
    tol: Number = "1e-25",
) -> Verdict:
    """All directions proportional to one matrix, weights orthogonal to
    every certificate y.

    Returns ``NotFactorable`` when the family is not rank one across
    constraints (reported distinctly from a plain failure).
    """
    base = fam.base
    bits = base.precision_bits
    rows = []
    for k in range(1, base.m + 1):
        d = fam.delta(k)
        flat = [v for blk in d.blocks for v in blk.data]
        rows.append(MpMatrix._wrap(1, len(flat), flat, bits))
    if numeric_rank(rows, None) > 1:
        return Verdict.NotFactorable
    with _ctx(bits):
        t = mp(tol, bits)
        norms = [sum(v * v for v in r.data) for r in rows]
        kmax = max(range(len(norms)), key=lambda i: norms[i])
        if norms[kmax] == 0:
            return Verdict.Holds  # zero family
        e = rows[kmax].data
        e2 = norms[kmax]
        w = []
        for r in rows:
            w.append(sum(a * b for a, b in zip(r.data, e)) / e2)
        # confirm the factorization
        for r, wk in zip(rows, w):
            err = mpfr(0)
            for a, b in zip(r.data, e):
                err = max(err, abs(a - wk * b))
            if err > t * max(mpfr(1), gmpy2.sqrt(e2)):
                return Verdict.NotFactorable
        wn = gmpy2.sqrt(sum(v * v for v in w))
        for cert in seq.certificates:
            yv = [mp(v, bits) for v in cert.y]
            yn = gmpy2.sqrt(sum(v * v for v in yv))
            inner = sum(a * b for a, b in zip(w, yv))
            if abs(inner) > t * max(mpfr(1), wn * yn):
                return Verdict.Fails
    return Verdict.Holds


# ---------------------------------------------------------------------------
# serialization of reduction results
# ---------------------------------------------------------------------------


def reduction_to_json(result: FacialReductionResult) -> str:
    return json.dumps(
        {
            "status": result.status.value,
            "degree": result.degree,
            "faces": [f.to_json_dict() for f in result.faces],
            "certificates": [c.to_json_dict() for c in result.certificates],
        },
        indent=2,
    )


def reduction_from_json(text: str) -> FacialReductionResult:
    data = json.loads(text)
    return FacialReductionResult(
        faces=[Face.from_json_dict(f) for f in data["faces"]],
        certificates=[ReducingCertificate.from_json_dict(c) for c in data["certificates"]],
        degree=int(data["degree"]),
        status=ReductionStatus(data["status"]),
    )
