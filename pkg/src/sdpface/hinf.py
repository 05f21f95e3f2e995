"""State-feedback control SDP: builder, feasibility criteria, classification.

From plant data (A, B1, B2, C1, D11, D12) the builder assembles the
gain-bound LMI

    [ -He(A X1 + B2 X2)      *        *    ]
    [ -C1 X1 - D12 X2      g I        *    ]   >= 0,     X1 >= 0,
    [ -B1^T               -D11^T     g I   ]

over the variables (X1 symmetric, X2, g) and converts it into the
package's (P)/(D) storage convention (objective sup -g).  The module also
evaluates the two control-theoretic rank criteria (stabilizability and
the non-strict-feasibility test on the pencil [[A - lambda I, B2], [C1,
D12]]), produces the perturbation family of any single scalar plant
entry, and classifies each entry's effect on the dual minimal face as
Invariant / FullDimensional / Shrunk / Unknown.

The lambda search behind the pencil test combines a coarse complex grid
scan (a float64 smallest-singular-value sweep over Re in [-10, 0], Im in
[-10, 10], step 0.25) with an exact refinement: rank deficiency happens
exactly at common roots of the maximal minors, which are polynomials in
lambda of degree at most n_x, so candidate roots are computed in closed
form (or polished by Newton) at working precision and checked against
every minor.
"""

from __future__ import annotations

import enum
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import gmpy2
from gmpy2 import mpfr

from .mpla import (
    DEFAULT_PRECISION,
    MpMatrix,
    MpScalar,
    Number,
    _ctx,
    decimal_digits,
    format_mpfr,
    mp,
    numeric_rank,
)
from .sdpmodel import BlockMatrix, PerturbedFamily, SdpProblem
from .ipm import SolverConfig
from . import facial

try:
    import numpy as _np
except ImportError:  # pragma: no cover
    _np = None

log = logging.getLogger(__name__)

PARAMETERS = ("a11", "a12", "a21", "a22", "b1", "b2", "c11", "c12", "c21", "c22", "d1", "d2")


class DimensionMismatch(ValueError):
    """Plant matrices do not assemble into a consistent system."""


class UnknownParam(ValueError):
    """Not one of the scalar plant entries this module perturbs."""


class FaceBehavior(enum.Enum):
    Invariant = "Invariant"
    FullDimensional = "FullDimensional"
    Shrunk = "Shrunk"
    Unknown = "Unknown"


@dataclass
class ControlSystem:
    """State-space data (A, B1, B2, C1, D11, D12) of the plant."""

    A: MpMatrix
    B1: MpMatrix
    B2: MpMatrix
    C1: MpMatrix
    D11: MpMatrix
    D12: MpMatrix

    def __post_init__(self):
        nx = self.A.rows
        if self.A.cols != nx:
            raise DimensionMismatch("A must be square")
        if self.B1.rows != nx or self.B2.rows != nx:
            raise DimensionMismatch("B1/B2 row count must match the state dimension")
        nz = self.C1.rows
        if self.C1.cols != nx:
            raise DimensionMismatch("C1 must have one column per state")
        if self.D11.rows != nz or self.D12.rows != nz:
            raise DimensionMismatch("D11/D12 must have one row per performance output")
        if self.D11.cols != self.B1.cols:
            raise DimensionMismatch("D11 must have one column per disturbance")
        if self.D12.cols != self.B2.cols:
            raise DimensionMismatch("D12 must have one column per input")

    @property
    def n_x(self) -> int:
        return self.A.rows

    @property
    def n_w(self) -> int:
        return self.B1.cols

    @property
    def n_u(self) -> int:
        return self.B2.cols

    @property
    def n_z(self) -> int:
        return self.C1.rows

    @property
    def precision_bits(self) -> int:
        return max(m.precision_bits for m in (self.A, self.B1, self.B2, self.C1, self.D11, self.D12))

    # -- plant file I/O ---------------------------------------------------
    def to_json_dict(self) -> dict:
        digits = decimal_digits(self.precision_bits)

        def dump(m: MpMatrix):
            return [[format_mpfr(m.data[i * m.cols + j], digits) for j in range(m.cols)] for i in range(m.rows)]

        return {
            "precision_bits": self.precision_bits,
            "A": dump(self.A),
            "B1": dump(self.B1),
            "B2": dump(self.B2),
            "C1": dump(self.C1),
            "D11": dump(self.D11),
            "D12": dump(self.D12),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ControlSystem":
        bits = int(data.get("precision_bits", DEFAULT_PRECISION))
        return cls(**{key: MpMatrix.from_rows(data[key], bits) for key in ("A", "B1", "B2", "C1", "D11", "D12")})

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "ControlSystem":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def perturb(self, param: str, amount: Number) -> "ControlSystem":
        """A copy with one scalar plant entry shifted by ``amount``."""
        target, i, j = _param_position(self, param)
        mats = {name: getattr(self, name) for name in ("A", "B1", "B2", "C1", "D11", "D12")}
        m = mats[target]
        bits = self.precision_bits
        raw = list(m.data)
        with _ctx(bits):
            raw[i * m.cols + j] = raw[i * m.cols + j] + mp(amount, bits)
        mats[target] = MpMatrix._wrap(m.rows, m.cols, raw, bits)
        return ControlSystem(**mats)


def _param_position(sys: ControlSystem, param: str) -> tuple[str, int, int]:
    if param not in PARAMETERS:
        raise UnknownParam(f"{param!r}; expected one of {PARAMETERS}")
    kind, rest = param[0], param[1:]
    if kind == "a":
        i, j = int(rest[0]) - 1, int(rest[1]) - 1
        return "A", i, j
    if kind == "b":
        return "B2", int(rest) - 1, 0
    if kind == "c":
        i, j = int(rest[0]) - 1, int(rest[1]) - 1
        return "C1", i, j
    return "D12", int(rest) - 1, 0


# ---------------------------------------------------------------------------
# LMI assembly
# ---------------------------------------------------------------------------


def variable_names(sys: ControlSystem) -> list[str]:
    names = []
    for j in range(sys.n_x):
        for i in range(j, sys.n_x):
            names.append(f"x1[{i + 1},{j + 1}]")
    for i in range(sys.n_u):
        for j in range(sys.n_x):
            names.append(f"x2[{i + 1},{j + 1}]")
    names.append("gain")
    return names


def _lmi_value(sys: ControlSystem, x: list, bits: int) -> MpMatrix:
    """The big LMI block at a concrete variable vector (last entry = gain)."""
    nx, nw, nu, nz = sys.n_x, sys.n_w, sys.n_u, sys.n_z
    n = nx + nz + nw
    idx = 0
    X1 = [[mpfr(0)] * nx for _ in range(nx)]
    for j in range(nx):
        for i in range(j, nx):
            X1[i][j] = x[idx]
            X1[j][i] = x[idx]
            idx += 1
    X2 = [[mpfr(0)] * nx for _ in range(nu)]
    for i in range(nu):
        for j in range(nx):
            X2[i][j] = x[idx]
            idx += 1
    g = x[idx]

    def cell(M: MpMatrix, i, j):
        return M.data[i * M.cols + j]

    out = [[mpfr(0)] * n for _ in range(n)]
    # (1,1): -He(A X1 + B2 X2)
    for i in range(nx):
        for j in range(nx):
            s = mpfr(0)
            for p in range(nx):
                s += cell(sys.A, i, p) * X1[p][j]
            for p in range(nu):
                s += cell(sys.B2, i, p) * X2[p][j]
            out[i][j] -= s
            out[j][i] -= s
    # (2,1): -C1 X1 - D12 X2 and its transpose
    for i in range(nz):
        for j in range(nx):
            s = mpfr(0)
            for p in range(nx):
                s += cell(sys.C1, i, p) * X1[p][j]
            for p in range(nu):
                s += cell(sys.D12, i, p) * X2[p][j]
            out[nx + i][j] = -s
            out[j][nx + i] = -s
    # (3,1): -B1^T ; (3,2): -D11^T
    for i in range(nw):
        for j in range(nx):
            v = -cell(sys.B1, j, i)
            out[nx + nz + i][j] = v
            out[j][nx + nz + i] = v
        for j in range(nz):
            v = -cell(sys.D11, j, i)
            out[nx + nz + i][nx + j] = v
            out[nx + j][nx + nz + i] = v
    # gain diagonal
    for i in range(nz + nw):
        out[nx + i][nx + i] = g
    return MpMatrix.from_rows(out, bits)


def lmi_coefficients(sys: ControlSystem):
    """Display-convention LMI data: (constant, [M_k], [N_k]).

    ``constant`` is the variable-free part of the big block, ``M_k`` the
    big-block coefficient of variable k and ``N_k`` its coefficient in the
    X1 >= 0 block.  The problem builder negates these into the (P)/(D)
    storage convention.
    """
    bits = sys.precision_bits
    m = sys.n_x * (sys.n_x + 1) // 2 + sys.n_u * sys.n_x + 1
    with _ctx(bits):
        zero = [mpfr(0)] * m
        constant = _lmi_value(sys, zero, bits)
        M = []
        for k in range(m):
            unit = list(zero)
            unit[k] = mpfr(1)
            M.append(_lmi_value(sys, unit, bits) - constant)
    N = []
    nx = sys.n_x
    for j in range(nx):
        for i in range(j, nx):
            blk = MpMatrix.zeros(nx, nx, bits)
            blk.data[i * nx + j] = mp(1, bits)
            blk.data[j * nx + i] = mp(1, bits)
            blk.symmetric = True
            N.append(blk)
    for _ in range(sys.n_u * sys.n_x + 1):
        N.append(MpMatrix.zeros(nx, nx, bits))
    return constant, M, N


def build_hinf_sdp(sys: ControlSystem) -> SdpProblem:
    """The gain-bound SDP in storage convention; objective sup of -gain."""
    bits = sys.precision_bits
    constant, M, N = lmi_coefficients(sys)
    A = [BlockMatrix([-constant, MpMatrix.zeros(sys.n_x, sys.n_x, bits)])]
    for Mk, Nk in zip(M, N):
        A.append(BlockMatrix([-Mk, -Nk]))
    b = [MpScalar(0, bits)] * (len(M) - 1) + [MpScalar(-1, bits)]
    return SdpProblem([sys.n_x + sys.n_z + sys.n_w, sys.n_x], A, b, precision_bits=bits)


def matrixwise_family(sys: ControlSystem, param: str) -> PerturbedFamily:
    """The SDP perturbation family of one scalar plant entry.

    The builder is linear in each plant entry, so the family direction is
    the exact difference quotient at a unit shift; E_k(t) is linear in t.
    """
    base = build_hinf_sdp(sys)
    shifted = build_hinf_sdp(sys.perturb(param, 1))
    deltas = {}
    for k in range(1, base.m + 1):
        d = shifted.A[k] - base.A[k]
        if not d.is_zero():
            deltas[k] = d
    return PerturbedFamily(base, deltas, label=f"plant:{param}")


# ---------------------------------------------------------------------------
# complex helpers (plain (re, im) mpfr pairs)
# ---------------------------------------------------------------------------


def _c_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _c_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _c_abs2(a):
    return a[0] * a[0] + a[1] * a[1]


def _c_div(a, b):
    d = _c_abs2(b)
    return ((a[0] * b[0] + a[1] * b[1]) / d, (a[1] * b[0] - a[0] * b[1]) / d)


def _c_sqrt(a):
    re, im = a
    r = gmpy2.sqrt(re * re + im * im)
    if r == 0:
        return (mpfr(0), mpfr(0))
    u = gmpy2.sqrt((r + re) / 2)
    if u == 0:
        return (mpfr(0), gmpy2.sqrt(r))
    v = im / (2 * u)
    return (u, v)


def _poly_eval(coeffs: list, z):
    acc = (mpfr(0), mpfr(0))
    for c in reversed(coeffs):
        acc = _c_add(_c_mul(acc, z), (c, mpfr(0)))
    return acc


def _poly_derivative(coeffs: list) -> list:
    return [coeffs[i] * i for i in range(1, len(coeffs))]


def _poly_trim(coeffs: list, scale) -> list:
    eps = scale * mpfr(2) ** (-900)
    out = list(coeffs)
    while len(out) > 1 and abs(out[-1]) <= eps:
        out.pop()
    return out


def _poly_mul(a: list, b: list) -> list:
    out = [mpfr(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _poly_roots(coeffs: list, bits: int) -> list:
    """Complex roots of a real polynomial; closed form to degree 2, then
    float seeds polished by Newton at working precision."""
    coeffs = _poly_trim(coeffs, max(abs(c) for c in coeffs) if coeffs else mpfr(1))
    deg = len(coeffs) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [(-coeffs[0] / coeffs[1], mpfr(0))]
    if deg == 2:
        c, b, a = coeffs[0], coeffs[1], coeffs[2]
        disc = b * b - 4 * a * c
        sq = _c_sqrt((disc, mpfr(0)))
        inv = 1 / (2 * a)
        return [
            ((-b + sq[0]) * inv, sq[1] * inv),
            ((-b - sq[0]) * inv, -sq[1] * inv),
        ]
    if _np is None:  # pragma: no cover
        raise RuntimeError("degree > 2 root finding requires numpy seeds")
    seeds = _np.roots([float(c) for c in reversed(coeffs)])
    dcoeffs = _poly_derivative(coeffs)
    out = []
    for s in seeds:
        z = (mpfr(s.real), mpfr(s.imag))
        for _ in range(200):
            f = _poly_eval(coeffs, z)
            fp = _poly_eval(dcoeffs, z)
            if _c_abs2(fp) == 0:
                break
            step = _c_div(f, fp)
            z = (z[0] - step[0], z[1] - step[1])
            if _c_abs2(step) <= mpfr(2) ** (-2 * bits + 60) * max(mpfr(1), _c_abs2(z)):
                break
        out.append(z)
    return out


def _complex_matrix_rank(entries: list[list], rows: int, cols: int, bits: int, tol=None) -> int:
    """Rank of a complex matrix through its real embedding."""
    emb = []
    for i in range(rows):
        re_row, im_row = [], []
        for j in range(cols):
            re, im = entries[i][j]
            re_row.extend([re, -im])
            im_row.extend([im, re])
        emb.append(re_row)
        emb.append(im_row)
    mats = [MpMatrix._wrap(1, 2 * cols, row, bits) for row in emb]
    return numeric_rank(mats, tol) // 2


def _pencil_entries(sys: ControlSystem, lam, bits: int, stacked: bool) -> list[list]:
    """[[A - lam I, B2]] or the full [[A - lam I, B2], [C1, D12]] pencil."""
    nx, nu, nz = sys.n_x, sys.n_u, sys.n_z
    rows = []
    for i in range(nx):
        row = []
        for j in range(nx):
            v = sys.A.data[i * nx + j]
            if i == j:
                row.append((v - lam[0], -lam[1]))
            else:
                row.append((v, mpfr(0)))
        for j in range(nu):
            row.append((sys.B2.data[i * nu + j], mpfr(0)))
        rows.append(row)
    if stacked:
        for i in range(nz):
            row = []
            for j in range(nx):
                row.append((sys.C1.data[i * nx + j], mpfr(0)))
            for j in range(nu):
                row.append((sys.D12.data[i * nu + j], mpfr(0)))
            rows.append(row)
    return rows


def _eigenvalues_of_A(sys: ControlSystem, bits: int) -> list:
    """Complex eigenvalues of A via the characteristic polynomial."""
    nx = sys.n_x
    with _ctx(bits):
        if nx == 1:
            return [(sys.A.data[0], mpfr(0))]
        if nx == 2:
            a, b, c, d = sys.A.data
            tr = a + d
            det = a * d - b * c
            return _poly_roots([det, -tr, mpfr(1)], bits)
        # characteristic polynomial by Leverrier-Faddeev
        coeffs = _char_poly(sys.A, bits)
        return _poly_roots(coeffs, bits)


def _char_poly(A: MpMatrix, bits: int) -> list:
    n = A.rows
    from .mpla import _mat_mul

    M = [mpfr(0)] * (n * n)
    for i in range(n):
        M[i * n + i] = mpfr(1)
    cs = [mpfr(1)]
    Mk = M
    for k in range(1, n + 1):
        AM = _mat_mul(A.data, Mk, n, n, n)
        tr = sum(AM[i * n + i] for i in range(n))
        ck = -tr / k
        cs.append(ck)
        Mk = list(AM)
        for i in range(n):
            Mk[i * n + i] += ck
    return list(reversed(cs))  # ascending order: cs holds leading first


@dataclass
class StrictnessReport:
    strict: bool
    witness: tuple[MpScalar, MpScalar] | None = None

    def __bool__(self):  # Strict acts truthy
        return self.strict


def _minor_polynomials(sys: ControlSystem, bits: int) -> list[list]:
    """All maximal minors of the stacked pencil as polynomials in lambda."""
    nx, nu, nz = sys.n_x, sys.n_u, sys.n_z
    k = nx + nu
    rows_total = nx + nz

    def entry_poly(i: int, j: int) -> list:
        # entry of [[A - lam I, B2], [C1, D12]] as [const, linear]
        if i < nx:
            if j < nx:
                c = sys.A.data[i * nx + j]
                return [c, mpfr(-1)] if i == j else [c]
            return [sys.B2.data[i * nu + (j - nx)]]
        if j < nx:
            return [sys.C1.data[(i - nx) * nx + j]]
        return [sys.D12.data[(i - nx) * nu + (j - nx)]]

    def det_poly(rowsel: tuple) -> list:
        # Laplace expansion over the first column
        def rec(rows_left: list, cols_left: list) -> list:
            if len(rows_left) == 1:
                return entry_poly(rows_left[0], cols_left[0])
            acc = [mpfr(0)]
            for pos, ri in enumerate(rows_left):
                e = entry_poly(ri, cols_left[0])
                if len(e) == 1 and e[0] == 0:
                    continue
                sub = rec(rows_left[:pos] + rows_left[pos + 1 :], cols_left[1:])
                term = _poly_mul(e, sub)
                if pos % 2 == 1:
                    term = [-t for t in term]
                if len(term) > len(acc):
                    acc, term = term, acc
                for idx, t in enumerate(term):
                    acc[idx] += t
            return acc

        return rec(list(rowsel), list(range(k)))

    with _ctx(bits):
        return [det_poly(sel) for sel in combinations(range(rows_total), k)]


def nonstrict_feasibility_criterion(
    sys: ControlSystem,
    re_tol: Number = "1e-30",
    root_tol: Number = "1e-25",
    grid_step: float = 0.25,
) -> StrictnessReport:
    """Dual strict feasibility test via the stacked pencil's rank.

    The dual of the gain-bound SDP is *not* strictly feasible exactly when
    some lambda with Re <= 0 drops the rank of [[A - lambda I, B2], [C1,
    D12]] below n_x + n_u.  Candidates are the common roots of the maximal
    minors (exact polynomials in lambda); a float64 grid scan over
    Re in [-10, 0] x Im in [-10, 10] cross-checks that no rank dip was
    missed.  Returns ``Strict`` or the witness lambda.
    """
    bits = sys.precision_bits
    with _ctx(bits):
        rt = mp(root_tol, bits)
        ret = mp(re_tol, bits)
        minors = _minor_polynomials(sys, bits)
        scale = max(max((abs(c) for c in p), default=mpfr(0)) for p in minors)
        if scale == 0:
            # pencil has identically deficient rank; lambda = 0 witnesses it
            return StrictnessReport(False, (MpScalar(0, bits), MpScalar(0, bits)))
        live = [p for p in minors if any(abs(c) > scale * mpfr(2) ** (-900) for c in p)]
        if not live:
            return StrictnessReport(False, (MpScalar(0, bits), MpScalar(0, bits)))
        candidates = []
        shortest = min(live, key=len)
        if len(shortest) == 1:
            # some minor is a nonzero constant: no common root anywhere
            candidates = []
        else:
            candidates = _poly_roots(shortest, bits)
        hits = []
        for z in candidates:
            if z[0] > ret:
                continue
            vals = [abs(_poly_eval(p, z)[0]) + abs(_poly_eval(p, z)[1]) for p in minors]
            if max(vals) <= rt * scale:
                hits.append(z)
        # float64 sweep as a safety net for seeds the algebra may have lost
        if not hits and _np is not None:
            seed = _grid_scan_minimum(sys, grid_step)
            if seed is not None:
                z = _refine_rank_drop(minors, seed, bits)
                if z is not None and z[0] <= ret:
                    vals = [abs(_poly_eval(p, z)[0]) + abs(_poly_eval(p, z)[1]) for p in minors]
                    if max(vals) <= rt * scale:
                        hits.append(z)
        if not hits:
            return StrictnessReport(True)
        witness = min(hits, key=lambda z: float(_c_abs2(z)))
        return StrictnessReport(False, (MpScalar(witness[0], bits), MpScalar(witness[1], bits)))


def _grid_scan_minimum(sys: ControlSystem, step: float):
    nx, nu, nz = sys.n_x, sys.n_u, sys.n_z

    def block(mat: MpMatrix):
        return _np.array([[float(mat.data[i * mat.cols + j]) for j in range(mat.cols)] for i in range(mat.rows)])

    A, B2, C1, D12 = block(sys.A), block(sys.B2), block(sys.C1), block(sys.D12)
    best = None
    re = -10.0
    while re <= 1e-12:
        im = -10.0
        while im <= 10.0:
            lam = complex(re, im)
            P = _np.block([[A - lam * _np.eye(nx), B2], [C1, D12]])
            s = _np.linalg.svd(P, compute_uv=False)[-1]
            if best is None or s < best[0]:
                best = (s, lam)
            im += step
        re += step
    if best is not None and best[0] < 1e-3:
        return best[1]
    return None


def _refine_rank_drop(minors: list[list], seed: complex, bits: int):
    live = [p for p in minors if len(p) > 1]
    if not live:
        return None
    poly = min(live, key=len)
    z = (mpfr(seed.real), mpfr(seed.imag))
    d = _poly_derivative(poly)
    for _ in range(300):
        f = _poly_eval(poly, z)
        fp = _poly_eval(d, z)
        if _c_abs2(fp) == 0:
            return None
        step = _c_div(f, fp)
        z = (z[0] - step[0], z[1] - step[1])
        if _c_abs2(step) <= mpfr(2) ** (-2 * bits + 60) * max(mpfr(1), _c_abs2(z)):
            break
    return z


def stabilizability_check(sys: ControlSystem, grid: list | None = None, tol: Number | None = None) -> bool:
    """Full row rank of [A - lambda I, B2] over the tested unstable-free lambdas.

    The rank can only drop at eigenvalues of A, so the tested set is the
    eigenvalues with Re < 0 plus any supplied complex grid points (pairs
    (re, im) or complex numbers).
    """
    bits = sys.precision_bits
    with _ctx(bits):
        points = [z for z in _eigenvalues_of_A(sys, bits) if z[0] < 0]
        for g in grid or []:
            if isinstance(g, complex):
                points.append((mp(g.real, bits), mp(g.imag, bits)))
            else:
                points.append((mp(g[0], bits), mp(g[1], bits)))
        for z in points:
            entries = _pencil_entries(sys, z, bits, stacked=False)
            if _complex_matrix_rank(entries, sys.n_x, sys.n_x + sys.n_u, bits, tol) < sys.n_x:
                return False
    return True


# ---------------------------------------------------------------------------
# face-behavior classification
# ---------------------------------------------------------------------------


def classify_face_behavior(
    sys: ControlSystem,
    param: str,
    eps_probes: tuple = ("1e-16", "1e-8"),
    cfg: SolverConfig | None = None,
    base_result: facial.FacialReductionResult | None = None,
    cross_check: bool = True,
) -> FaceBehavior:
    """Effect of one scalar plant perturbation on the dual minimal face.

    Runs facial reduction on the perturbed dual at plus and minus each
    probe magnitude and compares minimal faces with the unperturbed one:
    all probes equal -> Invariant, all whole-cone -> FullDimensional, all
    strictly contained -> Shrunk, anything mixed -> Unknown.  Invariant
    verdicts are cross-checked against the certificate eigenvector-span
    criterion combined with the rank condition.
    """
    fam = matrixwise_family(sys, param)
    base = fam.base
    if cfg is None:
        cfg = SolverConfig(epsilonStar="1e-50", epsilonDash="1e-50", precision_bits=base.precision_bits)
    if base_result is None:
        base_result = facial.facial_reduction(base, cfg)
    if base_result.status is not facial.ReductionStatus.MinimalFaceFound:
        return FaceBehavior.Unknown
    base_face = base_result.minimal_face

    votes = []
    for mag in eps_probes:
        for sign in (1, -1):
            with _ctx(base.precision_bits):
                t = mp(mag, base.precision_bits) * sign
            try:
                res = facial.facial_reduction(fam.apply(t), cfg)
            except facial.SolverFailure as exc:
                log.warning("classification probe %s t=%s%s failed: %s", param, "+" if sign > 0 else "-", mag, exc)
                return FaceBehavior.Unknown
            if res.status is not facial.ReductionStatus.MinimalFaceFound:
                votes.append(FaceBehavior.Unknown)
                continue
            if res.minimal_face.is_whole_cone():
                votes.append(FaceBehavior.FullDimensional)
                continue
            rel = facial.compare_faces(res.minimal_face, base_face)
            if rel is facial.FaceRelation.Equal:
                votes.append(FaceBehavior.Invariant)
            elif rel is facial.FaceRelation.FSubsetG:
                votes.append(FaceBehavior.Shrunk)
            else:
                votes.append(FaceBehavior.Unknown)
    verdicts = set(votes)
    if len(verdicts) != 1:
        log.warning("probes disagree for %s: %s", param, [v.value for v in votes])
        return FaceBehavior.Unknown
    verdict = votes[0]
    if verdict is FaceBehavior.Invariant and cross_check:
        span = facial.invariance_by_eigenspan(base_result, fam)
        with _ctx(base.precision_bits):
            grid = []
            for mag in eps_probes:
                for sign in (1, -1):
                    grid.append(MpScalar(mp(mag, base.precision_bits) * sign, base.precision_bits))
        ranks = facial.rank_condition(base, fam, base_face, grid)
        if span is not facial.Verdict.Holds or not all(ranks.values()):
            log.warning(
                "invariance cross-check failed for %s (span=%s, ranks=%s)",
                param,
                span.value,
                {str(float(k)): v for k, v in ranks.items()},
            )
            return FaceBehavior.Unknown
    return verdict


def _classify_worker(args) -> tuple[str, str]:
    sys_json, param, eps_probes = args
    sys = ControlSystem.from_json_dict(json.loads(sys_json))
    verdict = classify_face_behavior(sys, param, eps_probes=eps_probes)
    return param, verdict.value


def classify_all(
    sys: ControlSystem,
    params: tuple = PARAMETERS,
    eps_probes: tuple = ("1e-16", "1e-8"),
    workers: int | None = None,
) -> dict[str, FaceBehavior]:
    """Classify every plant entry, in parallel worker processes."""
    payload = json.dumps(sys.to_json_dict())
    jobs = [(payload, p, eps_probes) for p in params]
    out: dict[str, FaceBehavior] = {}
    if workers == 0 or len(jobs) == 1:
        for job in jobs:
            param, verdict = _classify_worker(job)
            out[param] = FaceBehavior(verdict)
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for param, verdict in pool.map(_classify_worker, jobs):
            out[param] = FaceBehavior(verdict)
    return out
