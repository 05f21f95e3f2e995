"""Block-structured SDP data model, elementary algebra, and SDPA file I/O.

The primal/dual pair handled throughout the package is

    (P)  sup  b^T y   s.t.  A_0 - sum_k y_k A_k = Z,  Z in S^n_+
    (D)  inf  A_0 . X s.t.  A_k . X = b_k (k = 1..m),  X in S^n_+

where every A_k is block diagonal and `.` is the entrywise (trace) inner
product.  Matrices are stored per block; the solver and the facial
reduction engine iterate block by block.

Files use an SDPA-sparse-style format (``.dat-s``): the first four lines
give m, the number of blocks, the block sizes (negative marks a diagonal
block) and the vector b, followed by ``k blk i j value`` quintuples with
1-based upper-triangular indices, where k = 0 addresses A_0.  Values are
written as decimal literals with enough digits to round-trip the working
precision; a sidecar JSON manifest records the precision and any
perturbation-family metadata.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpfr

from .mpla import (
    DEFAULT_PRECISION,
    format_mpfr,
    MpMatrix,
    MpScalar,
    Number,
    ShapeMismatch,
    _ctx,
    decimal_digits,
    mp,
)


class ParseError(ValueError):
    """Malformed SDPA file; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class PrecisionLoss(UserWarning):
    """File carries fewer digits than the requested working precision."""


class BlockMatrix:
    """A block-diagonal symmetric matrix, stored as one MpMatrix per block."""

    __slots__ = ("blocks",)

    def __init__(self, blocks: Sequence[MpMatrix]):
        self.blocks = list(blocks)
        for blk in self.blocks:
            if blk.rows != blk.cols:
                raise ShapeMismatch("blocks must be square")

    @classmethod
    def zeros(cls, dims: Sequence[int], precision_bits: int = DEFAULT_PRECISION) -> "BlockMatrix":
        return cls([MpMatrix.zeros(d, d, precision_bits) for d in dims])

    @classmethod
    def identity(cls, dims: Sequence[int], precision_bits: int = DEFAULT_PRECISION) -> "BlockMatrix":
        return cls([MpMatrix.identity(d, precision_bits) for d in dims])

    @property
    def dims(self) -> list[int]:
        return [blk.rows for blk in self.blocks]

    @property
    def precision_bits(self) -> int:
        return max(blk.precision_bits for blk in self.blocks)

    @property
    def symmetric(self) -> bool:
        return all(blk.symmetric for blk in self.blocks)

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        return BlockMatrix([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "BlockMatrix") -> "BlockMatrix":
        return BlockMatrix([a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self) -> "BlockMatrix":
        return BlockMatrix([-a for a in self.blocks])

    def scale(self, alpha: Number) -> "BlockMatrix":
        return BlockMatrix([a.scale(alpha) for a in self.blocks])

    def max_abs(self) -> MpScalar:
        return max((blk.max_abs() for blk in self.blocks), key=float)

    def frobenius_norm(self) -> MpScalar:
        bits = self.precision_bits
        with _ctx(bits):
            s = mpfr(0)
            for blk in self.blocks:
                for v in blk.data:
                    s += v * v
            return MpScalar(gmpy2.sqrt(s), bits)

    def is_zero(self) -> bool:
        return all(v == 0 for blk in self.blocks for v in blk.data)

    def __eq__(self, other):
        return isinstance(other, BlockMatrix) and self.blocks == other.blocks

    def __repr__(self):
        return f"BlockMatrix(dims={self.dims})"


def dot(a, b) -> MpScalar:
    """Trace inner product A . B = sum_ij A_ij B_ij, blockwise for pairs."""
    if isinstance(a, BlockMatrix) and isinstance(b, BlockMatrix):
        if a.dims != b.dims:
            raise ShapeMismatch(f"block dims {a.dims} vs {b.dims}")
        bits = max(a.precision_bits, b.precision_bits)
        with _ctx(bits):
            s = mpfr(0)
            for pa, pb in zip(a.blocks, b.blocks):
                for x, y in zip(pa.data, pb.data):
                    s += x * y
        return MpScalar(s, bits)
    if a.rows != b.rows or a.cols != b.cols:
        raise ShapeMismatch(f"{a.rows}x{a.cols} vs {b.rows}x{b.cols}")
    bits = max(a.precision_bits, b.precision_bits)
    with _ctx(bits):
        s = mpfr(0)
        for x, y in zip(a.data, b.data):
            s += x * y
    return MpScalar(s, bits)


def vec(a: MpMatrix) -> list[MpScalar]:
    """Row-major vectorization (a_11, a_12, ..., a_nn) of a square matrix."""
    if a.rows != a.cols:
        raise ShapeMismatch("vec needs a square matrix")
    return [MpScalar(v, a.precision_bits) for v in a.data]


def he(m: MpMatrix) -> MpMatrix:
    """He(M) = M + M^T."""
    if m.rows != m.cols:
        raise ShapeMismatch("he needs a square matrix")
    return m + m.transpose()


@dataclass
class SdpProblem:
    """Data of the pair (P)/(D): block dims, matrices A_0..A_m and b."""

    block_dims: list[int]
    A: list[BlockMatrix]  # length m + 1; A[0] is the constant matrix
    b: list[MpScalar]
    diag_blocks: frozenset[int] = field(default_factory=frozenset)
    precision_bits: int = DEFAULT_PRECISION

    def __post_init__(self):
        if len(self.A) != len(self.b) + 1:
            raise ShapeMismatch("need one coefficient matrix per b entry plus A_0")
        for mat in self.A:
            if mat.dims != list(self.block_dims):
                raise ShapeMismatch(f"block dims {mat.dims} do not match {self.block_dims}")
            if not mat.symmetric:
                raise ShapeMismatch("all coefficient blocks must be exactly symmetric")
        self.b = [v if isinstance(v, MpScalar) else MpScalar(v, self.precision_bits) for v in self.b]

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def nblocks(self) -> int:
        return len(self.block_dims)

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    def constraint(self, k: int) -> BlockMatrix:
        """A_k for k = 1..m."""
        return self.A[k]

    def objective_matrix(self) -> BlockMatrix:
        return self.A[0]

    def primal_matrix(self, y: Sequence[Number]) -> BlockMatrix:
        """Z(y) = A_0 - sum_k y_k A_k."""
        bits = self.precision_bits
        with _ctx(bits):
            blocks = []
            for bi, d in enumerate(self.block_dims):
                acc = list(self.A[0].blocks[bi].data)
                for k in range(1, self.m + 1):
                    c = mp(y[k - 1], bits)
                    if c:
                        blk = self.A[k].blocks[bi].data
                        for idx in range(d * d):
                            acc[idx] -= c * blk[idx]
                blocks.append(MpMatrix._wrap(d, d, acc, bits, symmetric=True))
        return BlockMatrix(blocks)

    def combination(self, y: Sequence[Number]) -> BlockMatrix:
        """W(y) = -sum_k y_k A_k, the left side of the discriminant system."""
        bits = self.precision_bits
        with _ctx(bits):
            blocks = []
            for bi, d in enumerate(self.block_dims):
                acc = [mpfr(0)] * (d * d)
                for k in range(1, self.m + 1):
                    c = mp(y[k - 1], bits)
                    if c:
                        blk = self.A[k].blocks[bi].data
                        for idx in range(d * d):
                            acc[idx] -= c * blk[idx]
                blocks.append(MpMatrix._wrap(d, d, acc, bits, symmetric=True))
        return BlockMatrix(blocks)

    def constraint_values(self, X: BlockMatrix) -> list[MpScalar]:
        return [dot(self.A[k], X) for k in range(1, self.m + 1)]

    def objective_value_dual(self, X: BlockMatrix) -> MpScalar:
        return dot(self.A[0], X)

    def objective_value_primal(self, y: Sequence[Number]) -> MpScalar:
        bits = self.precision_bits
        with _ctx(bits):
            s = mpfr(0)
            for bk, yk in zip(self.b, y):
                s += bk.value * mp(yk, bits)
        return MpScalar(s, bits)

    def with_precision(self, bits: int) -> "SdpProblem":
        A = [BlockMatrix([MpMatrix(d, d, blk.data, bits) for blk, d in zip(mat.blocks, self.block_dims)]) for mat in self.A]
        b = [MpScalar(v.value, bits) for v in self.b]
        return SdpProblem(list(self.block_dims), A, b, self.diag_blocks, bits)


@dataclass
class SolutionPair:
    """A primal-dual pair (y, Z, X) with its objective bookkeeping."""

    y: list[MpScalar]
    Z: BlockMatrix
    X: BlockMatrix
    primal_obj: MpScalar
    dual_obj: MpScalar
    duality_gap: MpScalar

    def complementarity(self) -> MpScalar:
        return dot(self.X, self.Z)


def lagrangian(prob: SdpProblem, X: BlockMatrix, y: Sequence[Number]) -> MpScalar:
    """L(X, y) = A_0 . X + sum_k y_k (b_k - A_k . X)."""
    if X.dims != list(prob.block_dims):
        raise ShapeMismatch("X does not match the problem's block structure")
    if len(y) != prob.m:
        raise ShapeMismatch("y has the wrong length")
    bits = prob.precision_bits
    with _ctx(bits):
        s = dot(prob.A[0], X).value
        for k in range(1, prob.m + 1):
            yk = mp(y[k - 1], bits)
            if yk:
                s += yk * (prob.b[k - 1].value - dot(prob.A[k], X).value)
    return MpScalar(s, bits)


@dataclass
class PerturbedFamily:
    """A linear perturbation family A_k(t) = A_k + t D_k, b(t) = b + t db."""

    base: SdpProblem
    deltas: dict[int, BlockMatrix]  # keyed by k in 1..m (and 0 for A_0)
    b_deltas: list[MpScalar] | None = None
    label: str = ""

    def __post_init__(self):
        for k, d in self.deltas.items():
            if not 0 <= k <= self.base.m:
                raise ShapeMismatch(f"delta index {k} out of range")
            if d.dims != list(self.base.block_dims):
                raise ShapeMismatch("delta block dims do not match the base problem")

    def apply(self, t: Number) -> SdpProblem:
        """The concrete instance at parameter t; t = 0 returns the base data."""
        base = self.base
        bits = base.precision_bits
        tv = mp(t, bits)
        if tv == 0:
            return base
        A = []
        with _ctx(bits):
            for k in range(base.m + 1):
                mat = base.A[k]
                d = self.deltas.get(k)
                if d is None:
                    A.append(mat)
                    continue
                blocks = []
                for blk, dblk in zip(mat.blocks, d.blocks):
                    raw = [a + tv * e for a, e in zip(blk.data, dblk.data)]
                    blocks.append(MpMatrix._wrap(blk.rows, blk.cols, raw, bits))
                A.append(BlockMatrix(blocks))
            b = list(base.b)
            if self.b_deltas is not None:
                b = [MpScalar(bk.value + tv * mp(db, bits), bits) for bk, db in zip(base.b, self.b_deltas)]
        return SdpProblem(list(base.block_dims), A, b, base.diag_blocks, bits)

    def delta(self, k: int) -> BlockMatrix:
        """E_k(1), the direction for constraint k (zero if unperturbed)."""
        d = self.deltas.get(k)
        if d is None:
            return BlockMatrix.zeros(self.base.block_dims, self.base.precision_bits)
        return d

    def perturbed_indices(self) -> list[int]:
        return sorted(k for k, d in self.deltas.items() if k >= 1 and not d.is_zero())


def apply(family: PerturbedFamily, t: Number) -> SdpProblem:
    return family.apply(t)


# ---------------------------------------------------------------------------
# SDPA sparse file I/O
# ---------------------------------------------------------------------------


def _format_value(v: mpfr, digits: int) -> str:
    return format_mpfr(v, digits)


def write_sdpa(prob: SdpProblem, path: str, manifest: dict | None = None) -> None:
    """Write a problem as an SDPA-sparse-style file at full precision."""
    digits = decimal_digits(prob.precision_bits)
    lines = [f"{prob.m}", f"{prob.nblocks}"]
    dims = [(-d if bi in prob.diag_blocks else d) for bi, d in enumerate(prob.block_dims)]
    lines.append(" ".join(str(d) for d in dims))
    lines.append(" ".join(_format_value(v.value, digits) for v in prob.b))
    for k in range(prob.m + 1):
        for bi, blk in enumerate(prob.A[k].blocks):
            n = blk.rows
            for i in range(n):
                for j in range(i, n):
                    v = blk.data[i * n + j]
                    if v != 0:
                        lines.append(f"{k} {bi + 1} {i + 1} {j + 1} {_format_value(v, digits)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    meta = {"precision_bits": prob.precision_bits}
    if manifest:
        meta.update(manifest)
    with open(path + ".manifest.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def read_sdpa(path: str, precision_bits: int | None = None) -> SdpProblem:
    """Read an SDPA-sparse-style file written by :func:`write_sdpa`.

    Comment lines (``"`` or ``*``) before the header are skipped, matching
    the usual SDPA convention.  A :class:`PrecisionLoss` warning is issued
    when the file's decimal digits cannot carry the requested precision.
    """
    manifest_path = path + ".manifest.json"
    if precision_bits is None:
        precision_bits = DEFAULT_PRECISION
        try:
            with open(manifest_path) as fh:
                precision_bits = int(json.load(fh).get("precision_bits", DEFAULT_PRECISION))
        except (OSError, ValueError):
            pass

    with open(path) as fh:
        raw_lines = fh.readlines()

    lines: list[tuple[int, str]] = []
    for lineno, text in enumerate(raw_lines, start=1):
        stripped = text.strip()
        if not stripped:
            continue
        if stripped[0] in '"*' and len(lines) < 4:
            continue
        lines.append((lineno, stripped))
    if len(lines) < 4:
        raise ParseError(len(raw_lines), "file too short for an SDPA header")

    def parse_int(token: str, lineno: int) -> int:
        try:
            return int(token)
        except ValueError as exc:
            raise ParseError(lineno, f"expected an integer, got {token!r}") from exc

    lineno, text = lines[0]
    m = parse_int(text.split()[0], lineno)
    lineno, text = lines[1]
    nblocks = parse_int(text.split()[0], lineno)
    lineno, text = lines[2]
    tokens = text.replace(",", " ").replace("(", " ").replace(")", " ").replace("{", " ").replace("}", " ").split()
    if len(tokens) != nblocks:
        raise ParseError(lineno, f"expected {nblocks} block sizes, got {len(tokens)}")
    signed_dims = [parse_int(t, lineno) for t in tokens]
    block_dims = [abs(d) for d in signed_dims]
    diag_blocks = frozenset(i for i, d in enumerate(signed_dims) if d < 0)

    lineno, text = lines[3]
    btokens = text.replace(",", " ").replace("{", " ").replace("}", " ").split()
    if len(btokens) != m:
        raise ParseError(lineno, f"expected {m} entries of b, got {len(btokens)}")

    min_digits = decimal_digits(precision_bits)
    # exact values serialize with few digits; only long-but-truncated
    # mantissas indicate a file written at lower precision
    longest = max((_count_digits(t) for t in btokens), default=0)

    with _ctx(precision_bits):
        b = [MpScalar(mpfr(t), precision_bits) for t in btokens]
        A = [BlockMatrix.zeros(block_dims, precision_bits) for _ in range(m + 1)]
        for lineno, text in lines[4:]:
            tokens = text.split()
            if len(tokens) != 5:
                raise ParseError(lineno, f"expected 5 fields, got {len(tokens)}")
            k = parse_int(tokens[0], lineno)
            bi = parse_int(tokens[1], lineno) - 1
            i = parse_int(tokens[2], lineno) - 1
            j = parse_int(tokens[3], lineno) - 1
            if not 0 <= k <= m:
                raise ParseError(lineno, f"matrix index {k} out of range 0..{m}")
            if not 0 <= bi < nblocks:
                raise ParseError(lineno, f"block index {bi + 1} out of range")
            d = block_dims[bi]
            if not (0 <= i < d and 0 <= j < d):
                raise ParseError(lineno, f"entry ({i + 1},{j + 1}) outside block of size {d}")
            if bi in diag_blocks and i != j:
                raise ParseError(lineno, "off-diagonal entry in a diagonal block")
            try:
                v = mpfr(tokens[4])
            except ValueError as exc:
                raise ParseError(lineno, f"bad value {tokens[4]!r}") from exc
            longest = max(longest, _count_digits(tokens[4]))
            blk = A[k].blocks[bi]
            blk.data[i * d + j] = v
            blk.data[j * d + i] = v
            blk.symmetric = True

    if 12 <= longest < min_digits - 2:
        warnings.warn(
            f"file carries at most {longest} significant digits; {min_digits} needed for {precision_bits} bits",
            PrecisionLoss,
        )
    return SdpProblem(block_dims, A, b, diag_blocks, precision_bits)


def _count_digits(token: str) -> int:
    mantissa = token.split("e")[0].split("E")[0]
    return sum(c.isdigit() for c in mantissa)
