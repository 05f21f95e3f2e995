"""Arbitrary-precision dense linear algebra for symmetric matrices.

Everything downstream (problem data, the interior-point solver, facial
reduction) is built on two types defined here: ``MpScalar``, a real number
with an explicit mantissa precision, and ``MpMatrix``, a dense row-major
matrix of such numbers.  The numerical kernels are deliberately simple and
precision-friendly:

* symmetric eigendecomposition by cyclic Jacobi sweeps (quadratically
  convergent, orthogonality of the accumulated rotations holds to working
  precision, no shifts),
* Cholesky factorization, which doubles as the positive-definiteness
  oracle (the first non-positive pivot is reported),
* Moore-Penrose pseudoinverse and numeric rank through Gram-matrix
  eigendecompositions.

All operations are pure functions over immutable inputs; instances can be
shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import gmpy2
from gmpy2 import mpfr

DEFAULT_PRECISION = 1024

Number = Union[int, float, str, "MpScalar", mpfr]


class ShapeMismatch(ValueError):
    """Operands do not have compatible shapes."""


class NonSymmetric(ValueError):
    """A symmetric matrix was required but the symmetry flag is not set."""


class NoConvergence(RuntimeError):
    """Jacobi sweeps exceeded the iteration cap."""


class NotPositiveDefinite(ArithmeticError):
    """Cholesky pivot failure; carries the offending pivot."""

    def __init__(self, index: int, pivot: "MpScalar"):
        self.index = index
        self.pivot = pivot
        super().__init__(f"pivot {index} is not positive: {pivot}")


if hasattr(gmpy2, "context") and not hasattr(gmpy2.context(), "__enter__"):  # pragma: no cover

    def _ctx(bits: int):
        return gmpy2.local_context(gmpy2.get_context(), precision=bits)

else:

    def _ctx(bits: int):
        """Context manager running gmpy2 arithmetic at ``bits`` precision."""
        return gmpy2.context(gmpy2.get_context(), precision=bits)


def _to_mpfr(value: Number, bits: int) -> mpfr:
    if isinstance(value, MpScalar):
        value = value.value
    with _ctx(bits):
        if isinstance(value, float):
            # floats are exact binary values; widening loses nothing
            return mpfr(value)
        return mpfr(value)


def decimal_digits(bits: int) -> int:
    """Number of decimal digits that round-trips a ``bits``-bit mantissa."""
    return int(math.ceil(bits * 0.302)) + 2


def format_mpfr(x: mpfr, ndigits: int) -> str:
    """Scientific-notation decimal string with ``ndigits`` significant digits.

    (gmpy2's own __format__ is unreliable across versions, so the digit
    string comes from ``gmpy2.digits``.)
    """
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "-inf" if x < 0 else "inf"
    if x == 0:
        return "0.0e+00"
    s, exp, _ = gmpy2.digits(x, 10, ndigits)
    sign = ""
    if s.startswith("-"):
        sign, s = "-", s[1:]
    mant = s[0] + "." + (s[1:] or "0")
    return f"{sign}{mant}e{exp - 1:+03d}"


class MpScalar:
    """A real number with explicit mantissa precision.

    Arithmetic between two scalars is carried out at the larger of the two
    precisions.  Conversion from decimal strings rounds once, to the target
    precision; conversion back via :meth:`to_decimal` uses enough digits to
    make the round trip the identity.
    """

    __slots__ = ("value", "precision_bits")

    def __init__(self, value: Number = 0, precision_bits: int | None = None):
        if precision_bits is None:
            if isinstance(value, MpScalar):
                precision_bits = value.precision_bits
            elif isinstance(value, mpfr):
                precision_bits = value.precision
            else:
                precision_bits = DEFAULT_PRECISION
        if precision_bits <= 0:
            raise ValueError("precision_bits must be positive")
        self.precision_bits = int(precision_bits)
        self.value = _to_mpfr(value, self.precision_bits)

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other: Number) -> "MpScalar":
        if isinstance(other, MpScalar):
            return other
        return MpScalar(other, self.precision_bits)

    def _bin(self, other: Number, op) -> "MpScalar":
        other = self._coerce(other)
        bits = max(self.precision_bits, other.precision_bits)
        with _ctx(bits):
            return MpScalar(op(self.value, other.value), bits)

    def __add__(self, other):
        return self._bin(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._bin(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._coerce(other)._bin(self, lambda a, b: a - b)

    def __mul__(self, other):
        return self._bin(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._bin(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._coerce(other)._bin(self, lambda a, b: a / b)

    def __neg__(self):
        # gmpy2 rounds even unary ops to the ambient context precision
        with _ctx(self.precision_bits):
            return MpScalar(-self.value, self.precision_bits)

    def __abs__(self):
        with _ctx(self.precision_bits):
            return MpScalar(abs(self.value), self.precision_bits)

    def sqrt(self) -> "MpScalar":
        with _ctx(self.precision_bits):
            return MpScalar(gmpy2.sqrt(self.value), self.precision_bits)

    # -- comparisons (exact, on the underlying values) ------------------
    def _cmp_value(self, other: Number) -> mpfr:
        return other.value if isinstance(other, MpScalar) else other

    def __eq__(self, other):
        return self.value == self._cmp_value(other)

    def __lt__(self, other):
        return self.value < self._cmp_value(other)

    def __le__(self, other):
        return self.value <= self._cmp_value(other)

    def __gt__(self, other):
        return self.value > self._cmp_value(other)

    def __ge__(self, other):
        return self.value >= self._cmp_value(other)

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return float(self.value)

    def to_decimal(self, digits: int | None = None) -> str:
        if digits is None:
            digits = decimal_digits(self.precision_bits)
        return format_mpfr(self.value, digits)

    @classmethod
    def from_decimal(cls, text: str, precision_bits: int = DEFAULT_PRECISION):
        return cls(text, precision_bits)

    def __repr__(self):
        return f"MpScalar({format_mpfr(self.value, 12)}, bits={self.precision_bits})"


def mp(value: Number, bits: int = DEFAULT_PRECISION) -> mpfr:
    """Shorthand used internally: coerce to a raw ``mpfr`` at ``bits``."""
    return _to_mpfr(value, bits)


class MpMatrix:
    """Dense row-major matrix of arbitrary-precision reals.

    The entries are stored as raw ``mpfr`` values together with a single
    ``precision_bits`` attribute; :meth:`entry` wraps individual elements
    back into :class:`MpScalar`.  A matrix is *flagged* symmetric only when
    every pair satisfies ``m[i,j] == m[j,i]`` exactly; symmetrization is an
    explicit operation, never implied.
    """

    __slots__ = ("rows", "cols", "data", "precision_bits", "symmetric")

    def __init__(self, rows: int, cols: int, data: Sequence, precision_bits: int = DEFAULT_PRECISION):
        if rows <= 0 or cols <= 0:
            raise ShapeMismatch("matrix dimensions must be positive")
        if len(data) != rows * cols:
            raise ShapeMismatch(f"expected {rows * cols} entries, got {len(data)}")
        self.rows = rows
        self.cols = cols
        self.precision_bits = precision_bits
        self.data = [_to_mpfr(v, precision_bits) for v in data]
        self.symmetric = self._check_symmetric()

    def _check_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        n, d = self.rows, self.data
        for i in range(n):
            for j in range(i + 1, n):
                if d[i * n + j] != d[j * n + i]:
                    return False
        return True

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[Number]], precision_bits: int = DEFAULT_PRECISION) -> "MpMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ShapeMismatch("ragged rows")
        flat = [v for r in rows for v in r]
        return cls(len(rows), ncols, flat, precision_bits)

    @classmethod
    def zeros(cls, rows: int, cols: int, precision_bits: int = DEFAULT_PRECISION) -> "MpMatrix":
        return cls(rows, cols, [0] * (rows * cols), precision_bits)

    @classmethod
    def identity(cls, n: int, precision_bits: int = DEFAULT_PRECISION) -> "MpMatrix":
        m = cls.zeros(n, n, precision_bits)
        one = mp(1, precision_bits)
        for i in range(n):
            m.data[i * n + i] = one
        m.symmetric = True
        return m

    @classmethod
    def diag(cls, values: Sequence[Number], precision_bits: int = DEFAULT_PRECISION) -> "MpMatrix":
        n = len(values)
        m = cls.zeros(n, n, precision_bits)
        for i, v in enumerate(values):
            m.data[i * n + i] = _to_mpfr(v, precision_bits)
        m.symmetric = True
        return m

    @classmethod
    def _wrap(cls, rows: int, cols: int, raw: list, bits: int, symmetric: bool | None = None) -> "MpMatrix":
        m = cls.__new__(cls)
        m.rows, m.cols, m.data, m.precision_bits = rows, cols, raw, bits
        m.symmetric = m._check_symmetric() if symmetric is None else symmetric
        return m

    # -- access ----------------------------------------------------------
    def entry(self, i: int, j: int) -> MpScalar:
        return MpScalar(self.data[i * self.cols + j], self.precision_bits)

    def __getitem__(self, ij) -> MpScalar:
        i, j = ij
        return self.entry(i, j)

    @property
    def entries(self) -> list[MpScalar]:
        return [MpScalar(v, self.precision_bits) for v in self.data]

    def row(self, i: int) -> list:
        return self.data[i * self.cols : (i + 1) * self.cols]

    def column(self, j: int) -> list:
        return self.data[j :: self.cols]

    def submatrix(self, row_index: Sequence[int], col_index: Sequence[int]) -> "MpMatrix":
        raw = [self.data[i * self.cols + j] for i in row_index for j in col_index]
        return MpMatrix._wrap(len(row_index), len(col_index), raw, self.precision_bits)

    # -- algebra ----------------------------------------------------------
    def _require_same_shape(self, other: "MpMatrix"):
        if self.rows != other.rows or self.cols != other.cols:
            raise ShapeMismatch(f"{self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    def __add__(self, other: "MpMatrix") -> "MpMatrix":
        self._require_same_shape(other)
        bits = max(self.precision_bits, other.precision_bits)
        with _ctx(bits):
            raw = [a + b for a, b in zip(self.data, other.data)]
        return MpMatrix._wrap(self.rows, self.cols, raw, bits)

    def __sub__(self, other: "MpMatrix") -> "MpMatrix":
        self._require_same_shape(other)
        bits = max(self.precision_bits, other.precision_bits)
        with _ctx(bits):
            raw = [a - b for a, b in zip(self.data, other.data)]
        return MpMatrix._wrap(self.rows, self.cols, raw, bits)

    def __neg__(self) -> "MpMatrix":
        with _ctx(self.precision_bits):
            raw = [-a for a in self.data]
        return MpMatrix._wrap(self.rows, self.cols, raw, self.precision_bits, self.symmetric)

    def scale(self, alpha: Number) -> "MpMatrix":
        a = _to_mpfr(alpha, self.precision_bits)
        with _ctx(self.precision_bits):
            raw = [a * v for v in self.data]
        return MpMatrix._wrap(self.rows, self.cols, raw, self.precision_bits)

    def __matmul__(self, other: "MpMatrix") -> "MpMatrix":
        if self.cols != other.rows:
            raise ShapeMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        bits = max(self.precision_bits, other.precision_bits)
        with _ctx(bits):
            raw = _mat_mul(self.data, other.data, self.rows, self.cols, other.cols)
        return MpMatrix._wrap(self.rows, other.cols, raw, bits)

    def transpose(self) -> "MpMatrix":
        raw = [self.data[j * self.cols + i] for i in range(self.cols) for j in range(self.rows)]
        return MpMatrix._wrap(self.cols, self.rows, raw, self.precision_bits, self.symmetric)

    def symmetrize(self) -> "MpMatrix":
        """Explicit symmetrization (m + m^T)/2 with the flag set."""
        if self.rows != self.cols:
            raise ShapeMismatch("symmetrize needs a square matrix")
        n = self.rows
        raw = list(self.data)
        with _ctx(self.precision_bits):
            half = mpfr(1) / 2
            for i in range(n):
                for j in range(i + 1, n):
                    v = (self.data[i * n + j] + self.data[j * n + i]) * half
                    raw[i * n + j] = v
                    raw[j * n + i] = v
        return MpMatrix._wrap(n, n, raw, self.precision_bits, True)

    def frobenius_norm(self) -> MpScalar:
        with _ctx(self.precision_bits):
            s = mpfr(0)
            for v in self.data:
                s += v * v
            return MpScalar(gmpy2.sqrt(s), self.precision_bits)

    def max_abs(self) -> MpScalar:
        with _ctx(self.precision_bits):
            m = mpfr(0)
            for v in self.data:
                a = abs(v)
                if a > m:
                    m = a
        return MpScalar(m, self.precision_bits)

    def is_finite(self) -> bool:
        return all(gmpy2.is_finite(v) for v in self.data)

    def __eq__(self, other):
        return (
            isinstance(other, MpMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and all(a == b for a, b in zip(self.data, other.data))
        )

    def __repr__(self):
        prev = [" ".join(format_mpfr(v, 6) for v in self.row(i)) for i in range(min(self.rows, 6))]
        more = " ..." if self.rows > 6 else ""
        return f"MpMatrix({self.rows}x{self.cols},\n " + "\n ".join(prev) + more + ")"


# ---------------------------------------------------------------------------
# raw kernels on flat row-major lists (callers hold a precision context)
# ---------------------------------------------------------------------------


def _mat_mul(a: list, b: list, n: int, k: int, m: int) -> list:
    out = []
    brows = [b[r * m : (r + 1) * m] for r in range(k)]
    for i in range(n):
        arow = a[i * k : (i + 1) * k]
        acc = [arow[0] * v for v in brows[0]]
        for p in range(1, k):
            c = arow[p]
            if c:
                brow = brows[p]
                for j in range(m):
                    acc[j] += c * brow[j]
        out.extend(acc)
    return out


def _dot_flat(a: list, b: list) -> mpfr:
    s = mpfr(0)
    for x, y in zip(a, b):
        s += x * y
    return s


def _cholesky_raw(a: list, n: int):
    """Lower-triangular factor of a flat symmetric matrix.

    Returns (L, None) on success or (None, (index, pivot)) on the first
    non-positive pivot.
    """
    L = [mpfr(0)] * (n * n)
    for i in range(n):
        for j in range(i + 1):
            s = a[i * n + j]
            for p in range(j):
                s -= L[i * n + p] * L[j * n + p]
            if i == j:
                if s <= 0 or not gmpy2.is_finite(s):
                    return None, (i, s)
                L[i * n + i] = gmpy2.sqrt(s)
            else:
                L[i * n + j] = s / L[j * n + j]
    return L, None


def _solve_lower(L: list, rhs: list, n: int) -> list:
    x = list(rhs)
    for i in range(n):
        s = x[i]
        base = i * n
        for p in range(i):
            s -= L[base + p] * x[p]
        x[i] = s / L[base + i]
    return x


def _solve_lower_t(L: list, rhs: list, n: int) -> list:
    x = list(rhs)
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(i + 1, n):
            s -= L[p * n + i] * x[p]
        x[i] = s / L[i * n + i]
    return x


def _chol_solve(L: list, rhs: list, n: int) -> list:
    return _solve_lower_t(L, _solve_lower(L, rhs, n), n)


def _inverse_from_cholesky(L: list, n: int) -> list:
    inv = [mpfr(0)] * (n * n)
    for col in range(n):
        e = [mpfr(0)] * n
        e[col] = mpfr(1)
        x = _chol_solve(L, e, n)
        for r in range(n):
            inv[r * n + col] = x[r]
    # enforce exact symmetry of the inverse
    half = mpfr(1) / 2
    for i in range(n):
        for j in range(i + 1, n):
            v = (inv[i * n + j] + inv[j * n + i]) * half
            inv[i * n + j] = v
            inv[j * n + i] = v
    return inv


def _frob_raw(a: list) -> mpfr:
    s = mpfr(0)
    for v in a:
        s += v * v
    return gmpy2.sqrt(s)


def _off_diag_norm(a: list, n: int) -> mpfr:
    s = mpfr(0)
    for i in range(n):
        for j in range(i + 1, n):
            v = a[i * n + j]
            s += v * v
    return gmpy2.sqrt(2 * s)


def _jacobi_raw(a_in: list, n: int, bits: int, tol: mpfr, max_sweeps: int = 100):
    """Cyclic Jacobi on a flat symmetric matrix; returns (eigvals, V, off).

    V holds eigenvectors as columns; convergence when the off-diagonal
    Frobenius norm falls below ``tol`` times the matrix norm.
    """
    a = list(a_in)
    V = [mpfr(0)] * (n * n)
    one = mpfr(1)
    for i in range(n):
        V[i * n + i] = one
    norm = _frob_raw(a)
    if norm == 0:
        return [mpfr(0)] * n, V, mpfr(0)
    threshold = tol * norm
    skip_eps = norm * mpfr(2) ** (-bits - 8)
    for _ in range(max_sweeps):
        off = _off_diag_norm(a, n)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                if abs(apq) <= skip_eps:
                    continue
                app = a[p * n + p]
                aqq = a[q * n + q]
                theta = (aqq - app) / (2 * apq)
                t = one / (abs(theta) + gmpy2.sqrt(theta * theta + one))
                if theta < 0:
                    t = -t
                c = one / gmpy2.sqrt(t * t + one)
                s = t * c
                # update rows/cols p and q
                for k in range(n):
                    akp = a[k * n + p]
                    akq = a[k * n + q]
                    a[k * n + p] = c * akp - s * akq
                    a[k * n + q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p * n + k]
                    aqk = a[q * n + k]
                    a[p * n + k] = c * apk - s * aqk
                    a[q * n + k] = s * apk + c * aqk
                for k in range(n):
                    vkp = V[k * n + p]
                    vkq = V[k * n + q]
                    V[k * n + p] = c * vkp - s * vkq
                    V[k * n + q] = s * vkp + c * vkq
    else:
        off = _off_diag_norm(a, n)
        if off > threshold:
            raise NoConvergence(f"Jacobi did not converge within {max_sweeps} sweeps (off={float(off):.3e})")
    eigvals = [a[i * n + i] for i in range(n)]
    return eigvals, V, _off_diag_norm(a, n)


def _sorted_eig(eigvals: list, V: list, n: int):
    order = sorted(range(n), key=lambda i: (-eigvals[i], i))
    vals = [eigvals[i] for i in order]
    vecs = [mpfr(0)] * (n * n)
    for new_j, old_j in enumerate(order):
        for i in range(n):
            vecs[i * n + new_j] = V[i * n + old_j]
    return vals, vecs


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


@dataclass
class SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""

    eigenvalues: list
    eigenvectors: MpMatrix


def sym_eig(a: MpMatrix, tol: Number | None = None, max_sweeps: int = 100) -> SymEig:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Eigenvalues come back sorted descending (ties keep the original index
    order, so results are deterministic); the eigenvector matrix is
    orthogonal to working precision.  Raises :class:`NonSymmetric` when the
    symmetry flag is not set and :class:`NoConvergence` past the sweep cap.
    """
    if not a.symmetric:
        raise NonSymmetric("sym_eig requires an exactly symmetric matrix")
    if not a.is_finite():
        raise ValueError("matrix has non-finite entries")
    bits = a.precision_bits
    n = a.rows
    with _ctx(bits):
        t = mp(tol, bits) if tol is not None else mpfr(2) ** (-bits + 24)
        vals, V, _ = _jacobi_raw(a.data, n, bits, t, max_sweeps)
        vals, V = _sorted_eig(vals, V, n)
    return SymEig(
        eigenvalues=[MpScalar(v, bits) for v in vals],
        eigenvectors=MpMatrix._wrap(n, n, V, bits),
    )


def cholesky(a: MpMatrix) -> MpMatrix:
    """Lower-triangular Cholesky factor; the positive-definiteness oracle.

    Raises :class:`NotPositiveDefinite` carrying the index and value of the
    first pivot that fails.
    """
    if not a.symmetric:
        raise NonSymmetric("cholesky requires an exactly symmetric matrix")
    with _ctx(a.precision_bits):
        L, fail = _cholesky_raw(a.data, a.rows)
    if fail is not None:
        raise NotPositiveDefinite(fail[0], MpScalar(fail[1], a.precision_bits))
    return MpMatrix._wrap(a.rows, a.rows, L, a.precision_bits, symmetric=False)


def is_positive_definite(a: MpMatrix) -> bool:
    try:
        cholesky(a)
        return True
    except NotPositiveDefinite:
        return False


def numeric_rank(vectors: Sequence[MpMatrix], tol: Number | None = None) -> int:
    """Rank of the span of a family of equally-shaped matrices.

    The matrices are vectorized into the rows of one matrix R and the rank
    is the number of singular values above ``tol`` times the largest one
    (singular values computed through the Gram matrix R R^T).
    """
    vectors = list(vectors)
    if not vectors:
        return 0
    shape = (vectors[0].rows, vectors[0].cols)
    bits = max(v.precision_bits for v in vectors)
    for v in vectors:
        if (v.rows, v.cols) != shape:
            raise ShapeMismatch("all matrices must share one shape")
    k = len(vectors)
    with _ctx(bits):
        t = mp(tol, bits) if tol is not None else mpfr(2) ** (-(bits // 2))
        if t <= 0:
            raise ValueError("tol must be positive")
        gram = [mpfr(0)] * (k * k)
        for i in range(k):
            for j in range(i, k):
                s = _dot_flat(vectors[i].data, vectors[j].data)
                gram[i * k + j] = s
                gram[j * k + i] = s
        vals, _, _ = _jacobi_raw(gram, k, bits, mpfr(2) ** (-bits + 24))
        lam_max = max(max(vals), mpfr(0))
        if lam_max == 0:
            return 0
        cutoff = t * t * lam_max
        return sum(1 for v in vals if v > cutoff)


def pseudoinverse(s: MpMatrix, tol: Number | None = None) -> MpMatrix:
    """Moore-Penrose pseudoinverse via a Gram-matrix eigendecomposition.

    Uses S^+ = (S^T S)^+ S^T (or the transposed variant when that Gram
    matrix is smaller); eigenvalues at or below (tol * sigma_max)^2 are
    treated as zero.
    """
    if not s.is_finite():
        raise ValueError("matrix has non-finite entries")
    bits = s.precision_bits
    if s.rows < s.cols:
        return pseudoinverse(s.transpose(), tol).transpose()
    n = s.cols
    with _ctx(bits):
        t = mp(tol, bits) if tol is not None else mpfr(2) ** (-(bits // 2))
        st = s.transpose()
        gram = _mat_mul(st.data, s.data, n, s.rows, n)
        # symmetrize against rounding
        half = mpfr(1) / 2
        for i in range(n):
            for j in range(i + 1, n):
                v = (gram[i * n + j] + gram[j * n + i]) * half
                gram[i * n + j] = v
                gram[j * n + i] = v
        vals, V, _ = _jacobi_raw(gram, n, bits, mpfr(2) ** (-bits + 24))
        lam_max = max(max(vals), mpfr(0))
        cutoff = t * t * lam_max
        # G^+ = V diag(1/lam) V^T over eigenvalues above the cutoff
        ginv = [mpfr(0)] * (n * n)
        for p in range(n):
            lam = vals[p]
            if lam <= cutoff or lam <= 0:
                continue
            inv_lam = 1 / lam
            col = [V[i * n + p] for i in range(n)]
            for i in range(n):
                ci = col[i] * inv_lam
                for j in range(n):
                    ginv[i * n + j] += ci * col[j]
        raw = _mat_mul(ginv, st.data, n, n, s.rows)
    return MpMatrix._wrap(n, s.rows, raw, bits)


def solve_positive_definite(a: MpMatrix, rhs: Sequence[Number]) -> list[MpScalar]:
    """Solve a x = rhs for symmetric positive definite a."""
    L = cholesky(a)
    bits = a.precision_bits
    with _ctx(bits):
        x = _chol_solve(L.data, [mp(v, bits) for v in rhs], a.rows)
    return [MpScalar(v, bits) for v in x]
