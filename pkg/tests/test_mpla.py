import random

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from sdpface import gallery
from sdpface.mpla import (
    MpMatrix,
    MpScalar,
    NoConvergence,
    NonSymmetric,
    NotPositiveDefinite,
    ShapeMismatch,
    _ctx,
    cholesky,
    numeric_rank,
    pseudoinverse,
    sym_eig,
)

finite_floats = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


def random_symmetric(n, bits, seed):
    rng = random.Random(seed)
    m = MpMatrix.zeros(n, n, bits)
    with _ctx(bits):
        for i in range(n):
            for j in range(i + 1):
                v = mpfr(rng.uniform(-1, 1))
                m.data[i * n + j] = v
                m.data[j * n + i] = v
    m.symmetric = True
    return m


class TestMpScalar:
    def test_arithmetic_uses_max_precision(self):
        a = MpScalar("1.1", 128)
        b = MpScalar("2.2", 512)
        assert (a + b).precision_bits == 512
        assert (a * b).precision_bits == 512
        assert (b / a).precision_bits == 512

    def test_decimal_round_trip_identity(self):
        x = MpScalar(5, 1024).sqrt()
        again = MpScalar.from_decimal(x.to_decimal(), 1024)
        assert x.value == again.value

    @given(finite_floats)
    @settings(max_examples=40, deadline=None)
    def test_decimal_round_trip_random(self, v):
        x = MpScalar(v, 256)
        assert MpScalar.from_decimal(x.to_decimal(), 256).value == x.value

    def test_negation_keeps_precision(self):
        x = MpScalar(5, 1024).sqrt()
        assert (-x).value == -(x.value) or (-x).precision_bits == 1024
        assert (-(-x)).value == x.value

    def test_rejects_nonpositive_precision(self):
        with pytest.raises(ValueError):
            MpScalar(1, 0)


class TestSymEig:
    def test_identity(self):
        eig = sym_eig(MpMatrix.identity(3))
        assert all(v == 1 for v in eig.eigenvalues)
        q = eig.eigenvectors
        prod = q.transpose() @ q
        assert float((prod - MpMatrix.identity(3)).max_abs()) < 1e-280

    def test_certificate_block_spectrum(self):
        # diag(2, 0, ..., 0): top eigenvector is the first coordinate axis
        _, U, _ = gallery.reducing_certificate_first()
        eig = sym_eig(U.blocks[0])
        vals = [float(v) for v in eig.eigenvalues]
        assert vals[0] == 2 and all(v == 0 for v in vals[1:])
        first = [abs(float(eig.eigenvectors[i, 0])) for i in range(6)]
        assert first[0] == pytest.approx(1.0, abs=1e-250)
        assert max(first[1:]) < 1e-250

    def test_two_by_two_exchange(self):
        m = MpMatrix.from_rows([[0, 1], [1, 0]])
        eig = sym_eig(m)
        assert float(eig.eigenvalues[0]) == pytest.approx(1.0, abs=1e-300)
        assert float(eig.eigenvalues[1]) == pytest.approx(-1.0, abs=1e-300)

    def test_reconstruction_at_256_bits(self):
        # relative Frobenius error of Q L Q^T - A stays below 2^-200
        a = random_symmetric(8, 256, seed=7)
        eig = sym_eig(a)
        n = 8
        lam = MpMatrix.diag([v.value for v in eig.eigenvalues], 256)
        q = eig.eigenvectors
        recon = q @ lam @ q.transpose()
        with _ctx(256):
            rel = (recon - a).frobenius_norm().value / a.frobenius_norm().value
        assert rel < mpfr(2) ** -200

    def test_requires_symmetry_flag(self):
        m = MpMatrix.from_rows([[0, 1], [0, 0]])
        assert not m.symmetric
        with pytest.raises(NonSymmetric):
            sym_eig(m)

    def test_sweep_cap(self):
        a = random_symmetric(6, 256, seed=3)
        with pytest.raises(NoConvergence):
            sym_eig(a, max_sweeps=0)


def example_restricted_rows(eps=None, bits=1024):
    """Rows spanning the face-restricted coefficient space of the fixture.

    Returns one 1x26 matrix per constraint: the trailing 5x5 part of the
    big block stacked with the trailing 1x1 part of the small block.
    """
    prob = gallery.expprimal(bits) if eps is None else gallery.problem_p3(eps, bits)
    rows = []
    for k in range(1, 7):
        big = prob.A[k].blocks[0].submatrix(range(1, 6), range(1, 6))
        small = prob.A[k].blocks[1].submatrix([1], [1])
        rows.append(MpMatrix._wrap(1, 26, big.data + small.data, bits))
    return rows


class TestNumericRank:
    def test_fixture_base_rank_three(self):
        assert numeric_rank(example_restricted_rows()) == 3

    @pytest.mark.parametrize("eps", ["1e-16", "1e-8"])
    def test_perturbed_rank_four(self, eps):
        assert numeric_rank(example_restricted_rows(eps)) == 4

    def test_zero_span(self):
        z = MpMatrix.zeros(2, 2)
        assert numeric_rank([z, z]) == 0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            numeric_rank([MpMatrix.zeros(2, 2), MpMatrix.zeros(3, 3)])

    @given(st.integers(min_value=1, max_value=9), st.integers(min_value=-7, max_value=7).filter(lambda v: v != 0))
    @settings(max_examples=20, deadline=None)
    def test_scaling_and_combination_invariance(self, seed, scale):
        rows = [random_symmetric(3, 256, seed + i) for i in range(3)]
        base = numeric_rank(rows)
        scaled = [r.scale(scale) for r in rows]
        assert numeric_rank(scaled) == base
        combo = rows[0].scale(2) + rows[1].scale(-3)
        assert numeric_rank(rows + [combo]) == base


class TestPseudoinverse:
    def penrose_residual(self, s, sp):
        with _ctx(s.precision_bits):
            scale = max(mpfr(1), s.max_abs().value)
            r1 = (s @ sp @ s - s).max_abs().value
            r2 = (sp @ s @ sp - sp).max_abs().value
            ss = s @ sp
            r3 = (ss - ss.transpose()).max_abs().value
            ps = sp @ s
            r4 = (ps - ps.transpose()).max_abs().value
            return max(r1, r2, r3, r4) / scale

    def test_identity(self):
        s = MpMatrix.identity(4)
        assert (pseudoinverse(s) - s).max_abs() == 0

    def test_diagonal(self):
        sp = pseudoinverse(MpMatrix.diag([2, 0]))
        assert float(sp[0, 0]) == 0.5 and float(sp[1, 1]) == 0

    def test_fixture_constraint_matrix_penrose(self):
        # stacked vectorized constraints of the flagship problem
        from sdpface.ipm import _stack_columns

        s = _stack_columns(gallery.expprimal())
        sp = pseudoinverse(s)
        assert float(self.penrose_residual(s, sp)) < float(mpfr(2) ** -200)

    def test_continuity_along_rank_preserving_directions(self):
        # the entry-template family keeps the span's rank, so S(t)^+ -> S(0)^+
        from sdpface.ipm import _stack_columns
        from sdpface import hinf

        fam = hinf.matrixwise_family(gallery.state_feedback_plant(), "a11")
        base = pseudoinverse(_stack_columns(fam.base))
        errs = []
        for t in ("1e-2", "1e-4", "1e-8"):
            sp = pseudoinverse(_stack_columns(fam.apply(t)))
            errs.append(float((sp - base).frobenius_norm()))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-7


class TestCholesky:
    def test_identity(self):
        assert (cholesky(MpMatrix.identity(2)) - MpMatrix.identity(2)).max_abs() == 0

    def test_hand_two_by_two(self):
        l = cholesky(MpMatrix.from_rows([[4, 2], [2, 2]]))
        expect = MpMatrix.from_rows([[2, 0], [1, 1]])
        assert (l - expect).max_abs() == 0

    def test_indefinite_reports_first_pivot(self):
        with pytest.raises(NotPositiveDefinite) as err:
            cholesky(MpMatrix.from_rows([[0, 1], [1, 0]]))
        assert err.value.index == 0

    def test_reconstruction(self):
        a = random_symmetric(5, 512, seed=11)
        spd = a @ a.transpose() + MpMatrix.identity(5, 512)
        l = cholesky(spd.symmetrize())
        with _ctx(512):
            resid = (l @ l.transpose() - spd).max_abs().value
        assert resid < mpfr(2) ** -480
