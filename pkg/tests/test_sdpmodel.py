import random

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from sdpface import gallery
from sdpface.mpla import MpMatrix, MpScalar, ShapeMismatch, _ctx, mp
from sdpface.sdpmodel import (
    BlockMatrix,
    ParseError,
    PrecisionLoss,
    SdpProblem,
    dot,
    he,
    lagrangian,
    read_sdpa,
    vec,
    write_sdpa,
)

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-100, max_value=100)


def rand_sym(n, seed, bits=256):
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


class TestDot:
    def test_identity_pair(self):
        assert float(dot(MpMatrix.identity(2), MpMatrix.identity(2))) == 2.0

    def test_certificate_entry(self):
        _, U, _ = gallery.reducing_certificate_first()
        e11 = MpMatrix.zeros(6, 6)
        e11.data[0] = mp(1)
        e11.symmetric = True
        assert float(dot(U.blocks[0], e11)) == 2.0

    @given(st.integers(0, 10_000), st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_trace_identity(self, s1, s2):
        a, b = rand_sym(4, s1), rand_sym(4, s2)
        prod = a @ b
        with _ctx(256):
            tr = sum(prod.data[i * 4 + i] for i in range(4))
            assert abs(dot(a, b).value - tr) < mpfr(2) ** -230

    @given(st.integers(0, 10_000))
    @settings(max_examples=15, deadline=None)
    def test_symmetry_and_bilinearity(self, seed):
        a, b, c = (rand_sym(3, seed + i) for i in range(3))
        assert dot(a, b).value == dot(b, a).value
        with _ctx(256):
            left = dot(a + b.scale(3), c).value
            right = dot(a, c).value + 3 * dot(b, c).value
            assert abs(left - right) < mpfr(2) ** -230

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            dot(MpMatrix.identity(2), MpMatrix.identity(3))


class TestVecHe:
    def test_vec_display_order(self):
        out = vec(MpMatrix.from_rows([[1, 2], [2, 3]]))
        assert [float(v) for v in out] == [1, 2, 2, 3]

    def test_vec_zero(self):
        assert [float(v) for v in vec(MpMatrix.zeros(2, 2))] == [0, 0, 0, 0]

    @given(st.integers(0, 10_000))
    @settings(max_examples=15, deadline=None)
    def test_vec_reshape_round_trip(self, seed):
        a = rand_sym(3, seed)
        flat = vec(a)
        back = MpMatrix(3, 3, [v.value for v in flat], 256)
        assert back == a

    def test_he_skew(self):
        skew = MpMatrix.from_rows([[0, 1], [-1, 0]])
        assert he(skew).max_abs() == 0

    def test_he_identity(self):
        assert (he(MpMatrix.identity(2)) - MpMatrix.identity(2).scale(2)).max_abs() == 0

    def test_he_upper_shift(self):
        out = he(MpMatrix.from_rows([[0, 1], [0, 0]]))
        assert out == MpMatrix.from_rows([[0, 1], [1, 0]])


class TestLagrangian:
    def test_feasible_point_kills_multipliers(self):
        prob = gallery.expprimal()
        X = gallery.dual_optimal_point()
        rng = random.Random(5)
        base = lagrangian(prob, X, [0] * 6).value
        for _ in range(5):
            y = [rng.uniform(-3, 3) for _ in range(6)]
            assert abs(float(lagrangian(prob, X, y).value - base)) < 1e-200

    def test_zero_multiplier_is_objective(self):
        prob = gallery.expprimal()
        X = BlockMatrix.identity([6, 2])
        assert lagrangian(prob, X, [0] * 6).value == dot(prob.A[0], X).value

    def test_dual_point_value(self):
        prob = gallery.expprimal()
        X = gallery.dual_optimal_point()
        with _ctx(1024):
            target = -gmpy2.sqrt(mpfr(5))
            assert abs(lagrangian(prob, X, [0] * 6).value - target) < mpfr(2) ** -1000


class TestSdpaFiles:
    def test_fixture_round_trip_exact(self, tmp_path):
        prob = gallery.expprimal()
        path = str(tmp_path / "prob.dat-s")
        write_sdpa(prob, path)
        again = read_sdpa(path)
        assert again.block_dims == prob.block_dims
        assert all(a == b for a, b in zip(again.b, prob.b))
        for k in range(7):
            for bi in range(2):
                assert again.A[k].blocks[bi] == prob.A[k].blocks[bi]

    def test_perturbed_round_trip_keeps_epsilon(self, tmp_path):
        prob = gallery.problem_p1()
        path = str(tmp_path / "p1.dat-s")
        write_sdpa(prob, path)
        again = read_sdpa(path)
        assert again.A[5].blocks[0][1, 1].value == prob.A[5].blocks[0][1, 1].value

    def test_one_by_one_round_trip(self, tmp_path):
        prob = gallery.toy_1x1()
        path = str(tmp_path / "toy.dat-s")
        write_sdpa(prob, path)
        again = read_sdpa(path)
        assert again.m == 1 and again.block_dims == [1]
        assert again.A[1].blocks[0][0, 0].value == 1

    def test_diagonal_block_convention(self, tmp_path):
        one = BlockMatrix([MpMatrix.diag([1, 2])])
        prob = SdpProblem([2], [one, one], [MpScalar(1)], diag_blocks=frozenset({0}))
        path = str(tmp_path / "diag.dat-s")
        write_sdpa(prob, path)
        text = open(path).read().splitlines()
        assert text[2].strip() == "-2"
        again = read_sdpa(path)
        assert again.diag_blocks == frozenset({0})

    def test_rejects_offdiagonal_in_diagonal_block(self, tmp_path):
        path = tmp_path / "bad.dat-s"
        path.write_text("1\n1\n-2\n1.0\n1 1 1 2 5.0\n")
        with pytest.raises(ParseError) as err:
            read_sdpa(str(path))
        assert err.value.lineno == 5

    def test_parse_error_carries_line(self, tmp_path):
        path = tmp_path / "bad.dat-s"
        path.write_text("1\n1\n2\n1.0\n0 1 1 oops 1.0\n")
        with pytest.raises(ParseError):
            read_sdpa(str(path))

    def test_precision_loss_warning(self, tmp_path):
        path = tmp_path / "short.dat-s"
        path.write_text("1\n1\n1\n1.0\n0 1 1 1 2.2360679774997896\n")
        with pytest.warns(PrecisionLoss):
            read_sdpa(str(path), precision_bits=1024)

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "c.dat-s"
        path.write_text('"generated\n1\n1\n1\n1.0\n0 1 1 1 3.0\n')
        prob = read_sdpa(str(path))
        assert float(prob.A[0].blocks[0][0, 0]) == 3.0


class TestPerturbedFamily:
    def test_apply_zero_is_base(self):
        fam = gallery.perturbation_p1()
        assert fam.apply(0) is fam.base

    def test_p1_display_entry(self):
        # the x5 coefficient's (2,2) display entry moves to -2(1+eps) at t=1
        prob = gallery.problem_p1()
        with _ctx(1024):
            expect = -2 * (1 + mp("1e-16", 1024))
            display = -prob.A[5].blocks[0][1, 1].value
            assert abs(display - expect) < mpfr(2) ** -1070

    def test_p3_display_entries(self):
        prob = gallery.problem_p3()
        with _ctx(1024):
            expect = 1 + mp("1e-16", 1024)
            assert abs(-prob.A[5].blocks[0][1, 3].value - expect) < mpfr(2) ** -1070
            assert abs(-prob.A[5].blocks[0][3, 1].value - expect) < mpfr(2) ** -1070

    def test_perturbed_indices(self):
        fam = gallery.perturbation_p2()
        assert fam.perturbed_indices() == [5]


class TestSolutionBookkeeping:
    def test_gap_matches_complementarity_on_solved_toy(self):
        from sdpface.ipm import SolverConfig, solve

        rep = solve(gallery.toy_1x1(), SolverConfig(epsilonStar="1e-30", epsilonDash="1e-30"))
        sol = rep.solution
        with _ctx(1024):
            # at a feasible pair the gap bookkeeping equals X . Z
            assert abs(sol.duality_gap.value - sol.complementarity().value) < mpfr("1e-25")
