"""Built-in problem instances used by the tests, the docs and the CLI.

The centerpiece is the 6x6 (+) 2x2 state-feedback SDP whose supremum is
-sqrt(5) while its dual is not strictly feasible, together with the three
hand-picked coefficient perturbations of size ``eps`` that shift the
optimal value to -sqrt(2) or -2.  The storage convention is the (P)/(D)
form of :mod:`sdpface.sdpmodel`:

    sup { b^T y : A_0 - sum_k y_k A_k >= 0 },   b = (0,...,0,-1),

so the coefficient matrices here are the *negatives* of the human-readable
LMI coefficients (the LMI builder in :mod:`sdpface.hinf` exposes that
display view).  With this orientation the known reducing certificates and
the rank-one dual optimal point verify verbatim.
"""

from __future__ import annotations

from .mpla import DEFAULT_PRECISION, MpMatrix, MpScalar, _ctx, mp
from .sdpmodel import BlockMatrix, PerturbedFamily, SdpProblem

EPS_DEFAULT = "1e-16"


def _sym6(entries: dict[tuple[int, int], float], bits: int) -> MpMatrix:
    m = MpMatrix.zeros(6, 6, bits)
    for (i, j), v in entries.items():
        m.data[(i - 1) * 6 + (j - 1)] = mp(v, bits)
        m.data[(j - 1) * 6 + (i - 1)] = mp(v, bits)
    m.symmetric = True
    return m


def _sym2(entries: dict[tuple[int, int], float], bits: int) -> MpMatrix:
    m = MpMatrix.zeros(2, 2, bits)
    for (i, j), v in entries.items():
        m.data[(i - 1) * 2 + (j - 1)] = mp(v, bits)
        m.data[(j - 1) * 2 + (i - 1)] = mp(v, bits)
    m.symmetric = True
    return m


def lmi_coefficient_blocks(bits: int = DEFAULT_PRECISION):
    """Display-convention data of the state-feedback LMI.

    Returns (constant, [M_1..M_6], [N_1..N_6]): the 6x6 constant block,
    the 6x6 coefficient of each variable, and the 2x2 coefficient of each
    variable in the second block.
    """
    constant = _sym6({(5, 1): 1, (5, 2): 1, (5, 3): 1, (5, 4): 1, (6, 1): 1}, bits)
    M = [
        _sym6({(1, 1): 2, (2, 1): -1, (3, 1): -2, (4, 1): 1}, bits),
        _sym6({(1, 1): 2, (2, 1): 1, (2, 2): -2, (3, 1): 1, (3, 2): -2, (4, 1): -2, (4, 2): 1}, bits),
        _sym6({(2, 1): 1, (3, 2): 1, (4, 2): -2}, bits),
        _sym6({(2, 1): -1, (3, 1): -2, (4, 1): 1}, bits),
        _sym6({(2, 2): -2, (3, 2): -2, (4, 2): 1}, bits),
        _sym6({(3, 3): 1, (4, 4): 1, (5, 5): 1, (6, 6): 1}, bits),
    ]
    N = [
        _sym2({(1, 1): 1}, bits),
        _sym2({(2, 1): 1}, bits),
        _sym2({(2, 2): 1}, bits),
        _sym2({}, bits),
        _sym2({}, bits),
        _sym2({}, bits),
    ]
    return constant, M, N


def expprimal(bits: int = DEFAULT_PRECISION) -> SdpProblem:
    """The singular state-feedback SDP; sup = -sqrt(5), dual non-strict."""
    constant, M, N = lmi_coefficient_blocks(bits)
    A = [BlockMatrix([-constant, MpMatrix.zeros(2, 2, bits)])]
    for Mk, Nk in zip(M, N):
        A.append(BlockMatrix([-Mk, -Nk]))
    b = [MpScalar(0, bits)] * 5 + [MpScalar(-1, bits)]
    return SdpProblem([6, 2], A, b, precision_bits=bits)


def _entry_family(entries: dict[tuple[int, int], int], eps: str, label: str, bits: int) -> PerturbedFamily:
    """Family perturbing x5's LMI coefficient by t * coeff * eps per entry.

    ``entries`` maps 1-based (i, j) positions of the first-block LMI view
    to integer multiples of ``eps``; the stored direction is the negative,
    matching the storage convention.
    """
    base = expprimal(bits)
    d6 = MpMatrix.zeros(6, 6, bits)
    with _ctx(bits):
        e = mp(eps, bits)
        for (i, j), c in entries.items():
            v = -(c * e)
            d6.data[(i - 1) * 6 + (j - 1)] = v
            d6.data[(j - 1) * 6 + (i - 1)] = v
    d6.symmetric = True
    delta = BlockMatrix([d6, MpMatrix.zeros(2, 2, bits)])
    return PerturbedFamily(base, {5: delta}, label=label)


def perturbation_p1(eps: str = EPS_DEFAULT, bits: int = DEFAULT_PRECISION) -> PerturbedFamily:
    """(2,2) entry of the x5 coefficient goes to -2(1+eps) at t = 1."""
    return _entry_family({(2, 2): -2}, eps, f"p1(eps={eps})", bits)


def perturbation_p2(eps: str = EPS_DEFAULT, bits: int = DEFAULT_PRECISION) -> PerturbedFamily:
    """(2,3)/(3,2) entries of the x5 coefficient go to -2(1+eps) at t = 1."""
    return _entry_family({(3, 2): -2}, eps, f"p2(eps={eps})", bits)


def perturbation_p3(eps: str = EPS_DEFAULT, bits: int = DEFAULT_PRECISION) -> PerturbedFamily:
    """(2,4)/(4,2) entries of the x5 coefficient go to 1+eps at t = 1."""
    return _entry_family({(4, 2): 1}, eps, f"p3(eps={eps})", bits)


def problem_p1(eps: str = EPS_DEFAULT, bits: int = DEFAULT_PRECISION) -> SdpProblem:
    return perturbation_p1(eps, bits).apply(1)


def problem_p2(eps: str = EPS_DEFAULT, bits: int = DEFAULT_PRECISION) -> SdpProblem:
    return perturbation_p2(eps, bits).apply(1)


def problem_p3(eps: str = EPS_DEFAULT, bits: int = DEFAULT_PRECISION) -> SdpProblem:
    return perturbation_p3(eps, bits).apply(1)


def toy_1x1(bits: int = DEFAULT_PRECISION) -> SdpProblem:
    """min { x : x = 1, x >= 0 }, dual of sup { y : 1 - y >= 0 }."""
    one = BlockMatrix([MpMatrix.from_rows([[1]], bits)])
    return SdpProblem([1], [one, one], [MpScalar(1, bits)], precision_bits=bits)


def rank_preserving_infeasible(bits: int = DEFAULT_PRECISION) -> PerturbedFamily:
    """2x2 instance whose dual turns infeasible under a rank-preserving tilt.

    Base data: A_0 = diag(0, 1), A_1 = e11, A_2 = A_3 = e12 + e21 and
    b = (2, 2, 2); the direction scales only A_3's off-diagonal, so the
    span's rank stays 2 while b leaves the range of the constraint map.
    """
    A0 = BlockMatrix([MpMatrix.from_rows([[0, 0], [0, 1]], bits)])
    A1 = BlockMatrix([MpMatrix.from_rows([[1, 0], [0, 0]], bits)])
    offdiag = MpMatrix.from_rows([[0, 1], [1, 0]], bits)
    A2 = BlockMatrix([offdiag])
    A3 = BlockMatrix([MpMatrix.from_rows([[0, 1], [1, 0]], bits)])
    b = [MpScalar(2, bits)] * 3
    base = SdpProblem([2], [A0, A1, A2, A3], b, precision_bits=bits)
    return PerturbedFamily(base, {3: BlockMatrix([offdiag])}, label="rank-preserving-infeasible")


def rank_preserving_infeasible_strict_point(bits: int = DEFAULT_PRECISION) -> BlockMatrix:
    """Strictly feasible dual point X = [[2,1],[1,1]] of the base instance."""
    return BlockMatrix([MpMatrix.from_rows([[2, 1], [1, 1]], bits)])


# ---------------------------------------------------------------------------
# analytic optima and audit fixtures
# ---------------------------------------------------------------------------


def sqrt5(bits: int = DEFAULT_PRECISION) -> MpScalar:
    return MpScalar(5, bits).sqrt()


def sqrt2(bits: int = DEFAULT_PRECISION) -> MpScalar:
    return MpScalar(2, bits).sqrt()


def feasible_sequence_point(n: int, bits: int = DEFAULT_PRECISION) -> list[MpScalar]:
    """The y along which the supremum -sqrt(5) is approached; value -sqrt(5) - 1/n."""
    with _ctx(bits):
        g = -sqrt5(bits).value
        tail = [g / 4, -g + mp(1, bits) / n]
    return [
        MpScalar(n, bits),
        MpScalar(0, bits),
        MpScalar(0, bits),
        MpScalar(-n, bits),
        MpScalar(tail[0], bits),
        MpScalar(tail[1], bits),
    ]


def dual_optimal_point(bits: int = DEFAULT_PRECISION) -> BlockMatrix:
    """Rank-one dual optimizer of the base problem, objective -sqrt(5).

    First block (1/10) v v^T with v = (0, -4, 1, -2, -sqrt(5), 0); the
    second block diag(0, 4) is pinned by the coupling constraints.
    """
    x1 = MpMatrix.zeros(6, 6, bits)
    with _ctx(bits):
        g = -sqrt5(bits).value
        v = [mp(0, bits), mp(-4, bits), mp(1, bits), mp(-2, bits), g, mp(0, bits)]
        tenth = mp(1, bits) / 10
        for i in range(6):
            for j in range(6):
                x1.data[i * 6 + j] = v[i] * v[j] * tenth
    x1.symmetric = True
    x2 = MpMatrix.from_rows([[0, 0], [0, 4]], bits)
    return BlockMatrix([x1, x2])


def reducing_certificate_first(bits: int = DEFAULT_PRECISION):
    """First reducing certificate of the base dual: kills coordinate 1 of
    both blocks.  Returns (y, U, V)."""
    y = [MpScalar(v, bits) for v in (1, 0, 0, -1, 0, 0)]
    U = BlockMatrix([_sym6({(1, 1): 2}, bits), _sym2({(1, 1): 1}, bits)])
    V = BlockMatrix.zeros([6, 2], bits)
    return y, U, V


def reducing_certificate_second_p1(eps: str = EPS_DEFAULT, bits: int = DEFAULT_PRECISION):
    """Second certificate of the perturbed dual (P1 direction).

    U is supported on the (2,2) entry with weight 2*eps; V collects the
    first-row remainder of both blocks.  Returns (y, U, V).
    """
    y = [MpScalar(v, bits) for v in (-1, 1, 0, 2, -1, 0)]
    u1 = MpMatrix.zeros(6, 6, bits)
    with _ctx(bits):
        u1.data[1 * 6 + 1] = 2 * mp(eps, bits)
    u1.symmetric = True
    U = BlockMatrix([u1, MpMatrix.zeros(2, 2, bits)])
    v1 = _sym6({(3, 1): -1, (4, 1): -1}, bits)
    v2 = _sym2({(1, 1): -1, (2, 1): 1}, bits)
    V = BlockMatrix([v1, v2])
    return y, U, V


def state_feedback_plant(bits: int = DEFAULT_PRECISION):
    """The 2-state plant behind :func:`expprimal` (stabilizable, singular dual)."""
    from .hinf import ControlSystem

    return ControlSystem(
        A=MpMatrix.from_rows([[-1, -1], [1, 0]], bits),
        B1=MpMatrix.from_rows([[-1, -1], [-1, 0]], bits),
        B2=MpMatrix.from_rows([[0], [1]], bits),
        C1=MpMatrix.from_rows([[2, -1], [-1, 2]], bits),
        D11=MpMatrix.from_rows([[-1, 0], [-1, 0]], bits),
        D12=MpMatrix.from_rows([[2], [-1]], bits),
    )


def appendix_b_eigen_matrix(bits: int = DEFAULT_PRECISION) -> MpMatrix:
    """4x4 matrix whose minimum eigenvalue (-sqrt(2)) is the P1 optimum."""
    m = MpMatrix.zeros(4, 4, bits)
    for (i, j) in ((2, 0), (2, 1)):
        m.data[i * 4 + j] = mp(-1, bits)
        m.data[j * 4 + i] = mp(-1, bits)
    m.symmetric = True
    return m
