"""The Pauli-module layer: stabilizer maps and their certificates.

A translation-invariant commuting Pauli Hamiltonian with q qudits per unit
cell and t terms is a 2q x t matrix sigma over the Laurent ring; the upper q
rows carry X exponents, the lower q rows Z exponents.  This module certifies
commutativity and exactness, constructs verified separators (free generating
sets of the stabilizer module), solves for local flippers, and assembles the
disentangling symplectic matrix Q = (T | sigma), optionally preserving
reality (even Y-count in every column).
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import DEFAULT_REDUCTION_BUDGET
from .errors import (
    MalformedInputError,
    NoSolutionError,
    ReductionFailedError,
    ShapeError,
    UnsupportedError,
)
from .polymat import (
    LinearSolver,
    PolyMatrix,
    determinantal_ideal,
    kernel_basis,
    lambda_form,
    lift_columns,
    matrix_rank,
    parse_matrix,
    smith_image_basis,
)
from .ring import LaurentPoly

CERTIFIED = "certified"
NECESSARY_FAILED = "necessary-failed"
UNKNOWN = "unknown"


@dataclass
class StabilizerMap:
    """A 2q x t generating matrix with its verification flags."""

    sigma: PolyMatrix
    q: int
    commuting_verified: bool = False
    exactness_status: str = UNKNOWN

    def __post_init__(self):
        if self.sigma.nrows != 2 * self.q:
            raise ShapeError(f"sigma has {self.sigma.nrows} rows, expected {2 * self.q}")

    @property
    def prime(self) -> int:
        return self.sigma.prime

    @property
    def nvars(self) -> int:
        return self.sigma.nvars

    @property
    def t(self) -> int:
        return self.sigma.ncols

    def lam(self) -> PolyMatrix:
        return lambda_form(self.q, self.prime, self.nvars)

    def to_text(self) -> str:
        return self.sigma.to_text(f"q={self.q} t={self.t}")

    @classmethod
    def from_text(cls, text: str) -> "StabilizerMap":
        M, extra = parse_matrix(text)
        if "q" not in extra:
            if M.nrows % 2:
                raise MalformedInputError("stabilizer map needs an even row count")
            return cls(M, M.nrows // 2)
        if "t" in extra and extra["t"] != M.ncols:
            raise MalformedInputError("t= header disagrees with column count")
        return cls(M, extra["q"])


def split_xz(M: PolyMatrix):
    """Split a Pauli-module matrix into its X (upper) and Z (lower) blocks."""
    if M.nrows % 2:
        raise ShapeError("Pauli-module matrix needs 2q rows")
    q = M.nrows // 2
    return M.submatrix(range(q), range(M.ncols)), M.submatrix(range(q, 2 * q), range(M.ncols))


def check_commuting(S: StabilizerMap):
    """True iff sigma^dag lambda sigma vanishes; records the verdict on S.

    Returns (ok, offending (row, col) or None).
    """
    G = S.sigma.dagger() * S.lam() * S.sigma
    bad = G.first_nonzero()
    S.commuting_verified = bad is None
    return S.commuting_verified, None if bad is None else (bad[0], bad[1])


def check_exactness(S: StabilizerMap, budget: int = DEFAULT_REDUCTION_BUDGET) -> str:
    """Decide ker sigma^dag lambda = im sigma as far as the criteria allow.

    certified        rank sigma = q and I_q(sigma) = R (sufficient);
    necessary-failed rank != q or height I_q < 2 (necessary condition broken);
    unknown          otherwise; the criteria are not complete.

    When sigma commutes, I_q(sigma) = R already forces rank = q: over the
    fraction field im sigma sits inside ker sigma^dag lambda, so twice the
    rank is at most 2q, while a unit q-minor ideal gives rank >= q.
    """
    if not S.commuting_verified:
        ok, _ = check_commuting(S)
        if not ok:
            raise MalformedInputError("exactness check requires a commuting map")
    Iq = determinantal_ideal(S.sigma, S.q, budget)
    if Iq.is_unit(budget):
        S.exactness_status = CERTIFIED
        return CERTIFIED
    if matrix_rank(S.sigma) != S.q:
        S.exactness_status = NECESSARY_FAILED
        return NECESSARY_FAILED
    if Iq.height(budget) < 2:
        S.exactness_status = NECESSARY_FAILED
        return NECESSARY_FAILED
    S.exactness_status = UNKNOWN
    return UNKNOWN


@dataclass
class FlipperSet:
    """2q x t matrix F with F^dag lambda sigma_sep = I."""

    matrix: PolyMatrix


@dataclass
class SeparatorCertificate:
    """A verified free generating set for a stabilizer module.

    lift_from_source * witnesses prove im(sep) = im(source): source columns
    lift through sep and conversely, kernel of sep vanishes and I_q(sep) = R.
    """

    sep: StabilizerMap
    source: StabilizerMap
    lift_sep_in_source: PolyMatrix  # source * this = sep
    lift_source_in_sep: PolyMatrix  # sep * this = source
    real: bool = False
    flipper: FlipperSet | None = None


def build_separator(
    S: StabilizerMap,
    candidate: PolyMatrix | None = None,
    budget: int = DEFAULT_REDUCTION_BUDGET,
) -> SeparatorCertificate:
    """Free basis of im sigma, verified; optionally from a supplied candidate.

    Construction: if ker sigma = 0, sigma itself; for D = 1 the Smith-form
    image basis; otherwise relations are removed by dropping generator columns
    that appear with a unit coefficient in some syzygy, and the result is
    re-verified.  A candidate basis (needed for D >= 2 cases out of reach of
    the heuristic) is verified, never trusted.
    """
    if S.exactness_status != CERTIFIED:
        raise ReductionFailedError(
            "separator construction requires certified exactness of the input map"
        )
    sigma = S.sigma
    if candidate is not None:
        return _verify_separator(S, candidate, budget)
    ker = kernel_basis(sigma, budget)
    if ker.ncols == 0:
        return _verify_separator(S, sigma, budget)
    if S.nvars == 1:
        return _verify_separator(S, smith_image_basis(sigma), budget)
    # syzygy-guided column reduction: drop a generator with a unit coefficient
    work = sigma
    for _ in range(sigma.ncols):
        ker = kernel_basis(work, budget)
        if ker.ncols == 0:
            return _verify_separator(S, work, budget)
        drop = None
        for j in range(ker.ncols):
            for i in range(work.ncols):
                if ker[i, j].is_monomial():
                    drop = i
                    break
            if drop is not None:
                break
        if drop is None:
            raise ReductionFailedError(
                "column reduction stuck: no syzygy with a unit coefficient"
            )
        keep = [c for c in range(work.ncols) if c != drop]
        work = work.submatrix(range(work.nrows), keep)
    raise ReductionFailedError("column reduction did not terminate")


def _verify_separator(S: StabilizerMap, basis: PolyMatrix, budget: int) -> SeparatorCertificate:
    if basis.ncols != S.q:
        raise ReductionFailedError(
            f"candidate has {basis.ncols} columns; a separator needs exactly q={S.q}"
        )
    sep_map = StabilizerMap(basis, S.q)
    ok, where = check_commuting(sep_map)
    if not ok:
        raise ReductionFailedError(f"candidate basis does not commute at {where}")
    ker = kernel_basis(basis, budget)
    if ker.ncols != 0:
        raise ReductionFailedError("candidate basis has relations (nonzero kernel)")
    if not determinantal_ideal(basis, S.q, budget).is_unit(budget):
        raise ReductionFailedError("candidate basis has non-unit I_q")
    to_sep = lift_columns(S.sigma, basis, budget)
    if to_sep is None:
        raise ReductionFailedError("candidate columns do not lie in the source module")
    from_sep = lift_columns(basis, S.sigma, budget)
    if from_sep is None:
        raise ReductionFailedError("source columns do not lie in the candidate module")
    sep_map.exactness_status = CERTIFIED
    return SeparatorCertificate(
        sep=sep_map,
        source=S,
        lift_sep_in_source=to_sep,
        lift_source_in_sep=from_sep,
        real=reality_check(basis) if S.prime == 2 else False,
    )


def solve_flipper(cert: SeparatorCertificate, budget: int = DEFAULT_REDUCTION_BUDGET) -> FlipperSet:
    """F with F^dag lambda sigma_sep = I, solved columnwise.

    Each column v_a satisfies sigma_sep^dag lambda v_a = -e_a; existence is
    guaranteed by the certificate, so failure signals an upstream bug.
    """
    sep = cert.sep
    p, nv, q = sep.prime, sep.nvars, sep.q
    M = sep.sigma.dagger() * sep.lam()
    solver = LinearSolver(M, budget)
    cols = []
    for a in range(q):
        b = [LaurentPoly.zero(p, nv) for _ in range(q)]
        b[a] = LaurentPoly.constant(p, nv, p - 1)
        v = solver.solve(b)
        if v is None:
            raise NoSolutionError(f"flipper column {a} has no lift; certificate violated")
        cols.append(v)
    F = PolyMatrix(p, nv, [list(r) for r in zip(*cols)])
    if F.dagger() * sep.lam() * sep.sigma != PolyMatrix.identity(p, nv, q):
        raise NoSolutionError("flipper identity failed verification")
    cert.flipper = FlipperSet(F)
    return cert.flipper


def _positive_half(f: LaurentPoly) -> LaurentPoly:
    """Terms whose exponent vector is lexicographically positive.

    Any total order on nonzero exponent vectors with S = -S^c splits an
    anti-hermitian element d = h - involute(h); lexicographic positivity
    (first nonzero entry > 0) is exact and needs no real arithmetic.
    """
    kept = {}
    for mon, c in f.terms.items():
        lead = next((e for e in mon if e != 0), 0)
        if lead > 0:
            kept[mon] = c
    return LaurentPoly(f.prime, f.nvars, kept)


def build_E(
    F: FlipperSet, cert: SeparatorCertificate, real_mode: bool = False
) -> PolyMatrix:
    """E with E - E^dag = F^dag lambda F, so T = F - sigma_sep E is isotropic.

    Over p = 2 the strict upper triangle of M = F^dag lambda F is taken whole
    and each diagonal entry is split into its positive half; real_mode then
    adjusts the scalar diagonal of E so diag Coe(F_X^dag F_Z + E) = 0, which
    makes every column of T an even-Y operator.  For odd p, E = M / 2.
    """
    sep = cert.sep
    p, nv, q = sep.prime, sep.nvars, sep.q
    if real_mode and p != 2:
        raise UnsupportedError("real mode is defined for qubit systems (p = 2)")
    M = F.matrix.dagger() * sep.lam() * F.matrix
    if p != 2:
        half = (p + 1) // 2
        E = M.map_entries(lambda e: e.scale(half))
        if E - E.dagger() != M:
            raise NoSolutionError("halving failed to split F^dag lambda F")
        return E
    rows = []
    for i in range(q):
        row = []
        for j in range(q):
            if i < j:
                row.append(M[i, j])
            elif i == j:
                d = M[i, i]
                if d.constant_coeff() != 0:
                    raise MalformedInputError("diagonal of F^dag lambda F has a constant term")
                row.append(_positive_half(d))
            else:
                row.append(LaurentPoly.zero(p, nv))
        rows.append(row)
    E = PolyMatrix(p, nv, rows)
    if real_mode:
        FX, FZ = split_xz(F.matrix)
        G = FX.dagger() * FZ
        fixed = [list(r) for r in E.rows]
        for i in range(q):
            if (G[i, i].constant_coeff() + E[i, i].constant_coeff()) % 2:
                fixed[i][i] = fixed[i][i] + LaurentPoly.one(p, nv)
        E = PolyMatrix(p, nv, fixed)
    if E - E.dagger() != M:
        raise NoSolutionError("E splitting failed; antisymmetric half was inconsistent")
    return E


def build_disentangler(
    cert: SeparatorCertificate, F: FlipperSet, real_mode: bool = False
):
    """The symplectic Q = (T | sigma_sep) with Q^dag lambda Q = lambda.

    Q^-1 = -lambda Q^dag lambda maps the separator to the trivial one,
    Q^-1 sigma_sep = (0; I_q).  In real mode both Q and Q^-1 pass
    reality_check.  Returns a clifford.SymplecticQCA.
    """
    from .clifford import SymplecticQCA

    sep = cert.sep
    p, nv, q = sep.prime, sep.nvars, sep.q
    E = build_E(F, cert, real_mode)
    T = F.matrix - sep.sigma * E
    if not (T.dagger() * sep.lam() * T).is_zero():
        raise NoSolutionError("T is not isotropic")
    Q = T.hstack(sep.sigma)
    qca = SymplecticQCA(Q)
    trivial = PolyMatrix.zeros(p, nv, q, q).vstack(PolyMatrix.identity(p, nv, q))
    if qca.inverse_matrix() * sep.sigma != trivial:
        raise NoSolutionError("Q^-1 sigma_sep is not the trivial separator block")
    if real_mode and not (reality_check(Q) and reality_check(qca.inverse_matrix())):
        raise NoSolutionError("real mode produced a non-real symplectic map")
    return qca


def reality_check(M: PolyMatrix) -> bool:
    """True iff every column is an even-Y Pauli operator: Coe(v_X^dag v_Z) = 0."""
    if M.prime != 2:
        raise UnsupportedError("Y-parity counting is defined for p = 2")
    X, Z = split_xz(M)
    W = X.dagger() * Z
    return all(W[j, j].constant_coeff() == 0 for j in range(M.ncols))


def trim_redundant_generators(
    G: PolyMatrix, budget: int = DEFAULT_REDUCTION_BUDGET
) -> PolyMatrix:
    """A kernel-free generating matrix for the module spanned by G's columns.

    D = 1 goes through the Smith form.  D = 2 removes columns that occur with
    a unit coefficient in a syzygy; the result is verified by mutual lifting.
    """
    if G.nvars not in (1, 2):
        raise UnsupportedError("redundancy trimming is implemented for D <= 2")
    if G.nvars == 1:
        out = smith_image_basis(G)
        if kernel_basis(out, budget).ncols != 0:
            raise ReductionFailedError("Smith basis unexpectedly has relations")
        return out
    work = G
    for _ in range(G.ncols + 1):
        ker = kernel_basis(work, budget)
        if ker.ncols == 0:
            if work is not G and lift_columns(work, G, budget) is None:
                raise ReductionFailedError("trimmed module lost generators")
            return work
        drop = None
        for j in range(ker.ncols):
            for i in range(work.ncols):
                if ker[i, j].is_monomial():
                    drop = i
                    break
            if drop is not None:
                break
        if drop is None:
            raise ReductionFailedError(
                "freeness witness not found: no syzygy with a unit coefficient"
            )
        work = work.submatrix(range(work.nrows), [c for c in range(work.ncols) if c != drop])
    raise ReductionFailedError("trimming did not terminate")


def no_charge_flippability(S: StabilizerMap, budget: int = DEFAULT_REDUCTION_BUDGET) -> bool:
    """True iff sigma^dag lambda is surjective, i.e. every unit vector lifts.

    Requires a locally nonredundant map (zero kernel): with that, surjectivity
    of sigma^dag lambda is exactly the absence of nontrivial charges, and each
    lift is a flipper column.
    """
    if kernel_basis(S.sigma, budget).ncols != 0:
        raise MalformedInputError("no-charge test requires a locally nonredundant map")
    p, nv = S.prime, S.nvars
    M = S.sigma.dagger() * S.lam()
    solver = LinearSolver(M, budget)
    for a in range(S.t):
        b = [LaurentPoly.zero(p, nv) for _ in range(S.t)]
        b[a] = LaurentPoly.one(p, nv)
        if solver.solve(b) is None:
            return False
    return True
