"""Translation-invariant Clifford QCAs as symplectic Laurent-polynomial matrices.

A QCA on q qudits per cell induces a 2q x 2q matrix Q with
Q^dag lambda_q Q = lambda_q and Q^-1 = -lambda_q Q^dag lambda_q.  Elementary
gates (Hadamard, control-Phase, control-NOT, scale, shift) generate circuits;
gate lists replay to their source matrix exactly.  For D = 1 the doubled map
Q + Q factors into gates and at most one shift: the stabilization step needs
only that SL(n) over a Euclidean domain is generated by elementary matrices,
which is carried out constructively by row reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedInputError, ShapeError, UnsupportedError
from .polymat import PolyMatrix, determinant, lambda_form
from .ring import LaurentPoly, _modinv, var_names


@dataclass(frozen=True)
class Gate:
    """One elementary symplectic generator; qudit indices are 1-based."""

    kind: str  # hadamard | cphase | cnot | scale | shift
    i: int
    j: int | None = None
    param: LaurentPoly | None = None

    def inverse(self) -> "Gate":
        if self.kind == "hadamard":
            return self  # p = 2 only; odd p callers expand inverses explicitly
        if self.kind == "cphase":
            return Gate("cphase", self.i, None, -self.param)
        if self.kind == "cnot":
            return Gate("cnot", self.i, self.j, -self.param)
        if self.kind == "scale":
            ((mon, c),) = self.param.terms.items()
            inv = LaurentPoly.constant(self.param.prime, self.param.nvars, _modinv(c, self.param.prime))
            return Gate("scale", self.i, None, inv)
        if self.kind == "shift":
            ((mon, c),) = self.param.terms.items()
            return Gate(
                "shift",
                self.i,
                None,
                LaurentPoly.monomial(self.param.prime, self.param.nvars, tuple(-e for e in mon), _modinv(c, self.param.prime)),
            )
        raise MalformedInputError(f"unknown gate kind {self.kind}")

    def to_line(self) -> str:
        if self.kind == "hadamard":
            return f"H {self.i}"
        if self.kind == "cphase":
            return f"CPHASE {self.i} {_gate_poly_str(self.param)}"
        if self.kind == "cnot":
            return f"CNOT {self.i} {self.j} {_gate_poly_str(self.param)}"
        if self.kind == "scale":
            return f"SCALE {self.i} {_gate_poly_str(self.param)}"
        if self.kind == "shift":
            return f"SHIFT {self.i} {_gate_poly_str(self.param)}"
        raise MalformedInputError(f"unknown gate kind {self.kind}")


def _gate_poly_str(f: LaurentPoly) -> str:
    """Compact polynomial text for gate lines: explicit exponents, no spaces."""
    if f.is_zero():
        return "0"
    names = var_names(f.nvars)
    parts = []
    from .ring import _term_sort_key

    for mon in sorted(f.terms, key=_term_sort_key):
        c = f.terms[mon]
        factors = [f"{n}^{e}" for n, e in zip(names, mon) if e != 0]
        if not factors:
            parts.append(str(c))
        elif c == 1:
            parts.append("*".join(factors))
        else:
            parts.append(f"{c}*" + "*".join(factors))
    return "+".join(parts)


def parse_gate_line(line: str, prime: int, nvars: int) -> Gate:
    toks = line.split()
    if not toks:
        raise MalformedInputError("empty gate line")
    kind = toks[0].upper()
    try:
        if kind == "H":
            return Gate("hadamard", int(toks[1]))
        if kind == "CPHASE":
            return Gate("cphase", int(toks[1]), None, LaurentPoly.from_string(prime, nvars, toks[2]))
        if kind == "CNOT":
            return Gate("cnot", int(toks[1]), int(toks[2]), LaurentPoly.from_string(prime, nvars, toks[3]))
        if kind == "SCALE":
            return Gate("scale", int(toks[1]), None, LaurentPoly.from_string(prime, nvars, toks[2]))
        if kind == "SHIFT":
            return Gate("shift", int(toks[1]), None, LaurentPoly.from_string(prime, nvars, toks[2]))
    except (IndexError, ValueError) as exc:
        raise MalformedInputError(f"bad gate line {line!r}") from exc
    raise MalformedInputError(f"unknown gate {toks[0]!r}")


def _elementary(prime, nvars, n, mu, nu, a: LaurentPoly) -> PolyMatrix:
    rows = [
        [
            (LaurentPoly.one(prime, nvars) if i == j else LaurentPoly.zero(prime, nvars))
            for j in range(n)
        ]
        for i in range(n)
    ]
    rows[mu][nu] = rows[mu][nu] + a
    return PolyMatrix(prime, nvars, rows)


def gate_matrix(g: Gate, q: int, prime: int, nvars: int) -> PolyMatrix:
    """The 2q x 2q symplectic matrix of one gate (validated)."""
    one = LaurentPoly.one(prime, nvars)
    i = g.i - 1
    if not 0 <= i < q:
        raise MalformedInputError(f"gate qudit {g.i} out of range for q={q}")
    if g.kind == "hadamard":
        E = lambda mu, nu, a: _elementary(prime, nvars, 2 * q, mu, nu, a)
        M = E(i, i + q, -one) * E(i + q, i, one) * E(i, i + q, -one)
    elif g.kind == "cphase":
        if g.param != g.param.involute():
            raise MalformedInputError("control-Phase parameter must be hermitian")
        M = _elementary(prime, nvars, 2 * q, i + q, i, g.param)
    elif g.kind == "cnot":
        j = g.j - 1
        if i == j or not 0 <= j < q:
            raise MalformedInputError("control-NOT needs two distinct qudits")
        a = g.param
        M = _elementary(prime, nvars, 2 * q, i, j, a) * _elementary(
            prime, nvars, 2 * q, j + q, i + q, -a.involute()
        )
    elif g.kind == "scale":
        if not (g.param.is_constant() and not g.param.is_zero()):
            raise MalformedInputError("scale parameter must be a nonzero constant")
        c = g.param.constant_coeff()
        cm1 = LaurentPoly.constant(prime, nvars, c - 1)
        cinvm1 = LaurentPoly.constant(prime, nvars, _modinv(c, prime) - 1)
        M = _elementary(prime, nvars, 2 * q, i, i, cm1) * _elementary(
            prime, nvars, 2 * q, i + q, i + q, cinvm1
        )
    elif g.kind == "shift":
        if not g.param.is_monomial():
            raise MalformedInputError("shift parameter must be a monomial")
        m1 = g.param - one
        M = _elementary(prime, nvars, 2 * q, i, i, m1) * _elementary(
            prime, nvars, 2 * q, i + q, i + q, m1
        )
    else:
        raise MalformedInputError(f"unknown gate kind {g.kind}")
    return M


class SymplecticQCA:
    """An invertible Pauli-module automorphism: Q^dag lambda Q = lambda."""

    def __init__(self, Q: PolyMatrix):
        if Q.nrows != Q.ncols or Q.nrows % 2:
            raise ShapeError("symplectic matrix must be square of even dimension")
        self.q = Q.nrows // 2
        self.matrix = Q
        lam = lambda_form(self.q, Q.prime, Q.nvars)
        if Q.dagger() * lam * Q != lam:
            raise MalformedInputError("matrix does not preserve the anti-hermitian form")
        self._lam = lam

    @property
    def prime(self) -> int:
        return self.matrix.prime

    @property
    def nvars(self) -> int:
        return self.matrix.nvars

    def inverse_matrix(self) -> PolyMatrix:
        return (-self._lam) * self.matrix.dagger() * self._lam

    def inverse(self) -> "SymplecticQCA":
        return SymplecticQCA(self.inverse_matrix())

    def __mul__(self, other: "SymplecticQCA") -> "SymplecticQCA":
        return SymplecticQCA(self.matrix * other.matrix)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymplecticQCA):
            return NotImplemented
        return self.matrix == other.matrix

    def det_is_unit(self) -> bool:
        return determinant(self.matrix).is_monomial()


def replay(gates: list, q: int, prime: int, nvars: int) -> PolyMatrix:
    """Left-to-right product of the gate matrices."""
    M = PolyMatrix.identity(prime, nvars, 2 * q)
    for g in gates:
        M = M * gate_matrix(g, q, prime, nvars)
    return M


def gates_to_text(gates: list, q: int, prime: int, nvars: int) -> str:
    lines = [f"p={prime} D={nvars} q={q}"]
    lines.extend(g.to_line() for g in gates)
    return "\n".join(lines) + "\n"


def gates_from_text(text: str):
    from .polymat import _parse_header

    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or "=" not in lines[0]:
        raise MalformedInputError("gate file needs a 'p=.. D=.. q=..' header")
    hdr = _parse_header(lines[0], ("p", "D", "q"))
    gates = [parse_gate_line(ln, hdr["p"], hdr["D"]) for ln in lines[1:]]
    return gates, hdr["q"], hdr["p"], hdr["D"]


# -- structured decompositions -------------------------------------------------


def _upper_diag_gadget(i: int, f: LaurentPoly, prime: int, nvars: int) -> list:
    """Gates for [[I, f e_ii],[0, I]] with f hermitian: H, CPHASE(-f), H^-1."""
    word = [Gate("hadamard", i), Gate("cphase", i, None, -f)]
    if prime == 2:
        word.append(Gate("hadamard", i))
    else:
        word.append(Gate("scale", i, None, LaurentPoly.constant(prime, nvars, prime - 1)))
        word.append(Gate("hadamard", i))
    return word


def _lower_cz_gadget(i: int, j: int, c: LaurentPoly, prime: int, nvars: int) -> list:
    """Gates for [[I,0],[C,I]] with C = c e_ij + cbar e_ji (i != j).

    Conjugating CPHASE_i(1) by CNOT_ij(-c) leaves extra diagonal phases that
    two more CPHASEs cancel.
    """
    one = LaurentPoly.one(prime, nvars)
    cc = c * c.involute()
    return [
        Gate("cnot", i, j, -c),
        Gate("cphase", i, None, one),
        Gate("cnot", i, j, c),
        Gate("cphase", i, None, -one),
        Gate("cphase", j, None, -cc),
    ]


def _upper_pair_gadget(i: int, j: int, f: LaurentPoly, prime: int, nvars: int, q: int) -> list:
    """Gates for [[I, S],[0,I]], S = f e_ij + fbar e_ji: Hadamard-conjugated CZ."""
    word = [Gate("hadamard", i), Gate("hadamard", j)]
    word += _lower_cz_gadget(i, j, -f, prime, nvars)
    if prime == 2:
        word += [Gate("hadamard", i), Gate("hadamard", j)]
    else:
        word += [
            Gate("scale", i, None, LaurentPoly.constant(prime, nvars, prime - 1)),
            Gate("hadamard", i),
            Gate("scale", j, None, LaurentPoly.constant(prime, nvars, prime - 1)),
            Gate("hadamard", j),
        ]
    return word


def decompose_upper_block(Q: SymplecticQCA) -> list:
    """Factor [[I, B],[0, I]] (B hermitian) into elementary gates.

    B splits into hermitian summands: each diagonal entry alone, and each
    off-diagonal pair (f, fbar); upper-block matrices commute, so the gadget
    words concatenate.  The result replays to Q exactly (verified).
    """
    M = Q.matrix
    q, p, nv = Q.q, Q.prime, Q.nvars
    for i in range(q):
        for j in range(q):
            expect_id = LaurentPoly.one(p, nv) if i == j else LaurentPoly.zero(p, nv)
            if M[i, j] != expect_id or M[i + q, j + q] != expect_id:
                raise MalformedInputError("matrix is not of upper-block form")
            if not M[i + q, j].is_zero():
                raise MalformedInputError("matrix is not of upper-block form")
    B = M.submatrix(range(q), range(q, 2 * q))
    if B != B.dagger():
        raise MalformedInputError("upper block is not hermitian")
    gates: list = []
    for i in range(q):
        if not B[i, i].is_zero():
            gates += _upper_diag_gadget(i + 1, B[i, i], p, nv)
    for i in range(q):
        for j in range(i + 1, q):
            if not B[i, j].is_zero():
                gates += _upper_pair_gadget(i + 1, j + 1, B[i, j], p, nv, q)
    if replay(gates, q, p, nv) != M:
        raise RuntimeError("upper-block gadget replay mismatch")
    return gates


def is_shift(Q: SymplecticQCA):
    """Recognize monomial-permutation symplectic matrices.

    Returns (permutation, monomials) with X_j -> m_j X_perm(j) and the same
    monomial on the Z side, or None.
    """
    M = Q.matrix
    q = Q.q
    perm = []
    mons = []
    for j in range(q):
        hits = [(i, M[i, j]) for i in range(2 * q) if not M[i, j].is_zero()]
        if len(hits) != 1 or not hits[0][1].is_monomial():
            return None
        i, m = hits[0]
        if i >= q:
            return None
        zhits = [(r, M[r, j + q]) for r in range(2 * q) if not M[r, j + q].is_zero()]
        if len(zhits) != 1 or zhits[0][0] != i + q or zhits[0][1] != m:
            return None
        perm.append(i)
        mons.append(m)
    if sorted(perm) != list(range(q)):
        return None
    return perm, mons


def _sl_row_reduce(U: PolyMatrix) -> list:
    """Factor U in SL(n, F_p[x^±1]) into row operations E_ij(a).

    Returns ops such that applying row_i += a*row_j in order reduces U to the
    identity; hence U = product of inverse elementary matrices in reverse.
    Only for D = 1, where the span degree is a Euclidean function.
    """
    if U.nvars != 1:
        raise UnsupportedError("constructive SL factorization needs D = 1")
    from .ring import laurent_divmod_1d

    p = U.prime
    n = U.nrows
    A = [[U.rows[i][j] for j in range(n)] for i in range(n)]
    ops: list = []

    def addrow(i, j, a: LaurentPoly):  # row_i += a * row_j
        if a.is_zero():
            return
        for c in range(n):
            A[i][c] = A[i][c] + a * A[j][c]
        ops.append((i, j, a))

    one = LaurentPoly.one(p, 1)
    for k in range(n):
        # Euclidean reduction of column k on rows >= k to a single unit entry
        while True:
            nz = [i for i in range(k, n) if not A[i][k].is_zero()]
            if not nz:
                raise MalformedInputError("matrix is singular; not in SL")
            if len(nz) == 1:
                r = nz[0]
                if not A[r][k].is_monomial():
                    raise MalformedInputError("column gcd is not a unit; not in SL")
                break
            spans = sorted(nz, key=lambda i: (_span1(A[i][k]), i))
            base, other = spans[0], spans[1]
            qpoly, _ = laurent_divmod_1d(A[other][k], A[base][k])
            addrow(other, base, -qpoly)
        u = A[r][k]
        ((mon, c),) = u.terms.items()
        uinv = LaurentPoly.monomial(p, 1, tuple(-e for e in mon), _modinv(c, p))
        if r != k:
            # bring a 1 to (k,k) without swaps: row_k += u^-1(1 - A[k][k]) row_r
            addrow(k, r, uinv * (one - A[k][k]))
        elif u != one:
            # scale rows (k, k+1) by diag(u^-1, u), a Whitehead product of six
            # elementary row operations; at k = n-1 the determinant forces u = 1
            if k + 1 >= n:
                raise MalformedInputError("determinant is not 1; not in SL")
            h = k + 1
            addrow(k, h, -one)
            addrow(h, k, one)
            addrow(k, h, -one)
            addrow(k, h, uinv)
            addrow(h, k, -u)
            addrow(k, h, uinv)
        for i in range(n):
            if i != k and not A[i][k].is_zero():
                addrow(i, k, -A[i][k])
        assert A[k][k] == one
    for i in range(n):
        for j in range(n):
            expected = one if i == j else LaurentPoly.zero(p, 1)
            if A[i][j] != expected:
                raise RuntimeError("SL row reduction did not reach the identity")
    return ops


def _span1(f: LaurentPoly) -> int:
    return f.max_exponents()[0] - f.min_exponents()[0]


@dataclass
class StackedDecomposition:
    """Gate word for Q + Q (two stacked copies), plus the bookkeeping.

    ``coarse_factor`` > 1 records that the input was coarse-grained first to
    reach q >= 2; the replay target is then the stacked coarse-grained matrix.
    """

    gates: list
    q_doubled: int
    prime: int
    nvars: int
    coarse_factor: int
    target: PolyMatrix

    def replay(self) -> PolyMatrix:
        return replay(self.gates, self.q_doubled, self.prime, self.nvars)

    def verified(self) -> bool:
        return self.replay() == self.target


def stack_two(Q: PolyMatrix) -> PolyMatrix:
    """The doubled map Q + Q on two interleaved copies of the system."""
    q = Q.nrows // 2
    p, nv = Q.prime, Q.nvars
    zero = LaurentPoly.zero(p, nv)
    n = 4 * q
    rows = [[zero] * n for _ in range(n)]
    for bi in range(2):  # X/Z row block
        for bj in range(2):
            for i in range(q):
                for j in range(q):
                    e = Q.rows[bi * q + i][bj * q + j]
                    if e.is_zero():
                        continue
                    for copy in range(2):
                        rows[bi * 2 * q + copy * q + i][bj * 2 * q + copy * q + j] = e
    return PolyMatrix(p, nv, rows)


def stack_square_decompose(QCA: SymplecticQCA, budget_rounds: int = 100_000) -> StackedDecomposition:
    """Gate list replaying exactly to Q + Q, for D = 1 qubit QCAs.

    The D = 1 specialization replaces the stability theorem by constructive
    Euclidean row reduction of SL(2q); the single non-circuit factor is one
    shift gate carrying the monomial determinant.
    """
    Q = QCA.matrix
    p, nv = Q.prime, Q.nvars
    if nv != 1:
        raise UnsupportedError("stacked factorization implemented for D = 1 only")
    if p != 2:
        raise UnsupportedError("stacked factorization is for qubit systems (p = 2)")
    coarse_factor = 1
    if QCA.q < 2:
        from .coarse import coarse_context, coarse_matrix

        coarse_factor = 2
        Q = coarse_matrix(Q, coarse_context(p, nv, 2))
    q = Q.nrows // 2
    target = stack_two(Q)
    qd = 2 * q
    lamq = lambda_form(q, p, nv)
    Qinv = lamq * Q.dagger() * lamq  # p = 2: equals -lam Q^dag lam
    one = LaurentPoly.one(p, nv)

    work = target
    applied_words: list = []  # words applied on the left, in order

    def apply_word(word: list):
        nonlocal work
        if not word:
            return
        work = replay(word, qd, p, nv) * work
        applied_words.append(word)

    # copy-2 qudit of cell index i is qudit q+i (1-based in gates)
    cnot_21 = [Gate("cnot", i + 1, q + i + 1, one) for i in range(q)]
    hadamard_2 = [Gate("hadamard", q + i + 1) for i in range(q)]
    apply_word(cnot_21)
    apply_word(hadamard_2)

    # the stability step: X-block U = Q^-1, Z-block (U^dag)^-1 = Q^dag,
    # realized as one shift plus CNOTs from SL row reduction
    det = determinant(Qinv)
    if not det.is_monomial():
        raise MalformedInputError("symplectic matrix with non-unit determinant")
    ((dmon, dc),) = det.terms.items()
    shift_word = []
    if dmon != (0,) * nv or dc != 1:
        shift_word = [Gate("shift", 1, None, LaurentPoly.monomial(p, nv, dmon, dc))]
        # X-block of the shift is diag(det, 1, ..., 1); divide it out of U
        U1 = [[Qinv.rows[i][j] for j in range(qd)] for i in range(qd)]
        dinv = LaurentPoly.monomial(p, nv, tuple(-e for e in dmon), _modinv(dc, p))
        U1[0] = [e * dinv for e in U1[0]]
        U1 = PolyMatrix(p, nv, U1)
    else:
        U1 = Qinv
    # the recorded ops reduce U1 to I in order, so U1 is the product of their
    # inverses in the same order; each E_ij(a) on the X block is a CNOT
    ops = _sl_row_reduce(U1)
    sl_word = [Gate("cnot", i + 1, j + 1, -a) for (i, j, a) in ops]
    n_word = shift_word + sl_word
    Nmat = replay(n_word, qd, p, nv)
    if Nmat.submatrix(range(qd), range(qd)) != Qinv:
        raise RuntimeError("stability-step word has the wrong X block")
    apply_word(n_word)

    apply_word(hadamard_2)

    # eliminate the lower-left X-coupling block (I + F) with CNOTs
    blockIF = work.submatrix(range(q, 2 * q), range(q))
    cnot_fix = []
    for i in range(q):
        for j in range(q):
            a = blockIF[i, j]
            if not a.is_zero():
                cnot_fix.append(Gate("cnot", q + i + 1, j + 1, -a))
    apply_word(cnot_fix)

    # eliminate the hermitian lower-left Z block G via Hadamard-conjugated gadget
    G = work.submatrix(range(2 * q, 3 * q), range(q))
    if not G.is_zero():
        if G != G.dagger():
            raise RuntimeError("residual lower block is not hermitian")
        h_all = [Gate("hadamard", i + 1) for i in range(qd)]
        minusC = PolyMatrix.zeros(p, nv, qd, qd)
        rows = [list(r) for r in minusC.rows]
        for i in range(q):
            for j in range(q):
                rows[i][j] = G[i, j]  # p = 2: -G = G
        C2 = PolyMatrix(p, nv, rows)
        upper = _upper_block_matrix(C2)
        gadget = decompose_upper_block(SymplecticQCA(upper))
        apply_word(h_all + gadget + h_all)

    # final CNOT_(2->1) clears the remaining X coupling
    blockX12 = work.submatrix(range(q), range(q, 2 * q))
    cnot_final = []
    for i in range(q):
        for j in range(q):
            a = blockX12[i, j]
            if not a.is_zero():
                cnot_final.append(Gate("cnot", i + 1, q + j + 1, -a))
    apply_word(cnot_final)

    # what remains must be [[I, J],[0, I]] with J hermitian
    upper_gates = decompose_upper_block(SymplecticQCA(work))
    # W_k ... W_1 * target = work, so target = W_1^-1 * ... * W_k^-1 * work,
    # and each inverse word is the reversed word of inverted gates
    gates = [
        g.inverse() for word in applied_words for g in reversed(word)
    ] + upper_gates
    out = StackedDecomposition(gates, qd, p, nv, coarse_factor, target)
    if not out.verified():
        raise RuntimeError("stacked decomposition replay mismatch")
    return out


def _upper_block_matrix(B: PolyMatrix) -> PolyMatrix:
    n = B.nrows
    p, nv = B.prime, B.nvars
    top = PolyMatrix.identity(p, nv, n).hstack(B)
    bot = PolyMatrix.zeros(p, nv, n, n).hstack(PolyMatrix.identity(p, nv, n))
    return top.vstack(bot)
