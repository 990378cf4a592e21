"""Matrices over Laurent polynomials: dagger, minors, Smith form, syzygies.

Kernels and linear solves are exact.  Kernels over the Laurent ring reduce to
polynomial syzygies (any Laurent relation scales by a monomial unit to a
polynomial one); image membership additionally needs saturation by the product
of all variables, handled by one auxiliary variable t with the relation
1 = t*x1*...*xD, which is substituted away exactly at the end because the
saturating element is a monomial.
"""

from __future__ import annotations

import heapq
import itertools
from typing import Callable, Iterable, Sequence

from .config import DEFAULT_REDUCTION_BUDGET, max_threads
from .errors import (
    BudgetError,
    ContextError,
    MalformedInputError,
    ShapeError,
    UnsupportedError,
)
from .ring import (
    Ideal,
    LaurentPoly,
    _Budget,
    _elim_key,
    _grevlex_key,
    _modinv,
    _mon_div,
    _mon_lcm,
    _mon_mul,
    laurent_divmod_1d,
)


class PolyMatrix:
    """Immutable rectangular matrix of LaurentPoly sharing one ring context.

    Degenerate shapes (zero rows or columns) are legal; ``ncols`` may be
    passed explicitly when there are no rows to infer it from.
    """

    __slots__ = ("prime", "nvars", "nrows", "ncols", "rows")

    def __init__(
        self,
        prime: int,
        nvars: int,
        rows: Sequence[Sequence[LaurentPoly]],
        ncols: int | None = None,
    ):
        self.prime = prime
        self.nvars = nvars
        self.nrows = len(rows)
        if rows:
            self.ncols = len(rows[0])
            if ncols is not None and ncols != self.ncols:
                raise ShapeError("explicit ncols disagrees with rows")
        else:
            self.ncols = ncols or 0
        for r in rows:
            if len(r) != self.ncols:
                raise ShapeError("ragged rows")
            for e in r:
                if e.prime != prime or e.nvars != nvars:
                    raise ContextError("matrix entry in wrong ring")
        self.rows = tuple(tuple(r) for r in rows)

    # -- constructors --------------------------------------------------------

    @classmethod
    def zeros(cls, prime: int, nvars: int, nrows: int, ncols: int) -> "PolyMatrix":
        z = LaurentPoly.zero(prime, nvars)
        return cls(prime, nvars, [[z] * ncols for _ in range(nrows)], ncols=ncols)

    @classmethod
    def identity(cls, prime: int, nvars: int, n: int) -> "PolyMatrix":
        z = LaurentPoly.zero(prime, nvars)
        one = LaurentPoly.one(prime, nvars)
        return cls(prime, nvars, [[one if i == j else z for j in range(n)] for i in range(n)])

    @classmethod
    def from_strings(cls, prime: int, nvars: int, rows: Sequence[Sequence[str]]) -> "PolyMatrix":
        return cls(
            prime,
            nvars,
            [[LaurentPoly.from_string(prime, nvars, s) for s in r] for r in rows],
        )

    @classmethod
    def column(cls, entries: Sequence[LaurentPoly]) -> "PolyMatrix":
        e0 = entries[0]
        return cls(e0.prime, e0.nvars, [[e] for e in entries])

    # -- structure -----------------------------------------------------------

    def __getitem__(self, ij) -> LaurentPoly:
        i, j = ij
        return self.rows[i][j]

    def col(self, j: int) -> list:
        return [self.rows[i][j] for i in range(self.nrows)]

    def columns(self) -> list:
        return [self.col(j) for j in range(self.ncols)]

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "PolyMatrix":
        col_idx = list(col_idx)
        return PolyMatrix(
            self.prime,
            self.nvars,
            [[self.rows[i][j] for j in col_idx] for i in row_idx],
            ncols=len(col_idx),
        )

    def hstack(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        if self.nrows != other.nrows:
            raise ShapeError("hstack needs equal row counts")
        return PolyMatrix(
            self.prime,
            self.nvars,
            [list(a) + list(b) for a, b in zip(self.rows, other.rows)],
            ncols=self.ncols + other.ncols,
        )

    def vstack(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        if self.ncols != other.ncols:
            raise ShapeError("vstack needs equal column counts")
        return PolyMatrix(
            self.prime,
            self.nvars,
            list(self.rows) + list(other.rows),
            ncols=self.ncols,
        )

    def map_entries(self, fn: Callable[[LaurentPoly], LaurentPoly]) -> "PolyMatrix":
        return PolyMatrix(
            self.prime,
            self.nvars,
            [[fn(e) for e in r] for r in self.rows],
            ncols=self.ncols,
        )

    def _check(self, other: "PolyMatrix") -> None:
        if self.prime != other.prime or self.nvars != other.nvars:
            raise ContextError("matrices in different rings")

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ShapeError("shape mismatch in add")
        return PolyMatrix(
            self.prime,
            self.nvars,
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
        )

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + other.map_entries(lambda e: -e)

    def __neg__(self) -> "PolyMatrix":
        return self.map_entries(lambda e: -e)

    def __mul__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        if self.ncols != other.nrows:
            raise ShapeError(
                f"cannot multiply {self.nrows}x{self.ncols} by {other.nrows}x{other.ncols}"
            )
        zero = LaurentPoly.zero(self.prime, self.nvars)
        if self.ncols == 0 or other.ncols == 0 or self.nrows == 0:
            return PolyMatrix.zeros(self.prime, self.nvars, self.nrows, other.ncols)
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = zero
                for a, b in zip(r, c):
                    if a.terms and b.terms:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(self.prime, self.nvars, out)

    def scale(self, f: LaurentPoly) -> "PolyMatrix":
        return self.map_entries(lambda e: e * f)

    def dagger(self) -> "PolyMatrix":
        """Transpose followed by the bar involution on every entry."""
        return PolyMatrix(
            self.prime,
            self.nvars,
            [
                [self.rows[i][j].involute() for i in range(self.nrows)]
                for j in range(self.ncols)
            ],
            ncols=self.nrows,
        )

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(
            self.prime,
            self.nvars,
            [[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)],
            ncols=self.nrows,
        )

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.rows for e in r)

    def first_nonzero(self):
        for i, r in enumerate(self.rows):
            for j, e in enumerate(r):
                if not e.is_zero():
                    return (i, j, e)
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return (
            self.prime == other.prime
            and self.nvars == other.nvars
            and self.rows == other.rows
        )

    def __hash__(self) -> int:
        return hash((self.prime, self.nvars, self.rows))

    def __repr__(self) -> str:
        body = "; ".join(", ".join(e.to_string() for e in r) for r in self.rows)
        return f"PolyMatrix({self.nrows}x{self.ncols} over F_{self.prime}[{self.nvars}]: {body})"

    # -- serialization ---------------------------------------------------------

    def to_text(self, extra_header: str | None = None) -> str:
        lines = [f"p={self.prime} D={self.nvars} rows={self.nrows} cols={self.ncols}"]
        if extra_header:
            lines.append(extra_header)
        for r in self.rows:
            lines.append(";".join(e.to_string() for e in r))
        return "\n".join(lines) + "\n"


def parse_matrix(text: str):
    """Parse the matrix text format; returns (PolyMatrix, extra-header dict)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MalformedInputError("empty matrix file")
    header = _parse_header(lines[0], ("p", "D", "rows", "cols"))
    body_start = 1
    extra: dict = {}
    if len(lines) > 1 and "=" in lines[1] and ";" not in lines[1]:
        try:
            extra = _parse_header(lines[1], None)
            body_start = 2
        except MalformedInputError:
            extra = {}
    p, nv = header["p"], header["D"]
    nrows, ncols = header["rows"], header["cols"]
    body = lines[body_start:]
    if len(body) != nrows:
        raise MalformedInputError(f"expected {nrows} rows, found {len(body)}")
    rows = []
    for ln in body:
        entries = ln.split(";")
        if len(entries) != ncols:
            raise MalformedInputError(f"expected {ncols} entries per row")
        rows.append([LaurentPoly.from_string(p, nv, s) for s in entries])
    return PolyMatrix(p, nv, rows), extra


def _parse_header(line: str, required):
    out = {}
    for tok in line.split():
        if "=" not in tok:
            raise MalformedInputError(f"bad header token {tok!r}")
        k, _, v = tok.partition("=")
        try:
            out[k] = int(v)
        except ValueError as exc:
            raise MalformedInputError(f"bad header value {tok!r}") from exc
    if required is not None:
        for k in required:
            if k not in out:
                raise MalformedInputError(f"header missing {k}=")
    return out


# -- determinants and determinantal ideals ------------------------------------


def _signed_minors_of_rows(rows: list, t: int, p: int, nvars: int) -> dict:
    """All t-column minors of a t-row selection, keyed by column bitmask.

    Laplace expansion along rows with shared column-subset subproblems.
    """
    ncols = len(rows[0])
    zero = LaurentPoly.zero(p, nvars)
    dp = {0: LaurentPoly.one(p, nvars)}
    for k in range(t):
        row = rows[k]
        ndp: dict = {}
        for mask, acc in dp.items():
            if acc.is_zero():
                continue
            for c in range(ncols):
                bit = 1 << c
                if mask & bit:
                    continue
                e = row[c]
                if e.is_zero():
                    continue
                term = acc * e
                if p != 2 and (bin(mask >> (c + 1)).count("1") & 1):
                    term = -term
                key = mask | bit
                prev = ndp.get(key, zero)
                ndp[key] = prev + term
        dp = ndp
    return dp


def determinant(M: PolyMatrix) -> LaurentPoly:
    if M.nrows != M.ncols:
        raise ShapeError("determinant needs a square matrix")
    if M.nrows == 0:
        return LaurentPoly.one(M.prime, M.nvars)
    dp = _signed_minors_of_rows([list(r) for r in M.rows], M.nrows, M.prime, M.nvars)
    return dp.get((1 << M.ncols) - 1, LaurentPoly.zero(M.prime, M.nvars))


def iter_minors(M: PolyMatrix, t: int):
    """Yield all t-minors (row subsets and column subsets in lex order)."""
    if t == 0:
        yield LaurentPoly.one(M.prime, M.nvars)
        return
    if t > min(M.nrows, M.ncols):
        return
    col_masks = []
    for cols in itertools.combinations(range(M.ncols), t):
        mask = 0
        for c in cols:
            mask |= 1 << c
        col_masks.append(mask)
    for rows_idx in itertools.combinations(range(M.nrows), t):
        rows = [list(M.rows[i]) for i in rows_idx]
        dp = _signed_minors_of_rows(rows, t, M.prime, M.nvars)
        for mask in col_masks:
            yield dp.get(mask, LaurentPoly.zero(M.prime, M.nvars))


def determinantal_ideal(
    M: PolyMatrix,
    t: int,
    budget: int = DEFAULT_REDUCTION_BUDGET,
    batch: int = 64,
) -> Ideal:
    """Ideal of all t-minors, streamed with a unit test after every batch.

    As soon as the accumulated minors generate the unit ideal the remaining
    minors are skipped; the returned Ideal then has its basis cached as (1).
    """
    if t < 0:
        raise MalformedInputError("minor size must be nonnegative")
    if t == 0:
        return Ideal.unit(M.prime, M.nvars)
    if t > min(M.nrows, M.ncols):
        return Ideal.zero(M.prime, M.nvars)
    from .ring import GroebnerEngine, _saturated_basis  # local import to avoid cycle

    collected: list = []
    seen: set = set()
    pending: list = []
    eng = GroebnerEngine(M.prime, _elim_key, budget)
    one_mon = (0,) * (M.nvars + 1)
    eng.add_generator({one_mon: 1, (1,) * (M.nvars + 1): M.prime - 1})

    def flush() -> bool:
        for g in pending:
            eng.add_generator({m + (0,): c for m, c in g.terms.items()})
        pending.clear()
        eng.complete(stop_on_unit=True)
        return eng.has_unit

    minor_stream = _iter_minors_parallel(M, t)
    for m in minor_stream:
        if m.is_zero():
            continue
        m = m.monic_normalized()
        if m in seen:
            continue
        if m.is_monomial():
            out = Ideal.unit(M.prime, M.nvars)
            return out
        seen.add(m)
        collected.append(m)
        pending.append(m)
        if len(pending) >= batch:
            if flush():
                return Ideal.unit(M.prime, M.nvars)
    if flush():
        return Ideal.unit(M.prime, M.nvars)
    ideal = Ideal(M.prime, M.nvars, collected)
    basis = []
    for f in eng.reduced_basis():
        if all(mon[-1] == 0 for mon in f):
            basis.append(LaurentPoly(M.prime, M.nvars, {mon[:-1]: c for mon, c in f.items()}))
    ideal._basis = tuple(basis)
    return ideal


def _iter_minors_parallel(M: PolyMatrix, t: int):
    workers = max_threads()
    if workers <= 1:
        yield from iter_minors(M, t)
        return
    from concurrent.futures import ThreadPoolExecutor

    col_masks = []
    for cols in itertools.combinations(range(M.ncols), t):
        mask = 0
        for c in cols:
            mask |= 1 << c
        col_masks.append(mask)

    def work(rows_idx):
        rows = [list(M.rows[i]) for i in rows_idx]
        dp = _signed_minors_of_rows(rows, t, M.prime, M.nvars)
        zero = LaurentPoly.zero(M.prime, M.nvars)
        return [dp.get(mask, zero) for mask in col_masks]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for chunk in pool.map(work, itertools.combinations(range(M.nrows), t)):
            yield from chunk


def has_nonzero_minor(M: PolyMatrix, t: int) -> bool:
    for m in iter_minors(M, t):
        if not m.is_zero():
            return True
    return False


def matrix_rank(M: PolyMatrix) -> int:
    """Largest t such that some t-minor is nonzero (determinantal rank)."""
    r = 0
    for t in range(1, min(M.nrows, M.ncols) + 1):
        if has_nonzero_minor(M, t):
            r = t
        else:
            break
    return r


# -- Smith normal form over F_p[x^±1] -----------------------------------------


def _span(f: LaurentPoly) -> int:
    return f.max_exponents()[0] - f.min_exponents()[0]


class SmithForm:
    """Holds U, S, V with S = U*M*V diagonal, divisor chain normalized."""

    def __init__(self, U, S, V, Uinv, Vinv):
        self.U, self.S, self.V = U, S, V
        self.Uinv, self.Vinv = Uinv, Vinv

    @property
    def divisors(self) -> list:
        n = min(self.S.nrows, self.S.ncols)
        return [self.S[k, k] for k in range(n) if not self.S[k, k].is_zero()]


def smith_normal_form(M: PolyMatrix, budget_rounds: int = 10_000) -> SmithForm:
    """Smith normal form over the D=1 Laurent ring (a Euclidean domain).

    Returns U (nrows x nrows) and V (ncols x ncols), invertible over the
    Laurent ring, with U*M*V diagonal; divisors are normalized monic with
    zero minimum exponent and satisfy the divisibility chain.
    """
    if M.nvars != 1:
        raise UnsupportedError("Smith normal form implemented only for D=1")
    p = M.prime
    m, n = M.nrows, M.ncols
    A = [[M.rows[i][j] for j in range(n)] for i in range(m)]
    U = [[LaurentPoly.constant(p, 1, 1 if i == j else 0) for j in range(m)] for i in range(m)]
    V = [[LaurentPoly.constant(p, 1, 1 if i == j else 0) for j in range(n)] for i in range(n)]
    Uinv = [row[:] for row in U]
    Vinv = [row[:] for row in V]

    def row_addmul(i, k, q):  # row_i -= q*row_k  (in A and U); Uinv col update
        for j in range(n):
            A[i][j] = A[i][j] - q * A[k][j]
        for j in range(m):
            U[i][j] = U[i][j] - q * U[k][j]
        for j in range(m):
            Uinv[j][k] = Uinv[j][k] + q * Uinv[j][i]

    def col_addmul(j, k, q):  # col_j -= q*col_k
        for i in range(m):
            A[i][j] = A[i][j] - A[i][k] * q
        for i in range(n):
            V[i][j] = V[i][j] - V[i][k] * q
        for i in range(n):
            Vinv[k][i] = Vinv[k][i] + q * Vinv[j][i]

    def row_swap(i, k):
        A[i], A[k] = A[k], A[i]
        U[i], U[k] = U[k], U[i]
        for j in range(m):
            Uinv[j][i], Uinv[j][k] = Uinv[j][k], Uinv[j][i]

    def col_swap(j, k):
        for i in range(m):
            A[i][j], A[i][k] = A[i][k], A[i][j]
        for i in range(n):
            V[i][j], V[i][k] = V[i][k], V[i][j]
        Vinv[j], Vinv[k] = Vinv[k], Vinv[j]

    rounds = 0
    for k in range(min(m, n)):
        while True:
            rounds += 1
            if rounds > budget_rounds:
                raise BudgetError("Smith reduction did not terminate in budget")
            pivot = None
            best = None
            for i in range(k, m):
                for j in range(k, n):
                    if not A[i][j].is_zero():
                        key = (_span(A[i][j]), i, j)
                        if best is None or key < best:
                            best, pivot = key, (i, j)
            if pivot is None:
                break
            pi, pj = pivot
            if pi != k:
                row_swap(k, pi)
            if pj != k:
                col_swap(k, pj)
            dirty = False
            for i in range(k + 1, m):
                if not A[i][k].is_zero():
                    q, r = laurent_divmod_1d(A[i][k], A[k][k])
                    row_addmul(i, k, q)
                    if not r.is_zero():
                        dirty = True
            for j in range(k + 1, n):
                if not A[k][j].is_zero():
                    q, r = laurent_divmod_1d(A[k][j], A[k][k])
                    col_addmul(j, k, q)
                    if not r.is_zero():
                        dirty = True
            if dirty:
                continue
            if any(not A[i][k].is_zero() for i in range(k + 1, m)):
                continue
            if any(not A[k][j].is_zero() for j in range(k + 1, n)):
                continue
            offender = None
            for i in range(k + 1, m):
                for j in range(k + 1, n):
                    if A[i][j].is_zero():
                        continue
                    _, r = laurent_divmod_1d(A[i][j], A[k][k])
                    if not r.is_zero():
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_addmul(k, offender, -LaurentPoly.one(p, 1))
        if A[k][k].is_zero():
            break
    # normalize divisors by units (monomials and leading coefficients)
    for k in range(min(m, n)):
        d = A[k][k]
        if d.is_zero():
            continue
        norm = d.monic_normalized()
        if norm == d:
            continue
        # d = u * norm with u a unit; scale column k of V by u^{-1}
        ((mon_n, c_n),) = _leading_unit(norm, d)
        unit_inv = LaurentPoly.monomial(p, 1, mon_n, c_n)
        for i in range(n):
            V[i][k] = V[i][k] * unit_inv
        for i in range(n):
            Vinv[k][i] = Vinv[k][i] * _unit_inverse(unit_inv)
        A[k][k] = norm
    mk = lambda rows: PolyMatrix(p, 1, rows)
    return SmithForm(mk(U), mk(A), mk(V), mk(Uinv), mk(Vinv))


def _leading_unit(norm: LaurentPoly, d: LaurentPoly):
    # unit u with d = u*norm; both nonzero, norm monic-normalized
    mon_d = max(d.terms, key=_grevlex_key)
    mon_n = max(norm.terms, key=_grevlex_key)
    shift = tuple(a - b for a, b in zip(mon_d, mon_n))
    c = (d.terms[mon_d] * _modinv(norm.terms[mon_n], d.prime)) % d.prime
    # return inverse unit directly
    return [(tuple(-e for e in shift), _modinv(c, d.prime))]


def _unit_inverse(u: LaurentPoly) -> LaurentPoly:
    ((mon, c),) = u.terms.items()
    return LaurentPoly.monomial(u.prime, u.nvars, tuple(-e for e in mon), _modinv(c, u.prime))


def smith_kernel(M: PolyMatrix) -> PolyMatrix:
    """Kernel basis via Smith form; independent D=1 oracle for kernel tests."""
    sf = smith_normal_form(M)
    r = len(sf.divisors)
    cols = [sf.V.col(j) for j in range(r, M.ncols)]
    if not cols:
        return PolyMatrix.zeros(M.prime, M.nvars, M.ncols, 0)
    return PolyMatrix(M.prime, M.nvars, [list(row) for row in zip(*cols)])


def smith_image_basis(M: PolyMatrix) -> PolyMatrix:
    """Columns freely generating im M over the D=1 Laurent ring."""
    sf = smith_normal_form(M)
    r = len(sf.divisors)
    cols = []
    for j in range(r):
        d = sf.S[j, j]
        cols.append([e * d for e in sf.Uinv.col(j)])
    if not cols:
        return PolyMatrix.zeros(M.prime, M.nvars, M.nrows, 0)
    return PolyMatrix(M.prime, M.nvars, [list(row) for row in zip(*cols)])


# -- module Groebner engine (syzygies, membership, lifting) --------------------


class _ModuleEngine:
    """Buchberger for submodules of R^npos with position-over-term order.

    Terms are dicts {(pos, mon): coeff}; position 0 has the highest priority.
    With ``record=True`` every basis element keeps a construction recipe
    (origin plus reduction steps) so that its representation in terms of the
    original generators can be reconstructed lazily; the completion itself
    never drags transformation rows around.
    """

    def __init__(self, p: int, ring_key, budget_steps: int, record: bool = False):
        from .ring import _HEAPKEY

        self.p = p
        self.ring_key = ring_key
        self.heap_key = _HEAPKEY[ring_key]
        self.budget = _Budget(budget_steps)
        self.basis: list = []  # (lead_pos, lead_mon, lead_coeff, element)
        self.by_pos: dict = {}  # lead_pos -> list of basis indices
        self.pairs: list = []
        self.record = record
        self.recipes: list = []  # per basis element: (origin, steps)
        self._reps: dict = {}

    def term_key(self, term):
        pos, mon = term
        return (-pos, self.ring_key(mon))

    def _lead(self, f: dict):
        return max(f, key=self.term_key)

    def _normal_form(self, f: dict, steps: list | None = None) -> dict:
        """Heap-driven full normal form; optionally records reduction steps.

        Each recorded step (c, q, idx) means c * x^q * basis[idx] was
        subtracted from the element.
        """
        p = self.p
        hk = self.heap_key
        work = dict(f)
        # position priority first: smaller pos = higher priority
        heap = [((pos,) + hk(mon), (pos, mon)) for (pos, mon) in work]
        heapq.heapify(heap)
        remainder: dict = {}
        while heap:
            _, lt = heapq.heappop(heap)
            lc = work.get(lt)
            if not lc:
                continue
            pos, mon = lt
            hit = None
            for idx in self.by_pos.get(pos, ()):
                lmon = self.basis[idx][1]
                q = _mon_div(mon, lmon)
                if q is not None:
                    hit = (q, idx)
                    break
            if hit is None:
                remainder[lt] = lc
                del work[lt]
                continue
            q, idx = hit
            _, _, lcg, g = self.basis[idx]
            self.budget.spend()
            factor = (lc * _modinv(lcg, p)) % p
            if steps is not None:
                steps.append((factor, q, idx))
            for (gpos, gmon), c in g.items():
                key = (gpos, _mon_mul(gmon, q))
                old = work.get(key, 0)
                s = (old - factor * c) % p
                if s:
                    work[key] = s
                    if not old:
                        heapq.heappush(heap, ((key[0],) + hk(key[1]), key))
                else:
                    work.pop(key, None)
        return remainder

    def _install(self, r: dict, origin, steps) -> None:
        pos, mon = self._lead(r)
        self.basis.append((pos, mon, r[(pos, mon)], r))
        j = len(self.basis) - 1
        if self.record:
            self.recipes.append((origin, steps))
        for i in self.by_pos.setdefault(pos, []):
            lcm = _mon_lcm(self.basis[i][1], mon)
            heapq.heappush(self.pairs, ((-pos, self.ring_key(lcm)), i, j))
        self.by_pos[pos].append(j)

    def add_generator(self, f: dict, origin=None) -> None:
        steps: list | None = [] if self.record else None
        r = self._normal_form(f, steps)
        if not r:
            return
        self._install(r, ("gen", origin), steps)

    def complete(self) -> None:
        p = self.p
        while self.pairs:
            _, i, j = heapq.heappop(self.pairs)
            pos_i, lmi, lci, gi = self.basis[i]
            pos_j, lmj, lcj, gj = self.basis[j]
            lcm = _mon_lcm(lmi, lmj)
            qi, qj = _mon_div(lcm, lmi), _mon_div(lcm, lmj)
            s: dict = {}
            inv_i, inv_j = _modinv(lci, p), _modinv(lcj, p)
            for (gpos, gmon), c in gi.items():
                key = (gpos, _mon_mul(gmon, qi))
                s[key] = (s.get(key, 0) + c * inv_i) % p
            for (gpos, gmon), c in gj.items():
                key = (gpos, _mon_mul(gmon, qj))
                v = (s.get(key, 0) - c * inv_j) % p
                if v:
                    s[key] = v
                else:
                    s.pop(key, None)
            self.budget.spend()
            steps: list | None = [] if self.record else None
            r = self._normal_form(s, steps)
            if not r:
                continue
            self._install(r, ("spair", (inv_i, qi, i), (inv_j, qj, j)), steps)

    # -- lazy representation in terms of original generators -------------------

    def representation(self, idx: int) -> dict:
        """Map origin-id -> scalar poly dict, expressing basis[idx] in generators."""
        if idx in self._reps:
            return self._reps[idx]
        origin, steps = self.recipes[idx]
        rep: dict = {}
        if origin[0] == "gen":
            if origin[1] is not None:
                nmv = len(self.basis[idx][1])
                rep[origin[1]] = {(0,) * nmv: 1}
        else:
            _, (ci, qi, i), (cj, qj, j) = origin
            _rep_accumulate(rep, self.representation(i), ci, qi, self.p)
            _rep_accumulate(rep, self.representation(j), (-cj) % self.p, qj, self.p)
        for factor, q, k in steps:
            _rep_accumulate(rep, self.representation(k), (-factor) % self.p, q, self.p)
        self._reps[idx] = rep
        return rep


def _rep_accumulate(dst: dict, src: dict, coeff: int, shift, p: int) -> None:
    """dst += coeff * x^shift * src, for origin-keyed scalar poly dicts."""
    if not coeff:
        return
    for oid, poly in src.items():
        tgt = dst.setdefault(oid, {})
        for mon, c in poly.items():
            key = _mon_mul(mon, shift)
            s = (tgt.get(key, 0) + coeff * c) % p
            if s:
                tgt[key] = s
            else:
                tgt.pop(key, None)
        if not tgt:
            dst.pop(oid, None)


def _clear_row_denominators(M: PolyMatrix):
    """Monomial row scaling making all entries polynomial; returns (M', shifts)."""
    shifts = []
    rows = []
    for r in M.rows:
        mins = [0] * M.nvars
        for e in r:
            if e.terms:
                me = e.min_exponents()
                mins = [min(a, b) for a, b in zip(mins, me)]
        shift = tuple(-v for v in mins)
        shifts.append(shift)
        rows.append([e.shift(shift) for e in r])
    return PolyMatrix(M.prime, M.nvars, rows), shifts


def kernel_basis(M: PolyMatrix, budget: int = DEFAULT_REDUCTION_BUDGET) -> PolyMatrix:
    """Columns generating {v : M v = 0} over the Laurent ring.

    Any Laurent syzygy is a monomial multiple of a polynomial one, so the
    polynomial syzygy module (computed by eliminating the leading block of the
    graph module {(Mv, v)}) generates the Laurent kernel.
    """
    Mp, _ = _clear_row_denominators(M)
    m, k = M.nrows, M.ncols
    eng = _ModuleEngine(M.prime, _grevlex_key, budget)
    zero_mon = (0,) * M.nvars
    for j in range(k):
        f: dict = {}
        for i in range(m):
            for mon, c in Mp.rows[i][j].terms.items():
                f[(i, mon)] = c
        f[(m + j, zero_mon)] = 1
        eng.add_generator(f)
    eng.complete()
    cols = []
    for pos, mon, lc, g in eng.basis:
        if pos < m:
            continue
        col = [LaurentPoly.zero(M.prime, M.nvars) for _ in range(k)]
        ok = True
        for (gpos, gmon), c in g.items():
            if gpos < m:
                ok = False
                break
            col[gpos - m] = col[gpos - m] + LaurentPoly.monomial(M.prime, M.nvars, gmon, c)
        if ok:
            cols.append(_normalize_column(col))
    cols = _dedup_columns(cols)
    if not cols:
        return PolyMatrix.zeros(M.prime, M.nvars, k, 0)
    K = PolyMatrix(M.prime, M.nvars, [list(row) for row in zip(*cols)])
    if not (M * K).is_zero():
        raise RuntimeError("syzygy computation produced a non-kernel column")
    return K


def _normalize_column(col: list) -> list:
    mins = None
    for e in col:
        if e.terms:
            me = e.min_exponents()
            mins = me if mins is None else tuple(min(a, b) for a, b in zip(mins, me))
    if mins is None or not any(mins):
        return col
    shift = tuple(-v for v in mins)
    return [e.shift(shift) for e in col]


def _dedup_columns(cols: list) -> list:
    seen = set()
    out = []
    for col in cols:
        key = tuple(tuple(sorted(e.terms.items())) for e in col)
        if key in seen:
            continue
        seen.add(key)
        out.append(col)
    return out


class LinearSolver:
    """Reusable exact solver for M v = b over the Laurent ring.

    Saturation by the monomial x1···xD is realized with one auxiliary
    variable t and the relation 1 - t*x1···xD; because the saturating element
    is a unit of the Laurent ring, t is substituted by (x1···xD)^-1 in the
    lift, giving an exact Laurent solution.
    """

    def __init__(self, M: PolyMatrix, budget: int = DEFAULT_REDUCTION_BUDGET):
        self.M = M
        self.p = M.prime
        self.nvars = M.nvars
        Mp, shifts = _clear_row_denominators(M)
        self.row_shifts = shifts
        m, k = M.nrows, M.ncols
        self.m, self.k = m, k
        eng = _ModuleEngine(M.prime, _elim_key, budget, record=True)
        zero_mon = (0,) * (M.nvars + 1)
        tx = (1,) * (M.nvars + 1)
        for j in range(k):
            f: dict = {}
            for i in range(m):
                for mon, c in Mp.rows[i][j].terms.items():
                    f[(i, mon + (0,))] = c
            eng.add_generator(f, origin=j)
        for i in range(m):
            # saturation relation (1 - t*x1···xD) e_i; untracked on purpose,
            # it vanishes under the final substitution t -> (x1···xD)^-1
            eng.add_generator({(i, zero_mon): 1, (i, tx): M.prime - 1}, origin=None)
        eng.complete()
        self.engine = eng

    def solve(self, b: Sequence[LaurentPoly]):
        """Return v with M v = b, or None when b is outside the column module."""
        if len(b) != self.m:
            raise ShapeError("right-hand side has wrong length")
        p, nv = self.p, self.nvars
        shifted = [e.shift(self.row_shifts[i]) for i, e in enumerate(b)]
        mins = [0] * nv
        for e in shifted:
            if e.terms:
                me = e.min_exponents()
                mins = [min(a, x) for a, x in zip(mins, me)]
        mu = tuple(-v for v in mins)
        f: dict = {}
        for i, e in enumerate(shifted):
            for mon, c in e.shift(mu).terms.items():
                f[(i, mon + (0,))] = c
        steps: list = []
        r = self.engine._normal_form(f, steps)
        if r:
            return None
        # b' = sum_s factor_s x^{q_s} basis[k_s]; expand through the recipes
        coeffs: dict = {}
        for factor, q, kidx in steps:
            _rep_accumulate(coeffs, self.engine.representation(kidx), factor, q, p)
        v = []
        unmu = tuple(-e for e in mu)
        for j in range(self.k):
            entry_terms: dict = {}
            for mon, c in coeffs.get(j, {}).items():
                xpart, tdeg = mon[:-1], mon[-1]
                lau = tuple(e - tdeg + s for e, s in zip(xpart, unmu))
                entry_terms[lau] = (entry_terms.get(lau, 0) + c) % p
            v.append(LaurentPoly(p, nv, entry_terms))
        col = PolyMatrix.column(v)
        if self.M * col != PolyMatrix.column(list(b)):
            raise RuntimeError("internal solver lift failed verification")
        return v


def solve_linear(M: PolyMatrix, b: PolyMatrix, budget: int = DEFAULT_REDUCTION_BUDGET):
    """One-shot M v = b over the Laurent ring; returns a column or None."""
    if b.ncols != 1 or b.nrows != M.nrows:
        raise ShapeError("right-hand side must be a column of matching height")
    v = LinearSolver(M, budget).solve([b[i, 0] for i in range(M.nrows)])
    return None if v is None else PolyMatrix.column(v)


def lift_columns(M: PolyMatrix, B: PolyMatrix, budget: int = DEFAULT_REDUCTION_BUDGET):
    """Return W with M W = B, or None if some column of B is not in im M."""
    solver = LinearSolver(M, budget)
    cols = []
    for j in range(B.ncols):
        v = solver.solve(B.col(j))
        if v is None:
            return None
        cols.append(v)
    if not cols:
        return PolyMatrix.zeros(M.prime, M.nvars, M.ncols, 0)
    return PolyMatrix(M.prime, M.nvars, [list(row) for row in zip(*cols)])


def module_equal(A: PolyMatrix, B: PolyMatrix, budget: int = DEFAULT_REDUCTION_BUDGET) -> bool:
    """Column-span equality over the Laurent ring, by mutual lifting."""
    return lift_columns(A, B, budget) is not None and lift_columns(B, A, budget) is not None


def lambda_form(q: int, prime: int, nvars: int) -> PolyMatrix:
    """The anti-hermitian form [[0, I_q], [-I_q, 0]] on a Pauli module R^2q."""
    if q < 1:
        raise MalformedInputError("lambda_form needs q >= 1")
    z = LaurentPoly.zero(prime, nvars)
    one = LaurentPoly.one(prime, nvars)
    neg = LaurentPoly.constant(prime, nvars, prime - 1)
    rows = [[z] * q + [one if j == i else z for j in range(q)] for i in range(q)]
    rows += [[neg if j == i else z for j in range(q)] + [z] * q for i in range(q)]
    return PolyMatrix(prime, nvars, rows)
