"""Smaller-translation-group functor on polynomials, matrices and forms.

Choosing the basis {1, x, ..., x^(n-1)} for each variable, every Laurent
polynomial g(x) becomes the block matrix g(C) where C is the companion matrix
of x (a cyclic permutation with the coarse variable in the top-right corner).
With this basis the prescription for forms and for maps coincide, dagger
commutes with the functor, and lambda_q maps to lambda_nq.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .errors import MalformedInputError, ShapeError
from .polymat import PolyMatrix
from .ring import LaurentPoly


@dataclass(frozen=True)
class CoarseContext:
    """Per-variable block factors; the target ring has the same variables."""

    prime: int
    nvars: int
    factors: tuple

    def __post_init__(self):
        if len(self.factors) != self.nvars:
            raise MalformedInputError("one coarse factor per variable required")
        if any(n < 1 for n in self.factors):
            raise MalformedInputError("coarse factors must be >= 1")

    @property
    def block(self) -> int:
        out = 1
        for n in self.factors:
            out *= n
        return out


def coarse_context(prime: int, nvars: int, factors) -> CoarseContext:
    if isinstance(factors, int):
        factors = (factors,) * nvars
    return CoarseContext(prime, nvars, tuple(factors))


def _companion_power(ctx: CoarseContext, var: int, e: int) -> "list[list[LaurentPoly]]":
    """Matrix of x_var^e acting on the basis {1, x, ..., x^(n-1)}.

    Basis element x^b maps to x^(b+e) = y^((b+e) div n) * x^((b+e) mod n),
    so the matrix has a single monomial per column.
    """
    n = ctx.factors[var]
    p, nv = ctx.prime, ctx.nvars
    zero = LaurentPoly.zero(p, nv)
    cols = []
    for b in range(n):
        quot, rem = divmod(b + e, n)
        mon = [0] * nv
        mon[var] = quot
        cols.append((rem, LaurentPoly.monomial(p, nv, tuple(mon))))
    rows = [[zero] * n for _ in range(n)]
    for j, (i, val) in enumerate(cols):
        rows[i][j] = val
    return rows


def _kron(a, b, p, nv):
    zero = LaurentPoly.zero(p, nv)
    ra, ca = len(a), len(a[0])
    rb, cb = len(b), len(b[0])
    out = [[zero] * (ca * cb) for _ in range(ra * rb)]
    for i in range(ra):
        for j in range(ca):
            f = a[i][j]
            if f.is_zero():
                continue
            for k in range(rb):
                for l in range(cb):
                    g = b[k][l]
                    if not g.is_zero():
                        out[i * rb + k][j * cb + l] = f * g
    return out


def coarse_poly(f: LaurentPoly, ctx: CoarseContext) -> PolyMatrix:
    """The block matrix of f acting on the coarse basis (Kronecker over vars)."""
    p, nv = ctx.prime, ctx.nvars
    if f.prime != p or f.nvars != nv:
        raise MalformedInputError("polynomial not in the context ring")
    N = ctx.block
    zero = LaurentPoly.zero(p, nv)
    acc = [[zero] * N for _ in range(N)]
    for mon, c in f.terms.items():
        blocks = [_companion_power(ctx, v, mon[v]) for v in range(nv)]
        blk = reduce(lambda a, b: _kron(a, b, p, nv), blocks) if blocks else [[LaurentPoly.one(p, nv)]]
        for i in range(N):
            row = blk[i]
            for j in range(N):
                if not row[j].is_zero():
                    acc[i][j] = acc[i][j] + row[j].scale(c)
    return PolyMatrix(p, nv, acc)


def coarse_matrix(M: PolyMatrix, ctx: CoarseContext) -> PolyMatrix:
    """Entrywise coarse expansion; row/column blocks stay in place.

    For Pauli-module matrices (rows grouped X-block then Z-block) in-place
    expansion is exactly the layout that sends lambda_q to lambda_(Nq).
    """
    N = ctx.block
    zero = LaurentPoly.zero(ctx.prime, ctx.nvars)
    out = [[zero] * (M.ncols * N) for _ in range(M.nrows * N)]
    for i in range(M.nrows):
        for j in range(M.ncols):
            f = M.rows[i][j]
            if f.is_zero():
                continue
            blk = coarse_poly(f, ctx)
            for bi in range(N):
                for bj in range(N):
                    e = blk.rows[bi][bj]
                    if not e.is_zero():
                        out[i * N + bi][j * N + bj] = e
    return PolyMatrix(ctx.prime, ctx.nvars, out)


def coarse_stabilizer_map(S, ctx: CoarseContext):
    """Coarse-grain a StabilizerMap; q multiplies by the block size."""
    from .pauli import StabilizerMap

    if S.sigma.nrows != 2 * S.q:
        raise ShapeError("malformed stabilizer map")
    return StabilizerMap(coarse_matrix(S.sigma, ctx), S.q * ctx.block)
