"""Sparse Laurent polynomials over a prime field, with exact ideal machinery.

The base ring is R = F_p[x1^±1, ..., xD^±1].  A polynomial is an immutable
map from integer exponent vectors to nonzero coefficients in {1, ..., p-1}.
Every monomial is a unit of R, so ideal questions are answered by clearing
monomial denominators and saturating by (x1···xD)^inf in the ordinary
polynomial ring, where Buchberger's algorithm applies.  The monomial order is
fixed to graded reverse lexicographic for deterministic certificates.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from .config import DEFAULT_REDUCTION_BUDGET
from .errors import BudgetError, ContextError, MalformedInputError

Monomial = tuple  # exponent vector, one int per variable


def _modinv(c: int, p: int) -> int:
    return pow(c, p - 2, p)


def var_names(nvars: int) -> list[str]:
    if nvars <= 3:
        return ["x", "y", "z"][:nvars]
    return [f"x{i + 1}" for i in range(nvars)]


def _term_sort_key(mon: Monomial):
    # graded-lexicographic order used only for canonical serialization
    return (sum(mon), mon)


class LaurentPoly:
    """Immutable sparse Laurent polynomial over F_p in D variables."""

    __slots__ = ("prime", "nvars", "terms", "_hash")

    def __init__(self, prime: int, nvars: int, terms: dict | None = None):
        if prime < 2 or prime >= 2**15:
            raise MalformedInputError(f"prime {prime} out of supported range")
        self.prime = prime
        self.nvars = nvars
        clean: dict = {}
        if terms:
            for mon, c in terms.items():
                c %= prime
                if c:
                    if len(mon) != nvars:
                        raise ContextError("exponent vector has wrong length")
                    clean[tuple(mon)] = c
        self.terms = clean
        self._hash = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, prime: int, nvars: int) -> "LaurentPoly":
        return cls(prime, nvars, {})

    @classmethod
    def constant(cls, prime: int, nvars: int, c: int) -> "LaurentPoly":
        return cls(prime, nvars, {(0,) * nvars: c})

    @classmethod
    def one(cls, prime: int, nvars: int) -> "LaurentPoly":
        return cls.constant(prime, nvars, 1)

    @classmethod
    def variable(cls, prime: int, nvars: int, i: int, power: int = 1) -> "LaurentPoly":
        mon = [0] * nvars
        mon[i] = power
        return cls(prime, nvars, {tuple(mon): 1})

    @classmethod
    def monomial(cls, prime: int, nvars: int, mon: Iterable[int], c: int = 1) -> "LaurentPoly":
        return cls(prime, nvars, {tuple(mon): c})

    # -- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self.terms == {(0,) * self.nvars: 1}

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_constant(self) -> bool:
        return not self.terms or self.terms.keys() == {(0,) * self.nvars}

    def constant_coeff(self) -> int:
        """Coefficient of the zero exponent vector (the `Coe` scalar)."""
        return self.terms.get((0,) * self.nvars, 0)

    def min_exponents(self) -> tuple:
        if not self.terms:
            return (0,) * self.nvars
        return tuple(min(m[i] for m in self.terms) for i in range(self.nvars))

    def max_exponents(self) -> tuple:
        if not self.terms:
            return (0,) * self.nvars
        return tuple(max(m[i] for m in self.terms) for i in range(self.nvars))

    def max_abs_exponent(self) -> int:
        if not self.terms:
            return 0
        return max(abs(e) for m in self.terms for e in m)

    def _check(self, other: "LaurentPoly") -> None:
        if self.prime != other.prime or self.nvars != other.nvars:
            raise ContextError(
                f"ring mismatch: F_{self.prime}[{self.nvars} vars] vs "
                f"F_{other.prime}[{other.nvars} vars]"
            )

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        self._check(other)
        p = self.prime
        out = dict(self.terms)
        for mon, c in other.terms.items():
            s = (out.get(mon, 0) + c) % p
            if s:
                out[mon] = s
            else:
                out.pop(mon, None)
        res = LaurentPoly.__new__(LaurentPoly)
        res.prime, res.nvars, res.terms, res._hash = p, self.nvars, out, None
        return res

    def __neg__(self) -> "LaurentPoly":
        p = self.prime
        res = LaurentPoly.__new__(LaurentPoly)
        res.prime, res.nvars, res._hash = p, self.nvars, None
        res.terms = {m: p - c for m, c in self.terms.items()}
        return res

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        self._check(other)
        p = self.prime
        out: dict = {}
        if len(self.terms) > len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                mon = tuple(map(sum, zip(m1, m2)))
                s = (out.get(mon, 0) + c1 * c2) % p
                if s:
                    out[mon] = s
                else:
                    out.pop(mon, None)
        res = LaurentPoly.__new__(LaurentPoly)
        res.prime, res.nvars, res.terms, res._hash = p, self.nvars, out, None
        return res

    def scale(self, c: int) -> "LaurentPoly":
        c %= self.prime
        return LaurentPoly(self.prime, self.nvars, {m: c * v for m, v in self.terms.items()})

    def shift(self, mon: Iterable[int], c: int = 1) -> "LaurentPoly":
        """Multiply by the monomial c * x^mon."""
        mon = tuple(mon)
        p = self.prime
        out = {}
        for m, v in self.terms.items():
            s = (v * c) % p
            if s:
                out[tuple(map(sum, zip(m, mon)))] = s
        return LaurentPoly(p, self.nvars, out)

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            if not self.is_monomial():
                raise MalformedInputError("negative powers only for monomials")
            ((mon, c),) = self.terms.items()
            return LaurentPoly.monomial(
                self.prime, self.nvars, tuple(e * n for e in mon), pow(_modinv(c, self.prime), -n, self.prime)
            )
        res = LaurentPoly.one(self.prime, self.nvars)
        base = self
        while n:
            if n & 1:
                res = res * base
            base = base * base
            n >>= 1
        return res

    def involute(self) -> "LaurentPoly":
        """The bar involution: every exponent vector is negated."""
        return LaurentPoly(
            self.prime, self.nvars, {tuple(-e for e in m): c for m, c in self.terms.items()}
        )

    def normalized(self) -> "LaurentPoly":
        """Divide by a monomial so the minimum exponent in every variable is 0."""
        if not self.terms:
            return self
        mins = self.min_exponents()
        if not any(mins):
            return self
        return self.shift(tuple(-e for e in mins))

    def monic_normalized(self) -> "LaurentPoly":
        """normalized(), then scaled so the grevlex-leading coefficient is 1."""
        f = self.normalized()
        if not f.terms:
            return f
        lead = max(f.terms, key=_grevlex_key)
        return f.scale(_modinv(f.terms[lead], f.prime))

    def reduce_mod_torus(self, sizes: Iterable[int]) -> "LaurentPoly":
        """Reduce every exponent mod L_i into [0, L_i); the ideal b_L quotient."""
        sizes = tuple(sizes)
        if len(sizes) != self.nvars or any(s < 1 for s in sizes):
            raise MalformedInputError("torus size vector must have one entry >= 1 per variable")
        out: dict = {}
        p = self.prime
        for m, c in self.terms.items():
            mon = tuple(e % L for e, L in zip(m, sizes))
            s = (out.get(mon, 0) + c) % p
            if s:
                out[mon] = s
            else:
                out.pop(mon, None)
        return LaurentPoly(p, self.nvars, out)

    # -- equality / hashing / text ------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return (
            self.prime == other.prime
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(
                (self.prime, self.nvars, tuple(sorted(self.terms.items())))
            )
        return self._hash

    def to_string(self) -> str:
        """Canonical text form: terms in graded-lexicographic exponent order."""
        if not self.terms:
            return "0"
        names = var_names(self.nvars)
        parts = []
        for mon in sorted(self.terms, key=_term_sort_key):
            c = self.terms[mon]
            factors = []
            for name, e in zip(names, mon):
                if e == 1:
                    factors.append(name)
                elif e != 0:
                    factors.append(f"{name}^{e}")
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        return " + ".join(parts)

    @classmethod
    def from_string(cls, prime: int, nvars: int, text: str) -> "LaurentPoly":
        """Parse the grammar emitted by ``to_string`` (spaces around + optional)."""
        text = text.strip()
        if not text:
            raise MalformedInputError("empty polynomial string")
        if text == "0":
            return cls.zero(prime, nvars)
        names = {n: i for i, n in enumerate(var_names(nvars))}
        terms: dict = {}
        for raw in text.replace(" ", "").split("+"):
            if not raw:
                raise MalformedInputError(f"bad polynomial text {text!r}")
            coeff = 1
            mon = [0] * nvars
            for factor in raw.split("*"):
                if not factor:
                    raise MalformedInputError(f"bad term {raw!r}")
                if factor[0].isdigit():
                    coeff = coeff * int(factor)
                    continue
                if "^" in factor:
                    name, _, exp = factor.partition("^")
                    try:
                        e = int(exp)
                    except ValueError as exc:
                        raise MalformedInputError(f"bad exponent in {factor!r}") from exc
                else:
                    name, e = factor, 1
                if name not in names:
                    raise MalformedInputError(f"unknown variable {name!r} for D={nvars}")
                mon[names[name]] += e
            key = tuple(mon)
            c = (terms.get(key, 0) + coeff) % prime
            if c:
                terms[key] = c
            else:
                terms.pop(key, None)
        return cls(prime, nvars, terms)

    def __repr__(self) -> str:
        return f"LaurentPoly(F_{self.prime}, D={self.nvars}, {self.to_string()})"


# -- monomial orders ---------------------------------------------------------


def _grevlex_key(mon: Monomial):
    return (sum(mon), tuple(-e for e in reversed(mon)))


def _elim_key(mon: Monomial):
    # block order: the t coordinate (last) dominates, then grevlex on x-part
    return (mon[-1], _grevlex_key(mon[:-1]))


def _grevlex_heapkey(mon: Monomial):
    # sorts inversely to _grevlex_key, for min-heap extraction of the maximum
    return (-sum(mon), tuple(reversed(mon)))


def _elim_heapkey(mon: Monomial):
    x = mon[:-1]
    return (-mon[-1], -sum(x), tuple(reversed(x)))


_HEAPKEY = {_grevlex_key: _grevlex_heapkey, _elim_key: _elim_heapkey}


def _mon_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(map(sum, zip(a, b)))


def _mon_div(a: Monomial, b: Monomial):
    out = []
    for x, y in zip(a, b):
        d = x - y
        if d < 0:
            return None
        out.append(d)
    return tuple(out)


def _mon_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def _coprime(a: Monomial, b: Monomial) -> bool:
    return all(x == 0 or y == 0 for x, y in zip(a, b))


class _Budget:
    __slots__ = ("left",)

    def __init__(self, steps: int):
        self.left = steps

    def spend(self, n: int = 1) -> None:
        self.left -= n
        if self.left < 0:
            raise BudgetError("Groebner reduction budget exhausted")


def _normal_form(f: dict, basis: list, keyfn, p: int, budget: _Budget) -> dict:
    """Full normal form of the poly dict f against (lm, lc, poly) triples.

    Terms are visited in decreasing order via a lazy heap; reduction only ever
    introduces strictly smaller terms, so stale heap entries are harmless.
    """
    import heapq

    hk = _HEAPKEY[keyfn]
    work = dict(f)
    heap = [(hk(m), m) for m in work]
    heapq.heapify(heap)
    remainder: dict = {}
    while heap:
        _, lm = heapq.heappop(heap)
        lc = work.get(lm)
        if not lc:
            continue
        hit = None
        for lmg, lcg, g in basis:
            q = _mon_div(lm, lmg)
            if q is not None:
                hit = (q, lcg, g)
                break
        if hit is None:
            remainder[lm] = lc
            del work[lm]
            continue
        q, lcg, g = hit
        budget.spend()
        factor = (lc * _modinv(lcg, p)) % p
        for mon, c in g.items():
            key = _mon_mul(mon, q)
            old = work.get(key, 0)
            s = (old - factor * c) % p
            if s:
                work[key] = s
                if not old:
                    heapq.heappush(heap, (hk(key), key))
            else:
                work.pop(key, None)
    return remainder


class GroebnerEngine:
    """Incremental Buchberger over F_p[x1..xn] for a fixed monomial order.

    Generators may be added in batches; ``complete`` finishes pair processing
    and can exit early as soon as a nonzero constant enters the basis (the
    unit-ideal fast path).  The reduction budget is shared across the life of
    the engine and failure discards partial state loudly.
    """

    def __init__(self, p: int, keyfn, budget_steps: int = DEFAULT_REDUCTION_BUDGET):
        self.p = p
        self.keyfn = keyfn
        self.budget = _Budget(budget_steps)
        self.basis: list = []  # (lm, lc, polydict)
        self.pairs: list = []  # heap of (lcm_key, i, j)
        self.has_unit = False

    def _push_pairs(self, j: int) -> None:
        import heapq

        lmj = self.basis[j][0]
        for i in range(j):
            lmi = self.basis[i][0]
            if _coprime(lmi, lmj):
                continue
            lcm = _mon_lcm(lmi, lmj)
            heapq.heappush(self.pairs, (self.keyfn(lcm), i, j))

    def add_generator(self, f: dict) -> None:
        if not f:
            return
        r = _normal_form(f, self.basis, self.keyfn, self.p, self.budget)
        if not r:
            return
        lm = max(r, key=self.keyfn)
        if sum(lm) == 0:
            self.has_unit = True
        self.basis.append((lm, r[lm], r))
        self._push_pairs(len(self.basis) - 1)

    def complete(self, stop_on_unit: bool = False) -> None:
        import heapq

        while self.pairs:
            if stop_on_unit and self.has_unit:
                return
            _, i, j = heapq.heappop(self.pairs)
            lmi, lci, gi = self.basis[i]
            lmj, lcj, gj = self.basis[j]
            lcm = _mon_lcm(lmi, lmj)
            qi, qj = _mon_div(lcm, lmi), _mon_div(lcm, lmj)
            s: dict = {}
            inv_i = _modinv(lci, self.p)
            inv_j = _modinv(lcj, self.p)
            for mon, c in gi.items():
                key = _mon_mul(mon, qi)
                s[key] = (s.get(key, 0) + c * inv_i) % self.p
            for mon, c in gj.items():
                key = _mon_mul(mon, qj)
                v = (s.get(key, 0) - c * inv_j) % self.p
                if v:
                    s[key] = v
                else:
                    s.pop(key, None)
            self.budget.spend()
            r = _normal_form(s, self.basis, self.keyfn, self.p, self.budget)
            if not r:
                continue
            lm = max(r, key=self.keyfn)
            if sum(lm) == 0:
                self.has_unit = True
            self.basis.append((lm, r[lm], r))
            self._push_pairs(len(self.basis) - 1)

    def reduced_basis(self) -> list:
        """Reduced Groebner basis as monic poly dicts, sorted by leading term."""
        if self.has_unit:
            nv = len(self.basis[0][0]) if self.basis else 0
            return [{(0,) * nv: 1}]
        # minimalize: keep an element only if no kept leading monomial divides it
        minimal = []
        for lm, lc, g in sorted(self.basis, key=lambda t: self.keyfn(t[0])):
            if any(_mon_div(lm, k[0]) is not None for k in minimal):
                continue
            minimal.append((lm, lc, g))
        # tail-reduce
        reduced = []
        for i, (lm, lc, g) in enumerate(minimal):
            others = [minimal[j] for j in range(len(minimal)) if j != i]
            r = _normal_form(g, others, self.keyfn, self.p, self.budget)
            if r:
                lmr = max(r, key=self.keyfn)
                inv = _modinv(r[lmr], self.p)
                reduced.append({m: (c * inv) % self.p for m, c in r.items()})
        reduced.sort(key=lambda f: self.keyfn(max(f, key=self.keyfn)))
        return reduced


def _saturated_basis(
    p: int,
    nvars: int,
    gens: list,
    budget_steps: int,
    stop_on_unit: bool = False,
) -> list:
    """Reduced grevlex basis of (cleared gens) : (x1···xD)^inf in F_p[x]."""
    eng = GroebnerEngine(p, _elim_key, budget_steps)
    # Rabinowitsch generator 1 - t*x1*...*xD enforces the saturation.
    one_mon = (0,) * (nvars + 1)
    tx = (1,) * (nvars + 1)
    eng.add_generator({one_mon: 1, tx: p - 1})
    for g in sorted(gens, key=lambda f: sorted(f.terms)):
        eng.add_generator({m + (0,): c for m, c in g.terms.items()})
    eng.complete(stop_on_unit=stop_on_unit)
    if stop_on_unit and eng.has_unit:
        return [{(0,) * nvars: 1}]
    out = []
    for f in eng.reduced_basis():
        if all(m[-1] == 0 for m in f):
            out.append({m[:-1]: c for m, c in f.items()})
    return out


class Ideal:
    """An ideal of the Laurent ring, with a cached saturated reduced basis.

    Generators are normalized by monomial units so the minimum exponent in
    every variable is zero.  The cached basis is the reduced grevlex Groebner
    basis of the saturated image in the polynomial ring; it is a canonical
    form, so two Ideals are equal iff their bases coincide.
    """

    def __init__(self, prime: int, nvars: int, generators: Iterable[LaurentPoly]):
        self.prime = prime
        self.nvars = nvars
        gens = []
        seen = set()
        for g in generators:
            if g.prime != prime or g.nvars != nvars:
                raise ContextError("generator in wrong ring")
            g = g.normalized()
            if g.is_zero() or g in seen:
                continue
            seen.add(g)
            gens.append(g)
        gens.sort(key=lambda f: sorted(f.terms.items()))
        self.generators = tuple(gens)
        self._basis: tuple | None = None

    @classmethod
    def zero(cls, prime: int, nvars: int) -> "Ideal":
        return cls(prime, nvars, [])

    @classmethod
    def unit(cls, prime: int, nvars: int) -> "Ideal":
        return cls(prime, nvars, [LaurentPoly.one(prime, nvars)])

    def groebner_basis(self, budget: int = DEFAULT_REDUCTION_BUDGET) -> tuple:
        """Cached reduced basis of the saturated polynomial image; idempotent."""
        if self._basis is None:
            dicts = _saturated_basis(self.prime, self.nvars, list(self.generators), budget)
            self._basis = tuple(LaurentPoly(self.prime, self.nvars, f) for f in dicts)
        return self._basis

    def is_unit(self, budget: int = DEFAULT_REDUCTION_BUDGET) -> bool:
        """True iff the ideal is the whole Laurent ring."""
        if self._basis is None:
            if any(g.is_monomial() for g in self.generators):
                self._basis = (LaurentPoly.one(self.prime, self.nvars),)
                return True
            dicts = _saturated_basis(
                self.prime, self.nvars, list(self.generators), budget, stop_on_unit=True
            )
            if len(dicts) == 1 and dicts[0] == {(0,) * self.nvars: 1}:
                self._basis = (LaurentPoly.one(self.prime, self.nvars),)
                return True
            # the early-exit run already did the work; keep its full answer
            self._basis = tuple(LaurentPoly(self.prime, self.nvars, f) for f in dicts)
            return False
        basis = self._basis
        return len(basis) == 1 and basis[0].is_one()

    def contains(self, f: LaurentPoly, budget: int = DEFAULT_REDUCTION_BUDGET) -> bool:
        if f.is_zero():
            return True
        basis = self.groebner_basis(budget)
        triples = []
        for g in basis:
            lm = max(g.terms, key=_grevlex_key)
            triples.append((lm, g.terms[lm], g.terms))
        r = _normal_form(dict(f.normalized().terms), triples, _grevlex_key, self.prime, _Budget(budget))
        return not r

    def height(self, budget: int = DEFAULT_REDUCTION_BUDGET):
        """D minus the Krull dimension of R/I; +inf for the unit ideal.

        Computed from the Groebner staircase of the saturated image: the
        dimension is the size of the largest subset S of variables such that
        no leading monomial is supported entirely on S.
        """
        basis = self.groebner_basis(budget)
        if not basis:
            return 0  # zero ideal: height 0
        if len(basis) == 1 and basis[0].is_one():
            return float("inf")
        lms = [max(g.terms, key=_grevlex_key) for g in basis]
        nv = self.nvars
        best = 0
        for mask in range(1 << nv):
            sub = [i for i in range(nv) if mask >> i & 1]
            if len(sub) <= best:
                continue
            outside = set(range(nv)) - set(sub)
            if all(any(m[i] for i in outside) for m in lms):
                best = len(sub)
        return nv - best

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ideal):
            return NotImplemented
        if self.prime != other.prime or self.nvars != other.nvars:
            return False
        return self.groebner_basis() == other.groebner_basis()

    def __repr__(self) -> str:
        gens = ", ".join(g.to_string() for g in self.generators) or "0"
        return f"Ideal(F_{self.prime}, D={self.nvars}; {gens})"


# -- independent D=1 oracle ---------------------------------------------------


def euclid_gcd_1d(f: LaurentPoly, g: LaurentPoly) -> LaurentPoly:
    """Euclidean gcd in F_p[x^±1] under the absolute-degree valuation."""
    if f.nvars != 1 or g.nvars != 1:
        raise ContextError("euclid_gcd_1d needs D=1")
    a, b = f.monic_normalized(), g.monic_normalized()
    while not b.is_zero():
        _, r = laurent_divmod_1d(a, b)
        a, b = b, r.monic_normalized()
    return a.monic_normalized()


def laurent_divmod_1d(f: LaurentPoly, g: LaurentPoly):
    """f = q*g + r with span(r) < span(g), in F_p[x^±1]."""
    if g.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    p = f.prime
    fmin = f.min_exponents()[0]
    gmin = g.min_exponents()[0]
    fp = {m[0] - fmin: c for m, c in f.terms.items()}
    gp = {m[0] - gmin: c for m, c in g.terms.items()}
    gdeg = max(gp)
    glead = gp[gdeg]
    q: dict = {}
    while fp:
        fdeg = max(fp)
        if fdeg < gdeg:
            break
        factor = (fp[fdeg] * _modinv(glead, p)) % p
        shift = fdeg - gdeg
        q[shift] = factor
        for e, c in gp.items():
            key = e + shift
            s = (fp.get(key, 0) - factor * c) % p
            if s:
                fp[key] = s
            else:
                fp.pop(key, None)
    qpoly = LaurentPoly(p, 1, {(e + fmin - gmin,): c for e, c in q.items()})
    rpoly = LaurentPoly(p, 1, {(e + fmin,): c for e, c in fp.items()})
    return qpoly, rpoly


def is_unit_ideal_euclid_1d(gens: Iterable[LaurentPoly]) -> bool:
    """Independent D=1 oracle: the ideal is unit iff gcd of gens is a monomial."""
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        return False
    g = gens[0]
    for f in gens[1:]:
        g = euclid_gcd_1d(g, f)
        if g.is_monomial():
            return True
    return g.is_monomial()


def all_monomials(nvars: int, lo: int, hi: int) -> Iterator[tuple]:
    """All exponent vectors with entries in [lo, hi], lexicographic order."""
    import itertools

    yield from itertools.product(range(lo, hi + 1), repeat=nvars)
