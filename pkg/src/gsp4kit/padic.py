"""Exact scalar arithmetic over Q_p, truncated mod-p^m arithmetic, and
certified polynomial factorization via Hensel lifting.

A scalar is stored as (unit_num / unit_den) * p^exp with unit_num and
unit_den coprime to p, so the p-adic valuation is read off in O(1) and
inversion is total on nonzero values.  All operations are exact; nothing
is ever rounded.
"""

from __future__ import annotations

import math
from fractions import Fraction

import sympy

from .errors import BudgetExceeded, NotSquarefreeModP

INFINITY = math.inf

_FACTOR_DEGREE_BUDGET = 8
_FACTOR_PRIME_BUDGET = 101


def _strip_p(n: int, p: int) -> tuple[int, int]:
    """Return (unit, e) with n = unit * p^e and p not dividing unit."""
    if n == 0:
        return 0, 0
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return n, e


class PScalar:
    """An element of Q_p represented exactly as a rational number.

    Canonical form: value = (num/den) * p^exp, gcd(num, den) = 1,
    den > 0, both coprime to p.  Zero is (0, 1, 0).
    """

    __slots__ = ("p", "num", "den", "exp")

    def __init__(self, value, p, _raw=None):
        self.p = p
        if _raw is not None:
            self.num, self.den, self.exp = _raw
            return
        if isinstance(value, PScalar):
            if value.p != p:
                raise ValueError("prime mismatch")
            self.num, self.den, self.exp = value.num, value.den, value.exp
            return
        frac = Fraction(value)
        if frac == 0:
            self.num, self.den, self.exp = 0, 1, 0
            return
        num, e_num = _strip_p(frac.numerator, p)
        den, e_den = _strip_p(frac.denominator, p)
        self.num, self.den, self.exp = num, den, e_num - e_den

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls, p):
        return cls(0, p)

    @classmethod
    def one(cls, p):
        return cls(1, p)

    @classmethod
    def unit_power(cls, p, exp, unit=1):
        """unit * p^exp with unit coprime to p."""
        s = cls(unit, p)
        if s.num == 0:
            return s
        return cls(None, p, _raw=(s.num, s.den, s.exp + exp))

    # -- basic queries -----------------------------------------------

    def is_zero(self):
        return self.num == 0

    def val(self):
        """p-adic valuation; +inf for zero."""
        return INFINITY if self.num == 0 else self.exp

    def is_integral(self):
        return self.num == 0 or self.exp >= 0

    def is_unit(self):
        return self.num != 0 and self.exp == 0

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den) * Fraction(self.p) ** self.exp

    def __bool__(self):
        return self.num != 0

    # -- field operations ----------------------------------------------

    def _coerce(self, other):
        if isinstance(other, PScalar):
            if other.p != self.p:
                raise ValueError("prime mismatch")
            return other
        if isinstance(other, (int, Fraction)):
            return PScalar(other, self.p)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.num == 0:
            return other
        if other.num == 0:
            return self
        p = self.p
        lo = min(self.exp, other.exp)
        a = Fraction(self.num, self.den) * Fraction(p) ** (self.exp - lo)
        b = Fraction(other.num, other.den) * Fraction(p) ** (other.exp - lo)
        s = a + b
        if s == 0:
            return PScalar.zero(p)
        num, e_num = _strip_p(s.numerator, p)
        return PScalar(None, p, _raw=(num, s.denominator, lo + e_num))

    __radd__ = __add__

    def __neg__(self):
        return PScalar(None, self.p, _raw=(-self.num, self.den, self.exp))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.num == 0 or other.num == 0:
            return PScalar.zero(self.p)
        num = self.num * other.num
        den = self.den * other.den
        g = math.gcd(num, den)
        return PScalar(None, self.p, _raw=(num // g, den // g, self.exp + other.exp))

    __rmul__ = __mul__

    def inv(self):
        if self.num == 0:
            raise ZeroDivisionError("inverse of zero")
        num, den = self.den, self.num
        if den < 0:
            num, den = -num, -den
        return PScalar(None, self.p, _raw=(num, den, -self.exp))

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    def __pow__(self, k: int):
        if k == 0:
            return PScalar.one(self.p)
        if k < 0:
            return self.inv() ** (-k)
        return PScalar(None, self.p, _raw=(self.num**k, self.den**k, self.exp * k))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PScalar(other, self.p)
        if not isinstance(other, PScalar):
            return NotImplemented
        return (
            self.p == other.p
            and self.num == other.num
            and self.den == other.den
            and self.exp == other.exp
        )

    def __hash__(self):
        return hash((self.p, self.num, self.den, self.exp))

    # -- reduction and formatting --------------------------------------

    def residue(self, m: int) -> int:
        """Canonical representative in [0, p^m) of a p-integral value."""
        if not self.is_integral():
            raise ValueError("value is not p-integral")
        mod = self.p**m
        if self.num == 0:
            return 0
        return (self.num * pow(self.den, -1, mod) * pow(self.p, self.exp, mod)) % mod

    def reduce(self, m: int) -> "TruncScalar":
        return TruncScalar(self.residue(m), m, self.p)

    def canonical_mod(self, a: int) -> "PScalar":
        """Canonical representative of this value modulo p^a Z_(p).

        Works for any rational input: the representative is the truncation
        of the p-adic expansion to digits below p^a, so it lies in
        [0, p^a) and differs from the input by an element of p^a Z_(p).
        """
        v = self.val()
        if v == INFINITY or v >= a:
            return PScalar.zero(self.p)
        v = int(v)
        mod = self.p ** (a - v)
        unit_residue = (self.num * pow(self.den, -1, mod)) % mod
        return PScalar.unit_power(self.p, v, unit_residue)

    def __repr__(self):
        return f"PScalar({self.format()!r}, p={self.p})"

    def format(self) -> str:
        """Textual form "a", "a*p^k" or "a/p^k"; unit denominators as "a/b"."""
        if self.num == 0:
            return "0"
        core = str(self.num) if self.den == 1 else f"{self.num}/{self.den}"
        if self.exp == 0:
            return core
        if self.exp > 0:
            return f"{core}*{self.p}^{self.exp}"
        return f"{core}/{self.p}^{-self.exp}"

    @classmethod
    def parse(cls, text: str, p: int) -> "PScalar":
        text = text.strip()
        if "*" in text:
            core, tail = text.split("*")
            base, _, e = tail.partition("^")
            if int(base) != p:
                raise ValueError(f"expected prime {p} in {text!r}")
            return cls(Fraction(core), p) * cls.unit_power(p, int(e))
        if "^" in text:
            core, tail = text.rsplit("/", 1)
            base, _, e = tail.partition("^")
            if int(base) != p:
                raise ValueError(f"expected prime {p} in {text!r}")
            return cls(Fraction(core), p) * cls.unit_power(p, -int(e))
        return cls(Fraction(text), p)


def val(x) -> float | int:
    """p-adic valuation of a PScalar; +inf sentinel for zero."""
    return x.val()


class TruncScalar:
    """An element of Z/p^m Z: the truncated view of a p-integral scalar."""

    __slots__ = ("residue", "m", "p")

    def __init__(self, residue: int, m: int, p: int):
        if m < 1:
            raise ValueError("modulus exponent must be >= 1")
        self.m = m
        self.p = p
        self.residue = residue % (p**m)

    def _coerce(self, other):
        if isinstance(other, int):
            return TruncScalar(other, self.m, self.p)
        if not isinstance(other, TruncScalar) or (other.m, other.p) != (self.m, self.p):
            raise ValueError("modulus mismatch")
        return other

    def __add__(self, other):
        other = self._coerce(other)
        return TruncScalar(self.residue + other.residue, self.m, self.p)

    def __sub__(self, other):
        other = self._coerce(other)
        return TruncScalar(self.residue - other.residue, self.m, self.p)

    def __neg__(self):
        return TruncScalar(-self.residue, self.m, self.p)

    def __mul__(self, other):
        other = self._coerce(other)
        return TruncScalar(self.residue * other.residue, self.m, self.p)

    def is_unit(self):
        return self.residue % self.p != 0

    def inv(self):
        return TruncScalar(pow(self.residue, -1, self.p**self.m), self.m, self.p)

    def __eq__(self, other):
        return (
            isinstance(other, TruncScalar)
            and (self.residue, self.m, self.p) == (other.residue, other.m, other.p)
        )

    def __hash__(self):
        return hash((self.residue, self.m, self.p))

    def __repr__(self):
        return f"TruncScalar({self.residue}, m={self.m}, p={self.p})"


# ---------------------------------------------------------------------------
# Polynomials over PScalar
# ---------------------------------------------------------------------------


class PPoly:
    """Polynomial with PScalar coefficients, stored low degree first."""

    __slots__ = ("coeffs", "p")

    def __init__(self, coeffs, p):
        cleaned = [c if isinstance(c, PScalar) else PScalar(c, p) for c in coeffs]
        while cleaned and cleaned[-1].is_zero():
            cleaned.pop()
        self.coeffs = tuple(cleaned)
        self.p = p

    @classmethod
    def from_fractions(cls, coeffs, p):
        return cls([PScalar(c, p) for c in coeffs], p)

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else -INFINITY

    @property
    def monic(self):
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def is_p_integral(self):
        return all(c.is_integral() for c in self.coeffs)

    def __eq__(self, other):
        return isinstance(other, PPoly) and self.p == other.p and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.p, self.coeffs))

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        z = PScalar.zero(self.p)
        a = list(self.coeffs) + [z] * (n - len(self.coeffs))
        b = list(other.coeffs) + [z] * (n - len(other.coeffs))
        return PPoly([x + y for x, y in zip(a, b)], self.p)

    def __neg__(self):
        return PPoly([-c for c in self.coeffs], self.p)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PScalar):
            return PPoly([c * other for c in self.coeffs], self.p)
        if not self.coeffs or not other.coeffs:
            return PPoly([], self.p)
        out = [PScalar.zero(self.p)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return PPoly(out, self.p)

    def __call__(self, x: PScalar) -> PScalar:
        acc = PScalar.zero(self.p)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self):
        return PPoly([c * k for k, c in enumerate(self.coeffs)][1:], self.p)

    def shift(self, c) -> "PPoly":
        """Substitute x -> x + c."""
        x_plus_c = PPoly([c, 1], self.p)
        acc = PPoly([], self.p)
        for coef in reversed(self.coeffs):
            acc = acc * x_plus_c + PPoly([coef], self.p)
        return acc

    def rescale_variable(self, t: int) -> "PPoly":
        """Substitute x -> p^t x and renormalize to monic: f(p^t x) / p^(t deg f)."""
        d = len(self.coeffs) - 1
        scale = [PScalar.unit_power(self.p, t * (k - d)) for k in range(d + 1)]
        return PPoly([c * s for c, s in zip(self.coeffs, scale)], self.p)

    def reduce_coeffs(self, m: int) -> tuple[int, ...]:
        """Integer coefficients mod p^m, low degree first."""
        return tuple(c.residue(m) for c in self.coeffs)

    def as_fraction_coeffs(self):
        return [c.as_fraction() for c in self.coeffs]

    def format(self) -> str:
        return ", ".join(c.format() for c in self.coeffs)

    def __repr__(self):
        return f"PPoly([{self.format()}], p={self.p})"


def ppoly_from_int_coeffs(coeffs, p):
    return PPoly([PScalar(c, p) for c in coeffs], p)


# ---------------------------------------------------------------------------
# Integer-coefficient polynomial arithmetic mod p^k (internal engine)
# ---------------------------------------------------------------------------


def _trim(f):
    f = list(f)
    while f and f[-1] == 0:
        f.pop()
    return f


def _poly_mul_mod(f, g, q):
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % q
    return _trim(out)


def _poly_add_mod(f, g, q):
    n = max(len(f), len(g))
    f = list(f) + [0] * (n - len(f))
    g = list(g) + [0] * (n - len(g))
    return _trim([(a + b) % q for a, b in zip(f, g)])


def _poly_sub_mod(f, g, q):
    n = max(len(f), len(g))
    f = list(f) + [0] * (n - len(f))
    g = list(g) + [0] * (n - len(g))
    return _trim([(a - b) % q for a, b in zip(f, g)])


def _poly_divmod_mod(f, g, q):
    """Division with remainder mod q; leading coefficient of g must be a unit."""
    f = [c % q for c in f]
    inv_lead = pow(g[-1], -1, q)
    dg = len(g) - 1
    quot = [0] * max(len(f) - dg, 0)
    f = _trim(f)
    while len(f) - 1 >= dg and f:
        k = len(f) - 1 - dg
        c = (f[-1] * inv_lead) % q
        quot[k] = c
        for i, b in enumerate(g):
            f[k + i] = (f[k + i] - c * b) % q
        f = _trim(f)
    return _trim(quot), f


def _fp_gcd(f, g, p):
    f, g = _trim([c % p for c in f]), _trim([c % p for c in g])
    while g:
        _, r = _poly_divmod_mod(f, g, p)
        f, g = g, r
    if f:
        inv = pow(f[-1], -1, p)
        f = [(c * inv) % p for c in f]
    return f


def _fp_pow_mod(base, e, modpoly, p):
    result = [1]
    base = _poly_divmod_mod(base, modpoly, p)[1]
    while e:
        if e & 1:
            result = _poly_divmod_mod(_poly_mul_mod(result, base, p), modpoly, p)[1]
        base = _poly_divmod_mod(_poly_mul_mod(base, base, p), modpoly, p)[1]
        e >>= 1
    return result


def fp_is_irreducible(f, p) -> bool:
    """Rabin irreducibility test for a monic polynomial over F_p."""
    f = _trim([c % p for c in f])
    n = len(f) - 1
    if n <= 0:
        return False
    if n == 1:
        return True
    x = [0, 1]
    h = x
    for _ in range(n):
        h = _fp_pow_mod(h, p, f, p)
    if _trim(_poly_sub_mod(h, x, p)):
        return False
    for r in range(2, n + 1):
        if n % r or not sympy.isprime(r):
            continue
        h = x
        for _ in range(n // r):
            h = _fp_pow_mod(h, p, f, p)
        g = _fp_gcd(_poly_sub_mod(h, x, p), f, p)
        if len(g) - 1 > 0:
            return False
    return True


def _monic_tails(p, d):
    """All coefficient tails (a_0, ..., a_{d-1}) over F_p."""
    if d == 0:
        yield ()
        return
    for rest in _monic_tails(p, d - 1):
        for c in range(p):
            yield rest + (c,)


def fp_factor(f, p):
    """Factor a monic polynomial over F_p into monic irreducibles (with
    multiplicity), by trial division over monic polynomials of low degree.

    Sized for the small degrees and primes of this toolkit; guarded by a
    budget error otherwise.
    """
    f = _trim([c % p for c in f])
    n = len(f) - 1
    if n > _FACTOR_DEGREE_BUDGET or p > _FACTOR_PRIME_BUDGET:
        raise BudgetExceeded(f"fp_factor budget: degree {n}, p {p}")
    factors = []
    d = 1
    while 2 * d <= len(f) - 1:
        for tail in _monic_tails(p, d):
            g = list(tail) + [1]
            if not fp_is_irreducible(g, p):
                continue
            while True:
                quot, rem = _poly_divmod_mod(f, g, p)
                if rem or len(quot) == 0:
                    break
                factors.append(tuple(g))
                f = quot
                if 2 * d > len(f) - 1:
                    break
        d += 1
    if len(f) - 1 >= 1:
        factors.append(tuple(f))
    factors.sort()
    return factors


def _hensel_pair(f, g0, h0, p, m):
    """Lift f = g0*h0 (mod p), gcd(g0, h0) = 1 mod p, to f = g*h (mod p^m).

    Linear lifting with fixed mod-p Bezout cofactors; g0 monic, and the
    lifted g stays monic of the same degree.
    """
    a, b = _fp_bezout(g0, h0, p)  # a*g0 + b*h0 = 1 mod p
    g, h = list(g0), list(h0)
    for k in range(1, m):
        q = p ** (k + 1)
        diff = _poly_sub_mod(f, _poly_mul_mod(g, h, q), q)
        e = _trim([(c // p**k) % p for c in diff])
        quo, r = _poly_divmod_mod(_poly_mul_mod(b, e, p), g0, p)
        dh = _poly_add_mod(_poly_mul_mod(a, e, p), _poly_mul_mod(quo, h0, p), p)
        g = _poly_add_mod(g, [(p**k * c) % q for c in r], q)
        h = _poly_add_mod(h, [(p**k * c) % q for c in dh], q)
    q = p**m
    return _trim([c % q for c in g]), _trim([c % q for c in h])


def _fp_bezout(g, h, p):
    """a, b with a*g + b*h = 1 mod p (g, h coprime mod p)."""
    r0, r1 = _trim([c % p for c in g]), _trim([c % p for c in h])
    s0, s1 = [1], []
    t0, t1 = [], [1]
    while r1:
        q, r = _poly_divmod_mod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub_mod(s0, _poly_mul_mod(q, s1, p), p)
        t0, t1 = t1, _poly_sub_mod(t0, _poly_mul_mod(q, t1, p), p)
    if len(r0) != 1:
        raise ValueError("polynomials are not coprime mod p")
    inv = pow(r0[0], -1, p)
    return [(c * inv) % p for c in s0], [(c * inv) % p for c in t0]


def _is_squarefree_mod_p(coeffs, p) -> bool:
    fbar = _trim([c % p for c in coeffs])
    deriv = _trim([(k * c) % p for k, c in enumerate(fbar)])
    return len(_fp_gcd(fbar, deriv, p)) == 1


def hensel_factor(f: PPoly, m: int) -> list[PPoly]:
    """Lift the mod-p irreducible factorization of a monic p-integral f to
    mod p^m factors whose product is congruent to f mod p^m.

    Raises NotSquarefreeModP when the mod-p reduction has a repeated factor,
    unless f is an exact k-th power of a polynomial with squarefree
    reduction (then the factors of the root are lifted and repeated).
    """
    p = f.p
    if not f.monic:
        raise ValueError("hensel_factor expects a monic polynomial")
    if not f.is_p_integral():
        raise ValueError("hensel_factor expects p-integral coefficients")
    if m < 1:
        raise ValueError("precision must be >= 1")
    fm = list(f.reduce_coeffs(m))
    if _is_squarefree_mod_p(fm, p):
        return _hensel_squarefree(f, fm, m)
    root = _exact_poly_root(f)
    if root is not None:
        g, k = root
        if g.is_p_integral() and _is_squarefree_mod_p(g.reduce_coeffs(1), p):
            return hensel_factor(g, m) * k
    raise NotSquarefreeModP("mod-p reduction of f is not squarefree")


def _hensel_squarefree(f: PPoly, fm, m: int) -> list[PPoly]:
    p = f.p
    fbar = _trim([c % p for c in fm])
    parts = fp_factor(fbar, p)
    factors = []
    remaining = fm
    for i, gbar in enumerate(parts[:-1]):
        hbar = [1]
        for other in parts[i + 1 :]:
            hbar = _poly_mul_mod(hbar, list(other), p)
        g, h = _hensel_pair(remaining, list(gbar), hbar, p, m)
        factors.append(g)
        remaining = h
    factors.append(_trim([c % p**m for c in remaining]))
    out = [ppoly_from_int_coeffs(g, p) for g in factors if len(g) - 1 >= 1]
    prod = out[0]
    for q in out[1:]:
        prod = prod * q
    if prod.reduce_coeffs(m) != f.reduce_coeffs(m):
        raise AssertionError("Hensel lift failed to re-multiply")
    return out


def _sympy_poly(f: PPoly):
    x = sympy.Symbol("x")
    expr = sum(
        sympy.Rational(c.as_fraction().numerator, c.as_fraction().denominator) * x**k
        for k, c in enumerate(f.coeffs)
    )
    return sympy.Poly(expr, x), x


def _exact_poly_root(f: PPoly):
    """If f = g^k exactly over Q for some k > 1, return (g, k)."""
    poly, _x = _sympy_poly(f)
    _, facs = poly.factor_list()
    if not facs:
        return None
    k = math.gcd(*[int(e) for _, e in facs])
    if k <= 1:
        return None
    g = sympy.prod([b ** (e // k) for b, e in facs])
    gpoly = sympy.Poly(g, poly.gens[0])
    lead = gpoly.all_coeffs()[0]
    coeffs = [
        Fraction(int(sympy.Rational(c, lead).p), int(sympy.Rational(c, lead).q))
        for c in reversed(gpoly.all_coeffs())
    ]
    return PPoly.from_fractions(coeffs, f.p), k


def _rational_factor_list(f: PPoly):
    """Monic irreducible factors of f over Q, with multiplicity."""
    poly, _x = _sympy_poly(f)
    _, facs = poly.factor_list()
    out = []
    for base, e in facs:
        bpoly = sympy.Poly(base, poly.gens[0])
        lead = bpoly.all_coeffs()[0]
        coeffs = [
            Fraction(int(sympy.Rational(c, lead).p), int(sympy.Rational(c, lead).q))
            for c in reversed(bpoly.all_coeffs())
        ]
        out.extend([PPoly.from_fractions(coeffs, f.p)] * int(e))
    return out


# ---------------------------------------------------------------------------
# Three-valued irreducibility over Q_p
# ---------------------------------------------------------------------------


class IrreducibilityVerdict:
    """Yes / No(witness factorization) / Unknown, with the firing criterion."""

    __slots__ = ("status", "witness", "reason")

    def __init__(self, status, witness=None, reason=""):
        self.status = status
        self.witness = witness
        self.reason = reason

    def __repr__(self):
        return f"IrreducibilityVerdict({self.status}, {self.reason})"

    def __eq__(self, other):
        if isinstance(other, str):
            return self.status == other
        return NotImplemented


def _newton_polygon_single_slope(f: PPoly):
    """True when the Newton polygon is one segment from (0, v) to (deg, 0)
    with gcd(v, deg) = 1; irreducibility over Q_p follows."""
    d = f.degree
    v0 = f.coeffs[0].val()
    if v0 == INFINITY or v0 <= 0:
        return False
    for i in range(1, d):
        vi = f.coeffs[i].val()
        if vi == INFINITY:
            continue
        if vi * d < v0 * (d - i):
            return False
    return math.gcd(int(v0), d) == 1


def _is_eisenstein(f: PPoly):
    d = f.degree
    if f.coeffs[0].val() != 1:
        return False
    return all(f.coeffs[i].val() >= 1 for i in range(1, d))


def is_irreducible_qp(f: PPoly, witness_precision: int = 4) -> IrreducibilityVerdict:
    """Sound three-valued irreducibility test over Q_p.

    Yes fires on a sufficient criterion (irreducible mod p, Eisenstein after
    a shift by a residue, or single-slope Newton polygon with numerator
    coprime to the degree).  No carries a certified factorization: an exact
    rational one, or the Hensel lift of a split squarefree mod-p reduction.
    Everything else is Unknown; the operation never guesses.
    """
    p = f.p
    if not f.monic:
        raise ValueError("expected a monic polynomial")
    d = f.degree
    if d == 1:
        return IrreducibilityVerdict("yes", reason="linear")
    # normalize to p-integral coefficients by rescaling the variable
    t = 0
    for i, c in enumerate(f.coeffs[:-1]):
        v = c.val()
        if v is not INFINITY and v < 0:
            t = max(t, math.ceil(-v / (d - i)))
    g = f.rescale_variable(-t) if t else f

    gbar = [c.residue(1) for c in g.coeffs]
    if fp_is_irreducible(gbar, p):
        return IrreducibilityVerdict("yes", reason="irreducible mod p")
    for c in range(p):
        if _is_eisenstein(g.shift(PScalar(c, p))):
            return IrreducibilityVerdict("yes", reason=f"Eisenstein after shift x -> x+{c}")
    if _newton_polygon_single_slope(g):
        return IrreducibilityVerdict("yes", reason="single-slope Newton polygon")

    rational = _rational_factor_list(f)
    if len(rational) > 1:
        prod = rational[0]
        for q in rational[1:]:
            prod = prod * q
        assert prod == f, "rational witness failed to re-multiply"
        return IrreducibilityVerdict("no", witness=rational, reason="exact rational factorization")
    if _is_squarefree_mod_p(gbar, p) and len(fp_factor(_trim(gbar), p)) > 1:
        witness = hensel_factor(g, witness_precision)
        note = f" of f(x*p^{t})-normalization" if t else ""
        return IrreducibilityVerdict(
            "no", witness=witness, reason=f"squarefree split mod p (Hensel witness{note})"
        )
    return IrreducibilityVerdict("unknown", reason="no criterion fired")
