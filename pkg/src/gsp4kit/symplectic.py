"""The standard symplectic pairing on Q_p^(2d) and the similitude group
GSp_(2d): membership with exact similitude computation, characteristic
polynomials, seeded random element generation, and symplectic realizations
of self-dual quartics.

The pairing is <x, y> = x_1 y_{2d} + ... + x_d y_{d+1} - x_{d+1} y_d -
... - x_{2d} y_1; basis vectors pair as (1, 2d), (2, 2d-1), ...
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DimensionMismatch, NotSimilitude, Singular
from .linalg import Mat
from .padic import PPoly, PScalar


class SympSpace:
    """Symplectic similitude context: half-dimension d (default 2), prime p."""

    __slots__ = ("d", "p", "_gram")

    def __init__(self, p, d=2):
        self.d = d
        self.p = p
        n = 2 * d
        rows = [[0] * n for _ in range(n)]
        for i in range(d):
            rows[i][n - 1 - i] = 1
            rows[n - 1 - i][i] = -1
        self._gram = Mat(rows, p)

    @property
    def n(self):
        return 2 * self.d

    def gram(self) -> Mat:
        return self._gram

    def basis_vector(self, i):
        return tuple(PScalar(1 if j == i else 0, self.p) for j in range(self.n))

    def pairing(self, x, y) -> PScalar:
        if len(x) != self.n or len(y) != self.n:
            raise DimensionMismatch(f"expected vectors of length {self.n}")
        d, p = self.d, self.p
        acc = PScalar.zero(p)
        for i in range(d):
            acc = acc + x[i] * y[2 * d - 1 - i]
        for i in range(d, 2 * d):
            acc = acc - x[i] * y[2 * d - 1 - i]
        return acc


def pairing(x, y, space: SympSpace) -> PScalar:
    return space.pairing(x, y)


class GroupElement:
    """An element of GSp_(2d)(Q_p) with cached similitude and char poly."""

    __slots__ = ("space", "mat", "simil", "_char")

    def __init__(self, space, mat, simil):
        self.space = space
        self.mat = mat
        self.simil = simil
        self._char = None

    @property
    def char_poly(self) -> PPoly:
        if self._char is None:
            self._char = _char_poly_flv(self.mat)
        return self._char

    def __mul__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return GroupElement(self.space, self.mat * other.mat, self.simil * other.simil)

    def inv(self) -> "GroupElement":
        # g^T J g = c J  =>  g^{-1} = c^{-1} J^{-1} g^T J
        j = self.space.gram()
        m = j.inv() * self.mat.transpose() * j * self.simil.inv()
        return GroupElement(self.space, m, self.simil.inv())

    def apply(self, vec):
        return self.mat.apply(vec)

    def __eq__(self, other):
        return isinstance(other, GroupElement) and self.mat == other.mat

    def __hash__(self):
        return hash(self.mat)

    def scale(self, s: PScalar) -> "GroupElement":
        return GroupElement(self.space, self.mat * s, self.simil * s * s)

    def format(self) -> str:
        return self.mat.format()

    @classmethod
    def parse(cls, text, space) -> "GroupElement":
        return gsp_check(Mat.parse(text, space.n, space.n, space.p), space)

    def __repr__(self):
        return f"GroupElement(simil={self.simil.format()}, mat={self.mat.format()})"


def gsp_check(mat: Mat, space: SympSpace) -> GroupElement:
    """Verify the Gram identity g^T J g = c J and return the element with
    its similitude; raises NotSimilitude or Singular."""
    n = space.n
    if mat.shape != (n, n):
        raise DimensionMismatch(f"expected a {n}x{n} matrix")
    j = space.gram()
    g = mat.transpose() * j * mat
    c = g.rows[0][n - 1]
    if c.is_zero():
        raise Singular("matrix is singular or degenerate for the pairing")
    target = j * c
    if g != target:
        raise NotSimilitude("Gram identity fails for every scalar")
    det = mat.det()
    if det != c ** space.d:
        # sign convention det = simil^d; asserted once here for d = 2
        raise NotSimilitude("determinant does not match simil^d")
    return GroupElement(space, mat, c)


def _char_poly_flv(mat: Mat) -> PPoly:
    """Characteristic polynomial by the Faddeev-LeVerrier recurrence."""
    n, _ = mat.shape
    p = mat.p
    m = Mat.zeros(n, n, p)
    c = PScalar.one(p)
    coeffs = [c]
    for k in range(1, n + 1):
        m = mat * m + Mat.identity(n, p) * c
        am = mat * m
        tr = am.rows[0][0]
        for i in range(1, n):
            tr = tr + am.rows[i][i]
        c = -(tr / PScalar(k, p))
        coeffs.append(c)
    # coeffs[i] multiplies x^(n-i)
    return PPoly(list(reversed(coeffs)), p)


def char_poly(g: GroupElement) -> PPoly:
    return g.char_poly


def char_poly_leibniz(mat: Mat) -> PPoly:
    """Independent oracle: expand det(xI - g) by the Leibniz formula."""
    n, _ = mat.shape
    p = mat.p
    import itertools

    total = PPoly([], p)
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = PPoly([PScalar(sign, p)], p)
        for i in range(n):
            entry = -mat.rows[i][perm[i]]
            if perm[i] == i:
                term = term * PPoly([entry, 1], p)
            else:
                term = term * PPoly([entry], p)
        total = total + term
    return total


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# generators and random elements
# ---------------------------------------------------------------------------


def transvection(space: SympSpace, v, c) -> GroupElement:
    """x -> x + c <x, v> v; always symplectic with similitude 1."""
    n, p = space.n, space.p
    cols = []
    for j in range(n):
        e = space.basis_vector(j)
        coef = c * space.pairing(e, v)
        cols.append(tuple(e[i] + coef * v[i] for i in range(n)))
    return GroupElement(space, Mat.from_cols(cols, p), PScalar.one(p))


def torus_element(space: SympSpace, a, b, c) -> GroupElement:
    """diag(a, b, c/b, c/a) for d = 2; similitude c."""
    if space.d != 2:
        raise DimensionMismatch("torus_element is d=2 only")
    p = space.p
    a, b, c = PScalar(a, p), PScalar(b, p), PScalar(c, p)
    return GroupElement(space, Mat.diag([a, b, c / b, c / a], p), c)


def short_root_shears(space: SympSpace, c):
    """The four short-root unipotents of Sp_4 at parameter c, as exact
    elements: 1 + c(E12 - E34), 1 + c(E21 - E43), 1 + c(E13 + E24),
    1 + c(E31 + E42) in the standard pairing convention."""
    p = space.p
    c = c if isinstance(c, PScalar) else PScalar(c, p)
    shapes = [
        ((0, 1, c), (2, 3, -c)),
        ((1, 0, c), (3, 2, -c)),
        ((0, 2, c), (1, 3, c)),
        ((2, 0, c), (3, 1, c)),
    ]
    out = []
    for entries in shapes:
        rows = [[PScalar(1 if i == j else 0, p) for j in range(4)] for i in range(4)]
        for i, j, val in entries:
            rows[i][j] = val
        out.append(GroupElement(space, Mat(rows, p), PScalar.one(p)))
    return out


def weyl_elements(space: SympSpace):
    """The two standard Weyl reflections for d = 2 (similitude 1)."""
    p = space.p
    s1 = Mat.from_cols(
        [space.basis_vector(1), space.basis_vector(0), space.basis_vector(3), space.basis_vector(2)],
        p,
    )
    # long-root reflection in the (2,3) plane: e2 -> e3, e3 -> -e2
    e = [space.basis_vector(i) for i in range(4)]
    minus_e2 = tuple(-x for x in e[1])
    s2 = Mat.from_cols([e[0], e[2], minus_e2, e[3]], p)
    return [GroupElement(space, s1, PScalar.one(p)), GroupElement(space, s2, PScalar.one(p))]


def generator_pool(space: SympSpace):
    """Fixed generator set: elementary transvections, torus elements and
    Weyl reflections.  Words in this pool are symplectic by construction."""
    p = space.p
    pool = list(weyl_elements(space))
    units = [1, -1, 1 + p]
    for a in (1, p):
        for b in (1, 1 + p):
            pool.append(torus_element(space, a, b, 1))
    pool.append(torus_element(space, 1, 1, p))
    vecs = []
    for i in range(space.n):
        vecs.append(space.basis_vector(i))
    for i in range(space.n):
        for j in range(i + 1, space.n):
            e = space.basis_vector(i)
            f = space.basis_vector(j)
            vecs.append(tuple(a + b for a, b in zip(e, f)))
    for v in vecs:
        for c in (1, -1, p):
            pool.append(transvection(space, v, PScalar(c, p)))
    return pool


def random_element(space: SympSpace, rng, length=6, pool=None) -> GroupElement:
    """Seeded random word in the fixed generator pool."""
    if pool is None:
        pool = generator_pool(space)
    g = GroupElement(space, Mat.identity(space.n, space.p), PScalar.one(space.p))
    for _ in range(length):
        h = rng.choice(pool)
        if rng.random() < 0.3:
            h = h.inv()
        g = g * h
    return g


# ---------------------------------------------------------------------------
# symplectic realization of a self-dual quartic
# ---------------------------------------------------------------------------


def _poly_ring_elements(f: PPoly):
    """Multiplication table helpers for A = Q_p[x]/(f), deg f = n."""
    n = f.degree
    p = f.p
    # x^n = -(a_0 + a_1 x + ... + a_{n-1} x^{n-1})
    red = [-c for c in f.coeffs[:-1]]

    def mul(u, v):
        out = [PScalar.zero(p)] * (2 * n - 1)
        for i, a in enumerate(u):
            if a.is_zero():
                continue
            for j, b in enumerate(v):
                out[i + j] = out[i + j] + a * b
        for k in range(2 * n - 2, n - 1, -1):
            c = out[k]
            if c.is_zero():
                continue
            out[k] = PScalar.zero(p)
            for i, r in enumerate(red):
                out[k - n + i] = out[k - n + i] + c * r
        return tuple(out[:n])

    return mul


def symplectic_realization(f: PPoly, space: SympSpace) -> GroupElement:
    """Realize a monic quartic with the GSp shape (a_0 = c^2, a_1 = c a_3)
    as an element of GSp_4(Q_p) with characteristic polynomial f and
    similitude c, acting as multiplication by x on Q_p[x]/(f).

    Requires f(0) nonzero and f separable enough for a nondegenerate
    alternating trace-type form to exist (always for squarefree f).
    """
    p = space.p
    n = f.degree
    if n != 2 * space.d:
        raise DimensionMismatch("degree must be 2d")
    a0 = f.coeffs[0]
    a1 = f.coeffs[1]
    a3 = f.coeffs[3]
    csq = a0
    # c with c^2 = a_0 and a_1 = c a_3: prefer the a_1/a_3 quotient when defined
    if not a3.is_zero():
        c = a1 / a3
    else:
        c = _sqrt_rational(a0, p)
        if c is None:
            raise NotSimilitude("constant term is not a rational square")
    if c * c != csq or a1 != c * a3:
        raise NotSimilitude("polynomial lacks the GSp coefficient symmetry")

    mul = _poly_ring_elements(f)
    zero = PScalar.zero(p)
    one = PScalar.one(p)

    # x^{-1} = -(x^3 + a_3 x^2 + a_2 x + a_1)/a_0  from f(x) = 0
    xinv = tuple(
        -(f.coeffs[k + 1] / a0) for k in range(n)
    )
    # tau(x^k) = c^k x^{-k}
    tau_basis = [tuple([one] + [zero] * (n - 1))]
    cur = tuple([one] + [zero] * (n - 1))
    for k in range(1, n):
        cur = mul(cur, xinv)
        tau_basis.append(tuple(PScalar(c, p) ** k * t for t in cur))

    def tau(u):
        out = [zero] * n
        for k, coeff in enumerate(u):
            if coeff.is_zero():
                continue
            for i, t in enumerate(tau_basis[k]):
                out[i] = out[i] + coeff * t
        return tuple(out)

    # functional ell with ell o tau = -ell, chosen nondegenerate
    basis = [tuple(one if i == k else zero for i in range(n)) for k in range(n)]
    gram = None
    for probe in range(n + 3):
        if probe < n:
            ell0 = [one if k == probe else zero for k in range(n)]
        else:
            ell0 = [PScalar(((probe * 7 + k * 3) % 5) + 1, p) for k in range(n)]

        def ell(u, ell0=ell0):
            direct = zero
            for a, w in zip(u, ell0):
                direct = direct + a * w
            twisted = zero
            for a, w in zip(tau(u), ell0):
                twisted = twisted + a * w
            return direct - twisted

        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                row.append(ell(mul(basis[i], tau(basis[j]))))
            rows.append(row)
        candidate = Mat(rows, p)
        if not candidate.det().is_zero():
            gram = candidate
            break
    if gram is None:
        raise Singular("no nondegenerate alternating form found")

    # symplectic basis over the field: pairs (u1, v1), (u2, v2)
    def beta(u, v):
        acc = zero
        for i, a in enumerate(u):
            if a.is_zero():
                continue
            for j, b in enumerate(v):
                acc = acc + a * b * gram.rows[i][j]
        return acc

    vecs = list(basis)
    pairs = []
    while vecs:
        u = vecs.pop(0)
        partner = None
        for w in vecs:
            if not beta(u, w).is_zero():
                partner = w
                break
        if partner is None:
            raise Singular("degenerate form during symplectic reduction")
        vecs.remove(partner)
        scale = beta(u, partner).inv()
        v = tuple(scale * t for t in partner)
        reduced = []
        for w in vecs:
            bw = beta(v, w)
            bu = beta(u, w)
            w2 = tuple(w[i] + bw * u[i] - bu * v[i] for i in range(n))
            reduced.append(w2)
        vecs = reduced
        pairs.append((u, v))
    (u1, v1), (u2, v2) = pairs
    change = Mat.from_cols([u1, u2, v2, v1], p)

    # multiplication by x on the power basis
    comp_cols = []
    for k in range(n):
        col = mul(basis[k], tuple([zero, one] + [zero] * (n - 2)))
        comp_cols.append(col)
    comp = Mat.from_cols(comp_cols, p)
    g = change.inv() * comp * change
    return gsp_check(g, space)


def _sqrt_rational(s: PScalar, p):
    fr = s.as_fraction()
    if fr < 0:
        return None
    num, den = fr.numerator, fr.denominator
    rn, rd = _isqrt_exact(num), _isqrt_exact(den)
    if rn is None or rd is None:
        return None
    return PScalar(Fraction(rn, rd), p)


def _isqrt_exact(n):
    import math

    r = math.isqrt(n)
    return r if r * r == n else None
