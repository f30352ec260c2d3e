"""Families of compatible rank-h direct summands of L/p^m L across a
self-dual chain, arising as reductions of rational totally isotropic
subspaces; their certified enumeration, the congruence-orbit witnesses,
orbit/bijection verification, and fixed-summand search.

Every enumerated family carries an exact isotropic lift, constructed by a
one-step pairing correction of an integer basis; acceptance into the
image set is therefore certified, never guessed.
"""

from __future__ import annotations

import itertools

from .chains import (
    HYPERSPECIAL,
    PARAMODULAR,
    SIEGEL,
    Lattice,
    LatticeChain,
    complete_dual_pair,
    in_K_m,
    in_N,
    rotation_element,
    _siegel_pieces,
)
from .errors import (
    BudgetExceeded,
    NotInLattice,
    NotIsotropic,
    PreconditionFailed,
    ReductionMismatch,
    Singular,
    UnsupportedChainType,
)
from .linalg import Mat, howell_is_free_summand, howell_mod, smith_zp
from .padic import PScalar
from .symplectic import (
    GroupElement,
    SympSpace,
    gsp_check,
    short_root_shears,
    torus_element,
    transvection,
)

DEFAULT_POINT_BUDGET = 400_000


class IsotropicSubspace:
    """A totally isotropic subspace of Q_p^4, stored by a basis matrix."""

    __slots__ = ("basis", "space")

    def __init__(self, basis: Mat, space: SympSpace, check=True):
        self.basis = basis
        self.space = space
        if check:
            cols = basis.cols()
            for i in range(len(cols)):
                for j in range(i + 1, len(cols)):
                    if not space.pairing(cols[i], cols[j]).is_zero():
                        raise NotIsotropic("basis columns do not pair to zero")

    @property
    def rank(self):
        return self.basis.shape[1]

    @classmethod
    def span(cls, vectors, space):
        return cls(Mat.from_cols(list(vectors), space.p), space)

    def key(self):
        """Canonical key: reduced column echelon form over the field."""
        return _rref_key(self.basis)

    def transform(self, g: GroupElement) -> "IsotropicSubspace":
        return IsotropicSubspace(g.mat * self.basis, self.space, check=False)

    def perp_basis(self) -> Mat:
        """Basis of the symplectic orthogonal complement."""
        space = self.space
        n = 4
        rows = []
        for col in self.basis.cols():
            rows.append([space.pairing(col, space.basis_vector(j)) for j in range(n)])
        m = Mat(rows, space.p)
        return _kernel_basis(m)

    def __eq__(self, other):
        return isinstance(other, IsotropicSubspace) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"IsotropicSubspace(rank {self.rank})"


def _rref_key(mat: Mat):
    p = mat.p
    n, k = mat.shape
    cols = [list(c) for c in mat.cols()]
    placed = []
    for row in range(n):
        piv = None
        for c in cols:
            if not c[row].is_zero():
                piv = c
                break
        if piv is None:
            continue
        cols.remove(piv)
        inv = piv[row].inv()
        piv = [x * inv for x in piv]
        for c in cols:
            t = c[row]
            if not t.is_zero():
                for r in range(n):
                    c[r] = c[r] - t * piv[r]
        for done in placed:
            t = done[row]
            if not t.is_zero():
                for r in range(n):
                    done[r] = done[r] - t * piv[r]
        placed.append(piv)
    return tuple(tuple((x.num, x.den, x.exp) for x in c) for c in placed)


def _kernel_basis(mat: Mat) -> Mat:
    """Basis of the right kernel of a k x n matrix over the fraction field."""
    p = mat.p
    k, n = mat.shape
    work = [list(row) for row in mat.rows]
    pivots = {}
    row = 0
    for col in range(n):
        piv = None
        for r in range(row, k):
            if not work[r][col].is_zero():
                piv = r
                break
        if piv is None:
            continue
        work[row], work[piv] = work[piv], work[row]
        inv = work[row][col].inv()
        work[row] = [x * inv for x in work[row]]
        for r in range(k):
            if r != row and not work[r][col].is_zero():
                t = work[r][col]
                work[r] = [a - t * b for a, b in zip(work[r], work[row])]
        pivots[col] = row
        row += 1
    free = [c for c in range(n) if c not in pivots]
    cols = []
    zero = PScalar.zero(p)
    one = PScalar.one(p)
    for f in free:
        vec = [zero] * n
        vec[f] = one
        for c, r in pivots.items():
            vec[c] = -work[r][f]
        cols.append(tuple(vec))
    if not cols:
        raise Singular("kernel is trivial")
    return Mat.from_cols(cols, p)


# ---------------------------------------------------------------------------
# summand families
# ---------------------------------------------------------------------------


class SummandFamily:
    """An element of the image set: per homothety representative L of the
    chain, the Howell-canonical rank-h summand of L/p^m L cut out by one
    rational isotropic subspace."""

    __slots__ = ("chain", "m", "h", "data")

    def __init__(self, chain: LatticeChain, m: int, h: int, data):
        self.chain = chain
        self.m = m
        self.h = h
        self.data = tuple(data)

    def key(self):
        return (self.m, self.h, self.data)

    def __eq__(self, other):
        return isinstance(other, SummandFamily) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"SummandFamily(m={self.m}, h={self.h})"

    def precedes(self, other: "SummandFamily") -> bool:
        """The boundary partial order: alpha < beta iff alpha_L contains
        beta_L for every representative."""
        if self.m != other.m or self.chain != other.chain:
            raise ValueError("families live on different strata")
        q = self.chain.p**self.m
        for mine, theirs in zip(self.data, other.data):
            for col in theirs:
                if not _howell_contains(mine, col, self.chain.p, self.m):
                    return False
        return True


def _howell_contains(cols, target, p, m):
    q = p**m
    combined = howell_mod(list(cols) + [tuple(target)], len(target), m, p)
    return combined == cols


def reduce_subspace(v: IsotropicSubspace, chain: LatticeChain, m: int) -> SummandFamily:
    """The family (V cap L mod p^m)_L over the chain's representatives."""
    if m < 1:
        raise ValueError("m must be >= 1")
    space = chain.space
    h = v.rank
    data = []
    for w in chain.window:
        local = _intersection_local_cols(v.basis, w)
        gens = [tuple(x.residue(m) for x in col) for col in local]
        data.append(howell_mod(gens, 4, m, space.p))
    return SummandFamily(chain, m, h, data)


def _intersection_local_cols(basis: Mat, lattice: Lattice):
    """Columns, in lattice coordinates, of a basis of span(basis) cap lattice."""
    b_inv = lattice.basis.inv()
    a = b_inv * basis
    exps, pmat = smith_zp(a)
    scale = Mat.diag([PScalar.unit_power(a.p, -e) for e in exps], a.p)
    coeff = pmat * scale
    local = a * coeff
    return local.cols()


def intersection_lattice_cols(basis: Mat, lattice: Lattice):
    """Ambient-coordinate basis of span(basis) cap lattice."""
    local = _intersection_local_cols(basis, lattice)
    return [lattice.basis.apply(c) for c in local]


# ---------------------------------------------------------------------------
# primitive type classification (paramodular lattice)
# ---------------------------------------------------------------------------

TYPE_I = "I"
TYPE_II = "II"
NOT_PRIMITIVE = "not_primitive"


def primitive_type(x, lattice: Lattice, space: SympSpace) -> str:
    """Classify x in the paramodular lattice L: primitive means x not in pL;
    type (I) pairs to p^{-1}Z_p \\ Z_p against some lattice vector, type (II)
    pairs integrally against all of L."""
    if not lattice.member(x):
        raise NotInLattice("vector is outside the lattice")
    if lattice.scale(1).member(x):
        return NOT_PRIMITIVE
    worst = min(space.pairing(x, c).val() for c in lattice.basis.cols())
    return TYPE_I if worst < 0 else TYPE_II


# ---------------------------------------------------------------------------
# certified enumeration
# ---------------------------------------------------------------------------


def _echelon_points(n, h, q, p):
    """Canonical column-echelon bases of free rank-h direct summands of
    (Z/q)^n over the local ring: pivot = first unit entry, normalized to 1;
    entries above a pivot are divisible by p; pivot rows are cleared in the
    other columns.  These cells partition the Grassmannian over Z/q."""
    sub = q // p
    for pivots in itertools.combinations(range(n), h):
        free_pos = []  # (col, row, divisible_flag)
        for c, prow in enumerate(pivots):
            for r in range(n):
                if r == prow or r in pivots:
                    continue
                free_pos.append((c, r, r < prow))
        ranges = [range(sub) if div else range(q) for (_, _, div) in free_pos]
        for values in itertools.product(*ranges):
            cols = [[0] * n for _ in range(h)]
            for c, prow in enumerate(pivots):
                cols[c][prow] = 1
            for (c, r, div), val in zip(free_pos, values):
                cols[c][r] = val * p if div else val
            yield tuple(tuple(c) for c in cols)


def _count_points(n, h, q, p):
    total = 0
    sub = q // p
    for pivots in itertools.combinations(range(n), h):
        cell = 1
        for c, prow in enumerate(pivots):
            for r in range(n):
                if r == prow or r in pivots:
                    continue
                cell *= sub if r < prow else q
        total += cell
    return total


def _scaled_gram(lattice: Lattice, space: SympSpace):
    """(integer Gram rows mod nothing, v1) with G' = p^{-v1} B^T J B."""
    g = lattice.basis.transpose() * space.gram() * lattice.basis
    v1 = int(min(c.val() for row in g.rows for c in row if not c.is_zero()))
    scaled = g * PScalar.unit_power(space.p, -v1)
    return scaled, v1


def exact_isotropic_lift(point, lattice: Lattice, space: SympSpace, nprec: int):
    """Exact isotropic subspace V with (V cap lattice) reducing to the given
    rank-h point of L/p^N L (L-coordinates), or None when the point admits
    no such lift.

    For h = 2 the single pairing value is killed by a one-step correction
    whose size is controlled by the point's precision; failure of the
    valuation bound certifies the point is not in the image.
    """
    p = space.p
    h = len(point)
    cols = [tuple(PScalar(c, p) for c in col) for col in point]
    ambient = [lattice.basis.apply(c) for c in cols]
    if h == 1:
        return IsotropicSubspace(Mat.from_cols(ambient, p), space)
    x, y = ambient
    c = space.pairing(x, y)
    if c.is_zero():
        return IsotropicSubspace(Mat.from_cols([x, y], p), space)
    for side in (0, 1):
        for w in lattice.basis.cols():
            denom = space.pairing(x, w) if side == 0 else space.pairing(w, y)
            if denom.is_zero():
                continue
            t = c / denom
            if t.val() < nprec:
                continue
            if side == 0:
                cand = (x, tuple(y[i] - t * w[i] for i in range(4)))
            else:
                cand = (tuple(x[i] - t * w[i] for i in range(4)), y)
            if not space.pairing(cand[0], cand[1]).is_zero():
                raise AssertionError("pairing correction is inexact")
            return IsotropicSubspace(Mat.from_cols(list(cand), p), space)
    return None


def enumerate_summands(
    chain: LatticeChain, m: int, h: int, budget: int = DEFAULT_POINT_BUDGET
):
    """All families in the image of rank-h isotropic subspaces, as a dict
    {SummandFamily: exact isotropic lift}.

    Enumerates the rank-h summand points of M0/p^N M0 for the window head
    M0 at buffered precision N = m + 1, certifies each surviving point by
    an exact lift, and reduces the lift across the whole chain.  The
    buffer suffices because every other representative sits between p M0
    and M0, so its intersection data is a mod-p condition on the head's.
    """
    if m < 1:
        raise ValueError("m must be >= 1 (the m = 0 stratum is degenerate)")
    if h not in (1, 2):
        raise ValueError("h must be 1 or 2")
    space = chain.space
    p = space.p
    nprec = m + 1
    q = p**nprec
    head = chain.window[0]
    raw = _count_points(4, h, q, p)
    if raw > budget:
        raise BudgetExceeded(f"{raw} candidate points exceeds budget {budget}")
    gram, v1 = _scaled_gram(head, space)
    gram_int = gram.to_int_mod(nprec + 4)
    found = {}
    for point in _echelon_points(4, h, q, p):
        if h == 2:
            a, b = point
            val = sum(a[i] * gram_int[i][j] * b[j] for i in range(4) for j in range(4))
            if val % q:
                continue
        lift = exact_isotropic_lift(point, head, space, nprec)
        if lift is None:
            continue
        fam = reduce_subspace(lift, chain, m)
        if fam not in found:
            found[fam] = lift
    return found


# ---------------------------------------------------------------------------
# congruence solving inside intersection lattices
# ---------------------------------------------------------------------------


def _ival_int(x, p, m):
    q = p**m
    if x % q == 0:
        return m
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def solve_mod(cols, target, m, p):
    """Integer coefficients a with sum a_i cols_i = target mod p^m, or None.

    Howell-augmented elimination so membership is decided correctly over
    the chain ring Z/p^m."""
    q = p**m
    k = len(cols)
    n = len(target)
    pool = [([x % q for x in c], [1 if i == j else 0 for j in range(k)]) for i, c in
            enumerate(cols)]
    pivots = []
    for row in range(n):
        live = [(vec, coef) for vec, coef in pool if any(x % q for x in vec)]
        best, choice = m, None
        for vec, coef in live:
            v = _ival_int(vec[row], p, m)
            if v < best:
                best, choice = v, (vec, coef)
        if choice is None:
            pool = live
            continue
        vec, coef = choice
        rest = [vc for vc in live if vc[0] is not vec]
        v = best
        unit = (vec[row] % q) // p**v
        inv_u = pow(unit, -1, q)
        vec = [(x * inv_u) % q for x in vec]
        coef = [(x * inv_u) % q for x in coef]
        pool = []
        for ov, oc in rest:
            e = ov[row] % q
            if e:
                t = e // p**v
                ov = [(a - t * b) % q for a, b in zip(ov, vec)]
                oc = [(a - t * b) % q for a, b in zip(oc, coef)]
            pool.append((ov, oc))
        if v > 0:
            pool.append(
                ([(p ** (m - v) * x) % q for x in vec], [(p ** (m - v) * x) % q for x in coef])
            )
        pivots.append((row, v, vec, coef))
    t = [x % q for x in target]
    tcoef = [0] * k
    for row, v, vec, coef in pivots:
        e = t[row] % q
        if e == 0:
            continue
        if e % p**v:
            return None
        tt = e // p**v
        t = [(a - tt * b) % q for a, b in zip(t, vec)]
        tcoef = [(a + tt * b) % q for a, b in zip(tcoef, coef)]
    if any(x % q for x in t):
        return None
    return tcoef


def congruent_vector_in(v2: IsotropicSubspace, vec, lattice: Lattice, m: int):
    """An exact vector of span(v2) cap lattice congruent to vec mod p^m
    (lattice scale), or None."""
    space = v2.space
    p = space.p
    local = _intersection_local_cols(v2.basis, lattice)
    prec = m + 6
    int_cols = [tuple(x.residue(prec) for x in c) for c in local]
    target_local = lattice.coords(vec)
    if target_local is None:
        raise NotInLattice("congruence target lies outside the lattice")
    target = tuple(x.residue(prec) for x in target_local)
    coeffs = solve_mod(int_cols, target, m, p)
    if coeffs is None:
        return None
    ambient_cols = [lattice.basis.apply(c) for c in local]
    out = [PScalar.zero(p)] * 4
    for a, col in zip(coeffs, ambient_cols):
        if a:
            s = PScalar(a, p)
            out = [o + s * c for o, c in zip(out, col)]
    return tuple(out)


# ---------------------------------------------------------------------------
# constructive completion lemmas
# ---------------------------------------------------------------------------


def _search_vector(lattice: Lattice, predicate):
    """First basis column or pairwise sum satisfying the predicate."""
    cols = lattice.basis.cols()
    for c in cols:
        if predicate(c):
            return c
    for i in range(len(cols)):
        for j in range(len(cols)):
            if i == j:
                continue
            c = tuple(a + b for a, b in zip(cols[i], cols[j]))
            if predicate(c):
                return c
    return None


def _quotient_basis_lifts(big: Lattice, small: Lattice, count: int, p):
    """Columns of `big` independent in big/small (an F_p space)."""
    chosen = []
    for c in big.basis.cols():
        trial = chosen + [c]
        if _independent_mod(trial, small, p):
            chosen = trial
        if len(chosen) == count:
            return chosen
    raise Singular("quotient basis not found among columns")


def _independent_mod(vecs, small: Lattice, p):
    for coeffs in itertools.product(range(p), repeat=len(vecs)):
        if all(c == 0 for c in coeffs):
            continue
        combo = [PScalar.zero(p)] * 4
        for a, v in zip(coeffs, vecs):
            if a:
                s = PScalar(a, p)
                combo = [x + s * y for x, y in zip(combo, v)]
        if small.member(tuple(combo)):
            return False
    return True


def _dual_pair_in_span(space, x, y, u, v, sx: PScalar, sy: PScalar):
    """z, w in span(u, v) with <x,z> = sx, <y,w> = sy, <x,w> = <y,z> = 0."""
    m11 = space.pairing(x, u)
    m12 = space.pairing(x, v)
    m21 = space.pairing(y, u)
    m22 = space.pairing(y, v)
    det = m11 * m22 - m12 * m21
    if det.is_zero():
        raise Singular("degenerate dual system")
    alpha = sx * m22 / det
    beta = -sx * m21 / det
    gamma = -sy * m12 / det
    delta = sy * m11 / det
    z = tuple(alpha * u[t] + beta * v[t] for t in range(4))
    w = tuple(gamma * u[t] + delta * v[t] for t in range(4))
    return z, w


def _completion_adjust(space, x, y, z, w, x2, y2, m):
    """Solve the 2x2 congruence system and return (z', w') matching the
    pairing table of (x, y, z, w) against (x2, y2); the normalized system
    matrix must lie in 1 + p^m M_2(Z_p)."""
    sx = space.pairing(x, z)
    sy = space.pairing(y, w)
    rows = [
        [space.pairing(x2, z) / sx, space.pairing(y2, z) / sy],
        [space.pairing(x2, w) / sx, space.pairing(y2, w) / sy],
    ]
    for i in range(2):
        for j in range(2):
            entry = rows[i][j]
            if i == j:
                entry = entry - PScalar.one(space.p)
            if entry.val() < m:
                raise PreconditionFailed("completion system is not congruent to 1 mod p^m")
    mat = Mat(rows, space.p)
    inv = mat.inv()
    (a, b), (c, d) = inv.rows
    zp = tuple(a * z[t] + b * w[t] for t in range(4))
    wp = tuple(c * z[t] + d * w[t] for t in range(4))
    return zp, wp


def _witness_from_bases(space, source, target):
    a = Mat.from_cols(list(source), space.p)
    b = Mat.from_cols(list(target), space.p)
    return gsp_check(b * a.inv(), space)


# -- paramodular helpers ----------------------------------------------------


def _para_lattice(chain: LatticeChain) -> Lattice:
    """The window representative scaled to pairing divisors (-1, 0).

    Scaling by p shifts both divisors by 2, so exactly one of the two
    paramodular classes (the one with odd divisors) admits this
    normalization; it is the lattice of the type (I)/(II) analysis."""
    from .chains import adapted_symplectic_basis

    for w in chain.window:
        _, v1, v2 = adapted_symplectic_basis(w, chain.space)
        if v2 == v1 + 1 and v1 % 2 != 0:
            return w.scale((-1 - v1) // 2)
    raise UnsupportedChainType("no paramodular-type representative")


def _adapt_type_basis(cols, lattice, space):
    """Basis (x, y) of the isotropic summand with x type (I), y type (II)."""
    p = space.p
    b1, b2 = cols
    t1 = primitive_type(b1, lattice, space)
    t2 = primitive_type(b2, lattice, space)
    if t1 == TYPE_I:
        x, other = b1, b2
    elif t2 == TYPE_I:
        x, other = b2, b1
    else:
        raise PreconditionFailed("isotropic summand with no type (I) vector")
    if primitive_type(other, lattice, space) == TYPE_II:
        return x, other
    for lam in range(p):
        cand = tuple(other[t] - PScalar(lam, p) * x[t] for t in range(4))
        if primitive_type(cand, lattice, space) == TYPE_II:
            return x, cand
    raise PreconditionFailed("no type (II) adjustment found")


def _para_completion(space, lattice, x, y, u=None):
    """z, w of the paramodular completion lemma: <x,z> = p^{-1}, <y,w> = 1,
    all other pairings zero; when u is supplied, additionally
    <z,u> = <w,u> = 0."""
    p = space.p
    if u is None:
        u = _search_vector(lattice, lambda c: space.pairing(x, c).val() < 0)
        if u is None:
            raise PreconditionFailed("x is not of type (I)")
    # v completing (x, y, u) to a mod-p basis of L/pL
    v = None
    for c in lattice.basis.cols():
        if _independent_mod([x, y, u, c], lattice.scale(1), p):
            v = c
            break
    if v is None:
        raise Singular("cannot complete to a basis mod p")
    a = space.pairing(u, v) / space.pairing(u, x)
    if not a.is_integral():
        raise PreconditionFailed("u does not have the minimal pairing valuation")
    v = tuple(v[t] - a * x[t] for t in range(4))
    z, w = _dual_pair_in_span(
        space, x, y, u, v, PScalar.unit_power(p, -1), PScalar.one(p)
    )
    for vec in (z, w):
        if not lattice.member(vec):
            raise PreconditionFailed("completion left the lattice")
    return z, w


def _para_pair_core(space, lattice, m, x, y, x2, y2):
    """Witness g in K_m with g x = x2, g y = y2, for type-adapted exact
    isotropic pairs congruent mod p^m (the h = 2 paramodular argument)."""
    p = space.p
    delta = tuple((y2[t] - y[t]) * PScalar.unit_power(p, -m) for t in range(4))
    if not lattice.member(delta):
        raise PreconditionFailed("pairs are not congruent mod p^m")
    if space.pairing(x, delta).val() >= 0:
        # arrange that delta is not primitive of type (I)
        if primitive_type(delta, lattice, space) == TYPE_I:
            adjusted = None
            for lam in range(p):
                cand = tuple(delta[t] - PScalar(lam, p) * x[t] for t in range(4))
                if primitive_type(cand, lattice, space) != TYPE_I:
                    adjusted = lam
                    break
            if adjusted is None:
                raise PreconditionFailed("no adjustment kills the type (I) drift")
            shift = PScalar.unit_power(p, m) * PScalar(adjusted, p)
            y = tuple(y[t] + shift * x[t] for t in range(4))
            delta = tuple((y2[t] - y[t]) * PScalar.unit_power(p, -m) for t in range(4))
        u = None
    else:
        u = delta
    z, w = _para_completion(space, lattice, x, y, u=u)
    zp, wp = _completion_adjust(space, x, y, z, w, x2, y2, m)
    return _witness_from_bases(space, (x, y, z, w), (x2, y2, zp, wp))


def _para_unit_pair_type2(space, lattice, x):
    """z of type (II) with <x, z> = 1, for x of type (II)."""
    def ok(c):
        return (
            space.pairing(x, c).is_unit()
            and primitive_type(c, lattice, space) == TYPE_II
        )

    z = _search_vector(lattice, ok)
    if z is None:
        raise PreconditionFailed("no type (II) unit partner")
    return tuple(space.pairing(x, z).inv() * c for c in z)


# -- Siegel helpers ---------------------------------------------------------


def _siegel_case(i0_cols, l1: Lattice, space):
    """Index [I0 : I1] as an exponent in {0, 1, 2}: the codimension of
    (I1 mod p I0) inside I0 / p I0."""
    return 2 - _drop_rank(i0_cols, l1, space.p)


def _drop_rank(cols, small, p):
    """Dimension over F_p of the combinations of cols landing in `small`
    (which contains p * span(cols))."""
    seen = []
    for coeffs in itertools.product(range(p), repeat=len(cols)):
        if all(c == 0 for c in coeffs):
            continue
        combo = [PScalar.zero(p)] * 4
        for a, v in zip(coeffs, cols):
            if a:
                s = PScalar(a, p)
                combo = [x + s * y for x, y in zip(combo, v)]
        if small.member(tuple(combo)):
            seen.append(coeffs)
    # rank of the kernel subspace
    if not seen:
        return 0
    rows = [list(c) for c in seen]
    return _fp_rank_int(rows, p)


def _fp_rank_int(rows, p):
    work = [list(r) for r in rows]
    rank = 0
    row = 0
    for col in range(len(work[0])):
        piv = None
        for r in range(row, len(work)):
            if work[r][col] % p:
                piv = r
                break
        if piv is None:
            continue
        work[row], work[piv] = work[piv], work[row]
        inv = pow(work[row][col], -1, p)
        work[row] = [(inv * t) % p for t in work[row]]
        for r in range(len(work)):
            if r != row and work[r][col] % p:
                t = work[r][col]
                work[r] = [(a - t * b) % p for a, b in zip(work[r], work[row])]
        row += 1
        rank += 1
    return rank


def _siegel_completion(space, l0: Lattice, l1: Lattice, x, y, case: int):
    """z, w of the Siegel case analysis: <x,z> = <y,w> = 1, other pairings
    zero, with z, w located per case (both in L0; z in L1; both in L1)."""
    p = space.p
    one = PScalar.one(p)
    if case == 0:
        from .chains import complete_dual_pair

        z, w, s = complete_dual_pair(x, y, l0, space)
        if s != 0:
            raise PreconditionFailed("self-dual lattice with nonunit divisor")
        return z, w
    if case == 1:
        u = None
        for c in _quotient_basis_lifts(l0, l1, 2, p):
            if _independent_mod([x, c], l1, p):
                u = c
                break
        if u is None:
            raise Singular("no complement to x in L0/L1")
        v = None
        for c in _quotient_basis_lifts(l1, l0.scale(1), 2, p):
            if _independent_mod([y, c], l0.scale(1), p):
                v = c
                break
        if v is None:
            raise Singular("no complement to y in L1/pL0")
        if not space.pairing(u, y).is_unit():
            raise PreconditionFailed("<u, y> fails to be a unit")
        a = space.pairing(u, v) / space.pairing(u, y)
        if not a.is_integral():
            raise PreconditionFailed("nonintegral adjustment in case p")
        v = tuple(v[t] - a * y[t] for t in range(4))
        z, w = _dual_pair_in_span(space, x, y, u, v, one, one)
        if not l1.member(z):
            raise PreconditionFailed("z escaped L1 in case p")
        return z, w
    # case 2: [I0 : I1] = p^2
    lifts = _quotient_basis_lifts(l1, l0.scale(1), 2, p)
    u, v = lifts
    if not space.pairing(u, y).is_unit():
        if space.pairing(v, y).is_unit():
            u, v = v, u
        else:
            combo = tuple(u[t] + v[t] for t in range(4))
            if not space.pairing(combo, y).is_unit():
                raise PreconditionFailed("no unit pairing against y in L1")
            u = combo
    a = space.pairing(u, y).inv() * space.pairing(u, v)
    if a.val() < 1:
        raise PreconditionFailed("adjustment is not divisible by p in case p^2")
    v = tuple(v[t] - a * y[t] for t in range(4))
    if not l1.member(v):
        raise PreconditionFailed("v escaped L1 in case p^2")
    z, w = _dual_pair_in_span(space, x, y, u, v, one, one)
    for vec in (z, w):
        if not l1.member(vec):
            raise PreconditionFailed("completion escaped L1 in case p^2")
    return z, w


def _siegel_pair_witness(space, chain, m, l0, l1, case, x, y, x2, y2):
    z, w = _siegel_completion(space, l0, l1, x, y, case)
    zp, wp = _completion_adjust(space, x, y, z, w, x2, y2, m)
    return _witness_from_bases(space, (x, y, z, w), (x2, y2, zp, wp))


# ---------------------------------------------------------------------------
# congruence witnesses
# ---------------------------------------------------------------------------


def congruence_witness(
    v: IsotropicSubspace, v2: IsotropicSubspace, chain: LatticeChain, m: int
) -> GroupElement:
    """An element g of K_m with g V = V2 (hence g(V cap L) = V2 cap L for
    every representative), constructed per chain type and rank; the
    subspaces must have equal reductions mod p^m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    tag = chain.type_tag
    if tag not in (HYPERSPECIAL, PARAMODULAR, SIEGEL):
        raise UnsupportedChainType(f"no witness construction for {tag}")
    if v.rank != v2.rank or v.rank not in (1, 2):
        raise ValueError("ranks must match and lie in {1, 2}")
    if reduce_subspace(v, chain, m) != reduce_subspace(v2, chain, m):
        raise ReductionMismatch("subspaces have different reductions")
    from .chains import classify_chain, standard_chain

    std = standard_chain(tag, chain.space)
    if chain != std:
        _, gc = classify_chain(chain)
        moved = congruence_witness(v.transform(gc), v2.transform(gc), std, m)
        return gc.inv() * moved * gc
    space = chain.space
    if tag == HYPERSPECIAL:
        g = _hyperspecial_witness(space, chain, m, v, v2)
    elif tag == PARAMODULAR:
        g = _paramodular_witness(space, chain, m, v, v2)
    else:
        g = _siegel_witness_op(space, chain, m, v, v2)
    if not in_K_m(g, chain, m):
        raise AssertionError("witness left K_m")
    if v.transform(g).key() != v2.key():
        raise AssertionError("witness does not map V to V2")
    return g


def _selfdual_head(chain: LatticeChain) -> Lattice:
    from .chains import _selfdual_scaled

    for w in chain.window:
        cand = _selfdual_scaled(w, chain.space)
        if cand is not None:
            return cand
    raise UnsupportedChainType("no self-dual representative")


def _hyperspecial_witness(space, chain, m, v, v2):
    lat = _selfdual_head(chain)
    cols = intersection_lattice_cols(v.basis, lat)
    if v.rank == 2:
        x, y = cols
        x2 = congruent_vector_in(v2, x, lat, m)
        y2 = congruent_vector_in(v2, y, lat, m)
        if x2 is None or y2 is None:
            raise ReductionMismatch("no congruent basis in the target")
        from .chains import complete_dual_pair

        z, w, _ = complete_dual_pair(x, y, lat, space)
        zp, wp = _completion_adjust(space, x, y, z, w, x2, y2, m)
        return _witness_from_bases(space, (x, y, z, w), (x2, y2, zp, wp))
    # h = 1: extend the line inside its perp to a rank-2 isotropic pair
    (x,) = cols
    x2 = congruent_vector_in(v2, x, lat, m)
    if x2 is None:
        raise ReductionMismatch("no congruent generator in the target")
    perp_cols = intersection_lattice_cols(v.perp_basis(), lat)
    y = None
    for c in perp_cols:
        if _independent_mod([x, c], lat.scale(1), space.p):
            y = c
            break
    if y is None:
        raise Singular("perp contains no independent direction")
    perp2 = IsotropicSubspace(v2.perp_basis(), space, check=False)
    y2 = congruent_vector_in(perp2, y, lat, m)
    if y2 is None:
        raise ReductionMismatch("no congruent perp partner")
    from .chains import complete_dual_pair

    z, w, _ = complete_dual_pair(x, y, lat, space)
    zp, wp = _completion_adjust(space, x, y, z, w, x2, y2, m)
    return _witness_from_bases(space, (x, y, z, w), (x2, y2, zp, wp))


def _paramodular_witness(space, chain, m, v, v2):
    lat = _para_lattice(chain)
    p = space.p
    if v.rank == 2:
        cols = intersection_lattice_cols(v.basis, lat)
        x, y = _adapt_type_basis(cols, lat, space)
        x2 = congruent_vector_in(v2, x, lat, m)
        y2 = congruent_vector_in(v2, y, lat, m)
        if x2 is None or y2 is None:
            raise ReductionMismatch("no congruent basis in the target")
        return _para_pair_core(space, lat, m, x, y, x2, y2)
    (x,) = intersection_lattice_cols(v.basis, lat)
    x2 = congruent_vector_in(v2, x, lat, m)
    if x2 is None:
        raise ReductionMismatch("no congruent generator in the target")
    kind = primitive_type(x, lat, space)
    if kind == NOT_PRIMITIVE:
        raise PreconditionFailed("intersection generator is not primitive")
    pm = PScalar.unit_power(p, m)
    if kind == TYPE_I:
        # partner y of type (II), orthogonal to both x and x2
        def zfind(vec):
            cand = _search_vector(lat, lambda c: space.pairing(vec, c).val() == -1)
            if cand is None:
                raise PreconditionFailed("type (I) vector without p^{-1} pairing")
            scale = space.pairing(vec, cand) * PScalar.unit_power(p, 1)
            return tuple(c / scale * PScalar.unit_power(p, 0) for c in cand)

        z = zfind(x)      # <x, z> = p^{-1}
        z2 = zfind(x2)
        y = _search_vector(lat, lambda c: primitive_type(c, lat, space) == TYPE_II)
        corr = space.pairing(x, y) * PScalar.unit_power(p, 1)
        y = tuple(y[t] - corr * z[t] for t in range(4))
        corr2 = space.pairing(x2, y) * PScalar.unit_power(p, 1)
        y2 = tuple(y[t] - corr2 * z2[t] for t in range(4))
        return _para_pair_core(space, lat, m, x, y, x2, y2)
    # type (II) generator
    z = _para_unit_pair_type2(space, lat, x)
    z2 = _para_unit_pair_type2(space, lat, x2)
    delta = tuple((x2[t] - x[t]) * PScalar.unit_power(p, -m) for t in range(4))
    if primitive_type(delta, lat, space) == TYPE_I:
        a = space.pairing(x, delta)
        y = tuple(delta[t] - a * z[t] for t in range(4))
    else:
        w = _search_vector(lat, lambda c: primitive_type(c, lat, space) == TYPE_I)
        aw = space.pairing(x, w)
        y = tuple(w[t] - aw * z[t] for t in range(4))
    a2 = space.pairing(x2, y)
    if a2.val() < m:
        raise PreconditionFailed("partner drifts faster than p^m")
    y2 = tuple(y[t] - a2 * z2[t] for t in range(4))
    return _para_pair_core(space, lat, m, y, x, y2, x2)


def _siegel_witness_op(space, chain, m, v, v2):
    l0, l1 = _siegel_pieces(chain)
    p = space.p
    if v.rank == 2:
        i0 = intersection_lattice_cols(v.basis, l0)
        case = _siegel_case(i0, l1, space)
        i1 = intersection_lattice_cols(v.basis, l1)
        if case == 0:
            x, y = i0
            x2 = congruent_vector_in(v2, x, l1, m)
            y2 = congruent_vector_in(v2, y, l1, m)
        elif case == 1:
            x = next((c for c in i0 if not l1.member(c)), None)
            if x is None:
                x = tuple(i0[0][t] + i0[1][t] for t in range(4))
                if l1.member(x):
                    raise PreconditionFailed("case p without a vector outside L1")
            y = next((c for c in i1 if _independent_mod([c], Lattice(l0.basis * PScalar.unit_power(p, 1), _canonical=True), p)), None)
            if y is None:
                raise PreconditionFailed("case p without I1 generator outside pL0")
            x2 = congruent_vector_in(v2, x, l0, m)
            y2 = congruent_vector_in(v2, y, l1, m)
        else:
            x, y = i0
            x2 = congruent_vector_in(v2, x, l0, m)
            y2 = congruent_vector_in(v2, y, l0, m)
        if x2 is None or y2 is None:
            raise ReductionMismatch("no congruent basis in the target")
        return _siegel_pair_witness(space, chain, m, l0, l1, case, x, y, x2, y2)
    # h = 1
    (x,) = intersection_lattice_cols(v.basis, l0)
    in_l1 = l1.member(x)
    if in_l1:
        x2 = congruent_vector_in(v2, x, l1, m)
    else:
        x2 = congruent_vector_in(v2, x, l0, m)
    if x2 is None:
        raise ReductionMismatch("no congruent generator in the target")
    if in_l1:
        # find y in L0 \ L1 orthogonal to x; pair case has roles swapped
        u = _orthogonal_in_quotient(space, x, l0, l1)
        vsolve = _search_vector(l0, lambda c: space.pairing(x, c).is_unit())
        if vsolve is None:
            raise Singular("no unit pairing against x in L0")
        au = space.pairing(x, u) / space.pairing(x, vsolve)
        y = tuple(u[t] - au * vsolve[t] for t in range(4))
        z = _search_vector(l0, lambda c: space.pairing(x2, c).is_unit())
        ay = space.pairing(x2, y) / space.pairing(x2, z)
        if ay.val() < m:
            raise PreconditionFailed("drift exceeds p^m")
        y2 = tuple(y[t] - ay * z[t] for t in range(4))
        return _siegel_pair_witness(space, chain, m, l0, l1, 1, y, x, y2, x2)
    u = _orthogonal_in_quotient(space, x, l1, Lattice(l0.basis * PScalar.unit_power(p, 1), _canonical=True))
    vsolve = _search_vector(l0, lambda c: space.pairing(x, c).is_unit())
    au = space.pairing(x, u) / space.pairing(x, vsolve)
    y = tuple(u[t] - au * vsolve[t] for t in range(4))
    z = _search_vector(l1, lambda c: space.pairing(x2, c).is_unit())
    if z is None:
        raise PreconditionFailed("no unit pairing against x2 inside L1")
    ay = space.pairing(x2, y) / space.pairing(x2, z)
    if ay.val() < m:
        raise PreconditionFailed("drift exceeds p^m")
    y2 = tuple(y[t] - ay * z[t] for t in range(4))
    return _siegel_pair_witness(space, chain, m, l0, l1, 1, x, y, x2, y2)


def _orthogonal_in_quotient(space, x, big: Lattice, small: Lattice):
    """u in big, nonzero mod small, with <x, u> = 0 mod p (exact pairing
    divisible by p)."""
    p = space.p
    lifts = _quotient_basis_lifts(big, small, 2, p)
    for coeffs in itertools.product(range(p), repeat=2):
        if all(c == 0 for c in coeffs):
            continue
        combo = [PScalar.zero(p)] * 4
        for a, vv in zip(coeffs, lifts):
            if a:
                s = PScalar(a, p)
                combo = [t + s * w for t, w in zip(combo, vv)]
        combo = tuple(combo)
        if space.pairing(x, combo).val() >= 1 and not small.member(combo):
            return combo
    raise Singular("no orthogonal direction in the quotient")


def complete_symplectic_basis(iso: IsotropicSubspace, chain: LatticeChain, u=None):
    """Adapted basis (x, y) of the rank-2 intersection with the chain's
    distinguished lattice, together with the completion (z, w) satisfying
    the exact pairing table of the corresponding case analysis:
    hyperspecial and Siegel have <x,z> = <y,w> = 1; paramodular has
    <x,z> = p^{-1}, <y,w> = 1; all other pairings vanish."""
    if iso.rank != 2:
        raise PreconditionFailed("completion requires a rank-2 subspace")
    space = chain.space
    tag = chain.type_tag
    if tag == HYPERSPECIAL:
        lat = _selfdual_head(chain)
        x, y = intersection_lattice_cols(iso.basis, lat)
        from .chains import complete_dual_pair

        z, w, _ = complete_dual_pair(x, y, lat, space)
        return x, y, z, w
    if tag == PARAMODULAR:
        lat = _para_lattice(chain)
        cols = intersection_lattice_cols(iso.basis, lat)
        x, y = _adapt_type_basis(cols, lat, space)
        z, w = _para_completion(space, lat, x, y, u=u)
        return x, y, z, w
    if tag == SIEGEL:
        l0, l1 = _siegel_pieces(chain)
        i0 = intersection_lattice_cols(iso.basis, l0)
        case = _siegel_case(i0, l1, space)
        if case == 0:
            x, y = i0
        elif case == 2:
            x, y = i0
        else:
            i1 = intersection_lattice_cols(iso.basis, l1)
            x = next(c for c in i0 if not l1.member(c))
            y = next(c for c in i1 if not l0.scale(1).member(c))
        z, w = _siegel_completion(space, l0, l1, x, y, case)
        return x, y, z, w
    raise UnsupportedChainType(f"no completion table for {tag}")


# ---------------------------------------------------------------------------
# congruence subgroup generators and the action on families
# ---------------------------------------------------------------------------


def km_generators(chain: LatticeChain, m: int):
    """Exact elements of K_m: coordinate/mixed transvections at their
    minimal admissible depth, and near-identity torus elements.  Every
    returned element is verified by the membership predicate."""
    space = chain.space
    p = space.p
    gens = []
    directions = []
    for i in range(4):
        directions.append(space.basis_vector(i))
    for i in range(4):
        for j in range(i + 1, 4):
            e, f = space.basis_vector(i), space.basis_vector(j)
            directions.append(tuple(a + b for a, b in zip(e, f)))
            directions.append(tuple(a - b for a, b in zip(e, f)))
    for v in directions:
        for k in range(max(0, m - 2), m + 3):
            t = transvection(space, v, PScalar.unit_power(p, k))
            if in_K_m(t, chain, m):
                gens.append(t)
                break
    for idx in range(4):
        for k in range(max(0, m - 2), m + 3):
            t = short_root_shears(space, PScalar.unit_power(p, k))[idx]
            if in_K_m(t, chain, m):
                gens.append(t)
                break
    u = 1 + p**m
    for a, b, c in ((u, 1, 1), (1, u, 1), (1, 1, u), (u, u, u * u)):
        t = torus_element(space, a, b, c)
        if in_K_m(t, chain, m):
            gens.append(t)
    return gens


def random_km_element(chain: LatticeChain, m: int, rng, length=5, gens=None):
    if gens is None:
        gens = km_generators(chain, m)
    space = chain.space
    g = gsp_check(Mat.identity(4, space.p), space)
    for _ in range(length):
        h = rng.choice(gens)
        if rng.random() < 0.4:
            h = h.inv()
        g = g * h
    return g


def action_matrices(g: GroupElement, chain: LatticeChain, prec: int):
    """Per-window-slot action data for g in N: target slot i receives the
    source slot j with integer matrix M = p^{-k} B_i^{-1} g B_j mod p^prec,
    where g L_j = p^k L_i."""
    space = chain.space
    out = [None] * len(chain.window)
    for j, w in enumerate(chain.window):
        moved = w.transform(g)
        located = chain.class_index(moved)
        if located is None:
            raise PreconditionFailed("element does not normalize the chain")
        i, k = located
        mat = chain.window[i].basis.inv() * g.mat * w.basis * PScalar.unit_power(space.p, -k)
        out[i] = (j, mat.to_int_mod(prec))
    return tuple(out)


def apply_family(amats, fam: SummandFamily) -> SummandFamily:
    p = fam.chain.p
    m = fam.m
    q = p**m
    new_data = []
    for slot in amats:
        j, rows = slot
        cols = [
            tuple(sum(rows[r][t] * col[t] for t in range(4)) % q for r in range(4))
            for col in fam.data[j]
        ]
        new_data.append(howell_mod(cols, 4, m, p))
    return SummandFamily(fam.chain, m, fam.h, new_data)


def equivariant_reduce_check(g: GroupElement, v: IsotropicSubspace, chain, m) -> bool:
    """reduce(gV) equals the g-action on reduce(V)."""
    left = reduce_subspace(v.transform(g), chain, m)
    right = apply_family(action_matrices(g, chain, m), reduce_subspace(v, chain, m))
    return left == right


# ---------------------------------------------------------------------------
# orbit counting and the bijection check
# ---------------------------------------------------------------------------


class _UnionFind:
    def __init__(self, keys):
        self.parent = {k: k for k in keys}

    def find(self, k):
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def count(self):
        return len({self.find(k) for k in self.parent})


def verify_bijection(
    chain: LatticeChain,
    m: int,
    h: int,
    budget: int = DEFAULT_POINT_BUDGET,
    gens=None,
):
    """Compare the number of K_m-orbits on isotropic subspaces (computed by
    generator closure on mod-p^(m+1) family data) against the number of
    mod-p^m families.  Equality is the content of the orbit bijection for
    the hyperspecial, paramodular and Siegel types; other types run as an
    exploratory, non-theorem report."""
    summands = enumerate_summands(chain, m, h, budget=budget)
    ground = enumerate_summands(chain, m + 1, h, budget=budget)
    if gens is None:
        gens = km_generators(chain, m)
    amats = [action_matrices(g, chain, m + 1) for g in gens]
    uf = _UnionFind([fam.key() for fam in ground])
    for fam in ground:
        for am in amats:
            moved = apply_family(am, fam)
            if moved.key() not in uf.parent:
                raise AssertionError("orbit closure escaped the certified image set")
            uf.union(fam.key(), moved.key())
    orbit_count = uf.count()
    summand_count = len(summands)
    return {
        "type": chain.type_tag,
        "m": m,
        "h": h,
        "orbit_count": orbit_count,
        "summand_count": summand_count,
        "equal": orbit_count == summand_count,
        "theorem": chain.type_tag in (HYPERSPECIAL, PARAMODULAR, SIEGEL),
    }


def fixed_summands(g: GroupElement, chain: LatticeChain, m: int, budget=DEFAULT_POINT_BUDGET):
    """All families alpha in S_{L,m} (ranks 1 and 2) with g . alpha = alpha;
    g must normalize the chain."""
    if not in_N(g, chain):
        raise PreconditionFailed("element does not normalize the chain")
    amats = action_matrices(g, chain, m)
    fixed = []
    for h in (1, 2):
        for fam in enumerate_summands(chain, m, h, budget=budget):
            if apply_family(amats, fam) == fam:
                fixed.append(fam)
    return fixed
