"""The Lagrangian flag variety of GSp(4) realized over finite fields:
enumeration of Lagrangian planes, fixed-point counts of regular
semisimple elements (the d! 2^(d-1) = 4 count for d = 2), and a
first-order rigidity check over the dual numbers.

The count is a Weyl-orbit cardinality independent of the base field, so
the finite models give an exact desk-scale verification.  Elements whose
eigenvalues are not rational over the base field are counted over their
splitting field (no split regular element exists over F_3 at all: the
four eigenvalues cannot be distinct inside a 2-element unit group).
"""

from __future__ import annotations

import itertools

from .errors import BudgetExceeded, DimensionMismatch, NotRegular

_FLAG_BUDGET = 10**7


class GF:
    """Small finite field F_{p^k} with table-based arithmetic.

    Elements are integer labels 0..q-1; the label of a polynomial
    representative (a_0, ..., a_{k-1}) is sum a_i p^i, so F_p embeds as
    the labels 0..p-1."""

    def __init__(self, p, k=1):
        self.p = p
        self.k = k
        self.q = p**k
        if k == 1:
            self.modulus = None
        else:
            self.modulus = self._find_irreducible(p, k)
        self._build_tables()

    @staticmethod
    def _find_irreducible(p, k):
        from .padic import fp_is_irreducible

        for tail in itertools.product(range(p), repeat=k):
            poly = list(tail) + [1]
            if fp_is_irreducible(poly, p):
                return tuple(poly)
        raise ValueError("no irreducible modulus found")

    def _tuple(self, label):
        out = []
        for _ in range(self.k):
            out.append(label % self.p)
            label //= self.p
        return tuple(out)

    def _label(self, tup):
        acc = 0
        for c in reversed(tup):
            acc = acc * self.p + (c % self.p)
        return acc

    def _build_tables(self):
        q, p, k = self.q, self.p, self.k
        self.add_t = [[0] * q for _ in range(q)]
        self.mul_t = [[0] * q for _ in range(q)]
        self.neg_t = [0] * q
        self.inv_t = [0] * q
        for a in range(q):
            ta = self._tuple(a)
            self.neg_t[a] = self._label(tuple(-x % p for x in ta))
            for b in range(a, q):
                tb = self._tuple(b)
                s = self._label(tuple((x + y) % p for x, y in zip(ta, tb)))
                self.add_t[a][b] = self.add_t[b][a] = s
                m = self._poly_mul(ta, tb)
                self.mul_t[a][b] = self.mul_t[b][a] = m
        for a in range(1, q):
            self.inv_t[a] = self._pow(a, q - 2)

    def _poly_mul(self, ta, tb):
        p, k = self.p, self.k
        if k == 1:
            return (ta[0] * tb[0]) % p
        out = [0] * (2 * k - 1)
        for i, x in enumerate(ta):
            if x:
                for j, y in enumerate(tb):
                    out[i + j] = (out[i + j] + x * y) % p
        for deg in range(2 * k - 2, k - 1, -1):
            c = out[deg]
            if c:
                out[deg] = 0
                for i in range(k):
                    out[deg - k + i] = (out[deg - k + i] - c * self.modulus[i]) % p
        return self._label(tuple(out[:k]))

    def _pow(self, a, e):
        acc = 1
        base = a
        while e:
            if e & 1:
                acc = self.mul_t[acc][base]
            base = self.mul_t[base][base]
            e >>= 1
        return acc

    # public interface -----------------------------------------------

    def zero(self):
        return 0

    def one(self):
        return 1

    def embed(self, n: int):
        return n % self.p

    def elements(self):
        return list(range(self.q))

    def add(self, a, b):
        return self.add_t[a][b]

    def sub(self, a, b):
        return self.add_t[a][self.neg_t[b]]

    def neg(self, a):
        return self.neg_t[a]

    def mul(self, a, b):
        return self.mul_t[a][b]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError
        return self.inv_t[a]

    def power(self, a, e):
        return self._pow(a, e)

    def is_zero(self, a):
        return a == 0


def embed_matrix(field_small: GF, field_big: GF, rows):
    """Embed a matrix with F_p-labels into a bigger field of the same p."""
    if field_small.p != field_big.p or field_small.k != 1:
        raise DimensionMismatch("embedding requires a prime base field")
    return tuple(tuple(field_big.embed(x) for x in row) for row in rows)


def _mat_mul(field, a, b):
    n = len(a)
    m = len(b[0])
    kk = len(b)
    mul, add = field.mul_t, field.add_t
    out = []
    for i in range(n):
        row = []
        ai = a[i]
        for j in range(m):
            acc = 0
            for t in range(kk):
                acc = add[acc][mul[ai[t]][b[t][j]]]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def _mat_vec(field, rows, col):
    mul, add = field.mul_t, field.add_t
    out = []
    for row in rows:
        acc = 0
        for x, y in zip(row, col):
            if x and y:
                acc = add[acc][mul[x][y]]
        out.append(acc)
    return tuple(out)


def _rref_cols(field, cols, n):
    """Reduced column echelon form; canonical per subspace."""
    cols = [list(c) for c in cols]
    placed = []
    for row in range(n):
        piv = None
        for c in cols:
            if c[row]:
                piv = c
                break
        if piv is None:
            continue
        cols.remove(piv)
        inv = field.inv_t[piv[row]]
        piv = [field.mul_t[inv][x] for x in piv]
        for c in cols + placed:
            t = c[row]
            if t:
                for r in range(n):
                    c[r] = field.sub(c[r], field.mul_t[t][piv[r]])
        placed.append(piv)
    return tuple(tuple(c) for c in placed)


def symplectic_gram_rows(field, d):
    n = 2 * d
    rows = [[0] * n for _ in range(n)]
    for i in range(d):
        rows[i][n - 1 - i] = 1
        rows[n - 1 - i][i] = field.neg_t[1]
    return tuple(tuple(r) for r in rows)


def _pairing(field, gram, x, y):
    acc = 0
    mul, add = field.mul_t, field.add_t
    for i, xi in enumerate(x):
        if not xi:
            continue
        row = gram[i]
        for j, yj in enumerate(y):
            gij = row[j]
            if gij and yj:
                acc = add[acc][mul[xi][mul[gij][yj]]]
    return acc


class FlagPoint:
    """A Lagrangian d-subspace of F_q^(2d), canonically presented."""

    __slots__ = ("cols", "field")

    def __init__(self, cols, field):
        self.cols = cols
        self.field = field

    def __eq__(self, other):
        return isinstance(other, FlagPoint) and self.cols == other.cols

    def __hash__(self):
        return hash(self.cols)


def enumerate_flag(field: GF, d=2):
    """All Lagrangian d-subspaces of F_q^(2d), as canonical FlagPoints."""
    n = 2 * d
    if field.q ** (d * d) * 2 * n > _FLAG_BUDGET:
        raise BudgetExceeded("flag enumeration exceeds budget")
    gram = symplectic_gram_rows(field, d)
    elements = field.elements()
    points = set()
    for pivots in itertools.combinations(range(n), d):
        free_pos = []
        for c, prow in enumerate(pivots):
            for r in range(n):
                if r in pivots or r < prow:
                    continue
                free_pos.append((c, r))
        for values in itertools.product(elements, repeat=len(free_pos)):
            cols = [[0] * n for _ in range(d)]
            for c, prow in enumerate(pivots):
                cols[c][prow] = 1
            for (c, r), val in zip(free_pos, values):
                cols[c][r] = val
            ok = True
            for i in range(d):
                for j in range(i + 1, d):
                    if _pairing(field, gram, cols[i], cols[j]):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                points.add(FlagPoint(tuple(tuple(c) for c in cols), field))
    return points


def lagrangian_count_formula(q, d=2):
    """prod_{i=1..d} (q^i + 1): 15, 40, 156, 400 for q = 2, 3, 5, 7 at d=2."""
    out = 1
    for i in range(1, d + 1):
        out *= q**i + 1
    return out


def char_poly_field(field, rows):
    """Characteristic polynomial coefficients (low degree first): the
    x^(n-k) coefficient is (-1)^k times the sum of principal k-minors."""
    n = len(rows)
    coeffs = [0] * (n + 1)
    for k in range(n + 1):
        total = 0
        for idx in itertools.combinations(range(n), k):
            total = field.add(total, _minor_det(field, rows, idx))
        if k % 2 == 1:
            total = field.neg(total)
        coeffs[n - k] = total
    return coeffs


def _minor_det(field, rows, idx):
    k = len(idx)
    if k == 0:
        return 1
    det = 0
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        term = 1
        for i in range(k):
            term = field.mul(term, rows[idx[i]][idx[perm[i]]])
            if not term:
                break
        det = field.add(det, term if sign == 1 else field.neg(term))
    return det


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def is_regular_semisimple(field: GF, rows) -> bool:
    """Squarefree characteristic polynomial (gcd with derivative constant)."""
    coeffs = char_poly_field(field, rows)
    deriv = [field.mul(field.embed(k), c) for k, c in enumerate(coeffs)][1:]
    return _poly_gcd_deg(field, coeffs, deriv) == 0


def _poly_gcd_deg(field, f, g):
    f = _trim_field(field, f)
    g = _trim_field(field, g)
    while g:
        f, g = g, _poly_mod(field, f, g)
    return len(f) - 1


def _trim_field(field, f):
    f = list(f)
    while f and not f[-1]:
        f.pop()
    return f


def _poly_mod(field, f, g):
    f = _trim_field(field, f)
    g = _trim_field(field, g)
    inv = field.inv(g[-1])
    while f and len(f) >= len(g):
        c = field.mul(f[-1], inv)
        shift = len(f) - len(g)
        for i, x in enumerate(g):
            f[shift + i] = field.sub(f[shift + i], field.mul(c, x))
        f = _trim_field(field, f)
    return f


def splitting_degree(field: GF, rows) -> int:
    """lcm of the degrees of the irreducible factors of the char poly
    (prime base field only): the eigenvalues live in F_{q^this}."""
    from math import lcm

    from .padic import fp_factor

    if field.k != 1:
        raise DimensionMismatch("splitting degree is computed over F_p")
    coeffs = char_poly_field(field, rows)
    parts = fp_factor(list(coeffs), field.p)
    return lcm(*[len(g) - 1 for g in parts])


def fixed_flag_points(field: GF, rows, d=2, require_regular=True, points=None):
    """Number of Lagrangian subspaces over the field fixed by the matrix.

    For a regular semisimple element whose eigenvalues are rational over
    the field, the count is d! 2^(d-1); NotRegular is raised when the
    char poly has a repeated root and regularity is demanded."""
    if len(rows) != 2 * d:
        raise DimensionMismatch("matrix size must be 2d")
    if require_regular and not is_regular_semisimple(field, rows):
        raise NotRegular("characteristic polynomial is not squarefree")
    if points is None:
        points = enumerate_flag(field, d)
    count = 0
    for pt in points:
        image = [_mat_vec(field, rows, col) for col in pt.cols]
        if _rref_cols(field, image, 2 * d) == pt.cols:
            count += 1
    return count


def fixed_points_over_splitting_field(base: GF, rows, d=2, cache=None):
    """Embed the element into the splitting field of its char poly and
    count the fixed Lagrangian subspaces there.  `cache` maps (p, degree)
    to a (field, points) pair and is filled on demand."""
    deg = splitting_degree(base, rows)
    if cache is None:
        cache = {}
    key = (base.p, deg)
    if key not in cache:
        big = base if deg == 1 else GF(base.p, deg)
        cache[key] = (big, enumerate_flag(big, d))
    big, points = cache[key]
    brows = rows if deg == 1 else embed_matrix(base, big, rows)
    return fixed_flag_points(big, brows, d=d, points=points)


def first_order_rigidity(field: GF, rows, pt: FlagPoint, d=2) -> bool:
    """No infinitesimally-near fixed Lagrangian over F_q[eps]/(eps^2): the
    linearized fixed-point equations at the flag admit only the zero
    deformation.  This is the finite model's multiplicity-one proxy."""
    n = 2 * d
    gram = symplectic_gram_rows(field, d)
    pivot_rows = [next(i for i, x in enumerate(c) if x) for c in pt.cols]
    free_rows = [r for r in range(n) if r not in pivot_rows]
    unknown_pos = [(c, r) for c in range(d) for r in free_rows]
    gb = [_mat_vec(field, rows, col) for col in pt.cols]
    m0 = _solve_in_span(field, pt.cols, gb, n)
    if m0 is None:
        return False
    eqs = []
    # fixed-point equation projected to the free rows: (g C - C M0)_r = 0
    for col in range(d):
        for r in free_rows:
            coeffs = {}
            for c2, r2 in unknown_pos:
                val = 0
                if c2 == col:
                    val = field.add(val, rows[r][r2])
                if r2 == r:
                    val = field.sub(val, m0[c2][col])
                if val:
                    coeffs[(c2, r2)] = val
            eqs.append(coeffs)
    # isotropy to first order: <B_i, C_j> + <C_i, B_j> = 0
    for i in range(d):
        for j in range(i + 1, d):
            coeffs = {}
            for c2, r2 in unknown_pos:
                val = 0
                if c2 == j:
                    val = field.add(val, _pairing_row(field, gram, pt.cols[i], r2))
                if c2 == i:
                    val = field.sub(val, _pairing_row(field, gram, pt.cols[j], r2))
                if val:
                    coeffs[(c2, r2)] = val
            eqs.append(coeffs)
    return _sparse_rank(field, eqs, unknown_pos) == len(unknown_pos)


def _pairing_row(field, gram, vec, r):
    acc = 0
    for i, xi in enumerate(vec):
        if xi and gram[i][r]:
            acc = field.add(acc, field.mul(xi, gram[i][r]))
    return acc


def _solve_in_span(field, basis_cols, targets, n):
    """Matrix M with targets = basis * M (columns), or None."""
    d = len(basis_cols)
    m = []
    for tgt in targets:
        work = [list(c) for c in basis_cols]
        t = list(tgt)
        coeffs = [0] * d
        live = list(range(d))
        for row in range(n):
            piv = None
            for idx in live:
                if work[idx][row]:
                    piv = idx
                    break
            if piv is None:
                continue
            live.remove(piv)
            inv = field.inv(work[piv][row])
            factor = field.mul(t[row], inv)
            coeffs[piv] = factor
            for r in range(n):
                t[r] = field.sub(t[r], field.mul(factor, work[piv][r]))
            for idx in live:
                f2 = field.mul(work[idx][row], inv)
                if f2:
                    for r in range(n):
                        work[idx][r] = field.sub(work[idx][r], field.mul(f2, work[piv][r]))
        if any(t):
            return None
        m.append(coeffs)
    return [[m[col][t] for col in range(d)] for t in range(d)]


def _sparse_rank(field, eqs, unknowns):
    index = {u: i for i, u in enumerate(unknowns)}
    dense = [[0] * len(unknowns) for _ in eqs]
    for rowi, coeffs in enumerate(eqs):
        for k, v in coeffs.items():
            dense[rowi][index[k]] = v
    rank = 0
    rowpos = 0
    for col in range(len(unknowns)):
        piv = None
        for r in range(rowpos, len(dense)):
            if dense[r][col]:
                piv = r
                break
        if piv is None:
            continue
        dense[rowpos], dense[piv] = dense[piv], dense[rowpos]
        inv = field.inv(dense[rowpos][col])
        dense[rowpos] = [field.mul(inv, x) for x in dense[rowpos]]
        for r in range(len(dense)):
            if r != rowpos and dense[r][col]:
                t = dense[r][col]
                dense[r] = [field.sub(a, field.mul(t, b)) for a, b in zip(dense[r], dense[rowpos])]
        rowpos += 1
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# random regular elements of GSp_4(F_q)
# ---------------------------------------------------------------------------


def random_split_regular(field: GF, rng, d=2):
    """A random regular semisimple element with four distinct eigenvalues
    in F_q: a random symplectic conjugate of diag(a, b, c/b, c/a).  Needs
    at least four units, so q >= 5."""
    if d != 2:
        raise DimensionMismatch("d = 2 only")
    if field.q < 5:
        raise NotRegular("no split regular element exists for q < 5")
    units = [x for x in field.elements() if x]
    while True:
        a, b, c = rng.choice(units), rng.choice(units), rng.choice(units)
        eigs = [a, b, field.mul(c, field.inv(b)), field.mul(c, field.inv(a))]
        if len(set(eigs)) == 4:
            break
    g = tuple(tuple(eigs[i] if i == j else 0 for j in range(4)) for i in range(4))
    conj = random_symplectic(field, rng)
    return _mat_mul(field, conj, _mat_mul(field, g, _inverse_matrix(field, conj)))


def random_regular(field: GF, rng, d=2, max_tries=500, max_split_degree=2):
    """A random regular semisimple element of GSp_4(F_q) from random
    symplectic words, with eigenvalues confined to F_{q^max_split_degree}
    so the splitting-field count stays enumerable."""
    for _ in range(max_tries):
        g = random_symplectic(field, rng, length=rng.randrange(4, 9))
        if not is_regular_semisimple(field, g):
            continue
        if splitting_degree(field, g) <= max_split_degree:
            return g
    raise NotRegular("no regular element found in budget")


def random_symplectic(field: GF, rng, length=8):
    n = 4
    gram = symplectic_gram_rows(field, 2)
    acc = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
    elements = field.elements()
    basis = [tuple(1 if t == j else 0 for t in range(n)) for j in range(n)]
    for _ in range(length):
        c = rng.choice(elements)
        v = tuple(rng.choice(elements) for _ in range(n))
        if not any(v):
            continue
        rows = []
        pairings = [_pairing(field, gram, e_j, v) for e_j in basis]
        for i in range(n):
            row = []
            for j in range(n):
                val = field.mul(c, field.mul(pairings[j], v[i]))
                if i == j:
                    val = field.add(val, 1)
                row.append(val)
            rows.append(tuple(row))
        acc = _mat_mul(field, tuple(rows), acc)
    return acc


def _inverse_matrix(field: GF, rows):
    n = len(rows)
    work = [list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(rows)]
    for i in range(n):
        piv = None
        for r in range(i, n):
            if work[r][i]:
                piv = r
                break
        if piv is None:
            raise DimensionMismatch("singular matrix")
        work[i], work[piv] = work[piv], work[i]
        inv = field.inv(work[i][i])
        work[i] = [field.mul(inv, x) for x in work[i]]
        for r in range(n):
            if r != i and work[r][i]:
                t = work[r][i]
                work[r] = [field.sub(a, field.mul(t, b)) for a, b in zip(work[r], work[i])]
    return tuple(tuple(r[n:]) for r in work)
