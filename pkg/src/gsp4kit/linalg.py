"""Exact linear algebra over Q_p scalars: dense matrices, the column
Hermite normal form over the local ring Z_(p) used to canonicalize
lattices, Smith form for lattice intersections, and Howell canonical
forms of submodules of (Z/p^m)^n.
"""

from __future__ import annotations

from .errors import Singular
from .padic import PScalar

INF = float("inf")


class Mat:
    """Immutable dense matrix over PScalar."""

    __slots__ = ("rows", "p")

    def __init__(self, rows, p):
        self.p = p
        self.rows = tuple(
            tuple(c if isinstance(c, PScalar) else PScalar(c, p) for c in row) for row in rows
        )

    @classmethod
    def identity(cls, n, p):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], p)

    @classmethod
    def zeros(cls, r, c, p):
        return cls([[0] * c for _ in range(r)], p)

    @classmethod
    def diag(cls, entries, p):
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)], p)

    @classmethod
    def from_cols(cls, cols, p):
        n = len(cols[0])
        return cls([[cols[j][i] for j in range(len(cols))] for i in range(n)], p)

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def col(self, j):
        return tuple(row[j] for row in self.rows)

    def cols(self):
        _, c = self.shape
        return [self.col(j) for j in range(c)]

    def transpose(self):
        return Mat(list(zip(*self.rows)), self.p)

    def __mul__(self, other):
        if isinstance(other, Mat):
            n, k = self.shape
            k2, m = other.shape
            if k != k2:
                raise ValueError("shape mismatch")
            ocols = other.cols()
            return Mat(
                [[_dot(self.rows[i], ocols[j]) for j in range(m)] for i in range(n)], self.p
            )
        if isinstance(other, PScalar):
            return Mat([[c * other for c in row] for row in self.rows], self.p)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, PScalar)):
            s = other if isinstance(other, PScalar) else PScalar(other, self.p)
            return Mat([[c * s for c in row] for row in self.rows], self.p)
        return NotImplemented

    def __add__(self, other):
        return Mat(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)], self.p
        )

    def __sub__(self, other):
        return Mat(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)], self.p
        )

    def __neg__(self):
        return Mat([[-c for c in row] for row in self.rows], self.p)

    def apply(self, vec):
        return tuple(_dot(row, vec) for row in self.rows)

    def __eq__(self, other):
        return isinstance(other, Mat) and self.p == other.p and self.rows == other.rows

    def __hash__(self):
        return hash((self.p, self.rows))

    def is_integral(self):
        return all(c.is_integral() for row in self.rows for c in row)

    def min_val(self):
        vals = [c.val() for row in self.rows for c in row]
        return min(vals) if vals else INF

    def to_int_mod(self, m):
        """Rows of integer residues mod p^m; requires p-integral entries."""
        return tuple(tuple(c.residue(m) for c in row) for row in self.rows)

    def det(self):
        n, c = self.shape
        if n != c:
            raise ValueError("determinant of non-square matrix")
        work = [list(row) for row in self.rows]
        det = PScalar.one(self.p)
        for i in range(n):
            piv = None
            best = INF
            for r in range(i, n):
                v = work[r][i].val()
                if v < best:
                    best, piv = v, r
            if piv is None or work[piv][i].is_zero():
                return PScalar.zero(self.p)
            if piv != i:
                work[i], work[piv] = work[piv], work[i]
                det = -det
            det = det * work[i][i]
            inv = work[i][i].inv()
            for r in range(i + 1, n):
                if work[r][i].is_zero():
                    continue
                t = work[r][i] * inv
                work[r] = [a - t * b for a, b in zip(work[r], work[i])]
        return det

    def inv(self):
        n, c = self.shape
        if n != c:
            raise ValueError("inverse of non-square matrix")
        work = [list(row) + list(ident_row) for row, ident_row in zip(self.rows, Mat.identity(n, self.p).rows)]
        for i in range(n):
            piv = None
            best = INF
            for r in range(i, n):
                v = work[r][i].val()
                if v < best:
                    best, piv = v, r
            if piv is None or work[piv][i].is_zero():
                raise Singular("matrix is singular")
            if piv != i:
                work[i], work[piv] = work[piv], work[i]
            inv_piv = work[i][i].inv()
            work[i] = [a * inv_piv for a in work[i]]
            for r in range(n):
                if r == i or work[r][i].is_zero():
                    continue
                t = work[r][i]
                work[r] = [a - t * b for a, b in zip(work[r], work[i])]
        return Mat([row[n:] for row in work], self.p)

    def format(self):
        """Row-major serialization as PScalar strings."""
        return " ".join(c.format() for row in self.rows for c in row)

    @classmethod
    def parse(cls, text, n, m, p):
        parts = text.split()
        if len(parts) != n * m:
            raise ValueError(f"expected {n * m} entries, got {len(parts)}")
        vals = [PScalar.parse(t, p) for t in parts]
        return cls([vals[i * m : (i + 1) * m] for i in range(n)], p)

    def __repr__(self):
        return f"Mat({[[c.format() for c in row] for row in self.rows]}, p={self.p})"


def _dot(row, col):
    acc = None
    for a, b in zip(row, col):
        term = a * b
        acc = term if acc is None else acc + term
    return acc


# ---------------------------------------------------------------------------
# Hermite normal form over Z_(p)
# ---------------------------------------------------------------------------


def hnf_zp(mat: Mat) -> Mat:
    """Canonical column HNF of a full-rank lattice basis over Z_(p).

    The result is lower triangular with diagonal p^{a_i} and each
    below-diagonal entry a canonical integer residue in [0, p^{a_row}).
    Two generating sets span the same lattice iff their HNFs are equal.
    """
    p = mat.p
    n, k = mat.shape
    cols = [list(c) for c in mat.cols()]
    placed = []
    for i in range(n):
        piv_idx, best = None, INF
        for idx, c in enumerate(cols):
            v = c[i].val()
            if v < best:
                best, piv_idx = v, idx
        if piv_idx is None or cols[piv_idx][i].is_zero():
            raise Singular("columns do not span a full-rank lattice")
        piv = cols.pop(piv_idx)
        unit = piv[i] * PScalar.unit_power(p, -int(piv[i].val()))
        inv_unit = unit.inv()
        piv = [c * inv_unit for c in piv]
        for c in cols:
            if c[i].is_zero():
                continue
            t = c[i] / piv[i]
            for r in range(i, n):
                c[r] = c[r] - t * piv[r]
        placed.append(piv)
    # canonical reduction below the diagonal
    for j in range(n):
        for i in range(j + 1, n):
            a_i = int(placed[i][i].val())
            entry = placed[j][i]
            delta = (entry - entry.canonical_mod(a_i)) / placed[i][i]
            if not delta.is_zero():
                for row in range(i, n):
                    placed[j][row] = placed[j][row] - delta * placed[i][row]
    return Mat.from_cols(placed, p)


def smith_zp(mat: Mat):
    """Smith form over Z_(p) of a full-column-rank matrix.

    Returns (exponents, colspace) with mat = U * diag(p^e) * V for
    unimodular U, V over Z_(p), and colspace the matrix P such that
    {c : mat @ c integral} = P * diag(p^{-e}) * Z_(p)^k.
    """
    p = mat.p
    n, k = mat.shape
    work = [list(row) for row in mat.rows]
    ptrack = [list(row) for row in Mat.identity(k, p).rows]
    exps = []
    for t in range(k):
        bi, bj, best = None, None, INF
        for i in range(t, n):
            for j in range(t, k):
                v = work[i][j].val()
                if v < best:
                    best, bi, bj = v, i, j
        if bi is None or work[bi][bj].is_zero():
            raise Singular("matrix does not have full column rank")
        if bi != t:
            work[t], work[bi] = work[bi], work[t]
        if bj != t:
            for row in work:
                row[t], row[bj] = row[bj], row[t]
            for row in ptrack:
                row[t], row[bj] = row[bj], row[t]
        unit = work[t][t] * PScalar.unit_power(p, -int(work[t][t].val()))
        inv_unit = unit.inv()
        for row in work:
            row[t] = row[t] * inv_unit
        for row in ptrack:
            row[t] = row[t] * inv_unit
        piv = work[t][t]
        for j in range(t + 1, k):
            if work[t][j].is_zero():
                continue
            c = work[t][j] / piv
            for row in work:
                row[j] = row[j] - c * row[t]
            for row in ptrack:
                row[j] = row[j] - c * row[t]
        for i in range(t + 1, n):
            if work[i][t].is_zero():
                continue
            c = work[i][t] / piv
            work[i] = [a - c * b for a, b in zip(work[i], work[t])]
        exps.append(int(piv.val()))
    return exps, Mat(ptrack, p)


def lattice_member_coeffs(hnf: Mat, vec):
    """Coefficients of vec in the HNF basis if vec lies in the lattice,
    else None.  hnf must be a canonical lower-triangular lattice basis."""
    n, _ = hnf.shape
    coeffs = [None] * n
    residual = list(vec)
    # pivot of column j is at row j; solve top row downward
    for j in range(n):
        piv = hnf.rows[j][j]
        c = residual[j] / piv
        if not c.is_integral():
            return None
        coeffs[j] = c
        for r in range(j, n):
            residual[r] = residual[r] - c * hnf.rows[r][j]
    if any(not r.is_zero() for r in residual):
        return None
    return tuple(coeffs)


# ---------------------------------------------------------------------------
# Howell canonical form of submodules of (Z/p^m)^n
# ---------------------------------------------------------------------------


def howell_mod(gens, n, m, p):
    """Canonical generating matrix of the submodule of (Z/p^m)^n spanned by
    the given integer columns.  Returns a tuple of columns (tuples of ints)
    sorted by pivot row; identical submodules yield identical output.
    """
    q = p**m
    pool = [list(c) for c in gens]
    pivots = []  # (row, valuation, column)
    for i in range(n):
        live = [c for c in pool if any(x % q for x in c)]
        best, choice = m, None
        for c in live:
            v = _ival(c[i] % q, p, m)
            if v < best:
                best, choice = v, c
        if choice is None:
            pool = live
            continue
        rest = [c for c in live if c is not choice]
        v = best
        unit = (choice[i] % q) // p**v
        inv_u = pow(unit, -1, q)
        choice = [(x * inv_u) % q for x in choice]
        pool = []
        for c in rest:
            cv = c[i] % q
            if cv:
                t = cv // p**v
                c = [(a - t * b) % q for a, b in zip(c, choice)]
            pool.append([x % q for x in c])
        if v > 0:
            # Howell augmentation: the part of the pivot column that vanishes
            # at this row can still act lower down
            pool.append([(p ** (m - v) * x) % q for x in choice])
        pivots.append((i, v, choice))
    # reduce entries of each pivot column below its own pivot row
    cols = []
    for idx, (_row_i, _v_i, col) in enumerate(pivots):
        col = list(col)
        for row_k, v_k, pivcol in pivots[idx + 1 :]:
            entry = col[row_k] % q
            t = (entry - entry % p**v_k) // p**v_k
            if t:
                col = [(a - t * b) % q for a, b in zip(col, pivcol)]
        cols.append(tuple(c % q for c in col))
    return tuple(cols)


def _ival(x, p, m):
    """Valuation of x mod p^m, capped at m."""
    if x % p**m == 0:
        return m
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def howell_is_free_summand(cols, rank, p):
    """True when the Howell form describes a free rank-`rank` direct summand
    (exactly `rank` columns, each with a unit pivot)."""
    if len(cols) != rank:
        return False
    seen_rows = set()
    for c in cols:
        lead = next((i for i, x in enumerate(c) if x), None)
        if lead is None or c[lead] % p == 0:
            return False
        seen_rows.add(lead)
    return len(seen_rows) == rank


def mat_mod_apply(mat_rows, col, q):
    """Apply an integer matrix (rows) to an integer column mod q."""
    return tuple(sum(a * b for a, b in zip(row, col)) % q for row in mat_rows)
