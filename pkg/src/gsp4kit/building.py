"""The coset space G / K_m p^Z realized as decorated lattice chains:
canonical node keys, balls in the coset graph, and orbital integrals of
indicator functions of elliptic cosets as stabilized fixed-point counts.

A node gamma K_m p^Z is keyed by the canonical form of the chain
gamma L together with the finite level data of gamma against a
deterministic section of the chain (the classification witness), so two
representatives compare equal exactly when the cosets coincide.

Orbital counts run shell by shell over a breadth-first ball of chains,
with the full finite fiber above each chain enumerated once as "local"
data: the class permutation, scale shifts and per-representative
matrices mod p^m of a normalizer element.  Products of integral locals
stay integral, so coset membership is exact finite bookkeeping.
"""

from __future__ import annotations

from .chains import LatticeChain, classify_chain, in_N, rotation_element
from .conj import (
    EllipticVerdict,
    coset_elliptic,
    is_elliptic,
    k_generators,
    stably_conjugate,
)
from .errors import BudgetExceeded, NotElliptic, NotStabilized, NotStablyConjugate
from .linalg import Mat
from .padic import PScalar
from .symplectic import (
    GroupElement,
    SympSpace,
    gsp_check,
    torus_element,
    transvection,
    weyl_elements,
)

_FIBER_BUDGET = 200_000


# ---------------------------------------------------------------------------
# local data of normalizer elements
# ---------------------------------------------------------------------------


def local_of(ctx: "CosetContext", x: GroupElement):
    """(sigma, shifts, mats) with x L_j = p^{shifts[j]} L_{sigma[j]} and
    mats[j] the integral matrix of p^{-shift} x : L_j -> L_sigma(j) mod
    p^m; None when x does not normalize the chain."""
    chain = ctx.chain
    p = ctx.space.p
    sigma = []
    shifts = []
    mats = []
    for j, w in enumerate(chain.window):
        located = chain.class_index(w.transform(x))
        if located is None:
            return None
        i, s = located
        local = chain.window[i].basis.inv() * x.mat * w.basis * PScalar.unit_power(p, -s)
        sigma.append(i)
        shifts.append(s)
        mats.append(local.to_int_mod(ctx.m))
    return (tuple(sigma), tuple(shifts), tuple(mats))


def _mat_mul_mod(a, b, q):
    n = len(a)
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(n)) % q for j in range(n))
        for i in range(n)
    )


def _mat_inv_mod(a, q, p):
    n = len(a)
    work = [list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(a)]
    for i in range(n):
        piv = None
        for r in range(i, n):
            if work[r][i] % p:
                piv = r
                break
        if piv is None:
            raise ValueError("local matrix is not invertible mod p")
        work[i], work[piv] = work[piv], work[i]
        inv = pow(work[i][i], -1, q)
        work[i] = [(inv * x) % q for x in work[i]]
        for r in range(n):
            if r != i and work[r][i]:
                t = work[r][i]
                work[r] = [(a2 - t * b2) % q for a2, b2 in zip(work[r], work[i])]
    return tuple(tuple(r[n:]) for r in work)


def local_mul(ctx, a, b):
    """Local data of x_a x_b from the locals of x_a and x_b."""
    q = ctx.space.p**ctx.m
    sig_a, sh_a, m_a = a
    sig_b, sh_b, m_b = b
    sigma = tuple(sig_a[sig_b[j]] for j in range(len(sig_b)))
    shifts = tuple(sh_b[j] + sh_a[sig_b[j]] for j in range(len(sig_b)))
    mats = tuple(
        _mat_mul_mod(m_a[sig_b[j]], m_b[j], q) for j in range(len(sig_b))
    )
    return (sigma, shifts, mats)


def local_inv(ctx, a):
    q = ctx.space.p**ctx.m
    sig, sh, mats = a
    n = len(sig)
    inv_sigma = [0] * n
    for j, i in enumerate(sig):
        inv_sigma[i] = j
    sigma = tuple(inv_sigma)
    shifts = tuple(-sh[sigma[j]] for j in range(n))
    out_mats = tuple(_mat_inv_mod(mats[sigma[j]], q, ctx.space.p) for j in range(n))
    return (sigma, shifts, out_mats)


def local_in_km_pz(ctx, a) -> bool:
    """Membership in K_m p^Z from local data: identity permutation, a
    constant scale shift, and unit local matrices mod p^m."""
    q = ctx.space.p**ctx.m
    sig, sh, mats = a
    n = len(sig)
    if any(sig[j] != j for j in range(n)):
        return False
    if len(set(sh)) != 1:
        return False
    ident = tuple(tuple(1 if i == j else 0 for j in range(4)) for i in range(4))
    return all(m == ident for m in mats)


# ---------------------------------------------------------------------------
# context, nodes, balls
# ---------------------------------------------------------------------------


class CosetContext:
    """Base chain, level m, a memoized deterministic section C -> gamma_C
    with gamma_C L = C, and the finite fiber N/(K_m p^Z) as local data."""

    def __init__(self, chain: LatticeChain, m: int):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.chain = chain
        self.m = m
        self.space = chain.space
        self._sections = {}
        self._fiber = None

    def section(self, moved: LatticeChain) -> GroupElement:
        key = moved.window
        if key not in self._sections:
            _, witness = classify_chain(moved)
            self._sections[key] = witness.inv()
        return self._sections[key]

    def fiber_locals(self):
        """All elements of N/(K_m p^Z) as canonical local tuples: the
        closure of the stabilizer generators and the class rotation.  The
        p^Z quotient is realised by normalizing the scale-shift vector so
        its first entry is zero."""
        if self._fiber is None:
            gens = k_generators(self.chain)
            eta = rotation_element(self.chain.type_tag, self.space)
            if eta is not None and in_N(eta, self.chain):
                gens = gens + [eta]
            gen_locals = []
            for gexact in gens + [h.inv() for h in gens]:
                loc = local_of(self, gexact)
                if loc is not None:
                    gen_locals.append(loc)
            base = local_of(self, gsp_check(Mat.identity(4, self.space.p), self.space))
            base = _scale_normal(base)
            seen = {base}
            frontier = [base]
            while frontier:
                new = []
                for a in frontier:
                    for s in gen_locals:
                        cand = _scale_normal(local_mul(self, a, s))
                        if cand not in seen:
                            seen.add(cand)
                            new.append(cand)
                            if len(seen) > _FIBER_BUDGET:
                                raise BudgetExceeded("fiber enumeration budget")
                frontier = new
            self._fiber = sorted(seen)
        return self._fiber


def _scale_normal(local):
    sig, sh, mats = local
    base = sh[0]
    return (sig, tuple(s - base for s in sh), mats)


class CosetNode:
    """A point of G/K_m p^Z with a retained exact representative."""

    __slots__ = ("key", "rep")

    def __init__(self, key, rep):
        self.key = key
        self.rep = rep

    def __eq__(self, other):
        return isinstance(other, CosetNode) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


def node_from_element(ctx: CosetContext, gamma: GroupElement) -> CosetNode:
    moved = ctx.chain.transform(gamma)
    section = ctx.section(moved)
    k = section.inv() * gamma
    loc = local_of(ctx, k)
    if loc is None:
        raise NotElliptic("section composition left the normalizer")
    chain_key = tuple(_lattice_serial(w) for w in moved.window)
    return CosetNode((chain_key, _scale_normal(loc)), gamma)


def _lattice_serial(lattice):
    return tuple((c.num, c.den, c.exp) for row in lattice.basis.rows for c in row)


def default_generators(space: SympSpace, variant=0):
    """Symmetric generator set for walking between chains; variant 1 is an
    intentionally different set used as the independent closure oracle."""
    p = space.p
    one = PScalar.one(p)
    e = [space.basis_vector(i) for i in range(4)]
    gens = []
    if variant == 0:
        gens.append(torus_element(space, p, 1, 1))
        gens.append(torus_element(space, 1, p, 1))
        gens.append(torus_element(space, p, p, p * p))
        gens.append(torus_element(space, p, p, p))
        gens.extend(weyl_elements(space))
        for i in range(4):
            gens.append(transvection(space, e[i], one))
        gens.append(transvection(space, tuple(a + b for a, b in zip(e[0], e[1])), one))
        gens.append(transvection(space, tuple(a + b for a, b in zip(e[2], e[3])), one))
    else:
        gens.append(torus_element(space, p, p, p))
        gens.append(torus_element(space, p * p, 1, p * p))
        gens.append(torus_element(space, 1, p, p))
        w1, w2 = weyl_elements(space)
        gens.append(w1 * w2)
        gens.append(w2 * w1)
        for i in range(4):
            gens.append(transvection(space, e[i], -one))
        gens.append(transvection(space, tuple(a - b for a, b in zip(e[0], e[2])), one))
        gens.append(transvection(space, tuple(a + b for a, b in zip(e[1], e[3])), one))
    out = []
    seen = set()
    for g in gens + [h.inv() for h in gens]:
        key = tuple((c.num, c.den, c.exp) for row in g.mat.rows for c in row)
        if key not in seen:
            seen.add(key)
            out.append(g)
    return out


def neighbors(ctx: CosetContext, node: CosetNode, gens=None):
    """Deterministic symmetric adjacency: left translates by the fixed
    generator set (closed under inverses, so adjacency is symmetric);
    p-scalings do not move nodes at all."""
    if gens is None:
        gens = default_generators(ctx.space)
    out = []
    seen = set()
    for s in gens:
        cand = node_from_element(ctx, s * node.rep)
        if cand.key not in seen:
            seen.add(cand.key)
            out.append(cand)
    return out


def vertex_ball(ctx: CosetContext, max_radius: int, gens=None, vertex_budget=20_000):
    """BFS over the underlying chains: per-radius shells of section
    representatives gamma_C, one per chain."""
    if gens is None:
        gens = default_generators(ctx.space)
    base_key = tuple(_lattice_serial(w) for w in ctx.chain.window)
    base = gsp_check(Mat.identity(4, ctx.space.p), ctx.space)
    seen = {base_key}
    shells = [[ctx.section(ctx.chain)]]
    frontier = [base]
    for _ in range(max_radius):
        new_frontier = []
        shell = []
        for rep in frontier:
            for s in gens:
                cand = s * rep
                moved = ctx.chain.transform(cand)
                key = tuple(_lattice_serial(w) for w in moved.window)
                if key in seen:
                    continue
                seen.add(key)
                new_frontier.append(cand)
                shell.append(ctx.section(moved))
                if len(seen) > vertex_budget:
                    raise BudgetExceeded("vertex ball exceeded the budget")
        shells.append(shell)
        frontier = new_frontier
    return shells


class BallReport:
    """Radius-indexed node and fixed counts with the stabilization flag."""

    __slots__ = ("radius", "nodes", "fixed", "stabilized", "per_radius")

    def __init__(self, per_radius):
        self.per_radius = tuple(per_radius)
        self.radius = len(per_radius) - 1
        self.nodes = per_radius[-1][0]
        self.fixed = per_radius[-1][1]
        self.stabilized = (
            len(per_radius) >= 3
            and per_radius[-1][1] == per_radius[-2][1] == per_radius[-3][1]
        )

    def as_dict(self):
        return {
            "radius": self.radius,
            "nodes": self.nodes,
            "fixed": self.fixed,
            "stabilized": self.stabilized,
            "per_radius": [list(x) for x in self.per_radius],
        }


def orbital_count(
    gprime: GroupElement,
    g: GroupElement,
    chain: LatticeChain,
    m: int,
    max_radius: int = 4,
    gens=None,
    ctx: CosetContext | None = None,
    shells=None,
    require_certified: bool = True,
) -> BallReport:
    """The orbital integral of 1_{g K_m p^Z} / vol(K_m) at g': the number
    of cosets gamma K_m p^Z with gamma^{-1} g' gamma in g K_m p^Z,
    accumulated shell by shell over the chain ball and reported with the
    two-constant-increment stabilization flag.

    g must normalize the chain (well-definedness of the count); g' must
    be certified regular elliptic unless overridden (ellipticity is what
    makes the count finite).  Under the measure normalization
    vol(Z(g')/p^Z) = 1, a stabilized count is the orbital integral."""
    if ctx is None:
        ctx = CosetContext(chain, m)
    if not in_N(g, chain):
        raise NotElliptic("g must normalize the chain")
    if require_certified:
        verdict = is_elliptic(gprime)
        if verdict != EllipticVerdict.ELLIPTIC:
            coset = (
                coset_elliptic(gprime, chain, m) if in_N(gprime, chain) else None
            )
            if coset != EllipticVerdict.ELLIPTIC:
                raise NotElliptic("g' is not certified regular elliptic")
    if shells is None:
        shells = vertex_ball(ctx, max_radius, gens=gens)
    fiber = ctx.fiber_locals()
    g_local = local_of(ctx, g)
    if g_local is None:
        raise NotElliptic("g must normalize the chain")
    g_local_inv = local_inv(ctx, g_local)
    # similitude-valuation prefilter, provably lossless
    parity_block = (int(gprime.simil.val()) - int(g.simil.val())) % 2 != 0
    per_radius = []
    nodes = 0
    fixed = 0
    for shell in shells:
        for sec in shell:
            nodes += len(fiber)
            if parity_block:
                continue
            z_base = sec.inv() * gprime * sec
            z_local = local_of(ctx, z_base)
            if z_local is None:
                continue
            for k in fiber:
                w = local_mul(
                    ctx, g_local_inv, local_mul(ctx, local_inv(ctx, k), local_mul(ctx, z_local, k))
                )
                if local_in_km_pz(ctx, w):
                    fixed += 1
        per_radius.append((nodes, fixed))
    return BallReport(per_radius)


def stable_orbital_count(
    representatives,
    g: GroupElement,
    chain: LatticeChain,
    m: int,
    max_radius: int = 4,
    gens=None,
    ctx: CosetContext | None = None,
    shells=None,
) -> int:
    """Sum of stabilized orbital counts over conjugacy-class representatives
    of one stable class; the representatives must be pairwise stably
    conjugate (pairwise non-conjugacy is the caller's responsibility)."""
    reps = list(representatives)
    for a in reps:
        for b in reps:
            if a is b:
                continue
            if stably_conjugate(a, b) != "yes":
                raise NotStablyConjugate("representatives are not stably conjugate")
    if ctx is None:
        ctx = CosetContext(chain, m)
    if shells is None:
        shells = vertex_ball(ctx, max_radius, gens=gens)
    total = 0
    for rep in reps:
        report = orbital_count(
            rep, g, chain, m, max_radius=max_radius, gens=gens, ctx=ctx, shells=shells
        )
        if not report.stabilized:
            raise NotStabilized("a summand count did not stabilize in the ball")
        total += report.fixed
    return total
