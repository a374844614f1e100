"""Node ordering by increase of type and the exponent combinatorics.

New endpoints enter level by level: after the seeds x_1 = 0, x_2 = 1, node
x_{2^k+j} = x_j +- ell_k, the sign pointing into the basic interval whose
corner x_j occupies.  Every prefix of the sequence is uniformly distributed
over the basic intervals.  The lambda/mu/nu degree vectors count nodes per
level along interval chains; rho profiles are the corresponding products of
lengths sorted by magnitude, handled exactly in the exponent domain.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cantor import CantorParams, LevelData, PointExpr, locate_chain
from .numerics import LogMag
from .report import Report

LEFT, RIGHT = 0, 1


@dataclass(frozen=True)
class NodeMeta:
    type_level: int     # k with the node in X_k
    origin: int         # 1-based j with x_{2^k+j} = x_j +- ell_k (0 for seeds)
    sign: int           # applied sign (0 for seeds)
    path: int           # 0-based interval index at level type_level
    corner: int         # LEFT/RIGHT endpoint of its interval at type_level


@dataclass
class NodeSeq:
    """First n interpolation nodes with per-node interval metadata."""

    levels: LevelData
    points: list        # PointExpr
    meta: list          # NodeMeta

    def __len__(self) -> int:
        return len(self.points)

    def path_at(self, i: int, m: int) -> int:
        """0-based interval index at level m containing node i (1-based)."""
        md = self.meta[i - 1]
        t = md.type_level
        if m <= t:
            return md.path >> (t - m)
        ext = m - t
        fill = (1 << ext) - 1 if md.corner == RIGHT else 0
        return (md.path << ext) | fill

    def prefix(self, n: int) -> "NodeSeq":
        return NodeSeq(self.levels, self.points[:n], self.meta[:n])


def enumerate_nodes(n: int, levels: LevelData) -> NodeSeq:
    """First n nodes by the rule of increase of type."""
    if n < 1:
        raise ValueError("need n >= 1")
    top = (n - 1).bit_length() - 1 if n > 2 else 0
    if top > levels.depth:
        raise ValueError(
            f"precision budget exceeded: node {n} needs level {top}, "
            f"levels built to {levels.depth}")
    points = [PointExpr.zero(), PointExpr.unit(0)][:n]
    meta = [NodeMeta(0, 0, 0, 0, LEFT), NodeMeta(0, 0, 0, 0, RIGHT)][:n]
    seq = NodeSeq(levels, points, meta)
    for i in range(3, n + 1):
        k = (i - 1).bit_length() - 1
        j = i - (1 << k)
        om = meta[j - 1]
        sign = 1 if om.corner == LEFT else -1
        expr = points[j - 1].shift(k, sign)
        parent_path = seq.path_at(j, k - 1)
        path = (parent_path << 1) | om.corner
        points.append(expr)
        meta.append(NodeMeta(k, j, sign, path, 1 - om.corner))
    return seq


@dataclass(frozen=True)
class BinaryDecomp:
    """Strictly decreasing exponents (s, s_1, ..., s_m) with sum 2^{s_j} = n."""

    exponents: tuple

    @property
    def s(self) -> int:
        return self.exponents[0]

    @property
    def m(self) -> int:
        return len(self.exponents) - 1


def binary_decomp(n: int) -> BinaryDecomp:
    if n < 1:
        raise ValueError("need a positive integer")
    return BinaryDecomp(tuple(b for b in range(n.bit_length() - 1, -1, -1)
                              if n >> b & 1))


def next_node(N: int, levels: LevelData) -> PointExpr:
    """Closed form for x_{N+2}: alternating sum of lengths over the bits of N+1.

    The term of the deepest bit enters with +, signs alternating upward.
    """
    if N < 0:
        raise ValueError("need N >= 0")
    exps = binary_decomp(N + 1).exponents
    m = len(exps) - 1
    d = {}
    for idx, e in enumerate(exps):
        d[e] = d.get(e, 0) + (-1) ** (m - idx)
    return PointExpr.from_dict(d)


def node_paths(points, levels: LevelData, level: int) -> list:
    """0-based interval indices at ``level`` for arbitrary points of the set."""
    out = []
    for x in points:
        chain = locate_chain(x, levels, level)
        out.append(chain[0][0] - 1)
    return out


def check_uniform(Z: NodeSeq, points=None) -> Report:
    """Exact integer verdict on the uniform-distribution condition.

    For every level k with 2^k <= |Z| the per-interval counts may differ by
    at most one.  ``points`` overrides Z.points for hand-built sets.
    """
    levels = Z.levels
    pts = Z.points if points is None else points
    n = len(pts)
    kmax = n.bit_length() - 1
    rows = []
    ok = True
    for k in range(1, kmax + 1):
        counts = [0] * (1 << k)
        if points is None:
            for i in range(1, n + 1):
                counts[Z.path_at(i, k)] += 1
        else:
            for p in node_paths(pts, levels, k):
                counts[p] += 1
        spread = max(counts) - min(counts)
        if spread > 1:
            ok = False
        rows.append({"level": k, "min": min(counts), "max": max(counts),
                     "spread": spread})
    return Report(
        statement="nodes-uniform",
        params={"alpha": str(levels.params.alpha),
                "ell1": str(levels.params.ell1), "N": n},
        passed=ok,
        computed=str(max((r["spread"] for r in rows), default=0)),
        bound="1",
        rows=rows,
    )


def sweep_uniform_prefixes(n_max: int, levels: LevelData) -> int:
    """First prefix length violating uniformity, or 0 if all pass.

    Incremental exact counting over every prefix n <= n_max and every level
    with 2^k <= n (spreads at deeper levels only shrink when a prefix ends).
    """
    seq = enumerate_nodes(n_max, levels)
    kmax = n_max.bit_length() - 1
    counts = [[0] * (1 << k) for k in range(kmax + 1)]
    # per level: histogram of count values, currently smallest count
    hists = [{0: 1 << k} for k in range(kmax + 1)]
    los = [0] * (kmax + 1)
    for n in range(1, n_max + 1):
        for k in range(kmax + 1):
            p = seq.path_at(n, k)
            c = counts[k][p]
            counts[k][p] = c + 1
            h = hists[k]
            h[c] -= 1
            if h[c] == 0:
                del h[c]
            h[c + 1] = h.get(c + 1, 0) + 1
            if los[k] == c and c not in h:
                los[k] = min(h)
        for k in range(1, min(kmax, n.bit_length() - 1) + 1):
            if max(hists[k]) - los[k] > 1:
                return n
    return 0


@dataclass(frozen=True)
class DegreeVector:
    """Per-level degrees (index 0..s) with their sum."""

    degrees: tuple

    @property
    def total(self) -> int:
        return sum(self.degrees)

    def suffix_sums(self) -> list:
        """sums degrees[i:] for i = 0..s (descending-level partial sums)."""
        out = [0] * (len(self.degrees) + 1)
        for i in range(len(self.degrees) - 1, -1, -1):
            out[i] = out[i + 1] + self.degrees[i]
        return out[:-1]


@dataclass(frozen=True)
class RhoProfile:
    """Levels of the sorted factor list: entry k-1 is the level of rho_k.

    Sorted nondecreasing by magnitude, i.e. deepest level first.
    """

    params: CantorParams
    levels: tuple

    def __len__(self) -> int:
        return len(self.levels)

    def rho_logmag(self, k: int) -> LogMag:
        """rho_k (1-based) as a log-domain magnitude."""
        return LogMag(1, self.params.weight(self.levels[k - 1]))


def profile_from_degrees(params: CantorParams, deg: DegreeVector) -> RhoProfile:
    lv = []
    for j in range(len(deg.degrees) - 1, -1, -1):
        lv.extend([j] * deg.degrees[j])
    return RhoProfile(params, tuple(lv))


def lambda_profile(n: int, params: CantorParams):
    """Degrees lambda_j(n) and the sorted factor profile for an n-point set.

    Each binary block of size 2^e contributes degree 1 at levels e and e-1,
    and 2^(e-1-i) at levels i < e-1.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    exps = binary_decomp(n).exponents
    s = exps[0]
    degrees = [0] * (s + 1)
    for e in exps:
        degrees[e] += 1
        for i in range(e):
            degrees[i] += 1 << (e - 1 - i)
    deg = DegreeVector(tuple(degrees))
    return deg, profile_from_degrees(params, deg)


def _chain_counts(Z: NodeSeq, paths: list) -> list:
    """#(Z in chain interval at level t) for t = 0..s, chain given by paths."""
    s = len(paths) - 1
    out = []
    for t in range(s + 1):
        c = 0
        for i in range(1, len(Z) + 1):
            if Z.path_at(i, t) == paths[t]:
                c += 1
        out.append(c)
    return out


def _degrees_from_counts(counts, k_member) -> tuple:
    """Degrees from chain counts; k_member[t] = 1 when the excluded node x_k
    lies in the chain interval at level t."""
    s = len(counts) - 1
    deg = [0] * (s + 1)
    for t in range(s):
        deg[t] = (counts[t] - k_member[t]) - (counts[t + 1] - k_member[t + 1])
    deg[s] = counts[s] - k_member[s]
    return tuple(deg)


def chain_level(Z_size: int) -> int:
    """Chain depth s with 2^s <= |Z| < 2^(s+1)."""
    return Z_size.bit_length() - 1


def mu_profile(k: int, Z: NodeSeq):
    """Degrees of |a_k| along the chain of x_k (excluded node counted out)."""
    if not (1 <= k <= len(Z)):
        raise ValueError("node index out of range")
    s = chain_level(len(Z))
    paths = [Z.path_at(k, t) for t in range(s + 1)]
    counts = _chain_counts(Z, paths)
    deg = _degrees_from_counts(counts, [1] * (s + 1))
    dv = DegreeVector(deg)
    return dv, profile_from_degrees(Z.levels.params, dv)


def nu_profile(x: PointExpr, k: int, Z: NodeSeq):
    """Degrees along the chain of an arbitrary set point x, excluding x_k."""
    if not (1 <= k <= len(Z)):
        raise ValueError("node index out of range")
    s = chain_level(len(Z))
    chain = locate_chain(x, Z.levels, s)
    paths = [j - 1 for j, _ in reversed(chain)]
    counts = _chain_counts(Z, paths)
    member = [1 if Z.path_at(k, t) == paths[t] else 0 for t in range(s + 1)]
    deg = _degrees_from_counts(counts, member)
    dv = DegreeVector(deg)
    return dv, profile_from_degrees(Z.levels.params, dv)


def p_smallest(profile: RhoProfile, p: int) -> LogMag:
    """Product of the p smallest factors, as a log-domain magnitude."""
    if not (0 <= p <= len(profile)):
        raise ValueError(f"p = {p} out of range 0..{len(profile)}")
    e = 0
    for lv in profile.levels[:p]:
        e = e + profile.params.weight(lv)
    return LogMag(1, e)


def p_removed(profile: RhoProfile, p: int) -> LogMag:
    """The full product with the p smallest factors removed."""
    if not (0 <= p <= len(profile)):
        raise ValueError(f"p = {p} out of range 0..{len(profile)}")
    e = 0
    for lv in profile.levels[p:]:
        e = e + profile.params.weight(lv)
    return LogMag(1, e)


# -- exponent-domain dominance checks ---------------------------------------
#
# For a degree vector d and weights w_j (ell_j = ell1^(w_j), w increasing in
# j), the product of the p smallest factors has exponent
#     E_keep(p) = sum of the p largest weights counted with multiplicity,
# a concave piecewise-linear function of p with vertices at the suffix counts
# of d.  Since ell1 < 1, "product_A <= product_B" in value is "exponent_A >=
# exponent_B".  Piecewise-linear comparisons need only be checked at the
# vertices of both sides.


def _keep_exponent(degrees: tuple, weights, p: int):
    total = 0
    cnt = 0
    for j in range(len(degrees) - 1, -1, -1):
        d = degrees[j]
        if d == 0:
            continue
        if cnt + d >= p:
            return total + (p - cnt) * weights[j]
        total += d * weights[j]
        cnt += d
    return total


def _breakpoints(*degvecs, pmax: int):
    pts = {0, pmax}
    for dv in degvecs:
        c = 0
        for j in range(len(dv) - 1, -1, -1):
            c += dv[j]
            if c < pmax:
                pts.add(c)
    return sorted(pts)


def keeps_dominate(a: DegreeVector, b: DegreeVector, params: CantorParams,
                   pmax: int) -> bool:
    """True when _p(prod ell^a) <= _p(prod ell^b) for all 0 <= p <= pmax."""
    wa = [params.weight(j) for j in range(len(a.degrees))]
    wb = [params.weight(j) for j in range(len(b.degrees))]
    for p in _breakpoints(a.degrees, b.degrees, pmax=pmax):
        if _keep_exponent(a.degrees, wa, p) < _keep_exponent(b.degrees, wb, p):
            return False
    return True


def removed_dominate(a: DegreeVector, b: DegreeVector, params: CantorParams,
                     pmax: int) -> bool:
    """True when (prod ell^a)_p <= (prod ell^b)_p for all 0 <= p <= pmax."""
    wa = [params.weight(j) for j in range(len(a.degrees))]
    wb = [params.weight(j) for j in range(len(b.degrees))]
    ta = _keep_exponent(a.degrees, wa, a.total)
    tb = _keep_exponent(b.degrees, wb, b.total)
    for p in _breakpoints(a.degrees, b.degrees, pmax=pmax):
        ka = min(p, a.total)
        kb = min(p, b.total)
        if (ta - _keep_exponent(a.degrees, wa, ka)) < \
           (tb - _keep_exponent(b.degrees, wb, kb)):
            return False
    return True


def partial_sums_dominate(a: DegreeVector, b: DegreeVector) -> bool:
    """True when sum_{j>=i} a_j <= sum_{j>=i} b_j for every i >= 1."""
    sa = a.suffix_sums()
    sb = b.suffix_sums()
    top = max(len(sa), len(sb))
    for i in range(1, top):
        va = sa[i] if i < len(sa) else 0
        vb = sb[i] if i < len(sb) else 0
        if va > vb:
            return False
    return True
