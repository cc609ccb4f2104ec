"""Closed alignment relations between lattice spaces and their algebra.

A relation carries two faces: an analytic predicate on continuous weight
vectors (tolerance 1e-9, so off-lattice images of maps can be tested) and
a materialized pair set over the two lattices (exact, for law checking).
The pair set is computed lazily and cached; composition, converse,
intersection and fibers all operate on whichever face is appropriate.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .geometry import (
    FLOAT_TOL,
    GridPoint,
    InvalidArgument,
    LatticeSpace,
    LinearFunctional,
)

# Guards on materialization: the boolean incidence mask is cheap (one byte
# per candidate pair), the tuple pair list is not.  The DOTS action path
# streams in chunks and needs neither.
MASK_LIMIT = 50_000_000
PAIR_LIMIT = 5_000_000

_CHUNK = 256


def _attr_matrix(g, dim: int) -> np.ndarray:
    """Normalize an attribute map to a (k, dim) matrix; None means identity."""
    if g is None:
        return np.eye(dim)
    m = np.asarray(g, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.shape[1] != dim:
        raise InvalidArgument(f"attribute map has {m.shape[1]} columns, expected {dim}")
    return m


class Relation:
    """A closed alignment relation R between two lattice spaces.

    `kind` and `params` identify the defining formula; `predicate` is the
    analytic membership test on (weight-vector, weight-vector) pairs.
    """

    def __init__(self, domain: LatticeSpace, codomain: LatticeSpace,
                 kind: str, params: dict,
                 predicate: Callable[[np.ndarray, np.ndarray], bool],
                 mask_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
                 pairs: Optional[Iterable[tuple[GridPoint, GridPoint]]] = None):
        if domain.N != codomain.N:
            raise InvalidArgument(
                "relations require a shared resolution: "
                f"domain is 1/{domain.N}, codomain 1/{codomain.N}"
            )
        self.domain = domain
        self.codomain = codomain
        self.kind = kind
        self.params = params
        self.predicate = predicate
        self._mask_fn = mask_fn
        self._mask: Optional[np.ndarray] = None
        self._pairs: Optional[tuple[tuple[GridPoint, GridPoint], ...]] = None
        if pairs is not None:
            self._pairs = tuple(sorted(set(pairs)))
            mask = np.zeros((len(domain), len(codomain)), dtype=bool)
            for x, y in self._pairs:
                mask[domain.index_of(x), codomain.index_of(y)] = True
            self._mask = mask

    # -- materialization ---------------------------------------------------

    def mask(self) -> np.ndarray:
        """Boolean (|domain|, |codomain|) incidence matrix (cached)."""
        if self._mask is None:
            size = len(self.domain) * len(self.codomain)
            if size > MASK_LIMIT:
                raise InvalidArgument(
                    f"refusing to materialize a {size}-cell incidence mask; "
                    "use the action/menu path for large relations"
                )
            self._mask = self._compute_mask(self.domain.array, self.codomain.array)
        return self._mask

    def _compute_mask(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if self._mask_fn is not None:
            if len(X) * len(Y) <= 2_000_000:
                return self._mask_fn(X, Y)
            # chunk rows so the (P, Q, d) broadcast intermediates stay small
            out = np.zeros((len(X), len(Y)), dtype=bool)
            step = max(1, 2_000_000 // max(len(Y), 1))
            for start in range(0, len(X), step):
                out[start:start + step] = self._mask_fn(X[start:start + step], Y)
            return out
        out = np.zeros((len(X), len(Y)), dtype=bool)
        for i, x in enumerate(X):
            for j, y in enumerate(Y):
                out[i, j] = bool(self.predicate(x, y))
        return out

    @property
    def pairs(self) -> tuple[tuple[GridPoint, GridPoint], ...]:
        """Enumerated pair set, duplicate-free, lexicographically ordered."""
        if self._pairs is None:
            mask = self.mask()
            present = int(mask.sum())
            if present > PAIR_LIMIT:
                raise InvalidArgument(
                    f"refusing to enumerate {present} pairs; work with the "
                    "incidence mask instead"
                )
            dp, cp = self.domain.points, self.codomain.points
            self._pairs = tuple(
                (dp[i], cp[j]) for i, j in zip(*np.nonzero(mask))
            )
        return self._pairs

    # -- membership ---------------------------------------------------------

    def contains_vectors(self, x: Sequence[float], y: Sequence[float]) -> bool:
        """Analytic membership for (possibly off-lattice) weight vectors."""
        return bool(self.predicate(np.asarray(x, dtype=float),
                                   np.asarray(y, dtype=float)))

    def contains(self, x: GridPoint, y: GridPoint) -> bool:
        return self.contains_vectors(x.to_array(), y.to_array())

    def menu_mask(self, hub_mask: np.ndarray) -> np.ndarray:
        """For selected domain rows, which codomain points are hit by some hub.

        Vectorized through the relation mask when small enough; relation
        kinds with a mask_fn stream it in chunks so big menus never
        materialize the full pair set.
        """
        X = self.domain.array[hub_mask]
        Y = self.codomain.array
        if len(X) == 0:
            return np.zeros(len(Y), dtype=bool)
        if self._mask is not None:
            return self._mask[hub_mask].any(axis=0)
        if self._mask_fn is not None:
            hit = np.zeros(len(Y), dtype=bool)
            for start in range(0, len(Y), _CHUNK):
                block = slice(start, start + _CHUNK)
                hit[block] = self._mask_fn(X, Y[block]).any(axis=0)
            return hit
        return self.mask()[hub_mask].any(axis=0)

    # -- misc ----------------------------------------------------------------

    def describe(self) -> str:
        ps = ",".join(f"{k}={v}" for k, v in self.params.items()
                      if isinstance(v, (int, float, str, Fraction)))
        return f"{self.kind}({ps})"

    def to_dict(self) -> dict:
        if self.kind in ("custom", "explicit"):
            raise InvalidArgument(f"{self.kind} relations have no file form")
        params = {}
        for k, v in self.params.items():
            if isinstance(v, LinearFunctional):
                params[k] = v.to_dict()
            elif isinstance(v, np.ndarray):
                params[k] = v.tolist()
            elif isinstance(v, tuple):
                params[k] = list(v)
            else:
                params[k] = v
        return {"kind": self.kind, "params": params}

    def __repr__(self):
        return f"Relation<{self.describe()}>"


class MapAsRelation(Relation):
    """The graph of a re-implementation map, as a functional relation."""

    def __init__(self, *args, functional: bool = True, graph_pairs=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.functional = functional
        # (GridPoint, image-vector) pairs; images may sit off-lattice.
        self.graph_pairs = graph_pairs


# -- constructors -------------------------------------------------------------


def build_relation(domain: LatticeSpace, codomain: LatticeSpace,
                   kind: str, **params) -> Relation:
    """Build one of the named relation kinds.

    track(epsilon, gA, gB)      ||gA x - gB y||_2 <= epsilon
    fee_cap(tau, functional)    diagonal projector {(y,y): Fee(y) <= tau}
    turnover(kappa)             ||y - x||_1 <= kappa
    liquidity_cap(alpha, illiquid)   projector {(y,y): sum_{i in I} y_i <= alpha}
    position_caps(caps)         projector {(y,y): y_i <= c_i}
    maintenance(kappa, costs)   projector {(y,y): sum tau_i y_i <= kappa}
    custom(predicate)           arbitrary membership test
    """
    if kind == "track":
        eps = float(params["epsilon"])
        if eps < 0:
            raise InvalidArgument("tracking tolerance must be non-negative")
        gA = _attr_matrix(params.get("gA"), domain.n + 1)
        gB = _attr_matrix(params.get("gB"), codomain.n + 1)
        if gA.shape[0] != gB.shape[0]:
            raise InvalidArgument("attribute maps must target the same space")

        def pred(x, y, gA=gA, gB=gB, eps=eps):
            return float(np.linalg.norm(gA @ x - gB @ y)) <= eps + FLOAT_TOL

        def mask_fn(X, Y, gA=gA, gB=gB, eps=eps):
            A, B = X @ gA.T, Y @ gB.T
            d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
            return d2 <= (eps + FLOAT_TOL) ** 2

        return Relation(domain, codomain, "track",
                        {"epsilon": eps, "gA": gA, "gB": gB}, pred, mask_fn)

    if kind == "turnover":
        kappa = float(params["kappa"])
        if kappa < 0:
            raise InvalidArgument("turnover budget must be non-negative")
        if domain.n != codomain.n:
            raise InvalidArgument("turnover relates spaces over the same assets")

        def pred(x, y, kappa=kappa):
            return float(np.abs(x - y).sum()) <= kappa + FLOAT_TOL

        def mask_fn(X, Y, kappa=kappa):
            d = np.abs(X[:, None, :] - Y[None, :, :]).sum(axis=2)
            return d <= kappa + FLOAT_TOL

        return Relation(domain, codomain, "turnover", {"kappa": kappa}, pred, mask_fn)

    if kind in ("fee_cap", "liquidity_cap", "position_caps", "maintenance"):
        return _projector(domain, codomain, kind, params)

    if kind == "custom":
        return Relation(domain, codomain, "custom", params, params["predicate"],
                        params.get("mask_fn"))

    raise InvalidArgument(f"unknown relation kind {kind!r}")


def _projector(domain: LatticeSpace, codomain: LatticeSpace,
               kind: str, params: dict) -> Relation:
    """Diagonal relations {(y, y): y in E} for a closed screen E."""
    if domain.n != codomain.n:
        raise InvalidArgument("projectors are diagonal: spaces must share assets")
    d = codomain.n + 1

    if kind == "fee_cap":
        tau = float(params["tau"])
        if tau < 0:
            raise InvalidArgument("fee cap must be non-negative")
        fee: LinearFunctional = params["functional"]
        coeffs = fee.coeff_array()

        def screen(Y, coeffs=coeffs, tau=tau):
            return Y @ coeffs <= tau + FLOAT_TOL

        stored = {"tau": tau, "functional": fee}
    elif kind == "liquidity_cap":
        alpha = float(params["alpha"])
        if alpha < 0:
            raise InvalidArgument("liquidity cap must be non-negative")
        illiquid = tuple(int(i) for i in params["illiquid"])
        if any(not 0 <= i < d for i in illiquid):
            raise InvalidArgument(f"illiquid indices {illiquid} out of range")

        def screen(Y, idx=illiquid, alpha=alpha):
            return Y[:, list(idx)].sum(axis=1) <= alpha + FLOAT_TOL

        stored = {"alpha": alpha, "illiquid": illiquid}
    elif kind == "position_caps":
        caps = np.asarray(params["caps"], dtype=np.float64)
        if caps.shape != (d,):
            raise InvalidArgument(f"need one cap per asset ({d}), got {caps.shape}")
        if np.any(caps < 0):
            raise InvalidArgument("position caps must be non-negative")

        def screen(Y, caps=caps):
            return (Y <= caps + FLOAT_TOL).all(axis=1)

        stored = {"caps": caps}
    else:  # maintenance
        kappa = float(params["kappa"])
        if kappa < 0:
            raise InvalidArgument("maintenance budget must be non-negative")
        costs = np.asarray(params["costs"], dtype=np.float64)
        if costs.shape != (d,):
            raise InvalidArgument(f"need one cost per asset ({d}), got {costs.shape}")

        def screen(Y, costs=costs, kappa=kappa):
            return Y @ costs <= kappa + FLOAT_TOL

        stored = {"kappa": kappa, "costs": costs}

    def pred(x, y, screen=screen):
        if float(np.abs(x - y).max()) > FLOAT_TOL:
            return False
        return bool(screen(y.reshape(1, -1))[0])

    def mask_fn(X, Y, screen=screen):
        same = np.abs(X[:, None, :] - Y[None, :, :]).max(axis=2) <= FLOAT_TOL
        return same & screen(Y)[None, :]

    rel = Relation(domain, codomain, kind, stored, pred, mask_fn)
    rel.screen = screen  # projectors expose their screen for menu fast paths
    return rel


def relation_from_dict(domain: LatticeSpace, codomain: LatticeSpace, d: dict) -> Relation:
    params = dict(d.get("params", {}))
    if "functional" in params and isinstance(params["functional"], dict):
        params["functional"] = LinearFunctional.from_dict(params["functional"])
    return build_relation(domain, codomain, d["kind"], **params)


def diagonal(space: LatticeSpace) -> Relation:
    """The vertical identity Delta_K."""

    def pred(x, y):
        return float(np.abs(x - y).max()) <= FLOAT_TOL

    def mask_fn(X, Y):
        return np.abs(X[:, None, :] - Y[None, :, :]).max(axis=2) <= FLOAT_TOL

    return Relation(space, space, "diagonal", {}, pred, mask_fn)


def full_relation(domain: LatticeSpace, codomain: LatticeSpace) -> Relation:
    def pred(x, y):
        return True

    def mask_fn(X, Y):
        return np.ones((len(X), len(Y)), dtype=bool)

    return Relation(domain, codomain, "full", {}, pred, mask_fn)


def empty_relation(domain: LatticeSpace, codomain: LatticeSpace) -> Relation:
    def pred(x, y):
        return False

    def mask_fn(X, Y):
        return np.zeros((len(X), len(Y)), dtype=bool)

    return Relation(domain, codomain, "empty", {}, pred, mask_fn)


def explicit_relation(domain: LatticeSpace, codomain: LatticeSpace,
                      pairs: Iterable[tuple[GridPoint, GridPoint]]) -> Relation:
    """A relation given by an explicit finite pair set (closed, as finite)."""
    pair_set = {(x.coords, y.coords) for x, y in pairs}

    def pred(x, y, pair_set=pair_set, N=domain.N, M=codomain.N):
        xs = tuple(int(round(c * N)) for c in x)
        ys = tuple(int(round(c * M)) for c in y)
        if np.max(np.abs(np.asarray(xs) / N - x)) > FLOAT_TOL:
            return False
        if np.max(np.abs(np.asarray(ys) / M - y)) > FLOAT_TOL:
            return False
        return (xs, ys) in pair_set

    return Relation(domain, codomain, "explicit", {}, pred,
                    pairs=[(GridPoint(a, domain.N), GridPoint(b, codomain.N))
                           for a, b in pair_set])


# -- algebra -------------------------------------------------------------------


def compose_vertical(S: Relation, R: Relation) -> Relation:
    """Relational composite S . R = {(x,z): exists y, (x,y) in R, (y,z) in S}."""
    if R.codomain.N != S.domain.N or R.codomain.n != S.domain.n:
        raise InvalidArgument(
            f"cannot compose: R lands in ({R.codomain.n}, 1/{R.codomain.N}) "
            f"but S starts at ({S.domain.n}, 1/{S.domain.N})"
        )
    if R.codomain.points != S.domain.points:
        raise InvalidArgument("cannot compose: intermediate spaces have different points")
    m = (R.mask().astype(np.uint8) @ S.mask().astype(np.uint8)) > 0
    out = Relation(R.domain, S.codomain, "compose",
                   {"outer": S.describe(), "inner": R.describe()},
                   predicate=lambda x, y: False)
    out._mask = m
    out.predicate = _mask_predicate(out)
    return out


def _mask_predicate(rel: Relation):
    def pred(x, y, rel=rel):
        try:
            i = rel.domain.index_of(_to_point(x, rel.domain.N))
            j = rel.codomain.index_of(_to_point(y, rel.codomain.N))
        except InvalidArgument:
            return False
        return bool(rel._mask[i, j])

    return pred


def _to_point(v: np.ndarray, N: int) -> GridPoint:
    coords = np.rint(np.asarray(v, dtype=float) * N)
    if np.max(np.abs(coords / N - v)) > FLOAT_TOL:
        raise InvalidArgument("off-lattice vector")
    return GridPoint(tuple(int(c) for c in coords), N)


def dagger(R: Relation) -> Relation:
    """Converse relation: pairs swapped, domain and codomain swapped."""

    def pred(x, y, R=R):
        return R.contains_vectors(y, x)

    mask_fn = None
    if R._mask_fn is not None:
        def mask_fn(X, Y, R=R):
            return R._mask_fn(Y, X).T

    out = Relation(R.codomain, R.domain, f"dagger[{R.kind}]", R.params, pred,
                   mask_fn=mask_fn)
    if R._mask is not None:
        out._mask = R._mask.T
    return out


def intersect(R: Relation, Rp: Relation) -> Relation:
    """Pairwise intersection; predicate is the conjunction."""
    if (R.domain.points != Rp.domain.points
            or R.codomain.points != Rp.codomain.points):
        raise InvalidArgument("intersection requires identical domain and codomain")

    def pred(x, y, R=R, Rp=Rp):
        return R.contains_vectors(x, y) and Rp.contains_vectors(x, y)

    mask_fn = None
    if R._mask_fn is not None and Rp._mask_fn is not None:
        def mask_fn(X, Y, R=R, Rp=Rp):
            return R._mask_fn(X, Y) & Rp._mask_fn(X, Y)

    out = Relation(R.domain, R.codomain, "intersect",
                   {"left": R.describe(), "right": Rp.describe()}, pred, mask_fn)
    if R._mask is not None and Rp._mask is not None:
        out._mask = R._mask & Rp._mask
    return out


def fiber(R: Relation, x: GridPoint) -> tuple[GridPoint, ...]:
    """All codomain points aligned with x."""
    i = R.domain.index_of(x)
    row = R.mask()[i]
    return tuple(R.codomain.points[j] for j in np.nonzero(row)[0])


def graph_of(f) -> MapAsRelation:
    """Graph(f) as a vertical morphism.

    Every image must satisfy the codomain's membership predicate within
    tolerance; images that also land on the codomain lattice give an exact
    functional pair set.
    """
    domain: LatticeSpace = f.domain
    codomain: LatticeSpace = f.codomain
    images = [np.asarray(f.evaluate(p), dtype=float) for p in domain.points]
    for p, img in zip(domain.points, images):
        if not codomain.contains_vector(img):
            raise InvalidArgument(
                f"map is not into its codomain: f({p}) = {img.tolist()}"
            )
    graph_pairs = tuple(zip(domain.points, images))

    img_matrix = np.asarray(images) if images else np.zeros((0, codomain.n + 1))

    def pred(x, y, domain=domain, img=img_matrix):
        try:
            i = domain.index_of(_to_point(np.asarray(x, dtype=float), domain.N))
        except InvalidArgument:
            return False
        return float(np.abs(img[i] - np.asarray(y, dtype=float)).max()) <= FLOAT_TOL

    def mask_fn(X, Y, domain=domain, img=img_matrix):
        out = np.zeros((len(X), len(Y)), dtype=bool)
        for r, x in enumerate(X):
            try:
                i = domain.index_of(_to_point(x, domain.N))
            except InvalidArgument:
                continue
            out[r] = np.abs(Y - img[i]).max(axis=1) <= FLOAT_TOL
        return out

    return MapAsRelation(domain, codomain, "graph", {"map": getattr(f, "name", "f")},
                         pred, mask_fn, functional=True, graph_pairs=graph_pairs)


def two_cell_exists(f, g, R: Relation, S: Relation) -> bool:
    """Thin 2-cell test: Graph(g) . R included in S . Graph(f).

    f: K1 -> K2, g: K3 -> K4, R in K1 x K3, S in K2 x K4.  Down-then-right
    pairs (f is applied to the hub, g to the aligned partner) are checked
    against S's analytic predicate.
    """
    if f.domain.points != R.domain.points:
        raise InvalidArgument("f must start at R's domain")
    if g.domain.points != R.codomain.points:
        raise InvalidArgument("g must start at R's codomain")
    for x, w in R.pairs:
        if not S.contains_vectors(f.evaluate(x), g.evaluate(w)):
            return False
    return True
