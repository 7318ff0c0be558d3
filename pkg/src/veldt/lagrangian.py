"""Integrands in jet variables: derivative callbacks, exponents, growth checks.

An integrand f(x, xi) depends on a spatial point x and a jet xi, the tuple of
all derivative values xi^i_alpha for component i and multi-index alpha with
|alpha| <= m.  Everything downstream (assembly, spectra, reduction) consumes
the vectorized callbacks stored on a :class:`Lagrangian`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DependencyError, EvaluationError

__all__ = [
    "MultiIndex",
    "MultiIndexSet",
    "enumerate_multi_indices",
    "Jet",
    "GrowthSpec",
    "Lagrangian",
    "JetDerivatives",
    "eval_jet_derivatives",
    "GrowthReport",
    "check_growth",
    "PSReport",
    "ps_certificate",
]


# ---------------------------------------------------------------------------
# multi-indices


@dataclass(frozen=True)
class MultiIndex:
    """An n-tuple of non-negative integers; order() is the total derivative order."""

    entries: tuple

    def __post_init__(self):
        if any(e < 0 or int(e) != e for e in self.entries):
            raise ConfigurationError(f"multi-index entries must be non-negative integers: {self.entries}")
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))

    @property
    def order(self) -> int:
        return sum(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


def _grade_count(n: int, k: int) -> int:
    # number of multi-indices of exact length k in n variables
    return math.comb(n + k - 1, n - 1)


@dataclass(frozen=True)
class MultiIndexSet:
    """All multi-indices with |alpha| <= m in n variables, graded-lexicographic.

    Grades ascend; within a grade the tuples are sorted lexicographically.
    ``counts_cumulative[k]`` is the number of indices of length <= k and
    ``counts_exact[k]`` the number of length exactly k.
    """

    n: int
    m: int
    indices: tuple
    counts_cumulative: tuple
    counts_exact: tuple

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, i) -> MultiIndex:
        return self.indices[i]

    def position(self, alpha) -> int:
        key = tuple(alpha.entries if isinstance(alpha, MultiIndex) else alpha)
        for i, a in enumerate(self.indices):
            if a.entries == key:
                return i
        raise KeyError(f"multi-index {key} not in set (n={self.n}, m={self.m})")

    def orders(self) -> np.ndarray:
        return np.array([a.order for a in self.indices], dtype=int)


def enumerate_multi_indices(n: int, m: int) -> MultiIndexSet:
    """Enumerate all multi-indices of order <= m in n variables.

    Deterministic graded-lexicographic order, grade ascending.
    """
    if n < 1 or m < 1:
        raise ConfigurationError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    indices = []
    exact = []
    for k in range(m + 1):
        grade = sorted(_compositions(n, k))
        exact.append(len(grade))
        indices.extend(MultiIndex(entries=g) for g in grade)
    cumulative = tuple(np.cumsum(exact).tolist())
    return MultiIndexSet(
        n=n,
        m=m,
        indices=tuple(indices),
        counts_cumulative=cumulative,
        counts_exact=tuple(exact),
    )


def _compositions(n: int, k: int):
    # all n-tuples of non-negative integers summing to k
    if n == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(n - 1, k - first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class Jet:
    """Pointwise jet: values[i, a] = xi^i_alpha for the a-th multi-index.

    The low-order slice ``low_order_part`` collects the entries with
    |alpha| < m - n/p; those are the arguments of the growth envelopes.
    """

    index_set: MultiIndexSet
    values: np.ndarray  # shape (N, A)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != len(self.index_set):
            raise ConfigurationError(
                f"jet values must have shape (N, {len(self.index_set)}), got {vals.shape}"
            )
        object.__setattr__(self, "values", vals)

    @property
    def n_components(self) -> int:
        return self.values.shape[0]

    def low_order_part(self, p: float) -> np.ndarray:
        cut = self.index_set.m - self.index_set.n / p
        mask = self.index_set.orders() < cut
        return self.values[:, mask]

    @classmethod
    def zero(cls, index_set: MultiIndexSet, n_components: int = 1) -> "Jet":
        return cls(index_set=index_set, values=np.zeros((n_components, len(index_set))))


def low_order_magnitude(index_set: MultiIndexSet, values: np.ndarray, p: float) -> np.ndarray:
    """Sum over components of |xi^k_o| for the low-order jet entries.

    ``values`` has shape (..., N, A); returns shape (...,).
    """
    cut = index_set.m - index_set.n / p
    mask = index_set.orders() < cut
    if not mask.any():
        return np.zeros(np.asarray(values).shape[:-2])
    sel = np.asarray(values)[..., mask]
    return np.sqrt(np.sum(sel**2, axis=-1)).sum(axis=-1)


# ---------------------------------------------------------------------------
# growth data


def _as_envelope(g) -> Callable[[np.ndarray], np.ndarray]:
    if callable(g):
        return g
    raise ConfigurationError("growth envelopes must be callables on [0, inf)")


@dataclass(frozen=True)
class GrowthSpec:
    """Exponent bookkeeping and monotone envelopes for one integrand.

    ``p_gamma[a]`` is the integrability exponent attached to the a-th
    multi-index (np.inf when unconstrained), ``q_gamma`` the dual exponents,
    and ``p_pair[a, b]`` the interaction exponents entering the Hessian bound.
    ``g1`` and ``g2`` are the nondecreasing positive envelope functions.
    """

    index_set: MultiIndexSet
    p: float
    p_gamma: np.ndarray
    q_gamma: np.ndarray
    p_pair: np.ndarray
    g1: Optional[Callable] = None
    g2: Optional[Callable] = None

    @classmethod
    def canonical(
        cls,
        n: int,
        m: int,
        p: float = 2.0,
        g1: Optional[Callable] = None,
        g2: Optional[Callable] = None,
        p_border: Optional[float] = None,
        pair_fraction: float = 0.5,
    ) -> "GrowthSpec":
        """Build the exponent tables from (n, m, p).

        ``p_border`` fixes the free exponent on the borderline grade
        |gamma| = m - n/p when that grade exists (default p + 2).  Interaction
        exponents constrained only to an open interval default to its midpoint
        (``pair_fraction`` = 0.5).
        """
        if p < 2:
            raise ConfigurationError(f"p must be >= 2, got {p}")
        iset = enumerate_multi_indices(n, m)
        cut = m - n / p
        orders = iset.orders()
        A = len(iset)
        p_gamma = np.full(A, np.inf)
        q_gamma = np.ones(A)
        for a, k in enumerate(orders):
            if abs(k - cut) < 1e-12:
                p_gamma[a] = p_border if p_border is not None else p + 2.0
            elif cut < k <= m:
                p_gamma[a] = n * p / (n - (m - k) * p)
            if k >= cut - 1e-12:
                p_gamma_a = p_gamma[a]
                q_gamma[a] = p_gamma_a / (p_gamma_a - 1.0)
        p_pair = np.empty((A, A))
        for a, ka in enumerate(orders):
            for b, kb in enumerate(orders):
                p_pair[a, b] = _pair_exponent(ka, kb, m, cut, p_gamma[a], p_gamma[b], pair_fraction)
        spec = cls(
            index_set=iset,
            p=float(p),
            p_gamma=p_gamma,
            q_gamma=q_gamma,
            p_pair=p_pair,
            g1=_as_envelope(g1) if g1 is not None else None,
            g2=_as_envelope(g2) if g2 is not None else None,
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        """Reject inconsistent exponent tables before any numeric work."""
        iset = self.index_set
        n, m, p = iset.n, iset.m, self.p
        cut = m - n / p
        orders = iset.orders()
        for a, k in enumerate(orders):
            if cut < k <= m and abs(k - cut) > 1e-12:
                expected = n * p / (n - (m - k) * p)
                if not np.isclose(self.p_gamma[a], expected):
                    raise ConfigurationError(
                        f"p_gamma for |gamma|={k} must be {expected}, got {self.p_gamma[a]}"
                    )
            if k >= cut - 1e-12:
                pg = self.p_gamma[a]
                if not np.isfinite(pg) or pg <= 1:
                    raise ConfigurationError(f"p_gamma for |gamma|={k} must lie in (1, inf)")
                if not np.isclose(self.q_gamma[a], pg / (pg - 1)):
                    raise ConfigurationError(f"q_gamma for |gamma|={k} must be dual to p_gamma")
            elif not np.isclose(self.q_gamma[a], 1.0):
                raise ConfigurationError(f"q_gamma below the low-order cut must be 1")
        for a, ka in enumerate(orders):
            for b, kb in enumerate(orders):
                val = self.p_pair[a, b]
                if not np.isclose(val, self.p_pair[b, a]):
                    raise ConfigurationError("interaction exponents must be symmetric")
                if ka == m and kb == m:
                    expected = 1 - 1 / self.p_gamma[a] - 1 / self.p_gamma[b]
                    if not np.isclose(val, expected):
                        raise ConfigurationError(
                            f"p_pair for |alpha|=|beta|=m must be {expected}, got {val}"
                        )
                elif ka >= cut - 1e-12 and kb < cut - 1e-12:
                    if not np.isclose(val, 1 - 1 / self.p_gamma[a]):
                        raise ConfigurationError("p_pair in the mixed regime must be 1 - 1/p_alpha")
                elif ka < cut - 1e-12 and kb >= cut - 1e-12:
                    if not np.isclose(val, 1 - 1 / self.p_gamma[b]):
                        raise ConfigurationError("p_pair in the mixed regime must be 1 - 1/p_beta")
                elif ka < cut - 1e-12 and kb < cut - 1e-12:
                    if not np.isclose(val, 1.0):
                        raise ConfigurationError("p_pair in the low regime must be 1")
                else:
                    upper = 1 - 1 / self.p_gamma[a] - 1 / self.p_gamma[b]
                    if not (0 < val < upper):
                        raise ConfigurationError(
                            f"p_pair for |alpha|={ka}, |beta|={kb} must lie in (0, {upper}), got {val}"
                        )
        for g, name in ((self.g1, "g1"), (self.g2, "g2")):
            if g is None:
                continue
            ts = np.linspace(0.0, 10.0, 41)
            vals = np.asarray([float(g(t)) for t in ts])
            if np.any(vals <= 0):
                raise ConfigurationError(f"envelope {name} must be strictly positive")
            if np.any(np.diff(vals) < -1e-12 * np.abs(vals[:-1])):
                raise ConfigurationError(f"envelope {name} must be nondecreasing")


def _pair_exponent(ka, kb, m, cut, pa, pb, fraction):
    lo_a = ka < cut - 1e-12
    lo_b = kb < cut - 1e-12
    if ka == m and kb == m:
        return 1 - 1 / pa - 1 / pb
    if not lo_a and lo_b:
        return 1 - 1 / pa
    if lo_a and not lo_b:
        return 1 - 1 / pb
    if lo_a and lo_b:
        return 1.0
    # both above the cut but |alpha| + |beta| < 2m: open interval, take a point inside
    upper = 1 - 1 / pa - 1 / pb
    return fraction * upper


# ---------------------------------------------------------------------------
# the integrand container


@dataclass(frozen=True)
class Lagrangian:
    """An integrand with analytic first and second jet derivatives.

    The callbacks are vectorized over quadrature nodes:

    * ``f(x, xi) -> (Q,)``
    * ``grad_f(x, xi) -> (Q, N, A)``
    * ``hess_f(x, xi) -> (Q, N, A, N, A)``

    where ``x`` has shape (Q,) for one spatial dimension or (Q, n) otherwise,
    and ``xi`` has shape (Q, N, A) with the multi-index axis ordered as in
    ``index_set``.  No automatic differentiation happens here; the callbacks
    are trusted analytics and are cross-checked by finite differences in the
    test suite.
    """

    n: int
    m: int
    N: int
    f: Callable
    grad_f: Callable
    hess_f: Callable
    growth: GrowthSpec
    name: str = "custom"
    nonlinearity_degree: int = 4  # frequency multiplier used to size quadratures

    @property
    def index_set(self) -> MultiIndexSet:
        return self.growth.index_set

    def value_at(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        out = np.asarray(self.f(x, xi), dtype=float)
        _require_finite(out, x, "f")
        return out

    def gradient_at(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        out = np.asarray(self.grad_f(x, xi), dtype=float)
        _require_finite(out, x, "grad_f")
        return out

    def hessian_at(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        out = np.asarray(self.hess_f(x, xi), dtype=float)
        _require_finite(out, x, "hess_f")
        return out


def _require_finite(values: np.ndarray, x, tag: str):
    if np.all(np.isfinite(values)):
        return
    bad = np.argwhere(~np.isfinite(values))
    first = tuple(bad[0].tolist())
    xq = np.asarray(x)
    node = xq[first[0]] if xq.ndim >= 1 and len(first) >= 1 else None
    raise EvaluationError(
        f"{tag} produced a non-finite value at node index {first[0]}, entry {first[1:]}",
        x=node,
        index=first[1:],
    )


@dataclass(frozen=True)
class JetDerivatives:
    value: float
    gradient: np.ndarray  # (N, A)
    hessian: np.ndarray  # (N, A, N, A)


def eval_jet_derivatives(lag: Lagrangian, x, jet: Jet) -> JetDerivatives:
    """Evaluate f and its first and second jet derivatives at one point."""
    if jet.values.shape != (lag.N, len(lag.index_set)):
        raise ConfigurationError("jet shape does not match the integrand signature")
    xq = np.asarray([x], dtype=float) if lag.n == 1 else np.asarray([x], dtype=float).reshape(1, lag.n)
    xi = jet.values[None, :, :]
    value = float(lag.value_at(xq, xi)[0])
    gradient = lag.gradient_at(xq, xi)[0]
    hessian = lag.hessian_at(xq, xi)[0]
    sym_gap = np.max(np.abs(hessian - hessian.transpose(2, 3, 0, 1)))
    if sym_gap > 1e-12 * max(1.0, float(np.max(np.abs(hessian)))):
        raise EvaluationError(f"hess_f is not symmetric under (i,alpha) <-> (j,beta): gap {sym_gap}", x=x)
    return JetDerivatives(value=value, gradient=gradient, hessian=hessian)


# ---------------------------------------------------------------------------
# growth checks (sampled evidence, not certificates)


@dataclass
class GrowthReport:
    """Outcome of a sampled inspection of the growth inequalities.

    A pass is evidence collected on the supplied samples, not a proof for all
    jets.  ``hessian_ratios`` holds |f_ab| / bound per sample and index pair;
    ``ellipticity_ratios`` holds (principal form minimum) / bound per sample.
    """

    passed: bool
    hessian_ratios: np.ndarray  # (S, N*A, N*A)
    ellipticity_ratios: np.ndarray  # (S,)
    violations: list
    fitted_g1: Optional[tuple] = None  # (knots t, values)
    fitted_g2: Optional[tuple] = None
    derived_envelopes: Optional[dict] = None

    def summary(self) -> dict:
        return {
            "passed": bool(self.passed),
            "max_hessian_ratio": float(np.max(self.hessian_ratios)),
            "min_ellipticity_ratio": float(np.min(self.ellipticity_ratios)),
            "n_violations": len(self.violations),
            "sampled_only": True,
        }


def check_growth(lag: Lagrangian, samples: Sequence) -> GrowthReport:
    """Check the two growth inequalities on a list of (x, Jet) samples.

    The Hessian bound is violated when |f_ab| exceeds
    g1(|xi_o|) * (1 + sum |xi_gamma|^{p_gamma})^{p_ab}; the ellipticity bound
    when the principal quadratic form drops below
    g2(|xi_o|) * (1 + sum_{|gamma|=m} |xi_gamma|)^{p-2}.  When an envelope is
    missing, a minimal monotone step envelope is fitted from the samples and
    reported; a fit trivially passes and is marked as such.
    """
    if not samples:
        raise ConfigurationError("growth check requires at least one sample")
    spec = lag.growth
    spec.validate()
    iset = spec.index_set
    orders = iset.orders()
    A = len(iset)
    N = lag.N
    cut = iset.m - iset.n / spec.p
    mid_mask = orders >= cut - 1e-12
    top_mask = orders == iset.m

    xs = np.asarray([s[0] for s in samples], dtype=float)
    xis = np.stack([s[1].values for s in samples], axis=0)  # (S, N, A)
    S = xis.shape[0]
    hess = lag.hessian_at(xs, xis)  # (S, N, A, N, A)

    t = low_order_magnitude(iset, xis, spec.p)  # (S,)
    # growth weight: 1 + sum over components and constrained gammas of |xi|^{p_gamma}
    pg = spec.p_gamma[mid_mask]
    weight = 1.0 + np.sum(np.abs(xis[:, :, mid_mask]) ** pg, axis=(1, 2))  # (S,)

    fitted_g1 = fitted_g2 = None
    if spec.g1 is not None:
        g1_vals = np.asarray([float(spec.g1(ti)) for ti in t])
    else:
        demand = np.max(
            np.abs(hess) / weight[:, None, None, None, None] ** spec.p_pair[None, None, :, None, :],
            axis=(1, 2, 3, 4),
        )
        g1_vals, fitted_g1 = _fit_upper_envelope(t, demand)

    bound = g1_vals[:, None, None, None, None] * weight[:, None, None, None, None] ** spec.p_pair[None, None, :, None, :]
    hess_ratios = np.abs(hess) / bound
    hess_ratios = hess_ratios.reshape(S, N * A, N * A)

    # principal ellipticity: smallest eigenvalue of the |alpha|=|beta|=m block
    top_idx = np.where(top_mask)[0]
    blocks = hess[:, :, top_idx][:, :, :, :, top_idx]  # (S, N, A_m, N, A_m)
    dim = N * top_idx.size
    blocks = blocks.reshape(S, dim, dim)
    min_eigs = np.array([np.linalg.eigvalsh(0.5 * (b + b.T))[0] for b in blocks])
    top_sum = 1.0 + np.sum(np.abs(xis[:, :, top_mask]), axis=(1, 2))
    rhs_base = top_sum ** (spec.p - 2.0)
    if spec.g2 is not None:
        g2_vals = np.asarray([float(spec.g2(ti)) for ti in t])
    else:
        demand = min_eigs / rhs_base
        g2_vals, fitted_g2 = _fit_lower_envelope(t, demand)
    ell_ratios = min_eigs / (g2_vals * rhs_base)

    violations = []
    for s in range(S):
        worst = float(np.max(hess_ratios[s]))
        if worst > 1.0 + 1e-9:
            ia, ib = np.unravel_index(np.argmax(hess_ratios[s]), hess_ratios[s].shape)
            violations.append(
                {
                    "kind": "hessian_bound",
                    "sample": s,
                    "ratio": worst,
                    "pair": (int(ia), int(ib)),
                    "x": xs[s].tolist() if xs.ndim > 1 else float(xs[s]),
                }
            )
        if ell_ratios[s] < 1.0 - 1e-9:
            violations.append(
                {
                    "kind": "ellipticity_bound",
                    "sample": s,
                    "ratio": float(ell_ratios[s]),
                    "x": xs[s].tolist() if xs.ndim > 1 else float(xs[s]),
                }
            )

    g1_fun = spec.g1 if spec.g1 is not None else (lambda u: float(np.interp(u, *fitted_g1)))
    derived = _derived_envelopes(g1_fun, A, t)

    return GrowthReport(
        passed=not violations,
        hessian_ratios=hess_ratios,
        ellipticity_ratios=ell_ratios,
        violations=violations,
        fitted_g1=fitted_g1,
        fitted_g2=fitted_g2,
        derived_envelopes=derived,
    )


def _fit_upper_envelope(t, demand):
    # minimal nondecreasing majorant of the scatter (t_i, demand_i)
    order = np.argsort(t)
    knots = t[order]
    vals = np.maximum.accumulate(demand[order])
    vals = np.maximum(vals, 1e-12)
    per_sample = np.interp(t, knots, vals)
    return per_sample, (knots, vals)


def _fit_lower_envelope(t, demand):
    # maximal nondecreasing positive minorant: min of demand over samples with larger t
    order = np.argsort(t)
    knots = t[order]
    vals = np.minimum.accumulate(demand[order][::-1])[::-1]
    vals = np.maximum(vals, 1e-12)
    per_sample = np.interp(t, knots, vals)
    return per_sample, (knots, vals)


def _derived_envelopes(g1, A, t_samples):
    # composite envelopes implied by g1 and the multi-index count
    M = A

    def g3(t):
        g = g1(t)
        return 1 + g * (t**2 * M + t * (M + 1) ** 2) + g * t * (M + 1) + g * (M + 1) ** 2

    def g4(t):
        return g1(t) * t + g1(t)

    def g5(t):
        return (M + 1) * g1(t) * (t + 1)

    ts = np.unique(np.asarray(t_samples, dtype=float))
    return {
        "t": ts.tolist(),
        "g3": [float(g3(ti)) for ti in ts],
        "g4": [float(g4(ti)) for ti in ts],
        "g5": [float(g5(ti)) for ti in ts],
    }


# ---------------------------------------------------------------------------
# compactness certificates (pointwise scans)


@dataclass
class PSReport:
    mode: str
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)


def ps_certificate(lag: Lagrangian, mode: str, params: dict) -> PSReport:
    """Scan one of the compactness-condition inequalities on a jet grid.

    Modes:

    * ``coercive``: F(x, xi) >= c0 * sum_{|a|=m} |xi_a|^p - c1 pointwise.
    * ``pairing_bound``: F - kappa * sum F_a xi_a >= c0 * sum_{|a|=m} |xi_a|^p
      - c1 * |xi_0|^p - upsilon, together with c0 - c1 * S > 0 for the
      discrete embedding constant S (params["sobolev_constant"]).
    * ``zero_slice_bound``: F(x, xi-hat, 0) <= phi + C * sum_{|a|<m} |xi_a|^r with
      1 <= r < 2, scanned with the top-order slice zeroed.

    A pass is sampled evidence on the grid, not a proof.
    """
    params = dict(params or {})
    grid = _jet_grid(lag, params)
    xs, xis = grid
    iset = lag.index_set
    orders = iset.orders()
    top = orders == iset.m
    p = lag.growth.p

    if mode == "coercive":
        c0 = float(params.get("c0", 1.0))
        c1 = float(params.get("c1", 0.0))
        values = lag.value_at(xs, xis)
        lower = c0 * np.sum(np.abs(xis[:, :, top]) ** p, axis=(1, 2)) - c1
        margin = float(np.min(values - lower))
        return PSReport(mode=mode, passed=margin >= -1e-12, margin=margin, detail={"c0": c0, "c1": c1})

    if mode == "pairing_bound":
        for key in ("kappa", "c0", "c1"):
            if key not in params:
                raise ConfigurationError(f"mode pairing_bound requires parameter {key!r}")
        S_hat = params.get("sobolev_constant")
        if S_hat is None:
            raise DependencyError(
                "mode pairing_bound needs the discrete embedding constant; "
                "run estimate_sobolev_constant on a discretization first"
            )
        kappa = float(params["kappa"])
        c0 = float(params["c0"])
        c1 = float(params["c1"])
        upsilon = float(params.get("upsilon", 0.0))
        values = lag.value_at(xs, xis)
        grads = lag.gradient_at(xs, xis)
        pairing = np.sum(grads * xis, axis=(1, 2))
        lhs = values - kappa * pairing
        zero_order = orders == 0
        rhs = (
            c0 * np.sum(np.abs(xis[:, :, top]) ** p, axis=(1, 2))
            - c1 * np.sum(np.abs(xis[:, :, zero_order]) ** p, axis=(1, 2))
            - upsilon
        )
        pointwise_margin = float(np.min(lhs - rhs))
        gap = c0 - c1 * float(S_hat)
        passed = pointwise_margin >= -1e-12 and gap > 0
        margin = min(pointwise_margin, gap)
        return PSReport(
            mode=mode,
            passed=passed,
            margin=float(margin),
            detail={"pointwise_margin": pointwise_margin, "embedding_gap": gap},
        )

    if mode == "zero_slice_bound":
        r = float(params.get("r", 1.0))
        if not (1 <= r < 2):
            raise ConfigurationError(f"mode zero_slice_bound requires 1 <= r < 2, got r={r}")
        C = float(params.get("C", 1.0))
        phi = float(params.get("phi", 0.0))
        xi0 = xis.copy()
        xi0[:, :, top] = 0.0
        values = lag.value_at(xs, xi0)
        low = ~top
        bound = phi + C * np.sum(np.abs(xi0[:, :, low]) ** r, axis=(1, 2))
        margin = float(np.min(bound - values))
        return PSReport(mode=mode, passed=margin >= -1e-12, margin=margin, detail={"C": C, "r": r, "phi": phi})

    raise ConfigurationError(f"unknown certificate mode {mode!r}")


def _jet_grid(lag: Lagrangian, params: dict):
    radius = float(params.get("radius", 3.0))
    count = int(params.get("count", 7))
    axis = np.linspace(-radius, radius, count)
    A = len(lag.index_set)
    if lag.N * A > 4:
        # keep the scan affordable in higher-dimensional jet spaces
        rng = np.random.default_rng(int(params.get("seed", 0)))
        pts = rng.uniform(-radius, radius, size=(count**2, lag.N, A))
    else:
        mesh = np.meshgrid(*([axis] * (lag.N * A)), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1).reshape(-1, lag.N, A)
    if lag.n == 1:
        xs = np.full(pts.shape[0], float(params.get("x", 0.5)))
    else:
        xs = np.full((pts.shape[0], lag.n), float(params.get("x", 0.5)))
    return xs, pts
