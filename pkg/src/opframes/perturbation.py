"""Certifiers for the perturbation and stability theorems.

Each certifier checks a theorem's hypothesis on a concrete instance, evaluates
the closed-form bounds the theorem promises, and sets them against the optimal
bounds of the perturbed family computed independently from its Gram matrix.

Hypotheses of the form ``||X P X^H|| <= c ||X Q X^H||`` for all X are decided
exactly: they hold iff ``P <= c Q`` in the Loewner order (take X with a single
nonzero row for one direction, congruence for the other).  Hypotheses that add
two norms on the right-hand side only admit a sufficient Loewner test, backed
by seeded sampling.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .cstar import DEFAULT_TOL, Tolerance, hermitian_part, is_positive, pencil_inf, pencil_sup
from .errors import BadParameter, CountMismatch, DegenerateDenominator, DimensionMismatch, IndexOutOfRange
from .frames import (
    FrameBounds,
    KOperator,
    OperatorFrame,
    batch_norms,
    check_compatible,
    frame_gram,
    gram_bounds,
    k_bounds_from_gram,
)

THEOREMS = (
    "bessel_sum_plus",
    "bessel_sum_minus",
    "min_condition",
    "min_condition_k",
    "combination",
    "combination_k",
    "extension",
    "extension_k",
    "weighted",
    "k_perturbation",
    "k_corollary",
)

ENCLOSURE_REL = 1e-9

K_LOWER_NOTE = (
    "lower bound certified against <K*x, K*x>; the weighted-sum argument controls "
    "||{T_w x}|| which dominates A ||K*x||^2, not A ||x||^2"
)


@dataclass(frozen=True)
class Certificate:
    """Outcome of one certifier run.

    ``hypothesis_margin`` is positive exactly when the hypothesis holds; its
    units depend on the theorem (see each certifier).  ``extras`` carries the
    intermediate constants (ratio constants, verification path, converse data).
    """

    theorem_id: str
    hypothesis_ok: bool
    hypothesis_margin: float
    certified: FrameBounds
    observed: FrameBounds
    notes: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict)

    @property
    def lower_slack(self) -> float:
        return self.observed.lower - self.certified.lower

    @property
    def upper_slack(self) -> float:
        return self.certified.upper - self.observed.upper

    @property
    def scale(self) -> float:
        return max(1.0, self.observed.upper)

    def enclosure_violated(self, rel: float = ENCLOSURE_REL) -> bool:
        if not self.hypothesis_ok:
            return False
        floor = -rel * self.scale
        return not (self.lower_slack >= floor and self.upper_slack >= floor)


def _identity_k(F: OperatorFrame) -> KOperator:
    return KOperator.from_matrix(np.eye(F.size), F.algebra_dim)


def _check_k(F: OperatorFrame, K: KOperator | None):
    if K is not None and K.op.shape != F.shape:
        raise DimensionMismatch(f"K acts on {K.op.shape}, frames on {F.shape}")


def _bounds(G, K, t) -> FrameBounds:
    if K is None:
        return gram_bounds(G)
    return k_bounds_from_gram(G, K, t)[0]


def _k_sigma_min(K: KOperator) -> float:
    return float(np.linalg.svd(K.matrix, compute_uv=False)[-1])


def converse_applicable(K: KOperator | None, t: Tolerance = DEFAULT_TOL) -> bool:
    """Model test for ``||x|| <= ||K* x||``: equivalent to ``K^H K >= I``."""
    return K is None or _k_sigma_min(K) >= 1.0 - t.rel


def instance_rng(seed: int, *arrays) -> np.random.Generator:
    """Generator keyed on (seed, content of the instance), independent of call order."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=complex))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    digest = int.from_bytes(h.digest()[:16], "little")
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), digest]))


def sample_module_vectors(rng, d: int, N: int, count: int, candidates=()) -> np.ndarray:
    """Random unit-norm module vectors, preceded by single-row candidates."""
    rows = []
    for v in candidates:
        X = np.zeros((d, N), complex)
        X[0] = np.conj(v)
        rows.append(X)
    X = rng.standard_normal((count, d, N)) + 1j * rng.standard_normal((count, d, N))
    # low-rank directions reach the extremes of the Loewner comparisons faster
    X[: count // 2, 1:] *= rng.uniform(0, 0.2, size=(count // 2, 1, 1))
    out = np.concatenate([np.array(rows).reshape(-1, d, N), X]) if rows else X
    norms = np.linalg.norm(out, 2, axis=(-2, -1))
    norms[norms == 0] = 1.0
    return out / norms[:, None, None]


def _eig_candidates(*mats):
    out = []
    for M in mats:
        _, U = np.linalg.eigh(hermitian_part(M))
        out.extend(U.T)
    return out


def _pair_candidates(P, Q, t):
    """Extremal directions of the pencil (P, Q) where they exist."""
    out = []
    for fn in (pencil_sup, pencil_inf):
        try:
            r = fn(P, Q, t)
        except (DegenerateDenominator, ValueError):
            continue
        if r.vector is not None:
            out.append(r.vector)
    return out


# -- Bessel-sum perturbation -------------------------------------------------


def certify_bessel_sum(
    T: OperatorFrame, R: OperatorFrame, sign: int = 1, t: Tolerance = DEFAULT_TOL, bounds: FrameBounds | None = None
) -> Certificate:
    """``T +/- R`` for a Bessel family R whose bound M stays below the lower bound A of T.

    Margin: ``A - M``.  Certified: ``((sqrt A - sqrt M)^2, (sqrt B + sqrt M)^2)``.
    """
    check_compatible(T, R)
    if sign not in (1, -1):
        raise BadParameter(f"sign must be +1 or -1, got {sign}")
    b = bounds or gram_bounds(frame_gram(T))
    M = gram_bounds(frame_gram(R)).upper
    A, B = b.lower, b.upper
    certified = FrameBounds((math.sqrt(A) - math.sqrt(M)) ** 2, (math.sqrt(B) + math.sqrt(M)) ** 2)
    perturbed = T + R if sign == 1 else T - R
    observed = gram_bounds(frame_gram(perturbed))
    ok = M < A - t.rel
    notes = () if ok else ("Bessel bound M is not below the lower frame bound A",)
    return Certificate(
        "bessel_sum_plus" if sign == 1 else "bessel_sum_minus",
        ok,
        A - M,
        certified,
        observed,
        notes,
        {"M": M, "A": A, "B": B, "sign": sign},
    )


# -- min-condition ------------------------------------------------------------


def optimal_min_constant(T: OperatorFrame, R: OperatorFrame, t: Tolerance = DEFAULT_TOL) -> float:
    """Least M with ``||(T-R)x||^2 <= M min(||Tx||^2, ||Rx||^2)``; ``inf`` when none exists."""
    check_compatible(T, R)
    P = frame_gram(T - R)
    return max(pencil_sup(P, frame_gram(T), t).value, pencil_sup(P, frame_gram(R), t).value)


def certify_min_condition(
    T: OperatorFrame,
    R: OperatorFrame,
    K: KOperator | None = None,
    t: Tolerance = DEFAULT_TOL,
    bounds: FrameBounds | None = None,
) -> Certificate:
    """R is a (K-)frame iff the min-condition holds for some finite M.

    Margin: ``1 / (1 + M)``, zero when no finite M exists.
    Certified: ``(A / (1 + sqrt M)^2, B (1 + sqrt M)^2)``.
    """
    _check_k(T, K)
    M = optimal_min_constant(T, R, t)
    G_T, G_R = frame_gram(T), frame_gram(R)
    b = bounds or _bounds(G_T, K, t)
    observed = _bounds(G_R, K, t)
    ok = math.isfinite(M)
    if ok:
        root = 1.0 + math.sqrt(M)
        certified = FrameBounds(b.lower / root**2, b.upper * root**2)
    else:
        certified = FrameBounds(0.0, math.inf)

    # constant produced by the forward argument, from bounds (C, D) of R
    C, D = observed.lower, observed.upper
    A, B = b.lower, b.upper
    forward_M = min(
        1.0 + math.sqrt(B / C) if C > 0 else math.inf,
        1.0 + math.sqrt(D / A) if A > 0 else math.inf,
    )
    notes = []
    if not ok:
        notes.append("difference family has mass outside the range of a Gram matrix: no finite M")
    if math.isfinite(forward_M) and ok and forward_M < M:
        notes.append("the forward-direction constant min(1+sqrt(B/C), 1+sqrt(D/A)) is below the optimal M")
    extras = {
        "optimal_M": M,
        "forward_M": forward_M,
        "converse_applicable": converse_applicable(K, t),
    }
    if K is not None:
        extras["k_sigma_min"] = _k_sigma_min(K)
    return Certificate(
        "min_condition" if K is None else "min_condition_k",
        ok,
        1.0 / (1.0 + M) if ok else 0.0,
        certified,
        observed,
        tuple(notes),
        extras,
    )


# -- linear combinations ------------------------------------------------------


def _combine(families, alphas):
    check_compatible(*families)
    stack = sum(a * F.stack for a, F in zip(alphas, families))
    return families[0].with_stack(stack)


def _check_index(p, count):
    if not 1 <= p <= count:
        raise IndexOutOfRange(f"p = {p} outside 1..{count}")


def certify_combination(
    families,
    alphas,
    p: int,
    K: KOperator | None = None,
    t: Tolerance = DEFAULT_TOL,
    samples: int = 1000,
    seed: int = 0,
) -> Certificate:
    """Linear combination ``sum_k alpha_k T_k`` dominated from below by family ``p`` (1-based).

    Margin: the optimal ``lambda`` in ``lambda ||{T_p x}|| <= ||{sum alpha_k T_k x}||``.
    Certified: ``(A_p lambda^2, (max |alpha_k|)^2 (sum_k sqrt B_k)^2)``.
    """
    families = list(families)
    alphas = np.asarray(alphas, dtype=complex).reshape(-1)
    if len(families) != alphas.size:
        raise CountMismatch(f"{len(families)} families, {alphas.size} coefficients")
    _check_index(p, len(families))
    _check_k(families[0], K)
    combined = _combine(families, alphas)
    G_sum = frame_gram(combined)
    grams = [frame_gram(F) for F in families]
    G_p = grams[p - 1]

    notes = []
    try:
        lam_sq = pencil_inf(G_sum, G_p, t).value
    except DegenerateDenominator:
        lam_sq = 0.0
        notes.append(f"family {p} is the zero family")
    lam = math.sqrt(lam_sq)
    ok = lam > t.abs_floor
    if not ok:
        notes.append("combined family does not dominate family p")

    A_p = _bounds(G_p, K, t).lower
    B_k = [gram_bounds(G).upper for G in grams]
    certified = FrameBounds(A_p * lam_sq, float(np.max(np.abs(alphas))) ** 2 * sum(map(math.sqrt, B_k)) ** 2)
    observed = _bounds(G_sum, K, t)

    # converse: lambda_conv = A / B_p for the squared norms
    B_p = B_k[p - 1]
    lam_conv = observed.lower / B_p if B_p > 0 else 0.0
    applicable = converse_applicable(K, t)
    extras = {
        "lambda": lam,
        "lambda_sq": lam_sq,
        "lambda_conv": lam_conv,
        "sqrt_lambda_conv": math.sqrt(lam_conv),
        "converse_applicable": applicable,
    }
    if applicable:
        d, N = combined.algebra_dim, combined.size
        rng = instance_rng(seed, G_sum, G_p)
        cands = _eig_candidates(G_sum, G_p) + _pair_candidates(G_sum, G_p, t)
        X = sample_module_vectors(rng, d, N, samples, cands)
        lhs = lam_conv * batch_norms(X, G_p)
        rhs = batch_norms(X, G_sum)
        margin = float(np.min(rhs - lhs))
        extras["converse_margin"] = margin
        extras["converse_ok"] = bool(margin >= -ENCLOSURE_REL * max(1.0, float(np.max(rhs))))
    return Certificate(
        "combination" if K is None else "combination_k", ok, lam, certified, observed, tuple(notes), extras
    )


# -- bounded extension ---------------------------------------------------------


def minimal_extension_norm(target: OperatorFrame, source: OperatorFrame, t: Tolerance = DEFAULT_TOL) -> float:
    """Least ``||L||`` with ``L {source_w x} = {target_w x}`` for every x; ``inf`` if none is bounded."""
    check_compatible(target, source)
    return math.sqrt(pencil_sup(frame_gram(target), frame_gram(source), t).value)


def certify_extension(
    T_families,
    R_families,
    p: int,
    lambda_cond: float,
    K: KOperator | None = None,
    t: Tolerance = DEFAULT_TOL,
) -> Certificate:
    """``sum_k R_k`` when each ``R_k`` is a relative perturbation of ``T_k`` and maps onto ``T_p``.

    Margin: ``lambda_cond - max_k c_k`` with ``c_k`` the optimal per-family constant.
    Certified: ``(A_p / ||L||^2, (1 + sqrt lambda)^2 (sum_k sqrt B_k)^2)``.
    """
    T_families, R_families = list(T_families), list(R_families)
    if len(T_families) != len(R_families) or not T_families:
        raise CountMismatch(f"{len(T_families)} T families, {len(R_families)} R families")
    _check_index(p, len(T_families))
    if not lambda_cond >= 0:
        raise BadParameter("lambda must be non-negative")
    check_compatible(*T_families, *R_families)
    _check_k(T_families[0], K)

    grams = [frame_gram(F) for F in T_families]
    ratios = [pencil_sup(frame_gram(Tk - Rk), G, t).value for Tk, Rk, G in zip(T_families, R_families, grams)]
    worst = max(ratios)
    cond_ok = worst <= lambda_cond + t.rel * max(1.0, lambda_cond)

    summed = R_families[0].with_stack(sum(R.stack for R in R_families))
    G_sum = frame_gram(summed)
    L = math.sqrt(pencil_sup(grams[p - 1], G_sum, t).value)
    ok = cond_ok and math.isfinite(L)

    notes = []
    if not cond_ok:
        notes.append("relative perturbation condition fails for some k")
    if not math.isfinite(L):
        notes.append("no bounded L maps the summed family onto family p")

    A_p = _bounds(grams[p - 1], K, t).lower
    B_k = [gram_bounds(G).upper for G in grams]
    if math.isfinite(L) and L > 0:
        lower = A_p / L**2
    else:
        lower = 0.0
    upper = (1.0 + math.sqrt(lambda_cond)) ** 2 * sum(map(math.sqrt, B_k)) ** 2
    observed = _bounds(G_sum, K, t)
    extras = {"L_norm": L, "ratios": [float(r) for r in ratios], "lambda_cond": float(lambda_cond)}
    return Certificate(
        "extension" if K is None else "extension_k",
        ok,
        lambda_cond - worst,
        FrameBounds(lower, upper),
        observed,
        tuple(notes),
        extras,
    )


# -- mixed-norm hypotheses ------------------------------------------------------


def _mixed_check(P, rhs_terms, d, N, rng, samples, t, extra_candidates=()):
    """Decide ``sqrt||XPX^H|| <= sum_i c_i sqrt||X Q_i X^H||`` (or its squared analogue).

    ``rhs_terms`` is ``(Q_i, c_i, power)``; ``power`` 0.5 compares square roots of
    norms, 1 compares norms.  Returns (loewner_ok, loewner_margin, sampled_margin).
    The Loewner test uses ``P <= sum_i c_i^(1/power) Q_i`` which suffices because
    norms are subadditive on positive matrices.
    """
    Q = sum(c ** (1.0 / power) * G for G, c, power in rhs_terms)
    gap = hermitian_part(Q - P)
    loewner_ok = is_positive(gap, t)
    loewner_margin = float(np.linalg.eigvalsh(gap)[0])

    cands = _eig_candidates(P, *[G for G, _, _ in rhs_terms]) + _pair_candidates(P, Q, t) + list(extra_candidates)
    X = sample_module_vectors(rng, d, N, samples, cands)
    power = rhs_terms[0][2]
    lhs = batch_norms(X, P) ** power
    rhs = sum(c * batch_norms(X, G) ** power for G, c, _ in rhs_terms)
    sampled = float(np.min(rhs - lhs))
    scale = max(1.0, float(np.max(rhs)))
    return loewner_ok, loewner_margin, sampled, sampled >= -t.rel * scale


def certify_weighted(
    T: OperatorFrame,
    R: OperatorFrame,
    alpha_w,
    beta_w,
    lam: float,
    mu: float,
    K: KOperator | None = None,
    samples: int = 256,
    seed: int = 0,
    t: Tolerance = DEFAULT_TOL,
    bounds: FrameBounds | None = None,
) -> Certificate:
    """Pointwise-weighted perturbation ``alpha_w T_w - beta_w R_w`` of a K-frame.

    Margin: smallest eigenvalue of the Loewner gap on the exact path, otherwise
    the smallest sampled ``rhs - lhs``.
    Certified: ``A c_lo^2`` and ``B c_hi^2`` with
    ``c_lo = (1-lam) inf alpha / ((1+mu) sup beta)``,
    ``c_hi = (1+lam) sup alpha / ((1-mu) inf beta)``.
    """
    check_compatible(T, R)
    if not (0.0 <= lam < 1.0 and 0.0 <= mu < 1.0):
        raise BadParameter(f"lam and mu must lie in [0, 1), got {lam}, {mu}")
    m = T.measure.point_count
    alpha_w = np.asarray(alpha_w, dtype=float).reshape(-1)
    beta_w = np.asarray(beta_w, dtype=float).reshape(-1)
    if alpha_w.size != m or beta_w.size != m:
        raise DimensionMismatch("weight families must have one entry per measure point")
    if np.any(alpha_w <= 0) or np.any(beta_w <= 0):
        raise BadParameter("alpha_w and beta_w must be strictly positive")
    K = K if K is not None else _identity_k(T)
    _check_k(T, K)

    aT = T.with_stack(alpha_w[:, None, None] * T.stack)
    bR = R.with_stack(beta_w[:, None, None] * R.stack)
    P = frame_gram(aT - bR)
    rng = instance_rng(seed, P, T.stack, R.stack, K.matrix)
    loewner_ok, loewner_margin, sampled, sampled_ok = _mixed_check(
        P, [(frame_gram(aT), lam, 0.5), (frame_gram(bR), mu, 0.5)], T.algebra_dim, T.size, rng, samples, t
    )
    ok = loewner_ok or sampled_ok
    path = "loewner" if loewner_ok else "sampling"

    b = bounds or k_bounds_from_gram(frame_gram(T), K, t)[0]
    c_lo = (1 - lam) * alpha_w.min() / ((1 + mu) * beta_w.max())
    c_hi = (1 + lam) * alpha_w.max() / ((1 - mu) * beta_w.min())
    certified = FrameBounds(b.lower * c_lo**2, b.upper * c_hi**2)
    observed = k_bounds_from_gram(frame_gram(R), K, t)[0]
    return Certificate(
        "weighted",
        ok,
        loewner_margin if loewner_ok else sampled,
        certified,
        observed,
        (K_LOWER_NOTE,),
        {"path": path, "loewner_margin": loewner_margin, "sampled_margin": sampled, "c_lo": c_lo, "c_hi": c_hi},
    )


def certify_k_perturbation(
    T: OperatorFrame,
    R: OperatorFrame,
    K: KOperator,
    alpha: float,
    beta: float,
    t: Tolerance = DEFAULT_TOL,
    bounds: FrameBounds | None = None,
    samples: int = 256,
    seed: int = 0,
    theorem_id: str = "k_perturbation",
) -> Certificate:
    """``||(T-R)x||^2 <= alpha ||Tx||^2 + beta ||K*x||^2`` with ``alpha + beta/A < 1``.

    Margin as in :func:`certify_weighted`.
    Certified: ``(A (1 - sqrt s)^2, B (1 + sqrt s)^2)`` with ``s = alpha + beta/A``.
    """
    check_compatible(T, R)
    _check_k(T, K)
    if not (alpha >= 0 and beta >= 0):
        raise BadParameter("alpha and beta must be non-negative")
    G_T = frame_gram(T)
    b = bounds or k_bounds_from_gram(G_T, K, t)[0]
    A, B = b.lower, b.upper
    if A <= 0 and beta > 0:
        raise BadParameter("beta > 0 needs a positive lower K-frame bound")
    s = alpha + (beta / A if beta > 0 else 0.0)
    if s >= 1.0 - t.rel:
        raise BadParameter(f"alpha + beta/A = {s} is not below 1")

    P = frame_gram(T - R)
    KK = K.gram()
    rng = instance_rng(seed, P, G_T, KK)
    loewner_ok, loewner_margin, sampled, sampled_ok = _mixed_check(
        P, [(G_T, alpha, 1.0), (KK, beta, 1.0)], T.algebra_dim, T.size, rng, samples, t
    )
    ok = loewner_ok or sampled_ok
    certified = FrameBounds(A * (1 - math.sqrt(s)) ** 2, B * (1 + math.sqrt(s)) ** 2)
    observed = k_bounds_from_gram(frame_gram(R), K, t)[0]
    return Certificate(
        theorem_id,
        ok,
        loewner_margin if loewner_ok else sampled,
        certified,
        observed,
        (),
        {
            "path": "loewner" if loewner_ok else "sampling",
            "loewner_margin": loewner_margin,
            "sampled_margin": sampled,
            "s": s,
            "alpha": float(alpha),
            "beta": float(beta),
        },
    )


def certify_k_corollary(
    T: OperatorFrame, R: OperatorFrame, K: KOperator, alpha: float, t: Tolerance = DEFAULT_TOL, **kw
) -> Certificate:
    """Special case ``||(T-R)x||^2 <= alpha ||K*x||^2`` with ``alpha < A``."""
    return certify_k_perturbation(T, R, K, 0.0, alpha, t, theorem_id="k_corollary", **kw)
