"""Seeded instance generators and verification campaigns."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cstar import DEFAULT_TOL, Tolerance, hermitian_part, pencil_sup, psd_sqrt
from .errors import BadParameter, NotAFrame
from .frames import KOperator, MeasureSpace, OperatorFrame, classify, frame_gram, gram_bounds, k_bounds_from_gram
from .perturbation import (
    THEOREMS,
    Certificate,
    certify_bessel_sum,
    certify_combination,
    certify_extension,
    certify_k_corollary,
    certify_k_perturbation,
    certify_min_condition,
    certify_weighted,
)

DEFAULT_DIMS = tuple(itertools.product((1, 2, 3), (1, 2, 3, 4), range(1, 17)))

TIGHTNESS_BINS = 10


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(rng, N: int) -> np.ndarray:
    Z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    q, r = np.linalg.qr(Z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _complex_normal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _inv_sqrt(H):
    w, u = np.linalg.eigh(hermitian_part(H))
    return (u / np.sqrt(w)) @ u.conj().T


def random_frame(seed, d: int, n: int, m: int, condition_target: float = 4.0) -> OperatorFrame:
    """Random frame whose Gram matrix has condition number ``condition_target``.

    A target spectrum is laid out log-uniformly on ``[c, c * condition_target]``
    and rotated by a random unitary to give ``G``; random summands ``Z_j`` are
    then reshaped by ``G^{1/2} H^{-1/2}`` with ``H = sum mu_j Z_j Z_j^H`` so the
    family sums back to ``G`` exactly.
    """
    if not condition_target >= 1:
        raise BadParameter("condition_target must be at least 1")
    if min(d, n, m) < 1:
        raise BadParameter("d, n and m must be positive")
    rng = _rng(seed)
    N = n * d
    weights = rng.uniform(0.25, 1.75, size=m)
    weights *= m / weights.sum()
    scale = rng.uniform(0.5, 2.0)
    spectrum = scale * condition_target ** np.sort(rng.uniform(0, 1, size=N))
    spectrum[0], spectrum[-1] = scale, scale * condition_target
    U = random_unitary(rng, N)
    G_half = (U * np.sqrt(spectrum)) @ U.conj().T
    Z = _complex_normal(rng, (m, N, N))
    H = np.einsum("j,jab,jcb->ac", weights, Z, Z.conj())
    stack = G_half @ _inv_sqrt(H) @ Z
    return OperatorFrame(MeasureSpace(weights), stack, d, n)


def random_family(seed, like: OperatorFrame) -> OperatorFrame:
    rng = _rng(seed)
    return like.with_stack(_complex_normal(rng, like.stack.shape))


def random_bessel_below(seed, T: OperatorFrame, ratio: float, t: Tolerance = DEFAULT_TOL) -> OperatorFrame:
    """Random family on T's measure with Bessel bound ``ratio * A(T)``."""
    if not 0 < ratio < 1:
        raise BadParameter("ratio must lie in (0, 1)")
    c = classify(T, t)
    if not c.is_frame:
        raise NotAFrame("T must be a frame")
    Z = random_family(seed, T)
    top = gram_bounds(frame_gram(Z)).upper
    return Z.scaled(math.sqrt(ratio * c.bounds.lower / top))


def random_k(rng, d: int, n: int, kind: str) -> KOperator:
    N = n * d
    if kind == "identity":
        M = np.eye(N)
    elif kind == "scaled_unitary":
        M = rng.uniform(0.3, 3.0) * random_unitary(rng, N)
    elif kind == "coisometry":
        M = random_unitary(rng, N)
    elif kind == "rank_deficient" and N > 1:
        r = int(rng.integers(1, N))
        M = _complex_normal(rng, (N, r)) @ _complex_normal(rng, (r, N)) / math.sqrt(N)
    else:
        M = _complex_normal(rng, (N, N)) / math.sqrt(N) + np.eye(N)
    return KOperator.from_matrix(M, d)


K_KINDS = ("general", "scaled_unitary", "coisometry", "rank_deficient")


def _generalized_candidates(A, B):
    """Eigenvectors of B, plus generalized eigenvectors of (A, B) on range(B)
    from LAPACK's Cholesky-based solver."""
    w, u = np.linalg.eigh(B)
    basis = u[:, w > 1e-10 * max(float(w[-1]), 1e-300)]
    if not basis.shape[1]:
        return [u.T]
    Ar, Br = basis.conj().T @ A @ basis, basis.conj().T @ B @ basis
    try:
        _, V = scipy.linalg.eigh(Ar, Br, check_finite=False)
    except np.linalg.LinAlgError:
        return [u.T]
    return [u.T, (basis @ V).T]


def sampling_oracle(P, Q, n_samples: int, seed, mode: str = "sup") -> float:
    """Brute-force extremal Rayleigh quotient of the pencil (P, Q).

    Candidates are ``n_samples`` seeded random directions plus, for
    ``mode="sup"``, the eigenvectors of Q and generalized eigenvectors of
    (P, Q) on range(Q); for ``mode="inf"``, the eigenvectors of P and
    generalized eigenvectors of (Q, P) on range(P), which also reach minimizers
    mixing range(Q) with ker(Q).  Every candidate is scored by evaluating
    ``v*Pv / v*Qv`` directly, so the result is always attained by an explicit
    vector.
    """
    if mode not in ("sup", "inf"):
        raise BadParameter(f"mode must be 'sup' or 'inf', got {mode!r}")
    P = np.asarray(P, complex)
    Q = np.asarray(Q, complex)
    P, Q = (P + P.conj().T) / 2, (Q + Q.conj().T) / 2
    N = Q.shape[0]
    rng = _rng(seed)
    cands = [_complex_normal(rng, (n_samples, N))] if n_samples else []
    cands += _generalized_candidates(P, Q) if mode == "sup" else _generalized_candidates(Q, P)
    top = max(float(np.trace(Q).real), 0.0)
    V = np.concatenate(cands)
    Vc = V.conj()
    num = ((Vc @ P) * V).sum(axis=1).real
    den = ((Vc @ Q) * V).sum(axis=1).real
    tol = 1e-12 * max(1.0, top) * (Vc * V).sum(axis=1).real
    ok = den > tol
    if not ok.any():
        return 0.0
    ratios = num[ok] / den[ok]
    return float(ratios.max() if mode == "sup" else ratios.min())


# -- instance builders, one per certifier variant ------------------------------


def _frame(rng, d, n, m):
    return random_frame(rng, d, n, m, float(rng.uniform(1.0, 50.0)))


def _build_bessel(rng, d, n, m, sign, t):
    T = _frame(rng, d, n, m)
    R = random_bessel_below(rng, T, float(rng.uniform(0.05, 0.95)), t)
    return certify_bessel_sum(T, R, sign, t)


def _build_min(rng, d, n, m, with_k, t):
    T = _frame(rng, d, n, m)
    E = random_bessel_below(rng, T, float(rng.uniform(0.01, 0.99)), t)
    R = T + E.scaled(rng.uniform(0.1, 3.0))
    K = random_k(rng, d, n, str(rng.choice(K_KINDS))) if with_k else None
    return certify_min_condition(T, R, K, t)


def _build_combination(rng, d, n, m, with_k, t, seed):
    count = int(rng.integers(1, 4))
    fams = [_frame(rng, d, n, m) for _ in range(count)]
    # families must share one measure
    fams = [fams[0]] + [fams[0].with_stack(F.stack) for F in fams[1:]]
    alphas = _complex_normal(rng, count)
    p = int(rng.integers(1, count + 1))
    K = random_k(rng, d, n, str(rng.choice(K_KINDS + ("coisometry",)))) if with_k else None
    return certify_combination(fams, alphas, p, K, t, samples=200, seed=seed)


def _build_extension(rng, d, n, m, with_k, t):
    count = int(rng.integers(1, 4))
    Ts = [_frame(rng, d, n, m) for _ in range(count)]
    Ts = [Ts[0]] + [Ts[0].with_stack(F.stack) for F in Ts[1:]]
    Rs = []
    for T in Ts:
        E = random_bessel_below(rng, T, float(rng.uniform(0.01, 0.9)), t)
        Rs.append(T - E)
    worst = max(pencil_sup(frame_gram(T - R), frame_gram(T), t).value for T, R in zip(Ts, Rs))
    lam = worst * (1 + float(rng.uniform(0, 0.5)))
    p = int(rng.integers(1, count + 1))
    K = random_k(rng, d, n, str(rng.choice(K_KINDS))) if with_k else None
    return certify_extension(Ts, Rs, p, lam, K, t)


def _build_weighted(rng, d, n, m, t, seed):
    T = _frame(rng, d, n, m)
    K = random_k(rng, d, n, str(rng.choice(K_KINDS)))
    alpha_w = rng.uniform(0.5, 2.0, size=m)
    beta_w = rng.uniform(0.5, 2.0, size=m)
    lam, mu = (float(x) for x in rng.uniform(0, 0.95, size=2))
    aT = T.with_stack(alpha_w[:, None, None] * T.stack)
    # difference D with G_D <= lam^2 G_{aT}; then R_w = (alpha_w T_w - D_w) / beta_w
    D = random_family(rng, T)
    top = pencil_sup(frame_gram(D), frame_gram(aT), t).value
    D = D.scaled(lam * math.sqrt(float(rng.uniform(0.1, 1.0)) / top))
    R = T.with_stack((aT.stack - D.stack) / beta_w[:, None, None])
    return certify_weighted(T, R, alpha_w, beta_w, lam, mu, K, samples=64, seed=seed, t=t)


def _build_k_perturbation(rng, d, n, m, corollary, t, seed):
    T = _frame(rng, d, n, m)
    K = random_k(rng, d, n, str(rng.choice(K_KINDS)))
    A = k_bounds_from_gram(frame_gram(T), K, t)[0].lower
    s = float(rng.uniform(0.01, 0.95))
    if corollary:
        alpha, beta = 0.0, s * A
    else:
        split = float(rng.uniform(0, 1))
        alpha, beta = s * split, s * (1 - split) * A
    Q = alpha * frame_gram(T) + beta * K.gram()
    W = random_family(rng, T)
    W = W.scaled(math.sqrt(float(rng.uniform(0.05, 1.0)) / gram_bounds(frame_gram(W)).upper))
    # G_D = Q^{1/2} G_W Q^{1/2} <= Q
    D = W.with_stack(psd_sqrt(Q) @ W.stack)
    R = T - D
    if corollary:
        return certify_k_corollary(T, R, K, beta, t, samples=64, seed=seed)
    return certify_k_perturbation(T, R, K, alpha, beta, t, samples=64, seed=seed)


def build_and_certify(theorem: str, seed_seq: np.random.SeedSequence, d: int, n: int, m: int, t: Tolerance) -> Certificate:
    rng = np.random.default_rng(seed_seq)
    sub_seed = int(seed_seq.generate_state(1, np.uint64)[0])
    if theorem == "bessel_sum_plus":
        return _build_bessel(rng, d, n, m, 1, t)
    if theorem == "bessel_sum_minus":
        return _build_bessel(rng, d, n, m, -1, t)
    if theorem in ("min_condition", "min_condition_k"):
        return _build_min(rng, d, n, m, theorem.endswith("_k"), t)
    if theorem in ("combination", "combination_k"):
        return _build_combination(rng, d, n, m, theorem.endswith("_k"), t, sub_seed)
    if theorem in ("extension", "extension_k"):
        return _build_extension(rng, d, n, m, theorem.endswith("_k"), t)
    if theorem == "weighted":
        return _build_weighted(rng, d, n, m, t, sub_seed)
    if theorem in ("k_perturbation", "k_corollary"):
        return _build_k_perturbation(rng, d, n, m, theorem == "k_corollary", t, sub_seed)
    raise BadParameter(f"unknown theorem id {theorem!r}")


# -- campaigns ----------------------------------------------------------------


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    trials: int = 200
    dims: tuple = DEFAULT_DIMS
    theorems: tuple = THEOREMS
    tolerance: Tolerance = DEFAULT_TOL
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise BadParameter("trials must be at least 1")
        dims = tuple(tuple(int(v) for v in dnm) for dnm in self.dims)
        if not dims or any(len(dnm) != 3 or min(dnm) < 1 for dnm in dims):
            raise BadParameter("dims must be non-empty (d, n, m) triples of positive integers")
        object.__setattr__(self, "dims", dims)
        unknown = set(self.theorems) - set(THEOREMS)
        if unknown:
            raise BadParameter(f"unknown theorem ids: {sorted(unknown)}")
        object.__setattr__(self, "theorems", tuple(self.theorems))


@dataclass(frozen=True)
class TrialRecord:
    theorem: str
    trial: int
    d: int
    n: int
    m: int
    certificate: Certificate | None
    error: str | None = None

    @property
    def enclosure_failure(self) -> bool:
        return self.certificate is not None and self.certificate.enclosure_violated()


@dataclass
class TheoremSummary:
    trials: int = 0
    hypotheses_satisfied: int = 0
    enclosure_failures: int = 0
    errors: int = 0
    min_lower_slack: float = math.inf
    min_upper_slack: float = math.inf
    lower_tightness: list = field(default_factory=lambda: [0] * TIGHTNESS_BINS)
    upper_tightness: list = field(default_factory=lambda: [0] * TIGHTNESS_BINS)


@dataclass
class CampaignReport:
    config: CampaignConfig
    records: list
    summaries: dict
    wall_time: float = 0.0

    @property
    def enclosure_failures(self) -> int:
        return sum(s.enclosure_failures for s in self.summaries.values())

    @property
    def hypothesis_failures(self) -> int:
        return sum(s.trials - s.hypotheses_satisfied for s in self.summaries.values())


def _bin(ratio: float) -> int:
    if not math.isfinite(ratio):
        return 0
    return min(TIGHTNESS_BINS - 1, max(0, int(ratio * TIGHTNESS_BINS)))


def _ratio(num, den):
    if den == 0:
        return 1.0 if num == 0 else 0.0
    return num / den


def summarize(records, theorems) -> dict:
    out = {name: TheoremSummary() for name in theorems}
    for r in records:
        s = out[r.theorem]
        s.trials += 1
        c = r.certificate
        if c is None:
            s.errors += 1
            continue
        if not c.hypothesis_ok:
            continue
        s.hypotheses_satisfied += 1
        s.enclosure_failures += int(c.enclosure_violated())
        s.min_lower_slack = min(s.min_lower_slack, c.lower_slack)
        s.min_upper_slack = min(s.min_upper_slack, c.upper_slack)
        # 1.0 means the certified bound equals the optimal one
        s.lower_tightness[_bin(_ratio(c.certified.lower, c.observed.lower))] += 1
        s.upper_tightness[_bin(_ratio(c.observed.upper, c.certified.upper))] += 1
    return out


def _trial_seed(seed: int, trial: int, theorem_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & (2**64 - 1), trial, theorem_index])


def run_trial(cfg: CampaignConfig, trial: int, theorem: str) -> TrialRecord:
    seq = _trial_seed(cfg.seed, trial, THEOREMS.index(theorem))
    pick = np.random.default_rng(seq.spawn(1)[0])
    d, n, m = cfg.dims[int(pick.integers(len(cfg.dims)))]
    try:
        cert = build_and_certify(theorem, seq, d, n, m, cfg.tolerance)
    except Exception as exc:  # tallied, never raised per trial
        return TrialRecord(theorem, trial, d, n, m, None, f"{type(exc).__name__}: {exc}")
    return TrialRecord(theorem, trial, d, n, m, cert)


def _run_chunk(args):
    cfg, jobs = args
    return [run_trial(cfg, trial, theorem) for trial, theorem in jobs]


def run_campaign(cfg: CampaignConfig) -> CampaignReport:
    start = time.perf_counter()
    jobs = [(trial, theorem) for theorem in cfg.theorems for trial in range(cfg.trials)]
    if cfg.workers > 1 and jobs:
        chunks = [jobs[i :: cfg.workers] for i in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = [r for part in pool.map(_run_chunk, [(cfg, c) for c in chunks]) for r in part]
    else:
        records = _run_chunk((cfg, jobs))
    order = {name: i for i, name in enumerate(cfg.theorems)}
    records.sort(key=lambda r: (order[r.theorem], r.trial))
    return CampaignReport(cfg, records, summarize(records, cfg.theorems), time.perf_counter() - start)
