"""Principal-component filtering of a noisy state and its baselines.

The state is ``rho = (1 - lam) |psi><psi| + lam rho_err`` with ``rho_err``
orthogonal to ``psi``.  A cosine series ``F(x) = sum_k f(k) cos(k x)`` that is
close to 1 on ``[0, eta]`` and close to 0 on ``[1 - eta, 1]`` turns
``F(1 - rho)`` into an approximate projector onto ``psi``.

Two estimators use it: the coherent filter evaluates ``F(1 - rho)`` inside the
circuit (simulated here at the level of its effective operator), and the
hybrid filter samples one Fourier term per circuit.  Virtual distillation and
phase-estimation based PCA serve as baselines.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .estimator import CircuitPlan, ShotTally, Slot, SlotSetup, simulate_shots
from .linalg import DensityMatrix, Observable, haar_unitary, herm_matrix_function, dagger
from .rng import derive_stream, make_rng
from .series import build_series, lambert_w0, mean_copy_count, truncated_series_matrix

ORDER_CAP = 200
VERIFY_POINTS = 10**4
DENSE_FACTOR = 10
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


class FilterDesignError(RuntimeError):
    """No filter within the order cap meets the band conditions."""


@dataclass(frozen=True)
class NoiseModel:
    """``rho = (1 - lam) psi + lam rho_err`` with a known bound ``eta >= lam``."""

    lam: float
    psi: np.ndarray
    rho_err: np.ndarray
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.lam < 0.5:
            raise ValueError("lam must lie in [0, 1/2)")
        if not self.lam <= self.eta < 0.5:
            raise ValueError("eta must lie in [lam, 1/2)")
        psi = DensityMatrix(self.psi)
        if not psi.is_pure():
            raise ValueError("psi must be pure")
        err = DensityMatrix(self.rho_err)
        if abs(np.trace(err.mat @ psi.mat)) > 1e-10:
            raise ValueError("rho_err must be orthogonal to psi")
        object.__setattr__(self, "psi", psi.mat)
        object.__setattr__(self, "rho_err", err.mat)

    @property
    def dim(self) -> int:
        return self.psi.shape[0]

    @property
    def rho(self) -> np.ndarray:
        m = (1.0 - self.lam) * self.psi + self.lam * self.rho_err
        return 0.5 * (m + dagger(m))

    @property
    def err_spectrum(self) -> np.ndarray:
        w = np.linalg.eigvalsh(self.rho_err)
        return np.sort(w[w > 1e-12])[::-1]


def make_noise_model(d: int, lam: float, seed, eta: float | None = None, err_spectrum=None) -> NoiseModel:
    """Random ``psi`` and an orthogonal ``rho_err`` with the given spectrum (default: pure)."""
    if d < 2:
        raise ValueError("need d >= 2")
    spec = np.array([1.0] if err_spectrum is None else err_spectrum, dtype=float)
    if len(spec) > d - 1 or np.any(spec < 0) or abs(spec.sum() - 1.0) > 1e-12:
        raise ValueError("err_spectrum must be a probability vector of length <= d - 1")
    rng = make_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    u = haar_unitary(d, rng)
    psi = np.outer(u[:, 0], u[:, 0].conj())
    err = sum(p * np.outer(u[:, i + 1], u[:, i + 1].conj()) for i, p in enumerate(spec))
    return NoiseModel(float(lam), psi, err, float(lam if eta is None else eta))


# filter design


@dataclass(frozen=True)
class FilterSpec:
    """Cosine-series filter with verified band errors."""

    f: np.ndarray
    eta: float
    eps1: float
    eps2: float
    pass_err: float = float("nan")
    stop_err: float = float("nan")

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def M_f(self) -> int:
        return len(self.f) - 1

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = np.arange(len(self.f))
        return np.cos(np.multiply.outer(x, k)) @ self.f

    def of_matrix(self, h) -> np.ndarray:
        """``F(h)`` for Hermitian h."""
        return herm_matrix_function(h, lambda w: self(w))

    def sigmas(self, o_norm: float) -> np.ndarray:
        """Per-term standard deviation bounds: ``||O||`` for k = 0, ``sqrt(e) ||O||`` otherwise."""
        s = np.full(len(self.f), math.sqrt(math.e) * o_norm)
        s[0] = o_norm
        return s

    def optimal_lambdas(self, o_norm: float = 1.0) -> np.ndarray:
        """``lam_k ~ |f(k)| sigma_k / sqrt(1 + 2k^2)``; zero where f(k) = 0."""
        k = np.arange(len(self.f))
        w = np.abs(self.f) * self.sigmas(o_norm) / np.sqrt(1.0 + 2.0 * k * k)
        return w / w.sum()


def band_errors(f, eta: float, n: int = VERIFY_POINTS) -> tuple[float, float]:
    """Max ``|F - 1|`` on ``[0, eta]`` and max ``|F|`` on ``[1 - eta, 1]`` on n-point grids."""
    fs = FilterSpec(np.asarray(f, dtype=float), eta, 1.0, 1.0)
    xp = np.linspace(0.0, eta, n)
    xs = np.linspace(1.0 - eta, 1.0, n)
    return float(np.max(np.abs(fs(xp) - 1.0))), float(np.max(np.abs(fs(xs))))


def _nodes(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(n)
    inner = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * (2 * k + 1) / (2 * n))
    return np.concatenate([[a, b], inner])


def _solve_order(M: int, eta: float, eps1: float, eps2: float):
    """Discrete minimax LP: minimize t with ``|F-1| <= eps1 t`` on the pass band,
    ``|F| <= eps2 t`` on the stop band and ``|F| <= 1`` on ``[0, pi]``."""
    k = np.arange(M + 1)
    n = max(80, 8 * M)
    xp, xs = _nodes(0.0, eta, n), _nodes(1.0 - eta, 1.0, n)
    xb = np.linspace(0.0, np.pi, max(200, 20 * M))
    ap, as_, ab = (np.cos(np.outer(x, k)) for x in (xp, xs, xb))
    one_p, one_s, zero_b = -np.ones((len(xp), 1)), -np.ones((len(xs), 1)), np.zeros((len(xb), 1))
    a_ub = np.vstack([
        np.hstack([ap / eps1, one_p]),
        np.hstack([-ap / eps1, one_p]),
        np.hstack([as_ / eps2, one_s]),
        np.hstack([-as_ / eps2, one_s]),
        np.hstack([ab, zero_b]),
        np.hstack([-ab, zero_b]),
    ])
    b_ub = np.concatenate([
        np.full(len(xp), 1.0 / eps1),
        np.full(len(xp), -1.0 / eps1),
        np.zeros(2 * len(xs)),
        np.ones(2 * len(xb)),
    ])
    c = np.zeros(M + 2)
    c[-1] = 1.0
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(None, None)] * (M + 1) + [(0, None)],
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0 or res.x[-1] > 1.0:
        return None
    return res.x[:-1]


def _feasible(M: int, eta: float, eps1: float, eps2: float) -> FilterSpec | None:
    f = _solve_order(M, eta, eps1, eps2)
    if f is None:
        return None
    e1, e2 = band_errors(f, eta)
    if e1 > eps1 or e2 > eps2:
        return None
    d1, d2 = band_errors(f, eta, DENSE_FACTOR * VERIFY_POINTS)
    if d1 > eps1 or d2 > eps2:
        return None
    return FilterSpec(f, eta, eps1, eps2, max(e1, d1), max(e2, d2))


def design_filter(eta: float, eps1: float, eps2: float, max_order: int = ORDER_CAP, min_order: int = 0) -> FilterSpec:
    """Lowest-order cosine filter meeting both band conditions.

    Orders are searched by doubling from ``min_order`` and then bisection;
    feasibility is monotone in the order because lower-order solutions embed
    in higher orders.  Pass ``min_order`` only when lower orders are known to
    fail (e.g. the order found for a looser tolerance).
    """
    if not 0.0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    if not (0.0 < eps1 < 1.0 and 0.0 < eps2 < 1.0):
        raise ValueError("eps1 and eps2 must lie in (0, 1)")
    return _design(float(eta), float(eps1), float(eps2), int(max_order), int(min_order))


@functools.lru_cache(maxsize=1024)
def _design(eta: float, eps1: float, eps2: float, max_order: int, min_order: int) -> FilterSpec:
    lo = min_order - 1  # highest order known to fail
    M = min_order
    step = 1
    found = None
    while M <= max_order:
        found = _feasible(M, eta, eps1, eps2)
        if found is not None:
            break
        lo = M
        M = min(max_order, M + step) if M < max_order else max_order + 1
        step *= 2
    if found is None:
        raise FilterDesignError(f"no filter of order <= {max_order} for eta={eta}, eps1={eps1}, eps2={eps2}")
    hi = M
    while hi - lo > 1:
        mid = (lo + hi) // 2
        cand = _feasible(mid, eta, eps1, eps2)
        if cand is None:
            lo = mid
        else:
            hi, found = mid, cand
    return found


# coherent filter


def coherent_eps2(delta: float, eta: float, eps1: float, o_norm: float = 1.0) -> float:
    """Stop-band error making the coherent approximation-error bound equal delta."""
    return (1.0 - eps1) * math.sqrt(delta * (1.0 - eta) / (2.0 * eta * o_norm))


def coherent_delta(fs: FilterSpec, o_norm: float = 1.0) -> float:
    return fs.eta / (1.0 - fs.eta) * 2.0 * o_norm * (fs.eps2 / (1.0 - fs.eps1)) ** 2


def coherent_slot_eps(delta_prime: float, o_norm: float, M_f: int) -> float:
    """Per-slot error ``W0(delta'/||O||) / (2 M_f)``."""
    return lambert_w0(delta_prime / o_norm) / (2 * M_f)


@dataclass(frozen=True)
class CoherentMetrics:
    delta_bound: float
    gamma_sq: float
    copies: float
    copies_nominal: float
    overhead: float


def coherent_metrics(fs: FilterSpec, nm: NoiseModel, o_norm: float = 1.0, delta_prime: float | None = None) -> CoherentMetrics:
    """Bias bound, variance overhead and copies per circuit of the coherent filter.

    ``copies`` uses the exact mean copy count of the r = 2 M_f controlled
    sampler; ``copies_nominal`` is ``1 + 8 M_f^2``.
    """
    if not fs.eta >= nm.lam:
        raise ValueError("filter eta is below the noise rate")
    delta = coherent_delta(fs, o_norm)
    F = fs.of_matrix(np.eye(nm.dim) - nm.rho)
    tr2 = float(np.real(np.trace(F @ F @ nm.rho)))
    gamma_sq = math.e * o_norm**2 / tr2**2
    M = fs.M_f
    nominal = 1.0 + 8.0 * M * M
    if M == 0:
        return CoherentMetrics(delta, gamma_sq, 1.0, nominal, 1.0)
    dp = delta if delta_prime is None else delta_prime
    spec = build_series(-0.5, 2 * M, coherent_slot_eps(max(dp, 1e-300), o_norm, M))
    copies = 1.0 + 2 * M * mean_copy_count(spec)
    return CoherentMetrics(delta, gamma_sq, copies, nominal, spec.overhead ** (2 * M))


def run_coherent_effective(fs: FilterSpec, nm: NoiseModel, O, delta_prime: float = 0.0, truth: bool = False) -> tuple[float, float, float]:
    """Numerator ``tr[O F rho F]``, denominator ``tr[F rho F]`` and their ratio.

    With ``truth`` (or ``delta_prime == 0``) F is the exact matrix function.
    Otherwise each ``exp(-+ i rho / 2)`` is replaced by ``S_L^r`` with
    ``r = 2 M_f`` and the per-slot error of the coherent algorithm.
    """
    O = O.mat if isinstance(O, Observable) else np.asarray(O, dtype=complex)
    rho = nm.rho
    d = nm.dim
    if truth or delta_prime == 0 or fs.M_f == 0:
        F = fs.of_matrix(np.eye(d) - rho)
    else:
        M = fs.M_f
        eps = coherent_slot_eps(delta_prime, float(np.linalg.norm(O, 2)), M)
        spec = build_series(0.5, 2 * M, eps)
        v_plus = np.linalg.matrix_power(truncated_series_matrix(spec, rho), spec.r)
        v_minus = np.linalg.matrix_power(truncated_series_matrix(spec.with_time(-0.5), rho), spec.r)
        F = np.zeros((d, d), dtype=complex)
        p_plus = np.eye(d, dtype=complex)
        p_minus = np.eye(d, dtype=complex)
        for k, fk in enumerate(fs.f):
            F += 0.5 * fk * (np.exp(1j * k) * p_plus + np.exp(-1j * k) * p_minus)
            p_plus = p_plus @ v_plus @ v_plus
            p_minus = p_minus @ v_minus @ v_minus
    num = float(np.real(np.trace(O @ F @ rho @ dagger(F))))
    den = float(np.real(np.trace(F @ rho @ dagger(F))))
    return num, den, num / den


# hybrid filter


def hybrid_eps2(delta: float, eta: float, eps1: float, o_norm: float = 1.0) -> float:
    """Stop-band error making the hybrid approximation-error bound equal delta."""
    return delta * (1.0 - eta) * (1.0 - eps1) / (2.0 * eta * o_norm + delta * eta)


def hybrid_delta(fs: FilterSpec, o_norm: float = 1.0) -> float:
    denom = (1.0 - fs.eta) * (1.0 - fs.eps1) - fs.eps2 * fs.eta
    if denom <= 0:
        raise ValueError("hybrid bound needs (1 - eps1)(1 - eta) > eps2 eta")
    return fs.eta / denom * 2.0 * o_norm * fs.eps2


def hybrid_slot_eps(fs: FilterSpec, delta_prime: float, o_norm: float = 1.0) -> float:
    """``delta' / (||O|| sum_{k>=1} |f(k)|)``, capped below 1/2."""
    s = float(np.sum(np.abs(fs.f[1:])))
    if s == 0:
        return 0.49
    return min(0.49, delta_prime / (o_norm * s))


@dataclass(frozen=True)
class HybridMetrics:
    delta_bound: float
    gamma_sq: float
    copies: float
    lambdas: np.ndarray
    sigmas: np.ndarray = field(repr=False)


def hybrid_gamma_sq(fs: FilterSpec, nm: NoiseModel, lambdas, o_norm: float = 1.0) -> float:
    lambdas = np.asarray(lambdas, dtype=float)
    sig = fs.sigmas(o_norm)
    used = fs.f != 0
    if np.any(lambdas[used] <= 0):
        return math.inf
    F = fs.of_matrix(np.eye(nm.dim) - nm.rho)
    tr1 = float(np.real(np.trace(F @ nm.rho)))
    return float(np.sum(fs.f[used] ** 2 * sig[used] ** 2 / lambdas[used])) / tr1**2


def hybrid_copies(lambdas) -> float:
    k = np.arange(len(lambdas))
    return float(np.dot(lambdas, 1.0 + 2.0 * k * k))


def hybrid_metrics(fs: FilterSpec, nm: NoiseModel, o_norm: float = 1.0, lambdas=None) -> HybridMetrics:
    delta = hybrid_delta(fs, o_norm)
    lam = fs.optimal_lambdas(o_norm) if lambdas is None else np.asarray(lambdas, dtype=float)
    return HybridMetrics(delta, hybrid_gamma_sq(fs, nm, lam, o_norm), hybrid_copies(lam), lam, fs.sigmas(o_norm))


def hybrid_copy_samples(fs: FilterSpec, lambdas, delta_prime: float, n: int, seed, o_norm: float = 1.0) -> np.ndarray:
    """Copies of rho used by n independent hybrid circuits (the measured copy included)."""
    rng = make_rng(seed, derive_stream(7))
    eps = hybrid_slot_eps(fs, delta_prime, o_norm)
    ks = rng.choice(len(lambdas), size=n, p=lambdas)
    out = np.ones(n, dtype=np.int64)
    for k in np.unique(ks):
        if k == 0:
            continue
        sel = np.nonzero(ks == k)[0]
        spec = build_series(k / 2.0, int(k * k), eps)
        draws = rng.choice(spec.L + 1, size=(len(sel), 2 * spec.r), p=spec.probs)
        out[sel] += 2 * spec.r + 2 * draws.sum(axis=1)
    return out


def _hybrid_plan(nm: NoiseModel, O: np.ndarray, k: int) -> CircuitPlan:
    d = nm.dim
    sigma = np.kron(0.5 * np.ones((2, 2)), nm.rho)
    phase = np.kron(np.diag([np.exp(-0.5j * k), np.exp(0.5j * k)]), np.eye(d))
    slot = Slot(k / 2.0, nm.rho, "controlled", long_time=True)
    return CircuitPlan((np.eye(2 * d), phase), (slot,), sigma, Observable(np.kron(PAULI_X, O)))


@dataclass(frozen=True)
class HybridRun:
    numerator: float
    numerator_se: float
    denominator: float
    denominator_se: float
    ratio: float
    ratio_se: float
    shots: int
    bias_slack: float


def _hybrid_tally(fs: FilterSpec, nm: NoiseModel, O: np.ndarray, lambdas, shots: int, eps: float, seed, which: int) -> tuple[float, float]:
    """Mean and standard error of ``mu_2`` over ``shots`` circuits."""
    rng = make_rng(seed, derive_stream(which, 0))
    counts = rng.multinomial(shots, lambdas)
    total = 0.0
    total_sq = 0.0
    for k, cnt in enumerate(counts):
        if cnt == 0:
            continue
        w = fs.f[k] / lambdas[k]
        sub = make_rng(seed, derive_stream(which, k + 1))
        if k == 0:
            evals, evecs = np.linalg.eigh(O)
            p = np.clip(np.real(np.einsum("ij,ik,kj->j", evecs.conj(), nm.rho, evecs)), 0, None)
            outcomes = sub.multinomial(cnt, p / p.sum())
            tally = ShotTally()
            for o, c in zip(evals, outcomes):
                tally.add(float(o), int(c))
        else:
            plan = _hybrid_plan(nm, O, k)
            spec = build_series(k / 2.0, k * k, eps)
            tally = simulate_shots(plan, [SlotSetup(plan.slots[0], spec)], int(cnt), sub)
        total += w * tally.total
        total_sq += w * w * tally.total_sq
    mean = total / shots
    var = max(0.0, (total_sq - shots * mean * mean) / max(1, shots - 1))
    return mean, math.sqrt(var / shots)


def run_hybrid_circuit(fs: FilterSpec, nm: NoiseModel, O, shots: int, delta_prime: float, seed, lambdas=None) -> HybridRun:
    """Hybrid-filter estimates of ``tr[O F rho]`` and ``tr[F rho]`` from simulated circuits.

    Each circuit samples k from ``lambdas``, runs the controlled virtual DME
    with ``T = k/2`` and ``r = k^2`` between ``|+>`` preparation and the phase
    ``exp(-ikZ/2)`` on the control, measures X on the control and O on the
    system, and returns ``C^{2k^2} f(k) g / lam_k``.
    """
    if delta_prime <= 0:
        raise ValueError("delta_prime must be positive")
    if seed is None:
        raise ValueError("a seed is required")
    O = O.mat if isinstance(O, Observable) else np.asarray(O, dtype=complex)
    o_norm = float(np.linalg.norm(O, 2))
    lam = fs.optimal_lambdas(o_norm) if lambdas is None else np.asarray(lambdas, dtype=float)
    eps = hybrid_slot_eps(fs, delta_prime, o_norm)
    num, num_se = _hybrid_tally(fs, nm, O, lam, shots, eps, seed, 1)
    den, den_se = _hybrid_tally(fs, nm, np.eye(nm.dim), lam, shots, eps, seed, 2)
    ratio = num / den
    ratio_se = abs(ratio) * math.sqrt((num_se / num) ** 2 + (den_se / den) ** 2) if num != 0 else den_se / abs(den)
    # each mean carries at most delta' (resp. delta'/||O||) of virtual-DME bias
    slack = (delta_prime + abs(ratio) * delta_prime / o_norm) / abs(den)
    return HybridRun(num, num_se, den, den_se, ratio, ratio_se, shots, slack)


def hybrid_truth(fs: FilterSpec, nm: NoiseModel, O) -> tuple[float, float]:
    """Exact ``tr[O F(1-rho) rho]`` and ``tr[F(1-rho) rho]``."""
    O = O.mat if isinstance(O, Observable) else np.asarray(O, dtype=complex)
    F = fs.of_matrix(np.eye(nm.dim) - nm.rho)
    return float(np.real(np.trace(O @ F @ nm.rho))), float(np.real(np.trace(F @ nm.rho)))


# baselines


def vd_metrics(nm: NoiseModel, l: int) -> tuple[float, float]:
    """Virtual distillation with l copies: bias ``2Q/(1+Q)`` and overhead ``tr[rho^l]^-2``."""
    if l < 1:
        raise ValueError("l must be at least 1")
    err = nm.err_spectrum
    tr_err = float(np.sum(err**l))
    lam = nm.lam
    q = (lam / (1.0 - lam)) ** l * tr_err if lam > 0 else 0.0
    tr_rho = (1.0 - lam) ** l + float(np.sum((lam * err) ** l))
    return 2.0 * q / (1.0 + q), tr_rho**-2


def vd_search(nm: NoiseModel, delta: float, l_max: int = 10**4) -> tuple[int, float, float]:
    """Smallest l whose VD bias is at most delta."""
    for l in range(1, l_max + 1):
        dv, ov = vd_metrics(nm, l)
        if dv <= delta:
            return l, dv, ov
    raise RuntimeError(f"virtual distillation needs more than {l_max} copies")


def qpe_amplitude(l: int, r: float, m: int) -> complex:
    """``C_l(r) = sum_k a_k / sqrt(2^m) exp(-2 pi i k (l/2^m - r))`` with sine-window ``a_k``."""
    n = 2**m
    k = np.arange(n)
    a = math.sqrt(1.0 / 2 ** (m - 1)) * np.sin(np.pi * (k + 0.5) / n)
    return complex(np.sum(a / math.sqrt(n) * np.exp(-2j * np.pi * k * (l / n - r))))


@dataclass(frozen=True)
class OriginalMetrics:
    m: int
    delta: float
    copies: float
    overhead: float


def qpca_original_bound(nm: NoiseModel, m: int, o_norm: float = 1.0) -> tuple[float, float]:
    """Bias bound and post-selection probability for m ancilla qubits."""
    l_star = round((1.0 - nm.lam) * 2**m)
    sig = (1.0 - nm.lam) * abs(qpe_amplitude(l_star, 1.0 - nm.lam, m)) ** 2
    noise = sum(nm.lam * p * abs(qpe_amplitude(l_star, nm.lam * p, m)) ** 2 for p in nm.err_spectrum) if nm.lam > 0 else 0.0
    post = sig + noise
    return 2.0 * o_norm * noise / post, post


def qpca_original_metrics(nm: NoiseModel, delta: float, m_max: int = 20, o_norm: float = 1.0) -> OriginalMetrics:
    """Smallest m meeting delta, the copy estimate ``4 pi^2/delta (2^m - 1)^2/(1 - lam)`` and ``1/p_post``."""
    for m in range(1, m_max + 1):
        bound, post = qpca_original_bound(nm, m, o_norm)
        if bound <= delta:
            copies = 4 * math.pi**2 / delta * (2**m - 1) ** 2 / (1.0 - nm.lam)
            return OriginalMetrics(m, bound, copies, 1.0 / post)
    raise RuntimeError(f"original qPCA does not reach delta={delta} within m <= {m_max}")


# sweep


@dataclass
class SweepRow:
    delta: float
    method: str
    copies_per_circuit: float
    overhead: float
    p25: float = float("nan")
    p50: float = float("nan")
    p95: float = float("nan")
    order: int = -1


def compare_sweep(
    nm: NoiseModel,
    deltas,
    eps1: float = 1e-3,
    o_norm: float = 1.0,
    seed: int = 0,
    n_mc: int = 20000,
    delta_prime_ratio: float = 1.0,
    max_order: int = ORDER_CAP,
) -> list[SweepRow]:
    """Copies per circuit and measurement overhead of every method at each delta.

    Filters use the noise model's eta, the fixed pass-band error ``eps1`` and
    the stop-band error that makes each method's bias bound equal delta.  The
    virtual-DME bias is ``delta_prime_ratio * delta``.
    """
    deltas = sorted((float(x) for x in deltas), reverse=True)
    if not deltas:
        raise ValueError("empty delta grid")
    rows: list[SweepRow] = []
    m_coh = m_hyb = 0
    for i, delta in enumerate(deltas):
        dp = delta_prime_ratio * delta
        fc = design_filter(nm.eta, eps1, coherent_eps2(delta, nm.eta, eps1, o_norm), max_order, m_coh)
        m_coh = fc.M_f
        cm = coherent_metrics(fc, nm, o_norm, dp)
        rows.append(SweepRow(delta, "coherent", cm.copies, cm.gamma_sq, order=fc.M_f))

        fh = design_filter(nm.eta, eps1, hybrid_eps2(delta, nm.eta, eps1, o_norm), max_order, m_hyb)
        m_hyb = fh.M_f
        hm = hybrid_metrics(fh, nm, o_norm)
        samples = hybrid_copy_samples(fh, hm.lambdas, dp, n_mc, make_rng(seed, derive_stream(i)).integers(2**63), o_norm)
        q25, q50, q95 = np.percentile(samples, [25, 50, 95])
        rows.append(SweepRow(delta, "hybrid", hm.copies, hm.gamma_sq, q25, q50, q95, fh.M_f))

        l, _, ov = vd_search(nm, delta)
        rows.append(SweepRow(delta, "vd", float(l), ov, order=l))

        om = qpca_original_metrics(nm, delta, o_norm=o_norm)
        rows.append(SweepRow(delta, "original", om.copies, om.overhead, order=om.m))
    return rows
