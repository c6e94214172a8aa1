"""Property estimation with virtual DME slots.

The target is ``f = tr[O U sigma U^dagger]`` with
``U = V_{M+1} exp(-i rho_M T_M) ... V_2 exp(-i rho_1 T_1) V_1``.  Each
``exp(-i rho T)`` is replaced by a sampled virtual-DME map realized through a
single-ancilla dilation.  Three modes are provided:

* ``estimate_exact`` propagates the exact rescaled mean maps;
* ``estimate_shots`` simulates the measured circuit shot by shot (grouped by
  identical draws, which is an exact reorganization of i.i.d. shots);
* ``direct_truth`` evaluates ``f`` with exact matrix exponentials.

Register layout: ``[control (x)] system (x) idle``.  A control qubit is
present whenever any slot is ``"controlled"``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lcs
from .linalg import Observable, dagger, expm_herm, haar_unitary, random_hermitian, random_state
from .rng import derive_stream, make_rng
from .series import SeriesSpec, build_series, check_density, mean_copy_count, copy_count_bound
from .vdme import (
    PureSpec,
    build_pure,
    controlled_series_matrix,
    controlled_slot_bound,
    controlled_target,
    general_slot_bound,
    pure_factors,
    sequence_copies,
    truncated_series_matrix,
)

KINDS = ("general", "pure", "controlled")
DEFAULT_CHUNK = 8192


@dataclass(frozen=True)
class Slot:
    """One ``exp(-i rho T)`` slot."""

    T: float
    rho: np.ndarray
    kind: str = "general"
    long_time: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"slot kind must be one of {KINDS}")
        if self.T == 0:
            raise ValueError("slot time must be nonzero")
        if self.kind != "pure" and abs(self.T) > 1 and not self.long_time:
            raise ValueError("general and controlled slots need |T| <= 1 (set long_time to lift this)")
        object.__setattr__(self, "rho", check_density(self.rho))


@dataclass(frozen=True)
class CircuitPlan:
    """Interleavers ``V_1..V_{M+1}``, slots, input state and observable."""

    interleavers: tuple
    slots: tuple
    sigma: np.ndarray
    observable: Observable
    idle_dim: int = 1

    def __post_init__(self):
        slots = tuple(self.slots)
        if not slots:
            raise ValueError("a plan needs at least one slot")
        if len(self.interleavers) != len(slots) + 1:
            raise ValueError("need exactly M + 1 interleavers")
        d = slots[0].rho.shape[0]
        if any(s.rho.shape[0] != d for s in slots):
            raise ValueError("all slot states must share the system dimension")
        obs = self.observable if isinstance(self.observable, Observable) else Observable(self.observable)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "observable", obs)
        object.__setattr__(self, "interleavers", tuple(np.asarray(v, dtype=complex) for v in self.interleavers))
        D = self.dim
        sig = check_density(self.sigma)
        if sig.shape[0] != D or obs.dim != D:
            raise ValueError(f"sigma and observable must act on the register of dimension {D}")
        if any(v.shape != (D, D) for v in self.interleavers):
            raise ValueError("interleavers must act on the whole register")
        for v in self.interleavers:
            if np.max(np.abs(v @ dagger(v) - np.eye(D))) > 1e-10:
                raise ValueError("interleavers must be unitary")
        object.__setattr__(self, "sigma", sig)

    @property
    def M(self) -> int:
        return len(self.slots)

    @property
    def sys_dim(self) -> int:
        return self.slots[0].rho.shape[0]

    @property
    def control(self) -> bool:
        return any(s.kind == "controlled" for s in self.slots)

    @property
    def dim(self) -> int:
        return (2 if self.control else 1) * self.sys_dim * self.idle_dim


@dataclass(frozen=True)
class SlotSetup:
    """Per-slot sampler data after choosing r and L."""

    slot: Slot
    spec: SeriesSpec | PureSpec

    @property
    def r(self) -> int:
        return self.spec.r

    @property
    def overhead(self) -> float:
        return self.spec.overhead

    @property
    def probs(self) -> np.ndarray:
        return self.spec.probs

    @property
    def worst_copies(self) -> int:
        if isinstance(self.spec, PureSpec):
            return 2 * self.spec.r
        return copy_count_bound(self.spec)

    @property
    def mean_copies(self) -> float:
        if isinstance(self.spec, PureSpec):
            return 2.0 * self.spec.r
        return mean_copy_count(self.spec)


@dataclass(frozen=True)
class EstimatorReport:
    mean_estimate: float
    std_error: float
    overhead: float
    samples: int
    copies_min: int
    copies_mean: float
    copies_max: int
    bias_bound: float
    sample_variance: float = 0.0
    # overhead convention kept separately: the shot budget scales with overhead**2
    variance_factor: float = field(default=0.0)

    @property
    def copies(self) -> tuple[int, float, int]:
        return self.copies_min, self.copies_mean, self.copies_max


def choose_segments(plan: CircuitPlan | int, gamma: float) -> list[int]:
    """Uniform ``r_m = ceil(2M / ln gamma)`` (at least 1 and at least |T_m|)."""
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    M = plan if isinstance(plan, int) else plan.M
    base = 1 if math.isinf(gamma) else max(1, math.ceil(2 * M / math.log(gamma)))
    if isinstance(plan, int):
        return [base] * M
    return [max(base, math.ceil(abs(s.T))) for s in plan.slots]


def setup_slots(plan: CircuitPlan, r_list: Sequence[int], eps_map: Sequence[float] | float) -> list[SlotSetup]:
    if np.ndim(eps_map) == 0:
        eps_map = [float(eps_map)] * plan.M
    out = []
    for s, r, eps in zip(plan.slots, r_list, eps_map):
        if s.kind == "pure":
            spec = build_pure(s.T, r)
        else:
            spec = build_series(s.T, r, eps)
        out.append(SlotSetup(s, spec))
    return out


def _embed(plan: CircuitPlan, op_sys: np.ndarray, kind: str) -> np.ndarray:
    """Lift a system (or control (x) system for controlled slots) operator to the register."""
    idle = np.eye(plan.idle_dim)
    if kind == "controlled":
        return np.kron(op_sys, idle)
    if plan.control:
        return np.kron(np.eye(2), np.kron(op_sys, idle))
    return np.kron(op_sys, idle)


def rescaled_mean_operator(plan: CircuitPlan, st: SlotSetup) -> np.ndarray:
    """Operator M with ``C^{2r} E[Phi_hat] = M . M^dagger`` on the register."""
    s, spec = st.slot, st.spec
    if s.kind == "pure":
        f = pure_factors(spec, s.rho)
        seg = spec.C_pure * (spec.p0 * f[0] + spec.p1 * f[1])
        return _embed(plan, np.linalg.matrix_power(seg, spec.r), "pure")
    if s.kind == "controlled":
        return _embed(plan, np.linalg.matrix_power(controlled_series_matrix(spec, s.rho), spec.r), "controlled")
    return _embed(plan, np.linalg.matrix_power(truncated_series_matrix(spec, s.rho), spec.r), "general")


def target_operator(plan: CircuitPlan, s: Slot) -> np.ndarray:
    if s.kind == "controlled":
        return _embed(plan, controlled_target(s.rho, s.T), "controlled")
    return _embed(plan, expm_herm(s.rho, s.T), s.kind)


def _propagate(plan: CircuitPlan, ops: Sequence[np.ndarray]) -> float:
    w = plan.sigma
    v = plan.interleavers
    for m, op in enumerate(ops):
        w = v[m] @ w @ dagger(v[m])
        w = op @ w @ dagger(op)
    w = v[-1] @ w @ dagger(v[-1])
    return float(np.real(np.trace(plan.observable.mat @ w)))


def direct_truth(plan: CircuitPlan) -> float:
    """``tr[O U sigma U^dagger]`` with exact exponentials."""
    return _propagate(plan, [target_operator(plan, s) for s in plan.slots])


def estimate_exact(plan: CircuitPlan, eps_map=1e-3, gamma: float | None = None, r_list=None) -> float:
    """Exact rescaled-mean value of the estimator."""
    setups = _resolve(plan, eps_map, gamma, r_list)
    return _propagate(plan, [rescaled_mean_operator(plan, st) for st in setups])


def _resolve(plan, eps_map, gamma, r_list) -> list[SlotSetup]:
    if r_list is None:
        if gamma is None:
            r_list = [max(1, math.ceil(2 * s.T * s.T), math.ceil(abs(s.T))) for s in plan.slots]
        else:
            r_list = choose_segments(plan, gamma)
    return setup_slots(plan, r_list, eps_map)


def slot_bound(st: SlotSetup) -> float:
    """Diamond-norm bound of one rescaled slot against its target (state independent)."""
    if st.slot.kind == "pure":
        return 0.0
    if st.slot.kind == "controlled":
        return controlled_slot_bound(st.spec)
    return general_slot_bound(st.spec)


def bias_bound(plan: CircuitPlan, eps_map=1e-3, gamma: float | None = None, r_list=None) -> float:
    """``||O|| K D exp(K D)`` with K = M and D the largest slot bound."""
    setups = _resolve(plan, eps_map, gamma, r_list)
    delta = max(slot_bound(st) for st in setups)
    return bias_formula(plan.observable.norm, plan.M, delta)


def bias_formula(o_norm: float, K: int, delta: float) -> float:
    return o_norm * K * delta * math.exp(K * delta)


# shot simulation


class _SlotKernel:
    """Dilated segment maps of one slot on ``anc (x) register``, built lazily."""

    def __init__(self, plan: CircuitPlan, st: SlotSetup):
        self.plan = plan
        self.st = st
        self.cache: dict = {}
        self.D = plan.dim

    def segment(self, l: int, lp: int) -> np.ndarray:
        key = (l, lp)
        if key not in self.cache:
            s, spec, idle = self.st.slot, self.st.spec, self.plan.idle_dim
            if s.kind == "pure":
                so = lcs.pure_segment_dilation(spec, s.rho, l, lp, idle, control=self.plan.control)
            else:
                so = lcs.segment_dilation(
                    spec, s.rho, l, lp, controlled=s.kind == "controlled", idle_dim=idle, control=self.plan.control
                )
            self.cache[key] = so.mat
        return self.cache[key]

    def run(self, omega: np.ndarray, indices) -> np.ndarray:
        """Dilated state after the chain, starting from ``|+><+| (x) omega``."""
        n = 2 * self.D
        v = lcs.prepare(omega).reshape(-1, order="F")
        it = iter(indices)
        for l, lp in zip(it, it):
            v = self.segment(int(l), int(lp)) @ v
        return v.reshape(n, n, order="F")


_MINUS = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)


def _branches(w: np.ndarray, D: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Probability of X = +1 and the collapsed register states for both outcomes."""
    w4 = w.reshape(2, D, 2, D)
    blk00, blk01, blk10, blk11 = w4[0, :, 0, :], w4[0, :, 1, :], w4[1, :, 0, :], w4[1, :, 1, :]
    plus = 0.5 * (blk00 + blk01 + blk10 + blk11)
    minus = 0.5 * (blk00 - blk01 - blk10 + blk11)
    p_plus = float(np.clip(np.real(np.trace(plus)), 0.0, 1.0))
    return p_plus, plus, minus


class ShotTally:
    """Running count, sum, sum of squares and copy statistics of shot values."""

    def __init__(self):
        self.n = 0
        self.total = 0.0
        self.total_sq = 0.0
        self.copies_min = None
        self.copies_max = None
        self.copies_total = 0

    def add(self, value: float, count: int, copies: int = 0):
        if count == 0:
            return
        self.n += count
        self.total += value * count
        self.total_sq += value * value * count
        self.copies_total += copies * count
        self.copies_min = copies if self.copies_min is None else min(self.copies_min, copies)
        self.copies_max = copies if self.copies_max is None else max(self.copies_max, copies)

    def merge(self, other: "ShotTally"):
        self.n += other.n
        self.total += other.total
        self.total_sq += other.total_sq
        self.copies_total += other.copies_total
        for attr, fn in (("copies_min", min), ("copies_max", max)):
            a, b = getattr(self, attr), getattr(other, attr)
            setattr(self, attr, b if a is None else (a if b is None else fn(a, b)))


def _normalized(m: np.ndarray) -> np.ndarray:
    t = np.real(np.trace(m))
    return m / t if t > 0 else m


def simulate_shots(plan: CircuitPlan, setups: list[SlotSetup], shots: int, rng: np.random.Generator, log=None) -> ShotTally:
    kernels = [_SlotKernel(plan, st) for st in setups]
    evals, evecs = plan.observable.spectrum()
    scale = float(np.prod([st.overhead for st in setups]))
    acc = ShotTally()
    v = plan.interleavers
    D = plan.dim

    def recurse(m: int, omega: np.ndarray, count: int, sign: int, copies: int, path: tuple):
        if count == 0:
            return
        omega = v[m] @ omega @ dagger(v[m])
        if m == plan.M:
            probs = np.real(np.einsum("ij,ik,kj->j", evecs.conj(), omega, evecs))
            probs = np.clip(probs, 0.0, None)
            probs /= probs.sum()
            counts = rng.multinomial(count, probs)
            for o, c in zip(evals, counts):
                acc.add(scale * sign * float(o), int(c), copies)
                if log is not None and c:
                    log.append((path, float(o), int(c)))
            return
        st = setups[m]
        draws = rng.choice(len(st.probs), size=(count, 2 * st.r), p=st.probs)
        uniq, ucount = np.unique(draws, axis=0, return_counts=True)
        for idx, cnt in zip(uniq, ucount):
            w = kernels[m].run(omega, idx)
            p_plus, plus, minus = _branches(w, D)
            n_plus = int(rng.binomial(int(cnt), p_plus))
            n_cop = copies + sequence_copies(idx)
            key = tuple(int(i) for i in idx)
            recurse(m + 1, _normalized(plus), n_plus, sign, n_cop, path + ((key, 1),))
            recurse(m + 1, _normalized(minus), int(cnt) - n_plus, -sign, n_cop, path + ((key, -1),))

    recurse(0, plan.sigma, shots, 1, 0, ())
    return acc


def _chunk_job(args):
    plan, setups, n, seed, chunk = args
    return simulate_shots(plan, setups, n, make_rng(seed, derive_stream(chunk)))


def estimate_shots(
    plan: CircuitPlan,
    shots: int,
    seed: int,
    eps_map=1e-3,
    gamma: float | None = None,
    r_list=None,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
    log: list | None = None,
) -> EstimatorReport:
    """Shot-sampled estimate from the simulated dilated circuit.

    Shots are split into chunks of ``chunk``; chunk ``k`` draws from stream
    ``derive_stream(k)`` of ``seed`` and partial sums are merged in chunk
    order, so the result does not depend on ``workers``.  ``log`` (single
    worker only) collects ``(path, eigenvalue, count)`` groups.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if seed is None:
        raise ValueError("a seed is required")
    setups = _resolve(plan, eps_map, gamma, r_list)
    sizes = [min(chunk, shots - i) for i in range(0, shots, chunk)]
    jobs = [(plan, setups, n, seed, k) for k, n in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        if log is not None:
            raise ValueError("shot logging needs a single worker")
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk_job, jobs))
    elif log is not None:
        parts = [
            simulate_shots(plan, setups, n, make_rng(seed, derive_stream(k)), log)
            for _, _, n, _, k in jobs
        ]
    else:
        parts = [_chunk_job(j) for j in jobs]
    acc = ShotTally()
    for p in parts:
        acc.merge(p)
    mean = acc.total / acc.n
    var = max(0.0, (acc.total_sq - acc.n * mean * mean) / max(1, acc.n - 1))
    overhead = float(np.prod([st.overhead for st in setups]))
    delta = max(slot_bound(st) for st in setups)
    return EstimatorReport(
        mean_estimate=mean,
        std_error=math.sqrt(var / acc.n),
        overhead=overhead,
        samples=acc.n,
        copies_min=int(acc.copies_min),
        copies_mean=acc.copies_total / acc.n,
        copies_max=int(acc.copies_max),
        bias_bound=bias_formula(plan.observable.norm, plan.M, delta),
        sample_variance=var,
        variance_factor=overhead**2,
    )


def expected_copies(plan: CircuitPlan, eps_map=1e-3, gamma: float | None = None, r_list=None) -> tuple[int, float]:
    """Worst-case and mean copies per circuit."""
    setups = _resolve(plan, eps_map, gamma, r_list)
    return sum(st.worst_copies for st in setups), sum(st.mean_copies for st in setups)


def random_plan(
    d: int,
    M: int,
    seed: int,
    kinds: Sequence[str] | str = "general",
    t_max: float = 1.0,
    idle_dim: int = 1,
    obs_norm: float = 1.0,
) -> CircuitPlan:
    """Random plan: mixed slot states (pure ones for ``"pure"`` slots), Haar interleavers,
    mixed input state and a random observable of the given norm."""
    rng = make_rng(seed, 0)
    if isinstance(kinds, str):
        kinds = [kinds] * M
    if len(kinds) != M:
        raise ValueError("need one kind per slot")
    slots = []
    for kind in kinds:
        T = float(rng.uniform(0.2, 1.0) * t_max * rng.choice([-1.0, 1.0]))
        rho = random_state(d, "pure" if kind == "pure" else "mixed", seed=rng)
        slots.append(Slot(T, rho.mat, kind))
    D = (2 if "controlled" in kinds else 1) * d * idle_dim
    inter = [haar_unitary(D, rng) for _ in range(M + 1)]
    sigma = random_state(D, "mixed", seed=rng).mat
    obs = random_hermitian(D, seed=rng, norm=obs_norm)
    return CircuitPlan(tuple(inter), tuple(slots), sigma, Observable(obs), idle_dim)
