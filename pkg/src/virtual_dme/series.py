"""Grouped Taylor series for exp(-i rho T / r) and its sampling distribution.

With ``x = T / r`` the truncated series is regrouped in pairs of orders
(2l, 2l + 1)::

    S_L(x) = sum_{l=0}^{L} C_l (-i rho)^{2l} (cos t_l I - i sgn(x) sin t_l rho)

where ``C_l = |x|^{2l} / (2l)! * sqrt(1 + (x / (2l+1))^2)`` and
``t_l = arctan(|x| / (2l+1))``.  The weights ``p_l = C_l / C`` with
``C = sum_l C_l`` form the index distribution of the random sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DensityMatrix

WMAX_ITER = 50
W_TOL = 1e-13


def lambert_w0(c: float) -> float:
    """Principal branch of the Lambert W function, by Halley iteration."""
    c = float(c)
    if not np.isfinite(c) or c < -1.0 / math.e:
        raise ValueError(f"lambert_w0 domain is c >= -1/e, got {c}")
    if c == 0.0:
        return 0.0
    if c == -1.0 / math.e:
        return -1.0
    if c > math.e:
        lc = math.log(c)
        w = lc - math.log(lc)
    elif c > -0.25:
        w = c - c * c + 1.5 * c**3
        w = math.log1p(c) if c > 0.5 else w
    else:
        # branch point expansion in p = sqrt(2(e c + 1))
        p = math.sqrt(2.0 * (math.e * c + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    for _ in range(WMAX_ITER):
        ew = math.exp(w)
        f = w * ew - c
        if f == 0.0:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= W_TOL * (1.0 + abs(w)):
            break
    return w


def _check_eps(eps: float, hi: float = 0.5):
    if not (0.0 < eps < hi):
        raise ValueError(f"eps must lie in (0, {hi}), got {eps}")


def choose_L(r: int, eps: float, rule: str = "lambert", scale: float = 3.0) -> int:
    """Truncation order making ``||S_L - exp(-i rho T/r)|| <= eps / (scale r)``.

    ``rule="lambert"`` uses ``ceil(ln(k)/(2 W0(ln(k)/e)) - 1/2)`` with
    ``k = scale r / eps``; ``rule="simple"`` uses the looser
    ``ceil(ln(k) / ln(ln(k)) - 1/2)``.  ``scale=1`` gives the bare one-sided
    truncation bound ``eps / r``.  The result is at least 1.
    """
    if r < 1:
        raise ValueError("r must be a positive integer")
    _check_eps(eps)
    lk = math.log(scale * r / eps)
    if rule == "lambert":
        val = 0.5 * lk / lambert_w0(lk / math.e) - 0.5
    elif rule == "simple":
        val = lk / math.log(lk) - 0.5
    else:
        raise ValueError(f"unknown rule {rule!r}")
    # guard against ceil of a value that is an integer up to rounding
    return max(1, math.ceil(val - 1e-12))


def grouped_coefficient(l: int, x: float) -> float:
    """``C_l(x) = |x|^{2l}/(2l)! sqrt(1 + (x/(2l+1))^2)``, in log space."""
    ax = abs(x)
    if l == 0:
        mag = 1.0
    elif ax == 0.0:
        return 0.0
    else:
        mag = math.exp(2 * l * math.log(ax) - math.lgamma(2 * l + 1))
    return mag * math.sqrt(1.0 + (ax / (2 * l + 1)) ** 2)


def grouped_angle(l: int, x: float) -> float:
    """``arctan(|x| / (2l+1))``, equal to ``arccos((1+(x/(2l+1))^2)^{-1/2})``."""
    return math.atan(abs(x) / (2 * l + 1))


@dataclass(frozen=True)
class SeriesSpec:
    """Grouped-Taylor data for one (T, r, L)."""

    T: float
    r: int
    L: int
    coeffs: np.ndarray
    angles: np.ndarray
    probs: np.ndarray
    normC: float
    eps: float | None = None

    @property
    def x(self) -> float:
        return self.T / self.r

    @property
    def sign(self) -> float:
        return 1.0 if self.T > 0 else -1.0

    @property
    def overhead(self) -> float:
        """``C^{2r}``, the rescaling factor applied to every outcome."""
        return self.normC ** (2 * self.r)

    @property
    def overhead_cap(self) -> float:
        return math.exp(2.0 * self.T**2 / self.r)

    def with_time(self, T: float) -> "SeriesSpec":
        """Same r and L at another time of equal magnitude (sign flip)."""
        if abs(abs(T) - abs(self.T)) > 1e-15:
            raise ValueError("with_time only changes the sign of T")
        return SeriesSpec(T, self.r, self.L, self.coeffs, self.angles, self.probs, self.normC, self.eps)


def build_series(T: float, r: int, eps: float | None = None, L: int | None = None, rule: str = "lambert") -> SeriesSpec:
    """Series data for time T over r segments.

    Either ``eps`` (L from ``choose_L``) or an explicit ``L`` must be given.
    """
    T = float(T)
    if T == 0.0 or not np.isfinite(T):
        raise ValueError("T must be finite and nonzero")
    r = int(r)
    if r < max(1.0, abs(T)):
        raise ValueError(f"r={r} must be at least max(1, |T|)={max(1.0, abs(T))}")
    if L is None:
        if eps is None:
            raise ValueError("give eps or L")
        L = choose_L(r, eps, rule=rule)
    if L < 0:
        raise ValueError("L must be nonnegative")
    x = T / r
    coeffs = np.array([grouped_coefficient(l, x) for l in range(L + 1)])
    angles = np.array([grouped_angle(l, x) for l in range(L + 1)])
    normC = float(coeffs.sum())
    probs = coeffs / normC
    for a in (coeffs, angles, probs):
        a.setflags(write=False)
    return SeriesSpec(T, r, int(L), coeffs, angles, probs, normC, eps)


def truncated_series_matrix(spec: SeriesSpec, rho) -> np.ndarray:
    """``S_L(T/r)`` in the grouped form."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    eye = np.eye(d, dtype=complex)
    sq = -(rho @ rho)  # (-i rho)^2
    power = eye.copy()
    out = np.zeros((d, d), dtype=complex)
    for l in range(spec.L + 1):
        th = spec.angles[l]
        out += spec.coeffs[l] * power @ (math.cos(th) * eye - 1j * spec.sign * math.sin(th) * rho)
        power = power @ sq
    return out


def segment_factors(spec: SeriesSpec, rho, sign: float | None = None) -> list[np.ndarray]:
    """Unnormalized left factors ``(-i rho)^{2l}(cos t_l - i s sin t_l rho)`` for l = 0..L."""
    rho = np.asarray(rho, dtype=complex)
    s = spec.sign if sign is None else sign
    eye = np.eye(rho.shape[0], dtype=complex)
    sq = -(rho @ rho)
    power = eye.copy()
    out = []
    for l in range(spec.L + 1):
        th = spec.angles[l]
        out.append(power @ (math.cos(th) * eye - 1j * s * math.sin(th) * rho))
        power = power @ sq
    return out


def copy_count_bound(spec: SeriesSpec) -> int:
    """Worst-case copies of rho consumed by one sampled circuit."""
    return 2 * spec.r + 4 * spec.r * spec.L


def expected_index(spec: SeriesSpec) -> float:
    return float(np.dot(np.arange(spec.L + 1), spec.probs))


def mean_copy_count(spec: SeriesSpec) -> float:
    """Average copies per circuit, ``2r(1 + 2 E[l])``."""
    return 2 * spec.r * (1.0 + 2.0 * expected_index(spec))


def check_density(rho) -> np.ndarray:
    """Accept a ``DensityMatrix`` or validate a raw array into one."""
    if isinstance(rho, DensityMatrix):
        return rho.mat
    return DensityMatrix(np.asarray(rho, dtype=complex)).mat
