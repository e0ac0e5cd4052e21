"""Total, dynamical and geometric phases along local unitary evolutions.

The total phase is the continuously unwrapped argument of the state overlap,
the dynamical phase is the Simpson quadrature of the instantaneous frequency
``-i <psi|dpsi/dt>``, and the geometric phase is their difference. Cyclic
points are overlap-magnitude returns to one; on them only the fractional
values 2 pi (n_A/d_A + n_B/d_B) can occur for Cartan-closed local paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .states import CoefficientMatrix, QuditDensity, reduced_densities
from .paths import LocalEvolution, PairEvolution, TimeGrid, lattice_condition_check

__all__ = [
    "GridTooCoarseError",
    "PhaseTrace",
    "CyclicEvent",
    "CycleScan",
    "FractionalLattice",
    "cumulative_simpson",
    "unwrap_phases",
    "trace_from_samples",
    "run_trace",
    "single_trace_from_samples",
    "single_qudit_trace",
    "detect_cycles",
    "fractional_lattice",
    "master_phase_formula",
    "circular_distance",
]

INDETERMINATE_TOL = 1e-12


class GridTooCoarseError(RuntimeError):
    """Per-step phase increment exceeded the unwrap guard."""


def cumulative_simpson(y: np.ndarray, dx: float, warn: bool = True) -> np.ndarray:
    """Cumulative composite Simpson integral on a uniform grid.

    Even-indexed points use exact Simpson pairs; odd-indexed points integrate
    the local interpolating parabola over its first half. With an odd number
    of intervals the final one falls back to the trapezoid rule (warned).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    out = np.zeros(n)
    if n < 2:
        return out
    m = (n - 1) // 2 * 2
    if m >= 2:
        pair = (y[0:m - 1:2] + 4.0 * y[1:m:2] + y[2:m + 1:2]) * (dx / 3.0)
        out[2:m + 1:2] = np.cumsum(pair)
        out[1:m:2] = out[0:m - 1:2] + (5.0 * y[0:m - 1:2] + 8.0 * y[1:m:2]
                                       - y[2:m + 1:2]) * (dx / 12.0)
    if m != n - 1:
        if warn:
            warnings.warn("odd interval count; trapezoid fallback on the last "
                          "step", stacklevel=2)
        out[n - 1] = out[n - 2] + 0.5 * dx * (y[n - 2] + y[n - 1])
    return out


def _cumulative_smooth(y: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative Simpson for a smooth chunk of either parity.

    Odd interval counts integrate the first interval with the forward
    parabola so the fourth-order accuracy is kept.
    """
    n = y.size
    if n < 3 or (n - 1) % 2 == 0:
        return cumulative_simpson(y, dx, warn=False)
    out = np.empty(n)
    out[0] = 0.0
    first = dx * (5.0 * y[0] + 8.0 * y[1] - y[2]) / 12.0
    out[1:] = first + cumulative_simpson(y[1:], dx, warn=False)
    return out


def _cumulative_piecewise(freq: np.ndarray, left_values: dict, cuts: list,
                          dx: float) -> np.ndarray:
    """Stitch cumulative Simpson across known integrand breakpoints.

    ``freq`` holds right-limit values; ``left_values`` maps a breakpoint
    sample index to the left-limit integrand there. Each chunk between
    breakpoints is smooth and integrated at fourth order.
    """
    n = freq.size
    out = np.zeros(n)
    edges = [0] + [c for c in cuts if 0 < c < n - 1] + [n - 1]
    offset = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        y = freq[lo:hi + 1].copy()
        if hi in left_values:
            y[-1] = left_values[hi]
        out[lo:hi + 1] = offset + _cumulative_smooth(y, dx)
        offset = out[hi]
    return out


def _chord_origin_distance(z0: complex, z1: complex) -> float:
    """Distance from the origin to the segment joining two complex samples."""
    d = z1 - z0
    dd = abs(d) ** 2
    if dd == 0.0:
        return abs(z0)
    tau = -((d.conjugate() * z0).real) / dd
    tau = min(1.0, max(0.0, tau))
    return abs(z0 + tau * d)


def unwrap_phases(z: np.ndarray, dynamical: np.ndarray | None = None,
                  guard: float = math.pi / 4.0,
                  indeterminate_tol: float = INDETERMINATE_TOL,
                  transit_ratio: float = 0.25,
                  near_origin: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Continuously unwrapped argument of a sampled complex path.

    Nearest-branch continuation sample to sample. The argument legitimately
    swings fast wherever the path runs close to the origin (transits), so the
    aliasing guard only fires for steps exceeding ``guard`` whose chord stays
    away from the origin both relative to its own length and relative to the
    overall magnitude scale of the path. Samples with magnitude below
    ``indeterminate_tol`` have no defined argument; their phase is bridged by
    the local slope of ``dynamical`` (zero slope if not supplied) and flagged
    in the returned mask.
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    mag = np.abs(z)
    scale = near_origin * (mag.max() if n else 1.0)
    determinate = mag > indeterminate_tol
    args = np.angle(z)
    phases = np.empty(n)
    phases[0] = args[0] if determinate[0] else 0.0

    def check(k0: int, k1: int, delta: float) -> None:
        if min(mag[k0], mag[k1]) <= scale:
            return
        dist = _chord_origin_distance(z[k0], z[k1])
        if dist > transit_ratio * abs(z[k1] - z[k0]):
            raise GridTooCoarseError(
                f"phase increment {delta:.3f} rad between samples {k0} and "
                f"{k1} exceeds the guard {guard:.3f}; refine the grid")

    if determinate.all():
        delta = np.angle(z[1:] * np.conj(z[:-1]))
        for k in np.flatnonzero(np.abs(delta) >= guard):
            check(k, k + 1, delta[k])
        phases[1:] = phases[0] + np.cumsum(delta)
        return phases, ~determinate

    for k in range(1, n):
        if determinate[k] and determinate[k - 1]:
            delta = math.remainder(args[k] - args[k - 1], 2.0 * math.pi)
            if abs(delta) >= guard:
                check(k - 1, k, delta)
            phases[k] = phases[k - 1] + delta
        elif determinate[k]:
            # re-anchor after an indeterminate run, nearest branch
            phases[k] = phases[k - 1] + math.remainder(args[k] - phases[k - 1],
                                                       2.0 * math.pi)
        else:
            slope = 0.0
            if dynamical is not None:
                slope = dynamical[k] - dynamical[k - 1]
            phases[k] = phases[k - 1] + slope
    return phases, ~determinate


@dataclass(frozen=True)
class PhaseTrace:
    """Sampled overlap and phase decomposition along an evolution.

    ``geometric_phase = total_phase - dynamical_phase`` at every sample;
    all phases start at zero and the total phase is continuously unwrapped.
    ``indeterminate`` flags samples where the overlap vanished and the total
    phase was bridged.
    """

    t: np.ndarray
    overlap: np.ndarray
    overlap_mag: np.ndarray
    total_phase: np.ndarray
    dynamical_phase: np.ndarray
    geometric_phase: np.ndarray
    indeterminate: np.ndarray


def _finalize_trace(t, overlap, dyn, guard) -> PhaseTrace:
    mag = np.abs(overlap)
    if abs(overlap[0] - 1.0) > 1e-8:
        raise ValueError(
            f"overlap at t = 0 is {overlap[0]:.6g}, not 1; the evolution must "
            "start at the identity and the state must be normalized")
    if mag.max() > 1.0 + 1e-9:
        raise ValueError("overlap magnitude exceeds 1; inputs are inconsistent")
    total, indet = unwrap_phases(overlap, dynamical=dyn, guard=guard)
    total = total - total[0]
    return PhaseTrace(t=t, overlap=overlap, overlap_mag=mag, total_phase=total,
                      dynamical_phase=dyn, geometric_phase=total - dyn,
                      indeterminate=indet)


def _pair_overlap_frequency(alpha, rho_a, rho_b, u_a, u_a_dot, u_b, u_b_dot):
    alphas = u_a @ alpha @ u_b.transpose(0, 2, 1)
    overlap = np.einsum("ij,tij->t", alpha.conj(), alphas)
    m_a = u_a.conj().transpose(0, 2, 1) @ u_a_dot
    m_b = u_b.conj().transpose(0, 2, 1) @ u_b_dot
    freq = -1j * (np.einsum("ij,tji->t", rho_a, m_a) + np.einsum("ij,tji->t", rho_b, m_b))
    if np.abs(freq.imag).max() > 1e-8:
        raise ValueError("dynamical frequency has a nonreal part; the operator "
                         "samples are not unitary")
    return overlap, freq.real


def trace_from_samples(alpha0: CoefficientMatrix, t: np.ndarray,
                       u_a: np.ndarray, u_a_dot: np.ndarray,
                       u_b: np.ndarray, u_b_dot: np.ndarray,
                       guard: float = math.pi / 4.0) -> PhaseTrace:
    """Phase trace of alpha(t) = U_A alpha(0) U_B^T from sampled operators.

    The operators need not be special unitary: a global phase e^{i phi(t)}
    on either factor shifts total and dynamical phase alike and cancels in
    the geometric phase. The quadrature assumes a smooth path; run_trace
    stitches the integral at segment boundaries of piecewise paths.
    """
    t = np.asarray(t, dtype=float)
    n = t.size
    if u_a.shape != (n, alpha0.d_a, alpha0.d_a) or u_b.shape != (n, alpha0.d_b, alpha0.d_b):
        raise ValueError("operator stacks do not match the state dimensions")
    rho_a, rho_b = reduced_densities(alpha0)
    overlap, freq = _pair_overlap_frequency(alpha0.alpha, rho_a, rho_b,
                                            u_a, u_a_dot, u_b, u_b_dot)
    dt = float(t[1] - t[0]) if n > 1 else 1.0
    return _finalize_trace(t, overlap, cumulative_simpson(freq, dt), guard)


def _check_rate_guard(rate: float, grid: TimeGrid, guard: float) -> None:
    step = 2.0 * rate * grid.dt
    if step >= guard:
        need = int(math.ceil(2.0 * rate * grid.t_max / guard))
        need += need % 2
        raise GridTooCoarseError(
            f"per-step phase increment {step:.3f} rad exceeds the guard "
            f"{guard:.3f}; use at least {need} steps")


def _boundary_grid_indices(evos, grid: TimeGrid) -> list:
    idx = set()
    for evo in evos:
        for b in evo.boundaries():
            if b <= 1e-12 or b >= grid.t_max - 1e-12:
                continue
            r = b / grid.dt
            k = int(round(r))
            if abs(r - k) <= 1e-6:
                idx.add(k)
    return sorted(idx)


def run_trace(alpha0: CoefficientMatrix, pair: PairEvolution,
              guard: float = math.pi / 4.0) -> PhaseTrace:
    """Run a two-qudit trace over the pair's time grid.

    The dynamical quadrature is stitched at segment boundaries with the
    left-limit integrand, keeping full Simpson accuracy on piecewise paths.
    """
    if pair.a.d != alpha0.d_a or pair.b.d != alpha0.d_b:
        raise ValueError(
            f"state is {alpha0.d_a}x{alpha0.d_b} but the paths act on "
            f"{pair.a.d} and {pair.b.d}")
    _check_rate_guard(pair.a.max_phase_rate + pair.b.max_phase_rate, pair.grid, guard)
    times = pair.grid.times()
    rho_a, rho_b = reduced_densities(alpha0)
    u_a, u_a_dot = pair.a.sample(times)
    u_b, u_b_dot = pair.b.sample(times)
    overlap, freq = _pair_overlap_frequency(alpha0.alpha, rho_a, rho_b,
                                            u_a, u_a_dot, u_b, u_b_dot)
    cuts = _boundary_grid_indices((pair.a, pair.b), pair.grid)
    left = {}
    if cuts:
        tb = times[cuts]
        _, left_freq = _pair_overlap_frequency(
            alpha0.alpha, rho_a, rho_b, *pair.a.sample(tb, side="left"),
            *pair.b.sample(tb, side="left"))
        left = dict(zip(cuts, left_freq))
    dyn = _cumulative_piecewise(freq, left, cuts, pair.grid.dt)
    return _finalize_trace(times, overlap, dyn, guard)


def _single_overlap_frequency(rho, u, u_dot):
    overlap = np.einsum("ij,tji->t", rho, u)
    m = u.conj().transpose(0, 2, 1) @ u_dot
    freq = -1j * np.einsum("ij,tji->t", rho, m)
    return overlap, freq.real


def single_trace_from_samples(rho0: QuditDensity, t: np.ndarray,
                              u: np.ndarray, u_dot: np.ndarray,
                              guard: float = math.pi / 4.0) -> PhaseTrace:
    """Phase trace of a single qudit, overlap Tr[rho0 U(t)]."""
    t = np.asarray(t, dtype=float)
    overlap, freq = _single_overlap_frequency(rho0.rho, u, u_dot)
    dt = float(t[1] - t[0]) if t.size > 1 else 1.0
    return _finalize_trace(t, overlap, cumulative_simpson(freq, dt), guard)


def single_qudit_trace(rho0: QuditDensity, evo: LocalEvolution, grid: TimeGrid,
                       guard: float = math.pi / 4.0) -> PhaseTrace:
    """Run a single-qudit trace over a uniform grid."""
    if evo.d != rho0.d:
        raise ValueError("path dimension does not match the state")
    if evo.duration < grid.t_max - 1e-9:
        raise ValueError("path shorter than the grid window")
    _check_rate_guard(evo.max_phase_rate, grid, guard)
    times = grid.times()
    u, u_dot = evo.sample(times)
    overlap, freq = _single_overlap_frequency(rho0.rho, u, u_dot)
    cuts = _boundary_grid_indices((evo,), grid)
    left = {}
    if cuts:
        _, left_freq = _single_overlap_frequency(
            rho0.rho, *evo.sample(times[cuts], side="left"))
        left = dict(zip(cuts, left_freq))
    dyn = _cumulative_piecewise(freq, left, cuts, grid.dt)
    return _finalize_trace(times, overlap, dyn, guard)


@dataclass(frozen=True)
class CyclicEvent:
    """One overlap-magnitude return to the unit circle."""

    t_cycle: float
    phase: float
    overlap_mag: float
    n_a: int | None = None
    n_b: int | None = None


@dataclass(frozen=True)
class CycleScan:
    """Detected cyclic events; ``continuum`` flags |overlap| = 1 everywhere.

    In the continuum case (product diagonal states evolve on the unit circle)
    a single grid-boundary event at t = 0 is reported instead of an event per
    sample.
    """

    events: tuple
    continuum: bool


def _refine_peak(t: np.ndarray, mag: np.ndarray, total: np.ndarray,
                 k: int) -> tuple[float, float, float]:
    if k == 0 or k == t.size - 1:
        return float(t[k]), float(total[k]), float(mag[k])
    denom = mag[k - 1] - 2.0 * mag[k] + mag[k + 1]
    if abs(denom) < 1e-30:
        return float(t[k]), float(total[k]), float(mag[k])
    shift = 0.5 * (mag[k - 1] - mag[k + 1]) / denom
    shift = min(1.0, max(-1.0, shift))
    dt = t[k] - t[k - 1]
    tc = float(t[k] + shift * dt)
    # quadratic interpolation of both the magnitude and the unwrapped phase
    mc = float(mag[k] - 0.25 * (mag[k - 1] - mag[k + 1]) * shift)
    pc = float(total[k] + 0.5 * (total[k + 1] - total[k - 1]) * shift
               + 0.5 * (total[k + 1] - 2.0 * total[k] + total[k - 1]) * shift ** 2)
    return tc, pc, mc


def _coset_closed(evo: LocalEvolution, t: float, tol: float = 1e-8) -> bool:
    w = evo.coset_factor([t])[0]
    return bool(np.abs(w - np.eye(evo.d)).max() <= tol)


def detect_cycles(trace: PhaseTrace, pair: PairEvolution | None = None,
                  eps: float = 1e-9, lattice_tol: float = 1e-6) -> CycleScan:
    """Locate overlap-magnitude maxima exceeding 1 - eps.

    Peaks are refined by a three-point quadratic fit. When a pair evolution is
    supplied, each event is annotated with the fractional indices (n_a, n_b)
    whenever both local paths are Cartan-closed there.
    """
    mag = trace.overlap_mag
    t = trace.t
    hits = mag >= 1.0 - eps
    continuum = bool(hits.all())
    events = []

    def annotate(tc: float, phase: float, mc: float) -> CyclicEvent:
        n_a = n_b = None
        if pair is not None:
            for label, evo in (("a", pair.a), ("b", pair.b)):
                n = None
                if _coset_closed(evo, tc):
                    n = lattice_condition_check(evo.cartan_levels([tc])[0],
                                                evo.d, tol=lattice_tol)
                if label == "a":
                    n_a = n
                else:
                    n_b = n
        return CyclicEvent(t_cycle=tc, phase=phase, overlap_mag=mc, n_a=n_a, n_b=n_b)

    if continuum:
        events.append(annotate(float(t[0]), float(trace.total_phase[0]), float(mag[0])))
        return CycleScan(events=tuple(events), continuum=True)

    k = 0
    n = mag.size
    while k < n:
        if not hits[k]:
            k += 1
            continue
        j = k
        while j + 1 < n and hits[j + 1]:
            j += 1
        kk = k + int(np.argmax(mag[k:j + 1]))
        left_ok = kk == 0 or mag[kk] >= mag[kk - 1]
        right_ok = kk == n - 1 or mag[kk] >= mag[kk + 1]
        if left_ok and right_ok:
            tc, pc, mc = _refine_peak(t, mag, trace.total_phase, kk)
            events.append(annotate(tc, pc, mc))
        k = j + 1
    return CycleScan(events=tuple(events), continuum=False)


@dataclass(frozen=True)
class FractionalLattice:
    """The attainable cyclic total phases 2 pi (n_A/d_A + n_B/d_B) mod 2 pi."""

    d_a: int
    d_b: int
    values: np.ndarray

    @property
    def order(self) -> int:
        return self.values.size

    def nearest(self, phase: float) -> tuple[int, float]:
        """(index m, circular distance) of the nearest lattice value."""
        dist = np.abs(np.remainder(phase - self.values + math.pi, 2.0 * math.pi) - math.pi)
        m = int(np.argmin(dist))
        return m, float(dist[m])

    def contains(self, phase: float, tol: float = 1e-6) -> bool:
        return self.nearest(phase)[1] <= tol


def fractional_lattice(d_a: int, d_b: int) -> FractionalLattice:
    """All values 2 pi (n_A/d_A + n_B/d_B) mod 2 pi: the 2 pi m / lcm grid."""
    if d_a < 2 or d_b < 2:
        raise ValueError("dimensions must be >= 2")
    L = math.lcm(d_a, d_b)
    values = 2.0 * math.pi * np.arange(L) / L
    return FractionalLattice(d_a=d_a, d_b=d_b, values=values)


def circular_distance(a, b) -> np.ndarray:
    """Distance between phases modulo 2 pi."""
    return np.abs(np.remainder(np.asarray(a) - np.asarray(b) + math.pi,
                               2.0 * math.pi) - math.pi)


def master_phase_formula(report, q_hat_a, q_hat_b, loop_integral_a, loop_integral_b,
                         n_a: int, n_b: int) -> float:
    """Geometric phase of a cyclic evolution from invariants and loop integrals.

    ``loop_integral_j`` is the accumulated connection vector, integral of
    u_j dt over the cycle, in R^{d_j^2 - 1}. The weights multiply the
    projections onto the purity directions:

    phi_g = 2 pi (n_A/d_A + n_B/d_B)
            - sqrt((C_m^2 - C^2)/2) q_hat_A . dx_A
            - sqrt((C_m^2 - C^2)/2 + (d_B - d_A)/(d_A d_B)) q_hat_B . dx_B
    """
    d_a, d_b = report.d_a, report.d_b
    q_hat_a = np.asarray(q_hat_a, dtype=float)
    q_hat_b = np.asarray(q_hat_b, dtype=float)
    dx_a = np.asarray(loop_integral_a, dtype=float)
    dx_b = np.asarray(loop_integral_b, dtype=float)
    if q_hat_a.shape != dx_a.shape or q_hat_a.shape != (d_a * d_a - 1,):
        raise ValueError("qudit A vectors must have length d_A^2 - 1")
    if q_hat_b.shape != dx_b.shape or q_hat_b.shape != (d_b * d_b - 1,):
        raise ValueError("qudit B vectors must have length d_B^2 - 1")
    gap = max(report.c_max ** 2 - report.concurrence ** 2, 0.0)
    w_a = math.sqrt(gap / 2.0)
    w_b = math.sqrt(gap / 2.0 + (d_b - d_a) / (d_a * d_b))
    frac = 2.0 * math.pi * (n_a / d_a + n_b / d_b)
    return frac - w_a * float(q_hat_a @ dx_a) - w_b * float(q_hat_b @ dx_b)
