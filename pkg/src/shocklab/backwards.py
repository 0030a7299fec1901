"""Backwards label process: reconstruction, exact identities, localization.

Reading a realization in reverse time, the label process starts at the
observed particle and steps down to the blocking particle at every moment
its own jump was suppressed.  The walk localizes the randomness a particle
position at time t actually depends on, and it turns two structural facts
into machine-checkable integer identities per realization:

* releasing a packed block from the walk's location at any intermediate
  time and re-running the same tape reproduces the observed position
  exactly, and
* the observed position equals the minimum over packed blocks released at
  time zero from every lower label's starting position.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import ContractError
from .initial import step_ic
from .lattice import simulate, simulate_traced


@dataclass(frozen=True)
class BackwardsPath:
    """Piecewise-constant label walk N(u), non-decreasing in u, N(t) = N.

    Right-continuous: a suppression of particle n at time b means N(u) = n
    for u >= b and N(u) = n - 1 just below b.
    """

    terminal_label: int
    terminal_time: float
    break_times: np.ndarray   # ascending
    break_labels: np.ndarray  # label the walk held at (and above) each break

    def label_at(self, u):
        u = np.asarray(u, dtype=np.float64)
        above = len(self.break_times) - np.searchsorted(self.break_times, u, side="right")
        out = self.terminal_label - above
        return int(out) if out.ndim == 0 else out

    @property
    def start_label(self):
        """N(0), the label the walk ends on at time zero."""
        return self.terminal_label - len(self.break_times)


@dataclass(frozen=True)
class PositionTrace:
    """Step function u -> (label, position) of the backwards walk.

    Entry k holds the state on [times[k-1], times[k]); the last entry is the
    state at the terminal time.
    """

    times: np.ndarray
    labels: np.ndarray
    positions: np.ndarray

    def _index(self, u):
        idx = np.searchsorted(self.times, np.asarray(u, dtype=np.float64), side="right")
        return np.minimum(idx, len(self.times) - 1)

    def value_at(self, u):
        out = self.positions[self._index(u)]
        return int(out) if out.ndim == 0 else out

    def label_at(self, u):
        out = self.labels[self._index(u)]
        return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Cylinder:
    """Space-time tube |x - (anchor_x + slope*(u - anchor_u))| < half_width
    over u in [0, t_end]."""

    slope: float
    half_width: float
    t_end: float
    anchor_x: float = 0.0
    anchor_u: float = 0.0

    def __post_init__(self):
        if not self.half_width >= 0:
            raise ContractError("cylinder half_width must be >= 0")

    def center(self, u):
        return self.anchor_x + self.slope * (np.asarray(u, dtype=float) - self.anchor_u)


def reconstruct(N, t, log):
    """Backwards path of particle N from time t out of a suppression log.

    Scans entries in decreasing time; an entry (b, n) with n equal to the
    current label hands the walk to n-1 below time b.  Pure function of the
    log.  Entries after t are ignored; the log must be time-sorted.
    """
    times = np.asarray(log.times, dtype=np.float64)
    labels = np.asarray(log.labels, dtype=np.int64)
    if len(times) and np.any(np.diff(times) < 0):
        raise ContractError("suppression log is not time-sorted")
    hi = int(np.searchsorted(times, t, side="right"))
    times, labels = times[:hi], labels[:hi]
    min_label = int(labels.min()) if len(labels) else N
    bt, bl, _ = _k._reconstruct(times, labels, np.int64(N), np.int64(min_label) - 1)
    return BackwardsPath(terminal_label=N, terminal_time=float(t),
                         break_times=bt[::-1].copy(), break_labels=bl[::-1].copy())


def position_trace(result, N, t):
    """Space-time trajectory (u, N(u), x_{N(u)}(u)) of the backwards walk.

    Needs a traced simulation (moves recorded).  The walk's position changes
    only at events: one left step per own move looking back, one right step
    at each hand-off to the blocker.
    """
    if result.moves is None:
        raise ContractError("position_trace needs a traced simulation result")
    x_end = result.config.position(N)
    u, lab, x = _k._position_trace(
        result.moves.times, result.moves.labels,
        result.log.times, result.log.labels,
        np.int64(N), float(t), np.int64(x_end))
    return PositionTrace(times=u[::-1].copy(), labels=lab[::-1].copy(),
                         positions=x[::-1].copy())


def trace_start_is_consistent(trace, config):
    """Integrity check: the walk's time-zero location must be the starting
    position of the label it ends on."""
    lab0 = int(trace.labels[0])
    if not (config.n_min <= lab0 <= config.n_max):
        return False
    return int(trace.positions[0]) == config.position(lab0)


def exits_cylinder(trace, cyl):
    """True when the trace leaves the tube at any sampled event time.

    The trace is constant between events and moves one site per event, so
    sampling segment endpoints bounds the sup-norm excursion to one site.
    """
    if not np.isfinite(cyl.half_width):
        return False
    # entry k is the state on [lo_k, hi_k); the distance to the tube's
    # center line is extremal at segment endpoints
    lo = np.concatenate(([0.0], trace.times[:-1]))
    hi = np.minimum(trace.times, cyl.t_end)
    x = trace.positions.astype(np.float64)
    keep = hi >= lo
    worst = np.maximum(np.abs(x - cyl.center(lo)), np.abs(x - cyl.center(hi)))[keep]
    return bool(np.any(worst >= cyl.half_width))


def localization_fraction(traces, cyl):
    """Empirical probability that the backwards walk leaves the tube."""
    if not traces:
        return 0.0
    return sum(exits_cylinder(tr, cyl) for tr in traces) / len(traces)


def write_trace_csv(fh, trace):
    w = csv.writer(fh)
    w.writerow(["u", "N_u", "x_Nu"])
    for u, n, x in zip(trace.times, trace.labels, trace.positions):
        w.writerow([repr(float(u)), int(n), int(x)])


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of the exact per-realization identity checks."""

    seed: int
    N: int
    t: float
    release_checks: int
    min_scan_size: int
    violations: tuple
    argmin_labels: tuple
    walk_start: int
    argmin_interior: bool

    @property
    def ok(self):
        return not self.violations


def verify_backwards_identities(config, tape, N, t, taus=(), k_margin=None):
    """Exact integer checks of the release and minimum identities.

    Release: for each tau, a packed block dropped at the walk's recorded
    location (x_{N(tau)}(tau), tau) and run on the SAME tape must land its
    (N - N(tau) + 1)-th particle exactly on x_N(t).

    Minimum: x_N(t) must equal the minimum over k of packed blocks released
    at time zero from x_k(0) (particle N - k + 1 read off), the argmin must
    contain the walk's time-zero label, scanning k from N down to
    N - k_margin (every label of the configuration when k_margin is None);
    every scanned value must dominate x_N(t).

    Any violation is an engine bug, not a statistical event.
    """
    res = simulate_traced(config, tape, t)
    x_N_t = res.config.position(N)
    path = reconstruct(N, t, res.log)
    trace = position_trace(res, N, t)
    violations = []

    if not trace_start_is_consistent(trace, config):
        violations.append(("trace-start", int(trace.labels[0]), int(trace.positions[0])))

    for tau in taus:
        n_tau = path.label_at(tau)
        z = trace.value_at(tau)
        block = step_ic(z, N - n_tau + 1)
        released, _ = simulate(block, tape, t, t_from=float(tau), record_log=False)
        y = released.position(N - n_tau + 1)
        if y != x_N_t:
            violations.append(("release", float(tau), y, x_N_t))

    k_lo = config.n_min if k_margin is None else max(config.n_min, N - int(k_margin))
    ks = np.arange(k_lo, N + 1)
    vals = np.empty(len(ks), dtype=np.int64)
    for i, k in enumerate(ks):
        block = step_ic(config.position(int(k)), int(N - k + 1))
        released, _ = simulate(block, tape, t, record_log=False)
        vals[i] = released.position(int(N - k + 1))
    m = int(vals.min())
    argmin = tuple(int(k) for k in ks[vals == m])
    if m != x_N_t:
        violations.append(("minimum", m, x_N_t))
    if np.any(vals < x_N_t):
        bad = int(ks[np.argmax(vals < x_N_t)])
        violations.append(("one-sided", bad, int(vals[ks == bad][0]), x_N_t))
    if path.start_label not in argmin:
        violations.append(("argmin-start", path.start_label, argmin))
    interior = bool(argmin and min(argmin) > k_lo)

    return IdentityReport(
        seed=tape.master_seed, N=N, t=float(t), release_checks=len(tuple(taus)),
        min_scan_size=len(ks), violations=tuple(violations),
        argmin_labels=argmin, walk_start=path.start_label,
        argmin_interior=interior)
