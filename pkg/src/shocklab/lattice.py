"""Exact continuous-time TASEP on a finite lattice window.

The graphical construction: every site carries an independent rate-1
Poisson clock, realized reproducibly from (master_seed, site) by
counter-based generators (see _kernels).  A simulation is a deterministic
time-ordered sweep over the clock rings, so several initial conditions run
against the same tape share one realization of the randomness (basic
coupling), and growing the window never perturbs the clocks of sites
already inside it.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .errors import CapacityError, ContractError, TruncationError

MAX_EVENTS = 2**31 - 1


@dataclass(frozen=True)
class SiteWindow:
    """Finite space-time box: sites left..right, times [0, horizon]."""

    left: int
    right: int
    horizon: float

    def __post_init__(self):
        if self.left >= self.right:
            raise ContractError(f"window needs left < right, got [{self.left}, {self.right}]")
        if not (self.horizon >= 0.0) or not math.isfinite(self.horizon):
            raise ContractError(f"window horizon must be finite and >= 0, got {self.horizon}")

    @property
    def n_sites(self):
        return self.right - self.left + 1


@dataclass(frozen=True)
class EventTape:
    """All clock rings of a window, sorted by (time, site), ties site-ascending.

    Per-site ring times are a pure function of (master_seed, site): the same
    seed replayed on a larger window reproduces them bit for bit.
    """

    master_seed: int
    window: SiteWindow
    times: np.ndarray
    sites: np.ndarray

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class ParticleConfiguration:
    """Positions for a contiguous label range [n_min, n_max], right-to-left
    labeled: position strictly decreases as the label increases."""

    n_min: int
    positions: np.ndarray  # int64, positions[i] is particle n_min + i

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64)
        object.__setattr__(self, "positions", pos)
        if len(pos) == 0:
            raise ContractError("configuration needs at least one particle")
        if np.any(np.diff(pos) >= 0):
            raise ContractError("positions must strictly decrease with label")

    @property
    def n_max(self):
        return self.n_min + len(self.positions) - 1

    @property
    def labels(self):
        return np.arange(self.n_min, self.n_min + len(self.positions))

    def position(self, n):
        if not (self.n_min <= n <= self.n_max):
            raise ContractError(f"label {n} outside [{self.n_min}, {self.n_max}]")
        return int(self.positions[n - self.n_min])


@dataclass(frozen=True)
class SuppressionLog:
    """Blocked jumps: entry (time, n) means particle n rang while particle
    n-1 occupied its target site."""

    times: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class MoveLog:
    """Realized jumps (time, label), in time order."""

    times: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class SimulationResult:
    config: ParticleConfiguration
    log: SuppressionLog
    moves: MoveLog = None
    n_absorbed: int = 0


def right_margin(until):
    """Default clearance beyond the rightmost tracked start: a free particle
    travels Poisson(until), so this margin is crossed only with negligible
    probability."""
    if until <= 0:
        return 2
    return math.ceil(until + 8.0 * math.sqrt(until * max(1.0, math.log(until))))


def default_window(config, until, max_events=MAX_EVENTS):
    """Window sized per the margin rule, with a 2-site guard band."""
    left = int(config.positions[-1])
    right = int(config.positions[0]) + right_margin(until) + 2
    win = SiteWindow(left, right, float(until))
    _check_capacity(win, max_events)
    return win


def _check_capacity(window, max_events=MAX_EVENTS):
    expected = window.n_sites * max(window.horizon, 0.0)
    if expected > max_events:
        raise CapacityError(
            f"window {window.n_sites} sites x horizon {window.horizon:g} implies "
            f"~{expected:.3g} events, above the {max_events} cap")


# Scratch buffers reused across generate_tape calls; one simulation process
# owns its workspace (replicas parallelize across processes, never threads).
_workspace = {}


def _scratch(name, dtype, n):
    buf = _workspace.get(name)
    if buf is None or len(buf) < n:
        buf = np.empty(int(n * 1.2) + 64, dtype)
        _workspace[name] = buf
    return buf


def generate_tape(master_seed, window, max_events=MAX_EVENTS):
    """All ring times of independent rate-1 site clocks in the window.

    Deterministic in (master_seed, site): coupling and window extension are
    exact.  The global sequence is sorted by (time, site).
    """
    _check_capacity(window, max_events)
    seed = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF)
    nsites = window.n_sites
    keys = _scratch("keys", np.uint64, nsites)[:nsites]
    counts = _scratch("counts", np.int64, nsites)[:nsites]
    _k._site_counts(seed, np.int64(window.left), np.int64(window.right),
                    float(window.horizon), keys, counts)
    total = int(counts.sum())
    if total > max_events:
        raise CapacityError(f"window produced {total} events, above the {max_events} cap")
    t_buf = _scratch("tape_t", np.float64, total)
    s_buf = _scratch("tape_s", np.int32, total)
    st_buf = _scratch("scr_t", np.float64, total)
    ss_buf = _scratch("scr_s", np.int32, total)
    m = _k._fill_tape(keys, counts, np.int64(window.left), float(window.horizon),
                      t_buf, s_buf, st_buf, ss_buf)
    return EventTape(master_seed=master_seed, window=window,
                     times=t_buf[:m].copy(), sites=s_buf[:m].copy())


def _event_range(tape, t_from, until):
    i0 = int(np.searchsorted(tape.times, t_from, side="right"))
    i1 = int(np.searchsorted(tape.times, until, side="right"))
    return i0, i1


def _run_sweep(config, tape, until, t_from, record_log, record_moves, absorb_right):
    win = tape.window
    if until > win.horizon:
        raise ContractError(f"until={until} beyond tape horizon {win.horizon}")
    if t_from < 0 or t_from > until:
        raise ContractError(f"need 0 <= t_from <= until, got t_from={t_from}")
    pos = config.positions.copy()
    if pos[-1] < win.left or pos[0] > win.right - 2:
        raise ContractError(
            f"particles [{pos[-1]}, {pos[0]}] outside usable window "
            f"[{win.left}, {win.right - 2}]")
    occ = np.full(win.n_sites, -1, dtype=np.int64)
    occ[pos - win.left] = np.arange(len(pos))
    i0, i1 = _event_range(tape, t_from, until)
    nev = i1 - i0
    cap_log = nev if record_log else 1
    cap_mv = nev if record_moves else 1
    log_t = np.empty(cap_log, np.float64)
    log_i = np.empty(cap_log, np.int32)
    mv_t = np.empty(cap_mv, np.float64)
    mv_i = np.empty(cap_mv, np.int32)
    status, nlog, nmv, nabs = _k._sweep(
        tape.times, tape.sites, np.int64(i0), np.int64(i1),
        np.int64(win.left), np.int64(win.right), pos, occ,
        absorb_right, record_log, log_t, log_i, record_moves, mv_t, mv_i)
    if status == _k.SWEEP_TRUNCATED:
        raise TruncationError(
            f"particle reached the right guard band of window "
            f"[{win.left}, {win.right}] before t={until}; enlarge the window")
    return pos, log_t[:nlog], log_i[:nlog], mv_t[:nmv], mv_i[:nmv], int(nabs)


def _surviving(config, pos):
    alive = pos < _k.ABSORBED_POS
    if not alive.any():
        raise TruncationError("every particle was absorbed at the right boundary")
    first = int(np.argmax(alive))
    if not alive[first:].all():
        raise ContractError("absorbed labels are not a prefix of the label range")
    return ParticleConfiguration(n_min=config.n_min + first, positions=pos[first:])


def simulate(config, tape, until, t_from=0.0, record_log=True, absorb_right=False):
    """Run one configuration against a tape up to `until`.

    Returns (final_configuration, suppression_log).  Fully deterministic:
    the outcome is a pure function of (config, tape, t_from, until).  With
    absorb_right, particles stepping into the right guard band leave the
    system (their labels disappear from the returned configuration) instead
    of raising TruncationError.
    """
    pos, log_t, log_i, _, _, _ = _run_sweep(
        config, tape, until, t_from, record_log, False, absorb_right)
    out = _surviving(config, pos)
    log = SuppressionLog(times=log_t, labels=log_i.astype(np.int64) + config.n_min)
    return out, log


def simulate_traced(config, tape, until, t_from=0.0, absorb_right=False):
    """Like simulate, but also records every realized jump (for backwards-path
    reconstruction)."""
    pos, log_t, log_i, mv_t, mv_i, nabs = _run_sweep(
        config, tape, until, t_from, True, True, absorb_right)
    out = _surviving(config, pos)
    return SimulationResult(
        config=out,
        log=SuppressionLog(times=log_t, labels=log_i.astype(np.int64) + config.n_min),
        moves=MoveLog(times=mv_t, labels=mv_i.astype(np.int64) + config.n_min),
        n_absorbed=nabs)


def simulate_coupled(configs, tape, until, t_from=0.0, record_log=True,
                     absorb_right=False):
    """Run several configurations under the same tape (basic coupling).

    Identical to calling simulate per configuration with this tape; the
    shared realization is what makes attractivity and the min-decomposition
    exact per seed.
    """
    return [simulate(c, tape, until, t_from=t_from, record_log=record_log,
                     absorb_right=absorb_right) for c in configs]
