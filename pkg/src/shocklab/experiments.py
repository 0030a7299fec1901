"""Replica orchestration and the five statistical experiments.

Every experiment follows one recipe: a deterministic geometry (initial
labels, simulation window, absorbing line for the irrelevant far field) is
fixed once; replicas differ only through seeds derived from
(master_seed, replica_index); rescaled observables are collected into an
empirical CDF and compared against the predicted limit law, or exact
identities are checked with zero tolerance.  Aborted replicas (window
truncation, integrity failures) are counted and reported, never silently
dropped into the statistics.
"""

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .backwards import Cylinder, exits_cylinder, position_trace, reconstruct, \
    trace_start_is_consistent
from .errors import ContractError, TruncationError
from .initial import DensityTriple, decomposition_ics, flat_ic, step_ic, triple_ic
from .lattice import SiteWindow, generate_tape, right_margin, simulate, \
    simulate_coupled, simulate_traced
from .rng import replica_seed
from .scaling import flat_prediction, frame, product_prediction
from .stats import EmpiricalCDF, dkw_band, ks_distance, ks_standard_error
from .tracy_widom import cdf_interpolant

# Spatial padding beyond the relevant characteristic band, in units of
# t^(2/3): the absorbing line sits this far beyond the farthest anchor, and
# the initial profile is cut where it crosses the line.  Certified by the
# line-doubling check (doubling the cushion must not change any observed
# position, seed by seed).
DEFAULT_CUSHION = 8.0

MAX_ABORT_FRACTION = 1e-3


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    n: int
    aborts: int
    ks: float = None
    dkw99: float = None
    passed: bool = None
    runtime_s: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def abort_fraction(self):
        total = self.n + self.aborts
        return self.aborts / total if total else 0.0

    def to_json_dict(self):
        return {
            "experiment": self.experiment,
            "params": self.params,
            "n": self.n,
            "aborts": self.aborts,
            "abort_fraction": self.abort_fraction,
            "ks": self.ks,
            "dkw99": self.dkw99,
            "passed": self.passed,
            "runtime_s": self.runtime_s,
            "extras": self.extras,
        }


def write_summary_json(path, report):
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, default=str)
        fh.write("\n")


def write_samples_csv(path, master_seed, samples):
    """Per-replica samples: NaN rows are aborted replicas."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replica", "seed", "raw_position", "rescaled_s"])
        for i, row in enumerate(samples):
            raw, s = row
            w.writerow([i, replica_seed(master_seed, i),
                        "" if math.isnan(raw) else int(raw),
                        "" if math.isnan(s) else repr(float(s))])


# ---------------------------------------------------------------------------
# geometry


def _trim_to_line(config, p_abs):
    """Drop leading (lowest-label) particles at or beyond the usable edge."""
    keep = config.positions <= p_abs - 2
    if keep.all():
        return config
    first = int(np.argmax(keep))
    if not keep[first:].all():
        raise ContractError("profile positions are not monotone against the line")
    from .lattice import ParticleConfiguration

    return ParticleConfiguration(n_min=config.n_min + first,
                                 positions=config.positions[first:])


def _flat_geometry(rho, t, alpha=0.0, cushion=DEFAULT_CUSHION):
    """Observed label, initial profile and absorbing window for a constant
    density run."""
    n_obs = int(math.floor(rho * rho * t + rho * alpha * t))
    if n_obs < 1:
        raise ContractError(f"observed label {n_obs} < 1; raise t")
    p_char = max((1.0 - 2.0 * rho - alpha) * t, -alpha * t, 0.0)
    p_abs = int(math.ceil(p_char + cushion * t ** (2.0 / 3.0)))
    depth = int(math.ceil(rho * p_abs)) + 4
    cfg = flat_ic(rho, (-depth, n_obs))
    cfg = _trim_to_line(cfg, p_abs)
    win = SiteWindow(int(cfg.positions[-1]), p_abs, float(t))
    return n_obs, cfg, win


def _triple_geometry(d, u, tau, cushion=DEFAULT_CUSHION):
    fr = frame(d, u, tau)
    span = d.rho3 - d.rho1
    anchor3 = (2.0 * d.rho3 - d.rho1 - d.rho2) * d.T / span
    p_abs = int(math.ceil(anchor3 + cushion * d.T ** (2.0 / 3.0)))
    k0 = d.middle_label_cut
    depth = int(k0 + math.ceil((p_abs - d.T) * d.rho3)) + 4
    cfg = triple_ic(d, (-depth, fr.N))
    cfg = _trim_to_line(cfg, p_abs)
    win = SiteWindow(int(cfg.positions[-1]), p_abs, float(fr.t))
    return fr, cfg, win


def _step_geometry(nu, t, cushion=DEFAULT_CUSHION):
    n_obs = int(round(nu * t))
    if n_obs < 1:
        raise ContractError(f"step profile label {n_obs} < 1")
    p_char = max((1.0 - 2.0 * math.sqrt(nu)) * t, 0.0)
    p_abs = int(math.ceil(p_char + cushion * t ** (2.0 / 3.0)))
    cfg = step_ic(0, n_obs)
    win = SiteWindow(int(cfg.positions[-1]) - 1, p_abs, float(t))
    return n_obs, cfg, win


# ---------------------------------------------------------------------------
# replica plumbing


def _map_replicas(worker, args, master_seed, replicas, workers):
    """Evaluate worker(args, seed) per replica; NaN tuples mark aborts.

    Results come back indexed by replica, so aggregation is independent of
    completion order by construction.
    """
    seeds = [replica_seed(master_seed, i) for i in range(replicas)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunk = max(1, replicas // (workers * 8))
            rows = list(ex.map(worker, [args] * replicas, seeds, chunksize=chunk))
    else:
        rows = [worker(args, s) for s in seeds]
    return rows


def _one_point_replica(args, seed):
    """Simulate one replica and read one particle position at one time."""
    cfg, win, n_obs, t = args
    try:
        tape = generate_tape(seed, win)
        out, _ = simulate(cfg, tape, t, record_log=False, absorb_right=True)
        if not (out.n_min <= n_obs <= out.n_max):
            return (math.nan, math.nan)
        return (float(out.position(n_obs)), 0.0)
    except TruncationError:
        return (math.nan, math.nan)


def _collect_one_point(cfg, win, n_obs, t, center, scale, master_seed,
                       replicas, workers):
    rows = _map_replicas(_one_point_replica, (cfg, win, n_obs, t),
                         master_seed, replicas, workers)
    raw = np.array([r[0] for r in rows])
    ok = ~np.isnan(raw)
    rescaled = np.full_like(raw, math.nan)
    rescaled[ok] = (center - raw[ok]) / scale
    samples = np.column_stack([raw, rescaled])
    return samples, int((~ok).sum())


def _finalize_ks(experiment, params, samples, aborts, prediction, tolerance,
                 t0, alt_prediction=None):
    ok = ~np.isnan(samples[:, 1])
    values = samples[ok, 1]
    ecdf = EmpiricalCDF(values)
    ks = ks_distance(ecdf, prediction)
    n = len(values)
    report = ExperimentReport(
        experiment=experiment, params=params, n=n, aborts=aborts,
        ks=ks, dkw99=dkw_band(n), runtime_s=time.perf_counter() - t0)
    report.passed = bool(ks <= tolerance and report.abort_fraction <= MAX_ABORT_FRACTION)
    report.extras["ks_se"] = ks_standard_error(n)
    report.extras["tolerance"] = tolerance
    if alt_prediction is not None:
        report.extras["ks_other_orientation"] = ks_distance(ecdf, alt_prediction)
    return report, ecdf


# ---------------------------------------------------------------------------
# experiments


def run_flat(rho, t, alpha=0.0, replicas=10000, master_seed=0, workers=1,
             order=64, tolerance=0.05, cushion=DEFAULT_CUSHION):
    """Constant-density one-point law: rescaled position against a single
    rescaled GOE Tracy-Widom factor."""
    t0 = time.perf_counter()
    n_obs, cfg, win = _flat_geometry(rho, t, alpha, cushion)
    center = (1.0 - 2.0 * rho - alpha) * t
    samples, aborts = _collect_one_point(
        cfg, win, n_obs, t, center, t ** (1.0 / 3.0), master_seed, replicas, workers)
    tw = cdf_interpolant("GOE", order)
    prediction = lambda s: flat_prediction(rho, s, tw)
    report, _ = _finalize_ks(
        "flat", {"rho": rho, "t": t, "alpha": alpha, "replicas": replicas,
                 "master_seed": master_seed, "order": order, "cushion": cushion},
        samples, aborts, prediction, tolerance, t0)
    report.extras["observed_label"] = n_obs
    return report, samples


def run_triple_point(d, u=0.0, tau=0.0, replicas=10000, master_seed=0,
                     workers=1, order=64, tolerance=0.05,
                     cushion=DEFAULT_CUSHION):
    """Merging-shock one-point law: rescaled position at the merge frame
    against the product of three rescaled GOE factors."""
    t0 = time.perf_counter()
    fr, cfg, win = _triple_geometry(d, u, tau, cushion)
    scale = d.T ** (1.0 / 3.0)
    samples, aborts = _collect_one_point(
        cfg, win, fr.N, fr.t, fr.X, scale, master_seed, replicas, workers)
    tw = cdf_interpolant("GOE", order)
    prediction = lambda s: product_prediction(d, u, tau, s, tw)
    report, _ = _finalize_ks(
        "triple-point",
        {"rho1": d.rho1, "rho2": d.rho2, "rho3": d.rho3, "T": d.T, "u": u,
         "tau": tau, "replicas": replicas, "master_seed": master_seed,
         "order": order, "cushion": cushion},
        samples, aborts, prediction, tolerance, t0)
    report.extras.update({"N": fr.N, "t": fr.t, "X": fr.X})
    return report, samples


def run_step_tails(nu, t, replicas=10000, master_seed=0, workers=1,
                   order=64, tolerance=0.05, cushion=DEFAULT_CUSHION):
    """Packed-block one-point law and tail asymmetry.

    The rescaled position is compared against the GUE Tracy-Widom law with
    its 2^(-1/3) normalization (pinned at nu = 1/4, where the centering
    speed vanishes); both tails are probed by log-quantile decay rates: the
    far-ahead side must fall at least as fast as the far-behind side.
    """
    if not 0.1 <= nu <= 0.9:
        raise ContractError(f"nu must lie in [0.1, 0.9], got {nu}")
    t0 = time.perf_counter()
    n_obs, cfg, win = _step_geometry(nu, t, cushion)
    center = (1.0 - 2.0 * math.sqrt(nu)) * t
    samples, aborts = _collect_one_point(
        cfg, win, n_obs, t, center, t ** (1.0 / 3.0), master_seed, replicas, workers)
    params = {"nu": nu, "t": t, "replicas": replicas,
              "master_seed": master_seed, "order": order, "cushion": cushion}
    if abs(nu - 0.25) < 1e-12:
        tw = cdf_interpolant("GUE", order)
        gue_scale = 2.0 ** (-1.0 / 3.0)
        prediction = lambda s: tw(np.asarray(s) / gue_scale)
    else:
        prediction = None
    ok = ~np.isnan(samples[:, 1])
    values = samples[ok, 1]
    ecdf = EmpiricalCDF(values)
    report = ExperimentReport(
        experiment="step-tails", params=params, n=len(values), aborts=aborts,
        runtime_s=0.0)
    if prediction is not None:
        report.ks = ks_distance(ecdf, prediction)
        report.dkw99 = dkw_band(len(values))
    # tail diagnostics: decay rate of each tail from two quantile probes
    p_hi, p_lo = 0.02, 0.005
    q = np.quantile(values, [p_lo, p_hi, 1 - p_hi, 1 - p_lo])
    rate_ahead = math.log(p_hi / p_lo) / max(q[1] - q[0], 1e-12)   # s < 0 side
    rate_behind = math.log(p_hi / p_lo) / max(q[3] - q[2], 1e-12)  # s > 0 side
    mass_left = float(np.mean(values <= -4.0))
    mass_right = float(np.mean(values >= 4.0))
    report.extras.update({
        "observed_label": n_obs,
        "tail_rate_ahead": rate_ahead,
        "tail_rate_behind": rate_behind,
        "ahead_decays_faster": bool(rate_ahead >= rate_behind),
        "mass_beyond_minus4": mass_left,
        "mass_beyond_plus4": mass_right,
        "ks_se": ks_standard_error(len(values)),
        "tolerance": tolerance,
    })
    ks_ok = report.ks is None or report.ks <= tolerance
    report.passed = bool(ks_ok and rate_ahead >= rate_behind
                         and report.abort_fraction <= MAX_ABORT_FRACTION)
    report.runtime_s = time.perf_counter() - t0
    return report, samples


def _decomposition_replica(args, seed):
    configs, win, times, labels = args
    try:
        tape = generate_tape(seed, win)
        state = [c for c in configs]
        t_prev = 0.0
        violations = []
        for tt in times:
            state = [simulate(c, tape, tt, t_from=t_prev, record_log=False)[0]
                     for c in state]
            t_prev = tt
            full, parts = state[0], state[1:]
            for n in labels:
                v = full.position(n)
                vals = [p.position(n) for p in parts]
                if v != min(vals) or any(v > pv for pv in vals):
                    violations.append((float(tt), int(n), v, tuple(vals)))
        return (0.0, float(len(violations)))
    except TruncationError:
        return (math.nan, math.nan)


def run_decomposition(d, times, labels, replicas=500, master_seed=0, workers=1):
    """Exact three-subproblem decomposition under a shared tape.

    At every grid time and label, the full profile's position must equal
    the minimum of the three dominating subproblems, realization by
    realization.  Violations are engine bugs; the report carries the count
    and the first reproducer seeds.
    """
    t0 = time.perf_counter()
    times = tuple(sorted(float(t) for t in times))
    labels = tuple(int(n) for n in labels)
    until = times[-1]
    k0 = d.middle_label_cut
    frac3 = d.fractions[2]
    # depth below the middle cut such that a packed block released there
    # cannot reach the observation region within the horizon (positions
    # cannot move left)
    margin = right_margin(until)
    reach = max(labels) + until + margin + 2 - (-1)
    depth = int(k0 + math.ceil(float(frac3) / (1.0 - float(frac3)) * reach)) + 8
    full = triple_ic(d, (-depth, max(labels)))
    x1, x2, x3 = decomposition_ics(d, (-depth, max(labels)))
    right = int(max(c.positions[0] for c in (full, x1, x2, x3))) + margin + 2
    win = SiteWindow(int(full.positions[-1]) - 1, right, until)
    rows = _map_replicas(_decomposition_replica, ((full, x1, x2, x3), win, times, labels),
                         master_seed, replicas, workers)
    viol = np.array([r[1] for r in rows])
    aborts = int(np.isnan(viol).sum())
    total = int(np.nansum(viol))
    bad_seeds = [replica_seed(master_seed, i) for i in range(replicas)
                 if not math.isnan(viol[i]) and viol[i] > 0][:5]
    report = ExperimentReport(
        experiment="decomposition",
        params={"rho1": d.rho1, "rho2": d.rho2, "rho3": d.rho3, "T": d.T,
                "times": times, "labels": labels, "replicas": replicas,
                "master_seed": master_seed},
        n=replicas - aborts, aborts=aborts,
        runtime_s=time.perf_counter() - t0)
    report.extras.update({"violations": total, "reproducer_seeds": bad_seeds})
    report.passed = bool(total == 0 and report.abort_fraction <= MAX_ABORT_FRACTION)
    return report


def _slowdec_replica(args, seed):
    cfg, win, n_obs, n_mid, t_mid, t_end = args
    try:
        tape = generate_tape(seed, win)
        mid, _ = simulate(cfg, tape, t_mid, record_log=False, absorb_right=True)
        if not (mid.n_min <= n_mid <= mid.n_max):
            return (math.nan, math.nan)
        x_mid = mid.position(n_mid)
        fin, _ = simulate(mid, tape, t_end, t_from=t_mid, record_log=False,
                          absorb_right=True)
        if not (fin.n_min <= n_obs <= fin.n_max):
            return (math.nan, math.nan)
        return (float(fin.position(n_obs)), float(x_mid))
    except TruncationError:
        return (math.nan, math.nan)


def run_slow_decorrelation(rho, t, nu=0.8, delta=0.5, replicas=5000,
                           master_seed=0, workers=1, cushion=DEFAULT_CUSHION):
    """Along-characteristic decorrelation probe at one horizon t.

    One trajectory yields both positions: the observed label at t and the
    characteristic-shifted label at t - t^nu.  Reports the empirical
    probability that their difference, centered by (1-2 rho) t^nu, exceeds
    delta * t^(1/3)."""
    t0 = time.perf_counter()
    if not 0 < nu < 1:
        raise ContractError(f"nu must lie in (0,1), got {nu}")
    t_shift = t ** nu
    t_mid = t - t_shift
    n_obs = int(math.floor(rho * rho * t))
    n_mid = int(math.floor(rho * rho * t_mid))
    _, cfg, win = _flat_geometry(rho, t, 0.0, cushion)
    rows = _map_replicas(_slowdec_replica, (cfg, win, n_obs, n_mid, t_mid, t),
                         master_seed, replicas, workers)
    xs = np.array([r[0] for r in rows])
    xm = np.array([r[1] for r in rows])
    ok = ~np.isnan(xs)
    delta_obs = xs[ok] - xm[ok] - (1.0 - 2.0 * rho) * t_shift
    threshold = delta * t ** (1.0 / 3.0)
    exceed = np.abs(delta_obs) >= threshold
    n = int(ok.sum())
    p = float(exceed.mean()) if n else math.nan
    se = math.sqrt(max(p * (1 - p), 1e-12) / n) if n else math.nan
    report = ExperimentReport(
        experiment="slow-decorrelation",
        params={"rho": rho, "t": t, "nu": nu, "delta": delta,
                "replicas": replicas, "master_seed": master_seed,
                "cushion": cushion},
        n=n, aborts=int((~ok).sum()), runtime_s=time.perf_counter() - t0)
    report.extras.update({
        "exceedance": p, "se": se, "threshold": threshold,
        "labels": [n_obs, n_mid], "t_mid": t_mid,
        "mean_centered_diff": float(delta_obs.mean()) if n else math.nan,
        "std_centered_diff": float(delta_obs.std()) if n else math.nan,
    })
    report.passed = bool(report.abort_fraction <= MAX_ABORT_FRACTION)
    return report


def _localization_replica(args, seed):
    cfg, win, n_obs, t, slope, half_width = args
    try:
        tape = generate_tape(seed, win)
        res = simulate_traced(cfg, tape, t, absorb_right=True)
        if not (res.config.n_min <= n_obs <= res.config.n_max):
            return (math.nan, math.nan)
        trace = position_trace(res, n_obs, t)
        if not trace_start_is_consistent(trace, cfg):
            return (math.nan, math.nan)
        cyl = Cylinder(slope=slope, half_width=half_width, t_end=t)
        return (float(res.config.position(n_obs)),
                1.0 if exits_cylinder(trace, cyl) else 0.0)
    except TruncationError:
        return (math.nan, math.nan)


def run_localization(rho, t, epsilon=0.15, replicas=2000, master_seed=0,
                     workers=1, cushion=DEFAULT_CUSHION):
    """Empirical exit probability of the backwards walk from the cylinder
    of half-width t^(2/3 + epsilon) around the characteristic."""
    t0 = time.perf_counter()
    n_obs, cfg, win = _flat_geometry(rho, t, 0.0, cushion)
    slope = 1.0 - 2.0 * rho
    half_width = t ** (2.0 / 3.0 + epsilon)
    rows = _map_replicas(_localization_replica,
                         (cfg, win, n_obs, t, slope, half_width),
                         master_seed, replicas, workers)
    flags = np.array([r[1] for r in rows])
    ok = ~np.isnan(flags)
    n = int(ok.sum())
    p = float(flags[ok].mean()) if n else math.nan
    se = math.sqrt(max(p * (1 - p), 1e-12) / n) if n else math.nan
    report = ExperimentReport(
        experiment="localization",
        params={"rho": rho, "t": t, "epsilon": epsilon, "replicas": replicas,
                "master_seed": master_seed, "cushion": cushion},
        n=n, aborts=int((~ok).sum()), runtime_s=time.perf_counter() - t0)
    report.extras.update({"exit_fraction": p, "se": se,
                          "half_width": half_width, "observed_label": n_obs})
    report.passed = bool(report.abort_fraction <= MAX_ABORT_FRACTION)
    return report


def localization_traces(rho, t, epsilon=0.15, count=5, master_seed=0,
                        cushion=DEFAULT_CUSHION):
    """A few full backwards-walk traces (for CSV export)."""
    n_obs, cfg, win = _flat_geometry(rho, t, 0.0, cushion)
    out = []
    for i in range(count):
        tape = generate_tape(replica_seed(master_seed, i), win)
        res = simulate_traced(cfg, tape, t, absorb_right=True)
        out.append(position_trace(res, n_obs, t))
    return out


def absorption_certificate(build_geometry, master_seed=0, replicas=100,
                           cushion=DEFAULT_CUSHION):
    """Line-doubling certification: the observed position must be identical,
    seed by seed, when the absorbing line moves twice as far out.

    build_geometry(cushion) -> (n_obs, config, window).  Returns the number
    of disagreeing replicas (0 certifies the cushion).
    """
    g1 = build_geometry(cushion)
    g2 = build_geometry(2.0 * cushion)
    bad = 0
    for i in range(replicas):
        seed = replica_seed(master_seed, i)
        vals = []
        for n_obs, cfg, win in (g1, g2):
            tape = generate_tape(seed, win)
            out, _ = simulate(cfg, tape, win.horizon, record_log=False,
                              absorb_right=True)
            vals.append(out.position(n_obs))
        if vals[0] != vals[1]:
            bad += 1
    return bad
