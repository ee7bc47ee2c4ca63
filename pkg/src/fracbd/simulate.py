"""Path simulation for the clock-changed catastrophe processes.

The semi-Markov representation drives everything: the embedded jump chain of the
base process is unchanged by the clock, and the holding time in state n is
Mittag-Leffler(alpha, lambda_n + mu_n + nu) under the inverse stable clock
(exponential at alpha = 1, tempered Mittag-Leffler under the tempered clock).
Each event draws one holding time and one uniform; the uniform picks birth if
U < lam_n/total, death if U < (lam_n+mu_n)/total, catastrophe otherwise, with
strict inequalities.

Two interfaces: per-path simulators returning a :class:`SamplePath` (event
lists; deterministic given an :class:`~fracbd.randgen.RngStream`), and lockstep
vectorized batch engines used by the Monte Carlo harness where 1e5+ paths are
needed.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .analytic import LinearParams
from .errors import FracbdError
from .markov import ModelSpec, TimeChange
from .randgen import (
    RngStream,
    _as_generator,
    _tempered_stable_vec,
    sample_ml,
    sample_stable,
    sample_tempered_ml,
)

__all__ = [
    "PathEvent",
    "SamplePath",
    "simulate_tc_lbdpc",
    "simulate_tempered_lbdpc",
    "simulate_general",
    "extract",
    "paths_to_csv",
]

EVENT_KINDS = ("birth", "death", "catastrophe", "absorbed")

_MAX_EVENTS = 10_000_000


class PathEvent(NamedTuple):
    time: float
    state_after: int
    kind: str


@dataclass
class SamplePath:
    """One simulated trajectory: initial state plus the ordered event list.

    ``kind`` is ``birth``/``death``/``catastrophe`` for the plain process;
    the modified process records its jump to the sentinel state -1 as
    ``absorbed``.  The state is constant between events and after the last one.
    """

    initial: int
    events: list[PathEvent] = field(default_factory=list)
    t_max: float = math.inf

    def state_at(self, t: float) -> int:
        s = self.initial
        for ev in self.events:
            if ev.time > t:
                break
            s = ev.state_after
        return s

    def serialize(self) -> str:
        buf = io.StringIO()
        buf.write(f"initial={self.initial}\n")
        for ev in self.events:
            buf.write(f"{ev.time!r},{ev.state_after},{ev.kind}\n")
        return buf.getvalue()


def _clock_of(p: LinearParams) -> TimeChange:
    if p.theta > 0.0:
        return TimeChange.inverse_tempered(p.alpha, p.theta)
    return TimeChange.inverse_stable(p.alpha)


def _holding_time(tc: TimeChange, rate: float, gen) -> float:
    if tc.kind == "inverse_tempered":
        return sample_tempered_ml(tc.alpha, tc.theta, rate, gen)
    if tc.kind == "inverse_stable":
        return sample_ml(tc.alpha, rate, gen)
    return gen.standard_exponential() / rate


def simulate_general(
    spec: ModelSpec,
    tc: TimeChange,
    m0: int,
    t_max: float,
    rng,
    modified: bool = False,
) -> SamplePath:
    """Simulate one path of the clock-changed chain with general rates.

    ``modified=True`` runs the effective-catastrophe variant: the catastrophe
    sends any positive state to the absorbing sentinel -1 (recorded with kind
    ``absorbed``) and state 0 keeps only its birth rate.  In both variants the
    catastrophe acts at positive states only; state 0 exits at rate lambda_0.
    """
    if m0 < 0:
        raise ValueError("m0 must be a chain state >= 0")
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    gen = _as_generator(rng)
    path = SamplePath(initial=m0, t_max=t_max)
    state = m0
    t = 0.0
    for _ in range(_MAX_EVENTS):
        if state == 0:
            lam0 = float(spec.birth(0))
            if lam0 <= 0.0:
                break  # absorbing
            total = lam0
        else:
            lam_n = float(spec.birth(state))
            mu_n = float(spec.death(state))
            total = lam_n + mu_n + spec.nu
        t = t + _holding_time(tc, total, gen)
        if t > t_max:
            break
        if state == 0:
            state = 1
            path.events.append(PathEvent(t, state, "birth"))
            continue
        u = gen.uniform()
        if u < lam_n / total:
            state += 1
            path.events.append(PathEvent(t, state, "birth"))
        elif u < (lam_n + mu_n) / total:
            state -= 1
            path.events.append(PathEvent(t, state, "death"))
        else:
            if modified:
                path.events.append(PathEvent(t, -1, "absorbed"))
                return path
            state = 0
            path.events.append(PathEvent(t, 0, "catastrophe"))
    else:
        raise FracbdError("event budget exhausted; the path is exploding")
    return path


def simulate_tc_lbdpc(p: LinearParams, m0: int, t_max: float, rng) -> SamplePath:
    """Simulate the clock-changed linear model (theta = 0), zero absorbing.

    The holding time in state n >= 1 is Mittag-Leffler(alpha, n(lam+mu)+nu),
    drawn as X**(1/alpha) * S with X exponential and S stable; the embedded
    move is birth / death / catastrophe-to-zero by a single uniform.
    """
    if p.theta != 0.0:
        raise ValueError("use simulate_tempered_lbdpc for theta > 0")
    if m0 < 1:
        raise ValueError("m0 must be >= 1 (zero is absorbing)")
    spec = ModelSpec.linear_model(p.lam, p.mu, p.nu)
    return simulate_general(spec, _clock_of(p), m0, t_max, rng, modified=False)


def simulate_tempered_lbdpc(p: LinearParams, m0: int, t_max: float, rng) -> SamplePath:
    """Tempered-clock linear model: same embedded chain, holding times drawn
    from the tempered Mittag-Leffler law (subordinator run for an exponential
    time; the rejection step subdivides internally)."""
    if p.theta <= 0.0:
        raise ValueError("simulate_tempered_lbdpc needs theta > 0")
    if m0 < 1:
        raise ValueError("m0 must be >= 1 (zero is absorbing)")
    spec = ModelSpec.linear_model(p.lam, p.mu, p.nu)
    return simulate_general(spec, _clock_of(p), m0, t_max, rng, modified=False)


def extract(path: SamplePath, what: str, t: float | None = None, n: int | None = None):
    """Read a functional off a path's event list.

    ``what`` is one of ``first_visit_zero``, ``first_catastrophe``,
    ``first_effective_catastrophe``, ``state_at`` (needs t), ``sojourns_in``
    (needs n).  Returns ``None`` when the event did not occur before the
    horizon (the caller owns censoring).
    """
    if what == "first_visit_zero":
        if path.initial == 0:
            return 0.0
        for ev in path.events:
            if ev.state_after == 0:
                return ev.time
        return None
    if what == "first_catastrophe":
        for ev in path.events:
            if ev.kind in ("catastrophe", "absorbed"):
                return ev.time
        return None
    if what == "first_effective_catastrophe":
        # catastrophes are only generated from positive states, so any recorded
        # catastrophe (or modified-chain absorption) is effective
        return extract(path, "first_catastrophe")
    if what == "state_at":
        if t is None:
            raise ValueError("state_at needs t")
        return path.state_at(t)
    if what == "sojourns_in":
        if n is None:
            raise ValueError("sojourns_in needs n")
        out = []
        state = path.initial
        t_prev = 0.0
        for ev in path.events:
            if state == n:
                out.append(ev.time - t_prev)
            state = ev.state_after
            t_prev = ev.time
        return out
    raise ValueError(f"unknown extraction {what!r}")


def paths_to_csv(paths, fh) -> None:
    """Write paths as CSV rows (path_id, k, Y_k, state, kind); row k = 0 carries
    the initial state with an empty kind."""
    fh.write("path_id,k,Y_k,state,kind\n")
    for pid, path in enumerate(paths):
        fh.write(f"{pid},0,0.0,{path.initial},\n")
        for k, ev in enumerate(path.events, start=1):
            fh.write(f"{pid},{k},{ev.time:.10g},{ev.state_after},{ev.kind}\n")


# --- vectorized batch engines ----------------------------------------------------


def _holding_times_vec(tc: TimeChange, rates: np.ndarray, gen) -> np.ndarray:
    x = gen.standard_exponential(size=rates.shape[0]) / rates
    if tc.kind == "none" or (tc.kind == "inverse_stable" and tc.alpha == 1.0):
        return x
    if tc.kind == "inverse_stable":
        s = sample_stable(tc.alpha, gen, size=rates.shape[0])
        return x ** (1.0 / tc.alpha) * s
    return _tempered_stable_vec(tc.alpha, tc.theta, x, gen)


def states_at_times(
    p: LinearParams, m0: int, t_grid, n_paths: int, rng, max_rounds: int = 100_000
) -> np.ndarray:
    """States of ``n_paths`` independent linear-model paths at each grid time.

    Lockstep vectorization of the per-path simulator: each round advances every
    live path by one event.  Returns an int array of shape (n_paths, len(t_grid)).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    t_max = float(t_grid.max())
    gen = _as_generator(rng)
    tc = _clock_of(p)
    state = np.full(n_paths, m0, dtype=np.int64)
    clock = np.zeros(n_paths)
    out = np.full((n_paths, t_grid.size), m0, dtype=np.int64)
    alive = np.ones(n_paths, dtype=bool)
    for _ in range(max_rounds):
        act = alive & (state > 0)
        if not act.any():
            return out
        idx = np.flatnonzero(act)
        n = state[idx].astype(float)
        total = n * (p.lam + p.mu) + p.nu
        t_new = clock[idx] + _holding_times_vec(tc, total, gen)
        censored = t_new > t_max
        alive[idx[censored]] = False
        li = idx[~censored]
        if li.size == 0:
            continue
        t_new = t_new[~censored]
        n = n[~censored]
        total = total[~censored]
        u = gen.uniform(size=li.size)
        new_state = np.where(
            u < n * p.lam / total,
            state[li] + 1,
            np.where(u < n * (p.lam + p.mu) / total, state[li] - 1, 0),
        )
        # the post-event state holds from t_new on; later events overwrite later
        # grid points again, so each grid entry ends at the last event <= tg
        for j, tg in enumerate(t_grid):
            at = t_new <= tg
            out[li[at], j] = new_state[at]
        clock[li] = t_new
        state[li] = new_state
    raise FracbdError("batch event budget exhausted; paths are exploding")


def sample_marginal(p: LinearParams, m0: int, t: float, n_samples: int, rng) -> np.ndarray:
    """Exact draws of the clock-changed linear process at one time point.

    Uses the representation N(t) = N_classical(Y(t)) with three independent
    ingredients: the inverse-subordinator clock Y(t), the classical linear
    birth-death transition law from each of the ``m0`` ancestors (extinct with
    the Feller probability, geometric otherwise), and the catastrophe stream,
    an independent Exp(nu) competing clock that zeroes the population when it
    rings first.  O(1) per draw, so supercritical cells with huge event counts
    cost the same as subcritical ones; this is the moment-validation
    counterpart of the event-by-event engines.
    """
    if m0 < 1:
        raise ValueError("m0 must be >= 1")
    gen = _as_generator(rng)
    if t == 0.0:
        return np.full(n_samples, m0, dtype=np.int64)
    tc = _clock_of(p)
    if tc.kind == "none":
        y = np.full(n_samples, t)
    elif tc.kind == "inverse_stable":
        s = sample_stable(tc.alpha, gen, size=n_samples)
        y = (t / s) ** tc.alpha
    else:
        from .randgen import _inverse_tempered_vec

        y = _inverse_tempered_vec(tc.alpha, tc.theta, t, n_samples, gen)
    g = p.lam - p.mu
    if abs(g) <= 1e-12 * max(p.lam, p.mu):
        p0 = p.lam * y / (1.0 + p.lam * y)
    else:
        # overflow-safe forms of mu(e^{gy}-1)/(lam e^{gy}-mu)
        w = np.exp(-abs(g) * y)
        if g > 0:
            p0 = p.mu * (1.0 - w) / (p.lam - p.mu * w)
        else:
            p0 = p.mu * (1.0 - w) / (p.mu - p.lam * w)
    eta = np.clip(p.lam * p0 / p.mu, 0.0, 1.0 - 1e-15)
    counts = np.zeros(n_samples, dtype=np.int64)
    for _ in range(m0):
        alive = gen.uniform(size=n_samples) >= p0
        geo = gen.geometric(1.0 - eta)
        counts += np.where(alive, geo, 0)
    killed = gen.uniform(size=n_samples) >= np.exp(-p.nu * y)
    counts[killed] = 0
    return counts


def first_passage_times(
    spec: ModelSpec,
    tc: TimeChange,
    m0: int,
    n_paths: int,
    rng,
    target: str = "zero",
    n_cap: int = 100_000,
    max_rounds: int = 1_000_000,
) -> np.ndarray:
    """First-visit-to-zero or first-effective-catastrophe times, vectorized.

    ``target="zero"`` runs until absorption at 0 (requires lambda_0 = 0 and an
    almost-surely-finite hitting time); ``target="effective_catastrophe"`` runs
    the modified chain until the sentinel is hit.  No horizon: the event count,
    not the clock, is what the budget bounds.
    """
    gen = _as_generator(rng)
    if target not in ("zero", "effective_catastrophe"):
        raise ValueError("target must be 'zero' or 'effective_catastrophe'")
    modified = target == "effective_catastrophe"
    lam_tab = np.array([float(spec.birth(k)) for k in range(n_cap)])
    mu_tab = np.array([float(spec.death(k)) for k in range(n_cap)])
    mu_tab[0] = 0.0
    if modified and lam_tab[0] == 0.0 and mu_tab[1:2].sum() > 0.0:
        raise FracbdError(
            "effective-catastrophe batch with lambda_0 = 0 can strand paths at "
            "the absorbing zero before any catastrophe"
        )
    state = np.full(n_paths, m0, dtype=np.int64)
    clock = np.zeros(n_paths)
    out = np.full(n_paths, np.nan)
    for _ in range(max_rounds):
        open_ = np.isnan(out)
        if not open_.any():
            return out
        idx = np.flatnonzero(open_)
        s = state[idx]
        if s.max() >= n_cap - 1:
            raise FracbdError("state cap exceeded in first-passage batch")
        lam_n = lam_tab[s]
        mu_n = mu_tab[s]
        at0 = s == 0
        total = np.where(at0, lam_n, lam_n + mu_n + spec.nu)
        dt = _holding_times_vec(tc, total, gen)
        clock[idx] += dt
        u = gen.uniform(size=idx.size)
        birth = u < np.where(at0, 1.0, lam_n / total)
        death = ~birth & (u < (lam_n + mu_n) / total)
        cat = ~birth & ~death & ~at0
        new_state = s + np.where(birth, 1, 0) - np.where(death, 1, 0)
        new_state[cat] = -1 if modified else 0
        state[idx] = new_state
        if modified:
            hit = cat
        else:
            hit = new_state == 0
        out[idx[hit]] = clock[idx[hit]]
    raise FracbdError("first-passage batch exceeded its round budget")


def pooled_sojourns(
    p: LinearParams, m0: int, state_n: int, n_samples: int, rng, t_max: float = math.inf
) -> np.ndarray:
    """Completed holding times in state ``state_n`` pooled over paths.

    Runs per-path simulation until ``n_samples`` sojourns are collected; used
    by the distributional goodness-of-fit suites.
    """
    gen = _as_generator(rng)
    spec = ModelSpec.linear_model(p.lam, p.mu, p.nu)
    tc = _clock_of(p)
    out: list[float] = []
    guard = 0
    while len(out) < n_samples:
        guard += 1
        if guard > 100 * n_samples:
            raise FracbdError("sojourn pooling stalled; state rarely visited")
        path = simulate_general(spec, tc, m0, t_max, gen)
        out.extend(extract(path, "sojourns_in", n=state_n))
    return np.array(out[:n_samples])
