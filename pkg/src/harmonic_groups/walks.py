"""Right random walks, hitting times and measures, and harmonic induction.

The walk is X_{t+1} = X_t * xi_{t+1} with i.i.d. steps.  For a finite-index
marked subgroup H the stopping times are

    tau      = first t >= 0 with X_t in H,
    tau_plus = first t >= 1 with X_t in H,

and the hitting measure is the law of X_{tau_plus} started at the identity,
reported in H-model coordinates.

Every sample owns an RNG stream derived from (seed, sample_index), and all
aggregation is exact (integer or Fraction sums), so results are independent
of scheduling and bit-reproducible per seed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import groups, measures
from .errors import CensoringError, CertificationError, ResourceCapError
from .groups import Element, GeneratingSet, MarkedSubgroup
from .measures import FiniteMeasure

CENSOR_HARD_LIMIT = 0.01
CENSOR_WARN_LIMIT = 0.001


@dataclass(frozen=True)
class WalkConfig:
    """Sampling plan for one Monte Carlo experiment."""

    measure: FiniteMeasure
    seed: int
    n_samples: int = 10_000
    max_steps: int = 10_000

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class HittingSample:
    """One stopped run; ``tau is None`` means censored at max_steps."""

    tau: Optional[int]
    landing: Optional[Element]  # H-model coordinates


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Counts of first-return landings in model coordinates."""

    counts: dict  # model Element -> int
    total: int
    censored: int

    def __post_init__(self):
        if sum(self.counts.values()) + self.censored != self.total:
            raise ValueError("counts plus censored must equal total")

    def frequency(self, y: Element) -> float:
        return self.counts.get(y, 0) / self.total

    def landed(self) -> int:
        return self.total - self.censored

    def model_drift(self, model: groups.GroupDescriptor):
        """Per-coordinate mean and stderr of the Abelianized landing.

        Sums are exact integers; only the final division goes to float.
        """
        rank = model.abelian_free_rank
        n = self.landed()
        sums = [0] * rank
        sqs = [0] * rank
        for y, c in self.counts.items():
            v = groups.abelianize(model, y)
            for i in range(rank):
                sums[i] += c * v[i]
                sqs[i] += c * v[i] * v[i]
        means = tuple(sums[i] / n for i in range(rank))
        stderrs = []
        for i in range(rank):
            if n > 1:
                var = (sqs[i] - sums[i] * sums[i] / n) / (n - 1)
                stderrs.append(math.sqrt(max(var, 0.0) / n))
            else:
                stderrs.append(0.0)
        return means, tuple(stderrs)


def _step_tables(mu: FiniteMeasure):
    denom, thresholds = measures._sampling_table(mu)
    elems = tuple(g for g, _ in mu.support)
    return denom, thresholds, elems


def _run_hit(G, label, start, tables, max_steps, rng, min_steps):
    denom, thresholds, elems = tables
    mul = groups.mul
    x = start
    if min_steps == 0 and label(x) == 0:
        return 0, x
    for t in range(1, max_steps + 1):
        x = mul(G, x, elems[bisect_right(thresholds, rng.randrange(denom))])
        if label(x) == 0:
            return t, x
    return None, None


def simulate_hit(
    start: Element,
    H: MarkedSubgroup,
    cfg: WalkConfig,
    mode: str = "tau_plus",
    sample_index: int = 0,
) -> HittingSample:
    """Run one walk from ``start`` until it (re)enters H.

    mode "tau" stops at t >= 0 (so a start inside H returns immediately);
    mode "tau_plus" requires t >= 1.  Censoring is a value, not an error.
    """
    if mode not in ("tau", "tau_plus"):
        raise ValueError("mode must be 'tau' or 'tau_plus'")
    G = H.parent
    G.check_element(start)
    rng = measures.rng_stream(cfg.seed, sample_index)
    tau, x = _run_hit(
        G, H.label, start, _step_tables(cfg.measure), cfg.max_steps, rng,
        0 if mode == "tau" else 1,
    )
    if tau is None:
        return HittingSample(None, None)
    return HittingSample(tau, H.to_model(x))


def hitting_measure(H: MarkedSubgroup, cfg: WalkConfig) -> EmpiricalMeasure:
    """Empirical first-return distribution from the identity (tau_plus runs)."""
    G = H.parent
    tables = _step_tables(cfg.measure)
    label = H.label
    to_model = H.to_model
    ident = G.identity()
    counts: dict[Element, int] = {}
    censored = 0
    for i in range(cfg.n_samples):
        rng = measures.rng_stream(cfg.seed, i)
        tau, x = _run_hit(G, label, ident, tables, cfg.max_steps, rng, 1)
        if tau is None:
            censored += 1
        else:
            y = to_model(x)
            counts[y] = counts.get(y, 0) + 1
    _enforce_censoring(censored, cfg.n_samples)
    return EmpiricalMeasure(counts, cfg.n_samples, censored)


def _enforce_censoring(censored: int, total: int) -> None:
    if censored > CENSOR_HARD_LIMIT * total:
        raise CensoringError(
            f"{censored}/{total} runs censored at max_steps "
            f"(hard limit {CENSOR_HARD_LIMIT:.0%})"
        )


@dataclass(frozen=True)
class TauEstimate:
    """Monte Carlo estimate of sup over starting cosets of E[tau]."""

    T_hat: float
    stderr: float
    per_coset: tuple  # (transversal index, mean, stderr)
    censored: int
    total: int
    warning: bool


def estimate_T(H: MarkedSubgroup, cfg: WalkConfig) -> TauEstimate:
    """Estimate sup_x E_x[tau] from every transversal start.

    The expectation depends only on the coset of the start, so running one
    start per transversal element is exhaustive rather than a sample of
    starting points.
    """
    G = H.parent
    tables = _step_tables(cfg.measure)
    per = []
    censored = 0
    n = cfg.n_samples
    for j, t_elem in enumerate(H.transversal):
        s = 0
        sq = 0
        used = 0
        for i in range(n):
            rng = measures.rng_stream(cfg.seed, j * n + i)
            tau, _ = _run_hit(G, H.label, t_elem, tables, cfg.max_steps, rng, 0)
            if tau is None:
                censored += 1
            else:
                s += tau
                sq += tau * tau
                used += 1
        if used == 0:
            raise CensoringError(f"all runs from transversal index {j} censored")
        mean = s / used
        if used > 1:
            var = (sq - s * s / used) / (used - 1)
            err = math.sqrt(max(var, 0.0) / used)
        else:
            err = 0.0
        per.append((j, mean, err))
    total = n * H.index
    _enforce_censoring(censored, total)
    best = max(per, key=lambda row: row[1])
    return TauEstimate(
        T_hat=best[1],
        stderr=best[2],
        per_coset=tuple(per),
        censored=censored,
        total=total,
        warning=censored > CENSOR_WARN_LIMIT * total,
    )


@dataclass(frozen=True)
class InducedValue:
    """Monte Carlo value of an induced harmonic function at one point.

    ``exact`` marks the deterministic shortcut for starts already in H.
    ``value_exact`` is the exact rational sample mean (the float ``value``
    is its rounding); censored runs are dropped and bound the bias by
    censored fraction times the largest |f| seen.
    """

    value: float
    value_exact: Fraction
    stderr: float
    exact: bool
    n_used: int
    censored: int
    bias_bound: float
    warning: bool


def induce_harmonic(
    f_H,
    x: Element,
    H: MarkedSubgroup,
    cfg: WalkConfig,
) -> InducedValue:
    """Estimate E_x[f_H(X_tau)] for a scalar function on the H-model group.

    ``f_H`` must expose ``evaluate(model_element) -> (Fraction,)``; this is
    the harmonic induction of f_H from H to the parent group evaluated at x.
    """
    G = H.parent
    G.check_element(x)
    if len(f_H.evaluate(H.model.identity())) != 1:
        raise ValueError("harmonic induction is implemented for scalar values only")
    if H.label(x) == 0:
        v = f_H.evaluate(H.to_model(x))[0]
        return InducedValue(float(v), v, 0.0, True, 0, 0, 0.0, False)
    tables = _step_tables(cfg.measure)
    total = Fraction(0)
    total_sq = Fraction(0)
    max_abs = Fraction(0)
    used = 0
    censored = 0
    for i in range(cfg.n_samples):
        rng = measures.rng_stream(cfg.seed, i)
        tau, land = _run_hit(G, H.label, x, tables, cfg.max_steps, rng, 0)
        if tau is None:
            censored += 1
            continue
        v = f_H.evaluate(H.to_model(land))[0]
        total += v
        total_sq += v * v
        max_abs = max(max_abs, abs(v))
        used += 1
    if used == 0:
        raise CensoringError("all induction runs censored")
    _enforce_censoring(censored, cfg.n_samples)
    mean = total / used
    if used > 1:
        var = (total_sq - total * total / used) / (used - 1)
        stderr = math.sqrt(max(float(var), 0.0) / used)
    else:
        stderr = 0.0
    frac = censored / cfg.n_samples
    return InducedValue(
        value=float(mean),
        value_exact=mean,
        stderr=stderr,
        exact=False,
        n_used=used,
        censored=censored,
        bias_bound=frac * float(max_abs),
        warning=frac > CENSOR_WARN_LIMIT,
    )


@dataclass(frozen=True)
class InductionConstants:
    """The quantitative induction constants for a finite-index pair.

    C_star = A * ((4D + 1) + 2 * m1 * T) bounds the Lipschitz seminorm
    amplification of harmonic induction; A is certified on a ball and
    reported as the max length ratio seen there.
    """

    A: Fraction
    D: int
    m1: Fraction
    C_HG: int
    T_hat: float
    T_stderr: float
    C_star: float
    cert_radius: int
    tau_estimate: Optional[TauEstimate] = None


def induction_constants(
    H: MarkedSubgroup,
    S_G: GeneratingSet,
    S_H: GeneratingSet,
    cfg: WalkConfig,
    cert_radius: int = 6,
    length_cap: int = 64,
) -> InductionConstants:
    """Assemble the Lipschitz control constants for induction along H.

    A is the max of |h|_{S_H} / |h|_{S_G} over nonidentity ball members of
    the parent lying in H (certified up to cert_radius); D is the largest
    transversal length; C_HG the largest S_G-length of an S_H generator.
    """
    G = H.parent
    mu = cfg.measure

    c_hg = 0
    for s in S_H.elements:
        ln = groups.word_length(G, H.from_model(s), S_G, cap=length_cap)
        if ln is None:
            raise CertificationError(
                f"S_H generator {s!r} not reachable in S_G within cap {length_cap}"
            )
        c_hg = max(c_hg, ln)

    d_const = 0
    for t in H.transversal:
        ln = groups.word_length(G, t, S_G, cap=length_cap)
        if ln is None:
            raise CertificationError("transversal element outside word-length cap")
        d_const = max(d_const, ln)

    m1 = Fraction(0)
    for g, w in mu.support:
        ln = groups.word_length(G, g, S_G, cap=length_cap)
        if ln is None:
            raise CertificationError("support element outside word-length cap")
        m1 += w * ln

    ball = groups.enumerate_ball(G, S_G, cert_radius)
    a_const = Fraction(0)
    for g in ball:
        if g == G.identity() or H.label(g) != 0:
            continue
        lh = groups.word_length(H.model, H.to_model(g), S_H, cap=length_cap)
        if lh is None:
            raise CertificationError(
                f"H member {g!r} not reachable over S_H within cap {length_cap}"
            )
        a_const = max(a_const, Fraction(lh, ball.length(g)))
    if a_const == 0:
        a_const = Fraction(1)

    t_est = estimate_T(H, cfg)
    c_star = float(a_const) * ((4 * d_const + 1) + 2 * float(m1) * t_est.T_hat)
    return InductionConstants(
        A=a_const,
        D=d_const,
        m1=m1,
        C_HG=c_hg,
        T_hat=t_est.T_hat,
        T_stderr=t_est.stderr,
        C_star=c_star,
        cert_radius=cert_radius,
        tau_estimate=t_est,
    )


def exact_first_return(
    mu: FiniteMeasure,
    H: MarkedSubgroup,
    horizon: int,
    state_cap: int = 100_000,
):
    """Exact finite-horizon first-return law by forward evolution.

    Returns (distribution over model elements, unabsorbed tail mass), all in
    exact rationals.  Serves as the independent oracle for hitting_measure
    at small horizons.
    """
    G = H.parent
    alive = {G.identity(): Fraction(1)}
    absorbed: dict[Element, Fraction] = {}
    for _ in range(horizon):
        nxt: dict[Element, Fraction] = {}
        for x, p in alive.items():
            for g, w in mu.support:
                y = groups.mul(G, x, g)
                q = p * w
                if H.label(y) == 0:
                    m = H.to_model(y)
                    absorbed[m] = absorbed.get(m, Fraction(0)) + q
                else:
                    nxt[y] = nxt.get(y, Fraction(0)) + q
                    if len(nxt) > state_cap:
                        raise ResourceCapError(
                            f"first-return evolution exceeded {state_cap} states"
                        )
        alive = nxt
        if not alive:
            break
    tail = sum(alive.values(), Fraction(0))
    return absorbed, tail
