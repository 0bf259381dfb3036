"""Command-line entry point: config ingestion, runs, and report emission.

Every run writes a CSV result table (fixed column order), a JSON manifest
carrying the config echo and a sha256 digest of the CSV bytes, and a PNG
figure rendered from the same rows.  Identical (config, seed) pairs produce
byte-identical CSVs.

Exit codes: 0 success, 2 schema violation, 3 resource cap, 4 censoring over
threshold, 5 statistical check failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

from . import figures, groups, harmonic, straightening, walks
from .errors import CensoringError, ResourceCapError, SchemaError, StatisticalCheckError
from .harmonic import AffineHarmonic
from .measures import FiniteMeasure
from .walks import WalkConfig

__version__ = "0.1.0"

STOCHASTIC_OPS = {"hitting-measure", "induce", "dimension", "constants", "check-all"}

OPERATIONS = (
    "verify",
    "lipnorm",
    "dimension",
    "liouville",
    "hitting-measure",
    "induce",
    "constants",
    "defect",
    "homogenize",
    "linearize",
    "straighten",
    "check-all",
)


# ---------------------------------------------------------------------------
# config parsing


def _require(cfg: dict, key: str, pointer: str):
    if key not in cfg:
        raise SchemaError(f"missing required key {key!r}", pointer)
    return cfg[key]


def _fraction(value, pointer: str) -> Fraction:
    try:
        if isinstance(value, bool):
            raise TypeError
        if isinstance(value, (int, str)):
            return Fraction(value)
        if isinstance(value, list) and len(value) == 2:
            return Fraction(int(value[0]), int(value[1]))
    except (TypeError, ValueError, ZeroDivisionError):
        pass
    raise SchemaError(f"cannot parse exact rational from {value!r}", pointer)


def group_from_spec(spec, pointer="group") -> groups.GroupDescriptor:
    if not isinstance(spec, dict):
        raise SchemaError("group spec must be an object", pointer)
    kind = _require(spec, "kind", pointer)
    if kind == "free_abelian":
        d = _require(spec, "d", pointer)
        if not isinstance(d, int) or d < 1:
            raise SchemaError("free_abelian needs a positive integer d", pointer)
        return groups.free_abelian(d)
    if kind == "heisenberg3":
        return groups.heisenberg3()
    if kind == "dihedral_infinite":
        return groups.dihedral_infinite()
    if kind == "direct_product":
        factors = _require(spec, "factors", pointer)
        return groups.direct_product(
            *(group_from_spec(f, f"{pointer}.factors[{i}]") for i, f in enumerate(factors))
        )
    raise SchemaError(f"unknown group kind {kind!r}", pointer)


def element_from_spec(G: groups.GroupDescriptor, spec, pointer: str):
    if G.kind == groups.DIRECT_PRODUCT:
        if not isinstance(spec, list) or len(spec) != len(G.factors):
            raise SchemaError("product element needs one entry per factor", pointer)
        return tuple(
            element_from_spec(f, s, f"{pointer}[{i}]")
            for i, (f, s) in enumerate(zip(G.factors, spec))
        )
    if not isinstance(spec, list) or not all(isinstance(c, int) for c in spec):
        raise SchemaError(f"element must be a list of integers, got {spec!r}", pointer)
    g = tuple(spec)
    if not G.contains(g):
        raise SchemaError(f"{g!r} is not an element of {G.describe()}", pointer)
    return g


def measure_from_spec(G, spec, pointer="measure") -> FiniteMeasure:
    if not isinstance(spec, list) or not spec:
        raise SchemaError("measure spec must be a nonempty list of [element, num, den]", pointer)
    pairs = []
    total = Fraction(0)
    for i, entry in enumerate(spec):
        ptr = f"{pointer}[{i}]"
        if not isinstance(entry, list) or len(entry) != 3:
            raise SchemaError("measure entry must be [element, numerator, denominator]", ptr)
        g = element_from_spec(G, entry[0], ptr)
        w = _fraction([entry[1], entry[2]], ptr)
        if w <= 0:
            raise SchemaError(f"weight must be positive, got {w}", ptr)
        total += w
        pairs.append((g, w))
    if total != 1:
        raise SchemaError(f"weights must sum to exactly 1, got {total}", pointer)
    return FiniteMeasure.from_pairs(G, pairs)


def subgroup_from_spec(G, spec, pointer="subgroup") -> groups.MarkedSubgroup:
    if not isinstance(spec, dict):
        raise SchemaError("subgroup spec must be an object", pointer)
    if "parent" in spec:
        parent = group_from_spec(spec["parent"], f"{pointer}.parent")
        if parent != G:
            raise SchemaError("subgroup parent does not match the config group", pointer)
    quotient = _require(spec, "quotient", pointer)
    if quotient == "full":
        return groups.subgroup_full(G)
    if quotient == "mod_m":
        if G.kind != groups.FREE_ABELIAN or G.d != 1:
            raise SchemaError("mod_m subgroups live in free_abelian(1)", pointer)
        m = _require(spec, "m", pointer)
        if not isinstance(m, int) or m < 1:
            raise SchemaError("m must be a positive integer", pointer)
        return groups.subgroup_mZ(m)
    if quotient == "mod2_sum":
        if G.kind != groups.FREE_ABELIAN or G.d != 2:
            raise SchemaError("mod2_sum subgroup lives in free_abelian(2)", pointer)
        return groups.subgroup_even_sum()
    if quotient == "rotation":
        if G.kind != groups.DIHEDRAL_INFINITE:
            raise SchemaError("rotation subgroup lives in dihedral_infinite", pointer)
        return groups.subgroup_rotation()
    raise SchemaError(f"unknown quotient {quotient!r}", pointer)


def function_from_spec(G, spec, pointer="function") -> AffineHarmonic:
    if not isinstance(spec, dict):
        raise SchemaError("function spec must be an object with c and phi", pointer)
    c_spec = spec.get("c", 0)
    phi_spec = _require(spec, "phi", pointer)
    if not isinstance(c_spec, list):
        c_spec = [c_spec]
    if phi_spec and not isinstance(phi_spec[0], list):
        phi_spec = [phi_spec]
    c = tuple(_fraction(v, f"{pointer}.c") for v in c_spec)
    phi = tuple(
        tuple(_fraction(v, f"{pointer}.phi[{i}]") for v in row)
        for i, row in enumerate(phi_spec)
    )
    try:
        return AffineHarmonic(G, c, phi)
    except ValueError as exc:
        raise SchemaError(str(exc), pointer) from None


_STAGE_KEYS = {"linear", "translate", "shear", "swap"}


def pipeline_from_spec(spec, pointer="pipeline") -> straightening.QiMapExpr:
    if not isinstance(spec, dict):
        raise SchemaError("pipeline spec must be an object", pointer)
    source = group_from_spec(_require(spec, "source", pointer), f"{pointer}.source")
    target = group_from_spec(spec.get("target", spec["source"]), f"{pointer}.target")
    stages = []
    for i, stage in enumerate(spec.get("pipeline", [])):
        ptr = f"{pointer}.pipeline[{i}]"
        if not isinstance(stage, dict) or len(stage) != 1:
            raise SchemaError("each stage must be a single-key object", ptr)
        key = next(iter(stage))
        body = stage[key]
        if key == "linear":
            matrix = _require(body, "matrix", ptr)
            stages.append(straightening.Linear(tuple(tuple(int(v) for v in r) for r in matrix)))
        elif key == "translate":
            stages.append(straightening.Translate(tuple(int(v) for v in _require(body, "by", ptr))))
        elif key == "shear":
            stages.append(
                straightening.Shear(
                    axis=int(_require(body, "axis", ptr)),
                    of=int(body.get("of", 0)),
                    kind=_require(body, "kind", ptr),
                )
            )
        elif key == "swap":
            stages.append(straightening.Swap(tuple(int(v) for v in _require(body, "perm", ptr))))
        else:
            raise SchemaError(f"unknown stage {key!r}; expected one of {sorted(_STAGE_KEYS)}", ptr)
    try:
        return straightening.qi_map(source, target, stages)
    except ValueError as exc:
        raise SchemaError(str(exc), pointer) from None


QUASIMORPHISMS = {
    "mod2_rounding": lambda v: v[0] + (v[0] % 2),
    "sqrt_floor": lambda v: straightening.SHEAR_KINDS["sqrt_floor"](v[0]),
    "coordinate": lambda v: v[0],
}


# ---------------------------------------------------------------------------
# report plumbing


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return "(" + " ".join(_fmt(v) for v in value) + ")"
    return str(value)


def _write_csv(path: Path, fieldnames, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k, "")) for k in fieldnames})
    data = buf.getvalue().encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _exact_row(**kw):
    kw.setdefault("value_kind", "exact")
    kw.setdefault("stderr", "")
    return kw


def _estimate_row(stderr, **kw):
    kw["value_kind"] = "estimate"
    kw["stderr"] = stderr
    return kw


# ---------------------------------------------------------------------------
# operation runners; each returns (fieldnames, rows, extra_manifest, figure_fn)


def _run_verify(config, seed, params):
    G = group_from_spec(_require(config, "group", "config"))
    mu = measure_from_spec(G, _require(config, "measure", "config"))
    f = function_from_spec(G, _require(config, "function", "config"))
    radius = params.get("radius", 4)
    max_points = params.get("max_points", 100)
    ball = groups.enumerate_ball(G, groups.standard_generators(G), radius)
    points = list(ball)[:max_points]
    rows = []
    worst = Fraction(0)
    for x in points:
        res = harmonic.residual_at(f, mu, x)
        sup = max((abs(v) for v in res), default=Fraction(0))
        worst = max(worst, sup)
        rows.append(_exact_row(point=x, residual=sup))
    extra = {"max_residual": str(worst), "n_points": len(points)}

    def fig(path):
        return figures.save_curve(
            path, range(len(rows)), [float(r["residual"]) for r in rows],
            "harmonicity residual per point", "point index", "|residual|",
        )

    return ["point", "residual", "value_kind", "stderr"], rows, extra, fig


def _run_lipnorm(config, seed, params):
    G = group_from_spec(_require(config, "group", "config"))
    f = function_from_spec(G, _require(config, "function", "config"))
    radius = params.get("radius", 6)
    S = (
        groups.king_generators(G)
        if params.get("generators") == "king"
        else groups.standard_generators(G)
    )
    ball = groups.enumerate_ball(G, S, radius)
    rows = []
    for r in range(1, radius + 1):
        rep = harmonic.lipschitz_seminorm(f, S, r, ball=ball)
        rows.append(_exact_row(radius=r, exact=rep.exact_sq, empirical=rep.empirical_sq,
                               exact_norm=rep.exact, empirical_norm=rep.empirical))

    def fig(path):
        return figures.save_curve(
            path, [r["radius"] for r in rows], [r["empirical_norm"] for r in rows],
            "Lipschitz seminorm: ball-empirical vs exact", "radius", "seminorm",
        )

    return (
        ["radius", "exact", "empirical", "exact_norm", "empirical_norm", "value_kind", "stderr"],
        rows, {}, fig,
    )


def _run_dimension(config, seed, params, check=False):
    G = group_from_spec(_require(config, "group", "config"))
    mu = measure_from_spec(G, _require(config, "measure", "config"))
    if "subgroup" in config:
        core = subgroup_from_spec(G, config["subgroup"])
    else:
        core = groups.nilpotent_core(G)
    cfg = None
    if core.index > 1:
        cfg = WalkConfig(
            measure=mu,
            seed=seed,
            n_samples=params.get("samples", 10**5),
            max_steps=params.get("max_steps", 10**4),
        )
    rep = harmonic.dim_hf1(G, mu, core, cfg)
    rows = [
        _exact_row(field="R", value=rep.R),
        _exact_row(field="delta", value="inconclusive" if rep.delta is None else rep.delta),
        _exact_row(field="dim_low", value=rep.dim_low),
        _exact_row(field="dim_high", value=rep.dim_high),
    ]
    for i, (v, e) in enumerate(zip(rep.drift_values, rep.drift_stderr)):
        if rep.method == "exact":
            rows.append(_exact_row(field=f"drift[{i}]", value=v))
        else:
            rows.append(_estimate_row(e, field=f"drift[{i}]", value=v))
    extra = {
        "method": rep.method,
        "censoring": {"censored": rep.censored, "total": rep.n_samples},
        "dim": rep.dim if isinstance(rep.dim, int) else list(rep.dim),
    }
    if check and rep.delta is None:
        extra["check_failures"] = ["drift test inconclusive (between 3 and 5 sigma)"]

    def fig(path):
        drift = list(rep.drift_values) or [0.0]
        errs = [3 * e for e in rep.drift_stderr] or [0.0]
        return figures.save_bars(
            path, [f"coord {i}" for i in range(len(drift))], drift,
            f"core drift estimate (dim HF1 = {extra['dim']})", "drift", yerr=errs,
        )

    return ["field", "value", "value_kind", "stderr"], rows, extra, fig


def _run_liouville(config, seed, params):
    G = group_from_spec(_require(config, "group", "config"))
    f = function_from_spec(G, _require(config, "function", "config"))
    n_max = params.get("n_max", 10)
    S = groups.standard_generators(G)
    if "elements" in params:
        elems = [
            element_from_spec(G, e, f"params.elements[{i}]")
            for i, e in enumerate(params["elements"])
        ]
        names = [str(e) for e in elems]
    else:
        elems, names = list(S.elements), list(S.names)
    rows = []
    series = {}
    for g, name in zip(elems, names):
        seq = harmonic.liouville_growth(f, g, n_max)
        series[name] = seq
        for n, v in enumerate(seq, start=1):
            rows.append(_exact_row(element=name, n=n, value=v))

    def fig(path):
        plt_rows = [(name, [float(v) for v in seq]) for name, seq in series.items()]
        best = max(plt_rows, key=lambda kv: kv[1][-1])
        return figures.save_curve(
            path, range(1, n_max + 1), best[1],
            f"growth along {best[0]} (steepest direction)", "n", "|f(g^n) - f(e)|",
        )

    return ["element", "n", "value", "value_kind", "stderr"], rows, {}, fig


def _run_hitting_measure(config, seed, params, check=False):
    G = group_from_spec(_require(config, "group", "config"))
    mu = measure_from_spec(G, _require(config, "measure", "config"))
    H = subgroup_from_spec(G, _require(config, "subgroup", "config"))
    cfg = WalkConfig(
        measure=mu,
        seed=seed,
        n_samples=params.get("samples", 10**5),
        max_steps=params.get("max_steps", 10**4),
    )
    em = walks.hitting_measure(H, cfg)
    rows = []
    for y in sorted(em.counts):
        c = em.counts[y]
        freq = c / em.total
        stderr = (freq * (1 - freq) / em.total) ** 0.5
        rows.append(_estimate_row(stderr, element=y, count=c, frequency=freq))
    extra = {
        "censoring": {"censored": em.censored, "total": em.total},
        "rng_streams": cfg.n_samples,
    }
    if check:
        failures = []
        oracle, tail = walks.exact_first_return(
            mu, H, horizon=params.get("check_horizon", 16)
        )
        if float(tail) < 1e-6:
            atoms = set(em.counts) | set(oracle)
            for atom in atoms:
                expected = float(oracle.get(atom, 0))
                got = em.frequency(atom)
                sigma = max((expected * (1 - expected) / em.total) ** 0.5, 1e-12)
                if abs(got - expected) > 3 * sigma:
                    failures.append(
                        f"atom {atom}: {got:.5f} vs exact {expected:.5f} (3 sigma)"
                    )
        if failures:
            extra["check_failures"] = failures

    def fig(path):
        return figures.save_bars(
            path, [str(r["element"]) for r in rows], [r["frequency"] for r in rows],
            "empirical hitting measure", "frequency",
            yerr=[3 * r["stderr"] for r in rows],
        )

    return ["element", "count", "frequency", "value_kind", "stderr"], rows, extra, fig


def _run_induce(config, seed, params):
    G = group_from_spec(_require(config, "group", "config"))
    mu = measure_from_spec(G, _require(config, "measure", "config"))
    H = subgroup_from_spec(G, _require(config, "subgroup", "config"))
    f_H = function_from_spec(H.model, _require(config, "function", "config"), "function")
    if "points" in params:
        points = [
            element_from_spec(G, p, f"params.points[{i}]")
            for i, p in enumerate(params["points"])
        ]
    else:
        ball = groups.enumerate_ball(G, groups.standard_generators(G), params.get("radius", 3))
        points = list(ball)
    cfg = WalkConfig(
        measure=mu,
        seed=seed,
        n_samples=params.get("samples", 10**4),
        max_steps=params.get("max_steps", 10**4),
    )
    rows = []
    censored = 0
    for x in points:
        r = walks.induce_harmonic(f_H, x, H, cfg)
        censored += r.censored
        if r.exact:
            rows.append(_exact_row(point=x, value=r.value_exact, n_used=r.n_used))
        else:
            rows.append(_estimate_row(r.stderr, point=x, value=r.value, n_used=r.n_used))
    extra = {"censoring": {"censored": censored, "total": cfg.n_samples * len(points)}}

    def fig(path):
        vals = [float(r["value"]) for r in rows]
        errs = [3 * r["stderr"] if r["stderr"] else 0.0 for r in rows]
        return figures.save_curve(
            path, range(len(rows)), vals, "induced harmonic values", "point index",
            "Ind f", yerr=errs,
        )

    return ["point", "value", "n_used", "value_kind", "stderr"], rows, extra, fig


def _run_constants(config, seed, params):
    G = group_from_spec(_require(config, "group", "config"))
    mu = measure_from_spec(G, _require(config, "measure", "config"))
    H = subgroup_from_spec(G, _require(config, "subgroup", "config"))
    cfg = WalkConfig(
        measure=mu,
        seed=seed,
        n_samples=params.get("samples", 10**4),
        max_steps=params.get("max_steps", 10**4),
    )
    consts = walks.induction_constants(
        H,
        groups.standard_generators(G),
        groups.standard_generators(H.model),
        cfg,
        cert_radius=params.get("cert_radius", 6),
    )
    rows = [
        _exact_row(constant="A", value=consts.A),
        _exact_row(constant="D", value=consts.D),
        _exact_row(constant="m1", value=consts.m1),
        _exact_row(constant="C_HG", value=consts.C_HG),
        _estimate_row(consts.T_stderr, constant="T_hat", value=consts.T_hat),
        _estimate_row(consts.T_stderr, constant="C_star", value=consts.C_star),
    ]
    extra = {
        "cert_radius": consts.cert_radius,
        "censoring": {
            "censored": consts.tau_estimate.censored,
            "total": consts.tau_estimate.total,
        },
    }

    def fig(path):
        return figures.save_bars(
            path, [r["constant"] for r in rows],
            [float(r["value"]) for r in rows],
            "induction constants", "value",
        )

    return ["constant", "value", "value_kind", "stderr"], rows, extra, fig


def _run_defect(config, seed, params):
    psi = pipeline_from_spec(_require(config, "pipeline", "config"))
    radius = params.get("radius", 25)
    rep = straightening.abelian_defect(
        psi, radius, pair_budget=params.get("pair_budget", 10**7), seed=seed
    )
    rows = [
        _exact_row(radius=r, max_defect=d, mode=rep.mode)
        for r, d in rep.growth_curve
    ]
    extra = {
        "max_defect": rep.max_defect,
        "argmax": [list(rep.argmax[0]), list(rep.argmax[1])],
        "mode": rep.mode,
        "pairs_evaluated": rep.pairs_evaluated,
    }

    def fig(path):
        return figures.save_curve(
            path, [r["radius"] for r in rows], [r["max_defect"] for r in rows],
            f"abelian defect growth ({rep.mode})", "radius", "max |defect|", step=True,
        )

    return ["radius", "max_defect", "mode", "value_kind", "stderr"], rows, extra, fig


def _run_homogenize(config, seed, params):
    G = group_from_spec(_require(config, "group", "config"))
    kind = params.get("quasimorphism", "mod2_rounding")
    if kind not in QUASIMORPHISMS:
        raise SchemaError(f"unknown quasimorphism {kind!r}", "params.quasimorphism")
    base = QUASIMORPHISMS[kind]
    qm = lambda g: base(groups.abelianize(G, g))
    x = element_from_spec(G, params.get("x", [1] * len(G.identity())), "params.x")
    hom = straightening.homogenize(
        G, qm, x,
        k_max=params.get("k_max", 40),
        defect_bound=params.get("defect_bound"),
        stop_early=params.get("stop_early", True),
    )
    rows = [
        _exact_row(k=k, a_k=v) for k, v in enumerate(hom.sequence)
    ]
    extra = {
        "value": str(hom.value),
        "k_used": hom.k_used,
        "error_bound": None if hom.error_bound is None else str(hom.error_bound),
    }

    def fig(path):
        return figures.save_curve(
            path, [r["k"] for r in rows], [float(r["a_k"]) for r in rows],
            f"homogenization of {kind} (limit {float(hom.value):g})", "k",
            "a(x^(2^k)) / 2^k",
        )

    return ["k", "a_k", "value_kind", "stderr"], rows, extra, fig


def _run_linearize(config, seed, params):
    psi = pipeline_from_spec(_require(config, "pipeline", "config"))
    lin = straightening.extract_linearization(
        psi,
        k_max=params.get("k_max", 40),
        probe_radius=params.get("probe_radius", 25),
        sweep_radius=params.get("sweep_radius", 30),
        seed=seed,
    )
    rows = []
    for i, row in enumerate(lin.L_ab):
        for j, v in enumerate(row):
            rows.append(_exact_row(field=f"L_ab[{i}][{j}]", value=v))
    for i, row in enumerate(lin.T_psi):
        for j, v in enumerate(row):
            rows.append(_exact_row(field=f"T_psi[{i}][{j}]", value=v))
    rows.append(_exact_row(field="residual_bound", value=lin.residual_bound))
    rows.append(_exact_row(field="k_used", value=lin.k_used))
    extra = {
        "defect_probe_max": lin.defect_probe.max_defect,
        "defect_probe_mode": lin.defect_probe.mode,
        "qi_note": f"quasi-isometry constants empirical on ball({lin.defect_probe.radius})",
    }

    def fig(path):
        return figures.save_matrix(path, lin.L_ab, "extracted linearization L_ab")

    return ["field", "value", "value_kind", "stderr"], rows, extra, fig


def _run_straighten(config, seed, params):
    psi = pipeline_from_spec(_require(config, "pipeline", "config"))
    radius = params.get("radius", 50)
    lin = straightening.extract_linearization(
        psi,
        k_max=params.get("k_max", 40),
        probe_radius=params.get("probe_radius", 25),
        seed=seed,
    )
    F_src = straightening.core_coordinates(psi.source)
    F_tgt = straightening.transported_coordinates(lin, psi.target)
    dev = straightening.straightening_deviation(psi, F_src, F_tgt, radius)
    rows = [_exact_row(radius=r, max_deviation=d) for r, d in dev.curve]
    extra = {
        "sup_deviation": dev.sup_dev,
        "argmax": list(dev.argmax) if dev.argmax is not None else None,
        "qi_note": f"quasi-isometry constants empirical on ball({radius})",
    }

    def fig(path):
        return figures.save_curve(
            path, [r["radius"] for r in rows], [r["max_deviation"] for r in rows],
            "straightening deviation in transported coordinates", "radius",
            "max |F_tgt(psi x) - F_src(x)|", step=True,
        )

    return ["radius", "max_deviation", "value_kind", "stderr"], rows, extra, fig


def _run_check_all(config, seed, params):
    from . import checks

    results = checks.run_all(seed, echo=lambda line: print(line))
    rows = [
        _exact_row(criterion=r.name, passed=r.passed, seconds=round(r.seconds, 2),
                   detail=r.detail)
        for r in results
    ]
    extra = {"n_passed": sum(r.passed for r in results), "n_total": len(results)}
    if not all(r.passed for r in results):
        failed = [r.name for r in results if not r.passed]
        extra["failed"] = failed

    def fig(path):
        return figures.save_check_summary(
            path, [r.name for r in results], [r.passed for r in results]
        )

    return ["criterion", "passed", "seconds", "detail", "value_kind", "stderr"], rows, extra, fig


RUNNERS = {
    "verify": _run_verify,
    "lipnorm": _run_lipnorm,
    "dimension": _run_dimension,
    "liouville": _run_liouville,
    "hitting-measure": _run_hitting_measure,
    "induce": _run_induce,
    "constants": _run_constants,
    "defect": _run_defect,
    "homogenize": _run_homogenize,
    "linearize": _run_linearize,
    "straighten": _run_straighten,
    "check-all": _run_check_all,
}


_CHECKED_RUNNERS = {"hitting-measure", "dimension"}


def run_operation(operation, config, seed=None, out_dir=None, figures=True, check=False):
    """Run one operation and emit CSV + manifest (+ figure); returns the manifest.

    ``config`` may be a dict or a path to a JSON file.  The seed argument
    overrides any seed in the config; stochastic operations require one.
    """
    render_figure = figures
    if operation not in RUNNERS:
        raise SchemaError(f"unknown operation {operation!r}", "operation")
    if not isinstance(config, dict):
        try:
            config = json.loads(Path(config).read_text())
        except FileNotFoundError:
            raise SchemaError(f"config file not found: {config}", "config") from None
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}", "config") from None
    if "operation" in config and config["operation"] != operation:
        raise SchemaError(
            f"config names operation {config['operation']!r} but {operation!r} was invoked",
            "operation",
        )
    if seed is None:
        seed = config.get("seed")
    if seed is None:
        if operation in STOCHASTIC_OPS:
            raise SchemaError("a seed is mandatory for stochastic operations", "seed")
        seed = 0
    params = config.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("params must be an object", "params")

    out = Path(out_dir) if out_dir else Path(tempfile.mkdtemp(prefix="harmonic-groups-"))
    out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    if operation in _CHECKED_RUNNERS:
        fieldnames, rows, extra, figure_fn = RUNNERS[operation](config, seed, params, check)
    else:
        fieldnames, rows, extra, figure_fn = RUNNERS[operation](config, seed, params)
    wall = time.perf_counter() - start

    csv_path = out / f"{operation}.csv"
    digest = _write_csv(csv_path, fieldnames, rows)
    figure_path = None
    if render_figure and figure_fn is not None:
        figure_path = str(figure_fn(out / f"{operation}.png"))

    manifest = {
        "operation": operation,
        "tool_version": __version__,
        "config": config,
        "seed": seed,
        "wall_time_s": round(wall, 3),
        "result_digest": f"sha256:{digest}",
        "outputs": {"csv": str(csv_path), "figure": figure_path},
    }
    manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmonic-groups",
        description=(
            "Random walks and Lipschitz harmonic functions on polynomial-growth "
            "groups: exact verification, hitting measures, and straightening "
            "diagnostics."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="operation", required=True)
    for op in OPERATIONS:
        p = sub.add_parser(op)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON run configuration (optional for check-all)")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed; mandatory for stochastic operations")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--check", action="store_true",
                       help="fail (exit 5) when statistical acceptance checks fail")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering the PNG figure")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = {} if args.config is None else args.config
    if args.config is None and args.operation != "check-all":
        print("error: --config is required for this operation", file=sys.stderr)
        return 2
    try:
        manifest = run_operation(
            args.operation,
            config,
            seed=args.seed,
            out_dir=args.out,
            figures=not args.no_figures,
            check=args.check,
        )
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except CensoringError as exc:
        print(f"censoring: {exc}", file=sys.stderr)
        return 4
    except StatisticalCheckError as exc:
        print(f"statistical check failed: {exc}", file=sys.stderr)
        return 5
    print(json.dumps(manifest, indent=2, default=str))
    if manifest.get("failed") or (args.check and manifest.get("check_failures")):
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
