"""Task runners behind ``passivewf run``.

Each runner takes a resolved scenario and returns ``(passed, results, tables)``
where ``results`` is JSON-ready and ``tables`` maps file names to CSV text.
"""
import csv
import io
import math

import numpy as np

from . import _numerics as nm
from . import geometry as geo
from . import microlocal as ml
from . import passivity as pv
from . import states as st
from .scenario import (ANGLE_TOL_FACTOR, DRIFT_TOL, KILLING_TOL, MAX_WAVE_RESIDUAL, MIN_WAVE_ORDER, RATIO_HIGH,
                       RATIO_LOW, SUPPRESSION_FACTOR, ScenarioError, build_model, build_scan_config, build_smearing,
                       build_state, random_operator)

SIGMA_X = [[0.0, 1.0], [1.0, 0.0]]


def _csv(head, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    w.writerows(rows)
    return buf.getvalue()


def _leaf(state):
    """A representative component (mixtures share one model type)."""
    comps = getattr(state, "components", None)
    return comps[0][1] if comps else state


def _state_and_model(doc):
    model = build_model(doc["spacetime"])
    if "state" not in doc:
        raise ScenarioError("this task needs a state", "/state")
    return build_state(doc["state"], model), model


def _rng(doc):
    return np.random.default_rng(doc["seed"])


# ------------------------------------------------------------------- acs

def run_acs(doc):
    state, _ = _state_and_model(doc)
    cfg = build_scan_config(doc)
    p = doc["params"]
    grid = ml.DirectionGrid.circle(int(p["n_directions"]))
    leaf = _leaf(state)
    if isinstance(leaf, st.FieldState):
        fam = ml.SmearingFamily(tuple(p["center"]), cfg.family_sigma, cfg.family_radius)
        fa = fb = fam
    elif isinstance(leaf, st.SingleModeState):
        ops = p["operators"] or ["a", "adag"]
        fa, fb = ml.ConstantFamily(ops[0]), ml.ConstantFamily(ops[1])
    else:
        ops = p["operators"] or [SIGMA_X, SIGMA_X]
        fa = ml.ConstantFamily(np.asarray(ops[0], dtype=complex))
        fb = ml.ConstantFamily(np.asarray(ops[1], dtype=complex))
    rep = ml.acs_scan(state, fa, fb, grid, cfg)
    check = p["check"]
    if check == "auto":
        check = "symmetry" if isinstance(leaf, st.MatrixTrace) else "containment"
    results = {"decay": rep.to_dict(), "counts": rep.counts(), "check": check}
    if check == "symmetry":
        asym = ml.acs_symmetry(rep)
        results["asymmetric"] = asym
        passed = not asym
    else:
        ok, bad = ml.acs_containment(rep, ANGLE_TOL_FACTOR * grid.dtheta)
        expected = []
        for v in p["expect_singular"]:
            i = grid.nearest(v)
            expected.append({"direction": rep.directions[i].tolist(), "index": i, "verdict": rep.verdicts[i]})
        results["outside_half_line"] = bad
        results["expected_singular"] = expected
        passed = ok and all(e["verdict"] == ml.SINGULAR for e in expected)
    return passed, results, {"decay.csv": rep.to_csv()}


# ------------------------------------------------------------ pair scans

def geometric_class(model, q, q2):
    a, b = model.wrap(np.asarray(q, float)), model.wrap(np.asarray(q2, float))
    if np.allclose(a, b, atol=1e-12):
        return "diagonal"
    if geo.causally_separated(model, q, q2):
        return "spacelike"
    if geo.r_cone_directions(model, q, q2):
        return "null"
    return "timelike"


def _cone_overlay(rep, cone, tol):
    out = []
    for d in rep.directions:
        out.append(bool(cone) and min(ml.angle_between(d, c) for c in cone) <= tol + 1e-12)
    return out


def _scan_pairs(doc, propagate):
    state, model = _state_and_model(doc)
    if model.dim != 2:
        raise ScenarioError("pair scans run on 1+1 models", "/spacetime/model")
    cfg = build_scan_config(doc)
    p = doc["params"]
    grid = ml.DirectionGrid.hopf(int(p["grid"]["n_angle"]), int(p["grid"]["n_chi"]))
    tol = ANGLE_TOL_FACTOR * grid.dtheta
    inject = {item["pair"]: item for item in p.get("inject", [])}
    pairs_out, tables, counterexamples = [], {}, []
    for n, pair in enumerate(p["pairs"]):
        label = pair.get("label", f"pair{n}")
        q, q2 = [float(v) for v in pair["q"]], [float(v) for v in pair["q2"]]
        gclass = geometric_class(model, q, q2)
        declared = pair.get("class", gclass)
        if declared != gclass:
            raise ScenarioError(f"pair {label} is {gclass}, declared {declared}", f"/params/pairs/{n}/class")
        rep = ml.wf_pair_scan(state, q, q2, grid, cfg, p.get("part", "full"))
        if label in inject:
            rep = ml.inject_singularity(rep, grid.nearest(inject[label]["direction"]), cfg)
        comp = ml.wf_to_R_compare(rep, model, q, q2, angle_tol=tol, killing_tol=KILLING_TOL)
        bad = [dict(c, pair=label, kind="containment") for c in comp.counterexamples]
        if gclass == "spacelike":
            for i in rep.indices(ml.INCONCLUSIVE):
                bad.append({"pair": label, "kind": "not-regular", "index": i,
                            "direction": rep.directions[i].tolist(), "magnitudes": rep.magnitudes[i].tolist()})
        prop_rows = []
        if propagate and gclass in ("null", "diagonal") and label not in inject:
            for i in rep.singular():
                for r in ml.propagate_pair(state, q, q2, rep.directions[i], propagate, grid, cfg):
                    row = dict(r.to_dict(), index=i)
                    prop_rows.append(row)
                    if r.verdict != ml.SINGULAR or r.nullity_drift > DRIFT_TOL:
                        bad.append({"pair": label, "kind": "propagation", "index": i,
                                    "direction": rep.directions[i].tolist(),
                                    "magnitudes": rep.magnitudes[i].tolist(), "transported": row})
        counterexamples += bad
        pairs_out.append({
            "label": label, "class": gclass, "q": q, "q2": q2, "counts": rep.counts(),
            "singular": rep.singular(), "containment": comp.passed, "n_counterexamples": len(bad),
            "killing_residual_max": comp.killing_residual_max,
            "constraint_residuals": [abs(float(rep.directions[i][0] + rep.directions[i][2]))
                                     for i in rep.singular()],
            "r_directions": comp.r_directions, "r_detected": comp.r_detected,
            "propagation": prop_rows, "injected": label in inject,
            "in_R_cone": _cone_overlay(rep, geo.r_cone_directions(model, q, q2), tol),
            "decay": rep.to_dict(),
        })
        tables[f"decay_{label}.csv"] = rep.to_csv()
    results = {"pairs": pairs_out, "counterexamples": counterexamples, "angle_tol": tol,
               "grid": grid.kind, "dtheta": grid.dtheta}
    tables["pairs.csv"] = pair_table(pairs_out)
    tab = nm.window_transform(cfg.window_sharpness)
    margin = tab.cutoff(ml.WINDOW_TAIL) / cfg.window_halfwidth
    results["truncation"] = {"window_cutoff": margin,
                             "kmax_at_lambda_min": float(np.max(np.abs(grid.directions))) / min(cfg.lambdas)
                             + margin, "window_tail": ml.WINDOW_TAIL}
    return not counterexamples, results, tables


PAIR_COLUMNS = ["pair", "label", "class", "q0", "q1", "q2_0", "q2_1", "n_singular", "n_inconclusive",
                "n_regular", "containment", "killing_residual_max", "r_detected", "n_counterexamples"]


def pair_table(pairs):
    rows = []
    for n, pr in enumerate(pairs):
        c = pr["counts"]
        rows.append([n, pr["label"], pr["class"]] + [repr(float(v)) for v in pr["q"] + pr["q2"]]
                    + [c[ml.SINGULAR], c[ml.INCONCLUSIVE], c[ml.REGULAR], pr["containment"],
                       repr(float(pr["killing_residual_max"])), sum(bool(v) for v in pr["r_detected"]),
                       pr["n_counterexamples"]])
    return _csv(PAIR_COLUMNS, rows)


def run_wf(doc):
    return _scan_pairs(doc, None)


def run_theorem51(doc):
    shifts = doc["params"].get("propagate", {}).get("time_shifts", [])
    return _scan_pairs(doc, [float(v) for v in shifts] or None)


# ------------------------------------------------------- certifications

def _field_pairs(state, p):
    fs = [build_smearing(s) for s in p["smearings"]]
    return [(state.kernel(f, g), state.kernel(g, f), f"f{i}f{j}")
            for i, f in enumerate(fs) for j, g in enumerate(fs)]


def _ladder_pairs(state, ops):
    return [(state.kernel(x, y), state.kernel(y, x), f"{x}.{y}") for x, y in ops]


LADDER_PAIRS = [["a", "adag"], ["adag", "a"], ["a", "a"], ["adag", "adag"]]


def _probes(p, default):
    if p["probes"] is None:
        return default
    return [pv.SpectralTestFunction(float(c), float(w)) for c, w in p["probes"]]


def _merge(reports, labels):
    rows = []
    for rep, lab in zip(reports, labels):
        rows += [dict(r, operators=lab) for r in rep.rows]
    return all(r.passed for r in reports), rows


def run_kms(doc):
    state, _ = _state_and_model(doc)
    p = doc["params"]
    leaf = _leaf(state)
    if isinstance(state, st.Mixture) or isinstance(leaf, st.MatrixTrace) or leaf.beta is None:
        raise ScenarioError("kms-check needs a single KMS state", "/state/kind")
    if isinstance(leaf, st.FieldState):
        pairs = _field_pairs(state, p)
    else:
        pairs = _ladder_pairs(state, p["operators"] or LADDER_PAIRS)
    probes = _probes(p, pv.default_kms_probes())
    reports = [pv.kms_check(a, b, state.beta, probes) for a, b, _ in pairs]
    passed, rows = _merge(reports, [lab for *_, lab in pairs])
    return passed, {"rows": rows, "tolerances": reports[0].tolerances}, {"kms.csv": _rows_csv(rows)}


def run_ground(doc):
    state, _ = _state_and_model(doc)
    p = doc["params"]
    leaf = _leaf(state)
    if isinstance(leaf, st.FieldState):
        pairs = _field_pairs(state, p)
        omega = leaf.mass
    elif isinstance(leaf, st.SingleModeState):
        pairs = _ladder_pairs(state, p["operators"] or LADDER_PAIRS)
        omega = leaf.omega0
    else:
        rng = _rng(doc)
        ops = [(random_operator(rng, state.n), random_operator(rng, state.n)) for _ in range(int(p["n_pairs"]))]
        pairs = [(state.kernel(A, B), state.kernel(B, A), f"random{i}") for i, (A, B) in enumerate(ops)]
        E = np.linalg.eigvalsh(state.H)
        gaps = np.diff(E)
        omega = float(np.min(gaps[gaps > 1e-12])) if np.any(gaps > 1e-12) else 1.0
    probes = _probes(p, pv.default_ground_probes(omega))
    reports = [pv.ground_check(a, probes) for a, _, _ in pairs]
    passed, rows = _merge(reports, [lab for *_, lab in pairs])
    return passed, {"rows": rows, "tolerances": reports[0].tolerances}, {"ground.csv": _rows_csv(rows)}


def run_trace(doc):
    state, _ = _state_and_model(doc)
    p = doc["params"]
    leaf = _leaf(state)
    if isinstance(leaf, st.FieldState):
        raise ScenarioError("trace-check runs on matrix or single-mode states", "/state/kind")
    if isinstance(leaf, st.SingleModeState):
        ops = p["operators"] or [["a", "adag"], ["adag", "a"]]
        pairs = [(state.kernel(x, y), state.kernel(y, x)) for x, y in ops]
        mat = None
    else:
        rng = _rng(doc)
        pairs = []
        for _ in range(int(p["n_pairs"])):
            A, B = random_operator(rng, state.n), random_operator(rng, state.n)
            pairs.append((state.kernel(A, B), state.kernel(B, A)))
        mat = state
    rep = pv.trace_check(pairs, tuple(p["times"]), state=mat)
    return rep.passed, {"rows": rep.rows, "tolerances": rep.tolerances}, {"trace.csv": _rows_csv(rep.rows)}


def _rows_csv(rows):
    keys = sorted({k for r in rows for k in r})
    out = []
    for r in rows:
        out.append([_cell(r.get(k, "")) for k in keys])
    return _csv(keys, out)


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


# ------------------------------------------------------------- geometry

def _covector(spec):
    return geo.CovectorPoint(tuple(float(v) for v in spec["q"]), tuple(float(v) for v in spec["xi"]))


def run_geodesic(doc):
    model = build_model(doc["spacetime"])
    p = doc["params"]
    seed = _covector(p["seed"])
    b = geo.integrate_bicharacteristic(model, seed, tuple(p["affine_range"]), float(p["step"]))
    nf = b.null_forms()
    length = float(p["affine_range"][1] - p["affine_range"][0])
    drift = float(np.max(np.abs(nf - nf[0]))) / length
    hits = []
    ok = drift <= DRIFT_TOL
    for t0 in p["cauchy_times"]:
        roots = geo.count_cauchy_roots(b.q_cover[:, 0], float(t0))
        s, hit = geo.cauchy_intersection(model, b, float(t0))
        hits.append({"t0": float(t0), "s": s, "q": list(hit.q), "xi": list(hit.xi), "roots": roots})
        ok &= roots == 1
    end = b.samples[-1][1]
    results = {"nullity_drift_per_length": drift, "class": geo.classify_null(model, seed).value,
               "end": {"s": float(b.s[-1]), "q": list(end.q), "xi": list(end.xi)}, "cauchy": hits,
               "n_samples": len(b.s)}
    return bool(ok), results, {"bicharacteristic.csv": b.to_csv()}


def run_rset(doc):
    model = build_model(doc["spacetime"])
    rows = []
    ok = True
    for n, pair in enumerate(doc["params"]["pairs"]):
        a, b = _covector(pair["p"]), _covector(pair["p2"])
        r = geo.in_R(model, a, b)
        row = {"pair": n, "in_R": r, "related": geo.related(model, a, b),
               "class_p": geo.classify_null(model, a).value, "class_p2": geo.classify_null(model, b).value,
               "in_R_swapped": geo.in_R(model, b, a), "in_R_negated": geo.in_R(model, a.negated(), b.negated())}
        asym = not r or not (row["in_R_swapped"] or row["in_R_negated"])
        row["asymmetry_holds"] = asym
        ok &= asym
        if "expect_in_R" in pair:
            row["expected"] = bool(pair["expect_in_R"])
            ok &= r == row["expected"]
        rows.append(row)
    return bool(ok), {"rows": rows}, {"r_set.csv": _rows_csv(rows)}


# ------------------------------------------------------------ wave eqn

def default_wave_points(rng, n=16):
    return rng.uniform(-1.0, 1.0, size=(n, 2, 2))


def run_wave(doc):
    state, model = _state_and_model(doc)
    if not isinstance(state, st.FieldState) or model.dim != 2:
        raise ScenarioError("wave-residual needs a 1+1 field state", "/state/kind")
    p = doc["params"]
    pts = np.asarray(p["points"], dtype=float) if p["points"] is not None else default_wave_points(_rng(doc))
    hs = [float(h) for h in p["h"]]
    res = [st.wave_residual(state, pts, h, float(p["eps"]), p["operator_mass"]) for h in hs]
    order = float(np.polyfit(np.log(hs), np.log(res), 1)[0])
    i_min = int(np.argmin(hs))
    passed = res[i_min] <= MAX_WAVE_RESIDUAL and order >= MIN_WAVE_ORDER
    rows = [[repr(h), repr(r)] for h, r in zip(hs, res)]
    results = {"h": hs, "residuals": res, "order": order, "eps": float(p["eps"]), "n_pairs": len(pts)}
    return bool(passed), results, {"wave_residual.csv": _csv(["h", "residual"], rows)}


# ---------------------------------------------------------- suppression

def run_suppression(doc):
    p = doc["params"]
    omega0 = float(p["omega0"])
    direction = tuple(float(v) for v in p["direction"])
    lambdas = tuple(1.0 / float(x) for x in p["inverse_lambdas"])
    kw = {"halfwidth": float(p["halfwidth"]), "sharpness": float(p["sharpness"])}
    out, rows = [], []
    ok = True
    for beta in p["betas"]:
        r = pv.exp_suppression_probe(st.SingleModeState(omega0, float(beta)), direction, lambdas,
                                     factor=SUPPRESSION_FACTOR, **kw)
        ok &= r.passed
        out.append(dict(r.to_dict(), beta=float(beta)))
        rows += [[repr(float(beta)), repr(x), repr(m)] for x, m in zip(r.inverse_lambdas, r.magnitudes)]
    rates = {b["beta"]: b["rate"] for b in out}
    ratios = []
    for b in sorted(rates):
        if 2 * b in rates and math.isfinite(rates[b]) and math.isfinite(rates[2 * b]):
            ratio = rates[2 * b] / rates[b]
            good = RATIO_LOW <= ratio <= RATIO_HIGH
            ok &= good
            ratios.append({"beta": b, "ratio": ratio, "pass": good})
    ground = None
    if p["include_ground"]:
        g = pv.exp_suppression_probe(st.SingleModeState(omega0), direction, lambdas, **kw)
        ok &= g.floor_pass
        ground = g.to_dict()
        rows += [["ground", repr(x), repr(m)] for x, m in zip(g.inverse_lambdas, g.magnitudes)]
    results = {"probes": out, "doubling": ratios, "ground": ground, "lambdas": list(lambdas), "probe": kw}
    return bool(ok), results, {"suppression.csv": _csv(["beta", "inverse_lambda", "magnitude"], rows)}


RUNNERS = {
    "acs-scan": run_acs,
    "wf-scan": run_wf,
    "theorem51": run_theorem51,
    "kms-check": run_kms,
    "ground-check": run_ground,
    "trace-check": run_trace,
    "geodesic": run_geodesic,
    "r-set": run_rset,
    "wave-residual": run_wave,
    "suppression-probe": run_suppression,
}
