"""One test per acceptance criterion; each prints a PASS/FAIL line."""
import functools
import math
import time

import numpy as np

from passivewf import geometry as geo
from passivewf.cli import dumps, execute
from passivewf.microlocal import REGULAR, SINGULAR, angle_between
from passivewf.scenario import bundled, build_model, resolve
from passivewf.states import SingleModeState, fock_density, fock_operators, quasifree_npoint

ACS_RUNTIME_MAX = 600.0
ANGLE_FACTOR = 2.0
SLOPE_LOW, SLOPE_HIGH = 2.0, 0.5
RATIO_LOW, RATIO_HIGH = 1.5, 2.5
GROUND_REL_MAX = 1e-8
KMS_REL_MAX = 1e-6
KILLING_MAX = 0.1
DRIFT_MAX = 1e-9
WAVE_RESIDUAL_MAX = 1e-3
WAVE_ORDER_MIN = 1.8
WAVE_H = [4e-3, 2e-3, 1e-3]
WAVE_EPS = 1e-2
FOCK_DIM = 16
FOCK_TOL = 1e-10
MIN_PAIRS = 3


@functools.lru_cache(maxsize=None)
def run(name):
    t0 = time.perf_counter()
    report, tables = execute(resolve(bundled()[name]))
    return report, tables, time.perf_counter() - t0


def _nearest(directions, v):
    d = np.asarray(directions, dtype=float)
    v = np.asarray(v, dtype=float) / np.linalg.norm(v)
    return int(np.argmax(d @ v / np.linalg.norm(d, axis=1)))


# ------------------------------------------------------------------- 1

def test_criterion_1_acs_containment(criterion):
    names = ["acs-vacuum", "acs-kms-beta0.5", "acs-kms-beta1.0", "acs-kms-beta2.0"]
    half_line = np.array([-1.0, 1.0]) / math.sqrt(2)
    outside, seconds, vacuum_hit = {}, 0.0, False
    for name in names:
        report, _, dt = run(name)
        seconds += dt
        decay = report["results"]["decay"]
        dirs = np.asarray(decay["directions"])
        assert len(dirs) == 64 and decay["lambdas"][0] == 0.25 and decay["lambdas"][-1] == 1 / 256
        tol = ANGLE_FACTOR * 2 * math.pi / len(dirs)
        outside[name] = [i for i, v in enumerate(decay["verdicts"])
                         if v == SINGULAR and angle_between(dirs[i], half_line) > tol + 1e-12]
        if name == "acs-vacuum":
            vacuum_hit = decay["verdicts"][_nearest(dirs, half_line)] == SINGULAR
    ok = not any(outside.values()) and vacuum_hit and seconds <= ACS_RUNTIME_MAX
    criterion(1, ok, f"outside={sum(map(len, outside.values()))} vacuum(-1,1)={vacuum_hit} "
                     f"runtime={seconds:.1f}s")
    assert ok, outside


# ------------------------------------------------------------------- 2

def test_criterion_2_acs_symmetry(criterion):
    decay = run("acs-matrix-trace")[0]["results"]["decay"]
    dirs, verdicts = np.asarray(decay["directions"]), decay["verdicts"]
    asym = [i for i, v in enumerate(verdicts) if v == SINGULAR and verdicts[_nearest(dirs, -dirs[i])] == REGULAR]
    vac = run("acs-vacuum")[0]["results"]["decay"]
    vd = np.asarray(vac["directions"])
    plus = vac["verdicts"][_nearest(vd, (1.0, -1.0))]
    minus = vac["verdicts"][_nearest(vd, (-1.0, 1.0))]
    ok = not asym and plus == REGULAR and minus == SINGULAR
    criterion(2, ok, f"trace asymmetric={len(asym)} vacuum (1,-1)={plus} (-1,1)={minus}")
    assert ok


# ------------------------------------------------------------------- 3

def test_criterion_3_exponential_suppression(criterion):
    res = run("suppression-single-mode")[0]["results"]
    slopes = {p["beta"]: p["slope"] for p in res["probes"]}
    rates = {p["beta"]: p["rate"] for p in res["probes"]}
    good_slopes = all(-SLOPE_LOW * b <= s <= -SLOPE_HIGH * b for b, s in slopes.items())
    ratios = [rates[2 * b] / rates[b] for b in (0.5, 1.0)]
    good_ratios = all(RATIO_LOW <= r <= RATIO_HIGH for r in ratios)
    ok = sorted(slopes) == [0.5, 1.0, 2.0] and good_slopes and good_ratios
    text = " ".join(f"b={b}:{s:.3f}" for b, s in sorted(slopes.items()))
    criterion(3, ok, f"slopes {text} ratios {ratios[0]:.3f},{ratios[1]:.3f}")
    assert ok


# ------------------------------------------------------------------- 4

def _rows(name):
    report = run(name)[0]
    return report["verdict"], report["results"]["rows"]


def test_criterion_4_certification(criterion):
    outcome = {}
    for name, rel_max in (("ground-single-mode", GROUND_REL_MAX), ("ground-field-vacuum", GROUND_REL_MAX),
                          ("kms-single-mode", KMS_REL_MAX), ("kms-field", KMS_REL_MAX)):
        verdict, rows = _rows(name)
        worst = max(r["relative"] for r in rows)
        outcome[name] = verdict == "PASS" and worst <= rel_max
    for name in ("kms-single-mode-perturbed", "kms-field-perturbed"):
        doc = bundled()[name]
        assert doc["state"]["occupation_scale"] == 1.1
        outcome[name] = _rows(name)[0] == "FAIL"
    outcome["trace-matrix"] = _rows("trace-matrix")[0] == "PASS"
    verdict, rows = _rows("trace-single-mode")
    assert bundled()["trace-single-mode"]["state"]["kind"] == "SingleModeGround"
    outcome["trace-single-mode"] = verdict == "FAIL"
    ok = all(outcome.values())
    criterion(4, ok, " ".join(f"{k}={'ok' if v else 'bad'}" for k, v in outcome.items()))
    assert ok, outcome


# ------------------------------------------------------------------- 5

def _check_theorem51(name):
    report = run(name)[0]
    doc = resolve(bundled()[name])
    model = build_model(doc["spacetime"])
    res = report["results"]
    tol = res["angle_tol"]
    classes = [p["class"] for p in res["pairs"]]
    problems = []
    for p in res["pairs"]:
        dirs = np.asarray(p["decay"]["directions"])
        verdicts = p["decay"]["verdicts"]
        cone = geo.r_cone_directions(model, p["q"], p["q2"])
        for i, v in enumerate(verdicts):
            if v != SINGULAR:
                continue
            if not cone or min(angle_between(dirs[i], c) for c in cone) > tol + 1e-12:
                problems.append((p["label"], i, "outside R"))
            if abs(dirs[i][0] + dirs[i][2]) > KILLING_MAX:
                problems.append((p["label"], i, "killing"))
        if p["class"] == "spacelike" and any(v != REGULAR for v in verdicts):
            problems.append((p["label"], "spacelike not all Regular"))
    shape = (classes.count("null") >= MIN_PAIRS and classes.count("spacelike") >= MIN_PAIRS
             and "diagonal" in classes)
    detected = all(p["counts"][SINGULAR] > 0 for p in res["pairs"] if p["class"] in ("null", "diagonal"))
    return report["verdict"] == "PASS" and shape and detected and not problems, classes, problems


def test_criterion_5_theorem51(criterion):
    mink = _check_theorem51("theorem51-minkowski")
    cyl = _check_theorem51("theorem51-cylinder")
    assert resolve(bundled()["theorem51-cylinder"])["spacetime"]["circumference"] == 2 * math.pi
    neg = run("theorem51-negative-control")[0]
    kinds = {c["kind"] for c in neg["results"]["counterexamples"]}
    neg_fails = neg["verdict"] == "FAIL" and "containment" in kinds
    ok = mink[0] and cyl[0] and neg_fails
    criterion(5, ok, f"minkowski={'ok' if mink[0] else mink[2][:3]} cylinder={'ok' if cyl[0] else cyl[2][:3]} "
                     f"negative-control={'FAIL' if neg_fails else 'not flagged'}")
    assert ok


# ------------------------------------------------------------------- 6

def test_criterion_6_propagation(criterion):
    rows = []
    for name in ("theorem51-minkowski", "theorem51-cylinder"):
        for p in run(name)[0]["results"]["pairs"]:
            rows += p["propagation"]
    shifts = {r["time_shift"] for r in rows}
    singular = all(r["verdict"] == SINGULAR for r in rows)
    drift = max(r["nullity_drift"] for r in rows)
    ok = bool(rows) and shifts == {1.0, 2.0} and singular and drift <= DRIFT_MAX
    criterion(6, ok, f"rows={len(rows)} all Singular={singular} max drift/length={drift:.2e}")
    assert ok


# ------------------------------------------------------------------- 7

def test_criterion_7_wave_residual(criterion):
    res = run("wave-residual-vacuum")[0]["results"]
    assert res["h"] == WAVE_H and res["eps"] == WAVE_EPS
    finest = res["residuals"][res["h"].index(min(WAVE_H))]
    order = float(np.polyfit(np.log(res["h"]), np.log(res["residuals"]), 1)[0])
    ok = finest <= WAVE_RESIDUAL_MAX and order >= WAVE_ORDER_MIN
    criterion(7, ok, f"residual(h=1e-3)={finest:.2e} order={order:.3f}")
    assert ok


# ------------------------------------------------------------------- 8

def _matrix_word(rho, mats, word):
    prod = np.eye(rho.shape[0], dtype=complex)
    for w in word:
        prod = prod @ mats[w]
    return np.trace(rho @ prod)


def test_criterion_8_quasifree(criterion):
    st = SingleModeState(1.0)
    a, _ = fock_operators(FOCK_DIM)
    mats = {"a": a, "adag": a.T}
    rho = fock_density(st, FOCK_DIM)
    tp = lambda x, y: st.corr(x, y, 0.0)  # noqa: E731
    words = [("a", "adag", "a", "adag"), ("a", "a", "adag", "adag"), ("a", "adag", "adag", "a"),
             ("a", "adag", "a", "adag", "a", "adag"), ("a", "a", "a", "adag", "adag", "adag"),
             ("a", "a", "adag", "a", "adag", "adag")]
    boson_err = max(abs(quasifree_npoint(tp, "bosonic", w) - _matrix_word(rho, mats, w)) for w in words)

    c = np.array([[0.0, 1.0], [0.0, 0.0]])
    c1, c2 = np.kron(c, np.eye(2)), np.kron(np.diag([1.0, -1.0]), c)
    fm = {"c1": c1, "c1d": c1.T, "c2": c2, "c2d": c2.T}
    H = 0.8 * c1.T @ c1 + 1.7 * c2.T @ c2
    frho = np.diag(np.exp(-np.diag(H)))
    frho /= np.trace(frho)
    ftp = lambda x, y: np.trace(frho @ fm[x] @ fm[y])  # noqa: E731
    fwords = [("c1d", "c2d", "c2", "c1"), ("c1d", "c2d", "c1", "c2"), ("c1", "c2", "c2d", "c1d"),
              ("c1", "c2", "c1d", "c2d"), ("c1", "c1d", "c2", "c2d"), ("c2", "c1", "c1d", "c2d")]
    signs_ok = True
    for w in fwords:
        ref = _matrix_word(frho, fm, w).real
        got = quasifree_npoint(ftp, "fermionic", w).real
        signs_ok &= bool(np.sign(got) == np.sign(ref)) and abs(got - ref) <= FOCK_TOL
    ok = boson_err <= FOCK_TOL and signs_ok
    criterion(8, ok, f"bosonic max err={boson_err:.1e} (dim {FOCK_DIM}) fermionic signs={'match' if signs_ok else 'differ'}")
    assert ok


# ------------------------------------------------------------------- 9

def test_criterion_9_determinism(criterion):
    differ = []
    for name in sorted(bundled()):
        report, tables, _ = run(name)
        again, again_tables = execute(resolve(bundled()[name]))
        if dumps(report) != dumps(again) or tables != again_tables:
            differ.append(name)
    ok = not differ
    criterion(9, ok, f"{len(bundled())} scenarios re-run, differing={differ or 'none'}")
    assert ok
