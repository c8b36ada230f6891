"""Regenerate the bundled scenario files under src/passivewf/scenarios."""
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "passivewf" / "scenarios"
MINK = {"model": "Minkowski1p1"}
CYL = {"model": "CylinderRxS1", "circumference": 2 * math.pi}
VAC = {"kind": "FieldVacuum", "mass": 1.0}


def kms(beta, scale=None):
    s = {"kind": "FieldKMS", "mass": 1.0, "beta": beta}
    if scale is not None:
        s["occupation_scale"] = scale
    return s


def pair(label, cls, q, q2):
    return {"label": label, "class": cls, "q": q, "q2": q2}


MINK_PAIRS = [
    pair("null-a", "null", [0.0, 0.0], [1.0, 1.0]),
    pair("null-b", "null", [0.0, 0.0], [2.0, -2.0]),
    pair("null-c", "null", [0.5, 0.2], [2.0, 1.7]),
    pair("diagonal", "diagonal", [0.0, 0.0], [0.0, 0.0]),
    pair("space-a", "spacelike", [0.0, 0.0], [0.0, 3.0]),
    pair("space-b", "spacelike", [0.0, 0.0], [0.5, 3.0]),
    pair("space-c", "spacelike", [0.0, 0.0], [0.0, 4.0]),
    pair("time-a", "timelike", [0.0, 0.0], [3.0, 0.5]),
]
CYL_PAIRS = [
    pair("null-a", "null", [0.0, 0.0], [1.0, 1.0]),
    pair("null-b", "null", [0.0, 0.0], [2.0, -2.0]),
    pair("null-c", "null", [0.0, 0.0], [math.pi, math.pi]),
    pair("diagonal", "diagonal", [0.0, 0.0], [0.0, 0.0]),
    pair("space-a", "spacelike", [0.0, 0.0], [0.0, 2.0]),
    pair("space-b", "spacelike", [0.0, 0.0], [0.0, math.pi]),
    pair("space-c", "spacelike", [0.0, 0.0], [0.5, 2.5]),
    pair("time-a", "timelike", [0.0, 0.0], [3.0, 0.5]),
]

SCENARIOS = [
    # correlation spectra
    dict(name="acs-vacuum", task="acs-scan", spacetime=MINK, state=VAC,
         description="pair spectrum of the 1+1 vacuum on 64 directions"),
    *[dict(name=f"acs-kms-beta{b}", task="acs-scan", spacetime=MINK, state=kms(b),
           description=f"pair spectrum of the thermal field at beta={b}") for b in (0.5, 1.0, 2.0)],
    dict(name="acs-single-mode-ground", task="acs-scan", state={"kind": "SingleModeGround", "omega0": 1.0},
         params={"expect_singular": []}, description="constant ladder families: empty spectrum"),
    dict(name="acs-matrix-trace", task="acs-scan",
         state={"kind": "MatrixTrace", "hamiltonian": [[0.0, 0.0], [0.0, 1.0]]},
         description="tracial state: symmetric spectrum"),
    # certifications
    dict(name="ground-single-mode", task="ground-check", state={"kind": "SingleModeGround", "omega0": 1.0},
         description="ground condition for the oscillator ground state"),
    dict(name="ground-single-mode-kms", task="ground-check", expect="FAIL",
         state={"kind": "SingleModeKMS", "omega0": 1.0, "beta": math.log(2)},
         description="a thermal state violates the ground condition"),
    dict(name="ground-field-vacuum", task="ground-check", spacetime=MINK, state=VAC,
         params={"smearings": [{"center": [0.0, 0.0], "scale": 0.5}, {"center": [0.0, 1.0], "scale": 0.5}]},
         description="ground condition for the field vacuum"),
    dict(name="kms-single-mode", task="kms-check",
         state={"kind": "SingleModeKMS", "omega0": 1.0, "beta": math.log(2)},
         description="KMS condition for the oscillator at nbar=1"),
    dict(name="kms-single-mode-perturbed", task="kms-check", expect="FAIL",
         state={"kind": "SingleModeKMS", "omega0": 1.0, "beta": math.log(2), "occupation_scale": 1.1},
         description="occupation off by 10 percent"),
    dict(name="kms-field", task="kms-check", spacetime=MINK, state=kms(1.0),
         description="KMS condition for the thermal field at beta=1"),
    dict(name="kms-field-perturbed", task="kms-check", expect="FAIL", spacetime=MINK, state=kms(1.0, 1.1),
         description="thermal field with occupation off by 10 percent"),
    dict(name="trace-matrix", task="trace-check",
         state={"kind": "MatrixTrace", "hamiltonian": [[0.0, 0.3, 0.0, 0.0], [0.3, 1.0, 0.1, 0.0],
                                                        [0.0, 0.1, 2.5, 0.2], [0.0, 0.0, 0.2, 4.0]]},
         description="normalised trace on 4x4 matrices"),
    dict(name="trace-matrix-noninvariant", task="trace-check", expect="FAIL",
         state={"kind": "MatrixTrace", "hamiltonian": [[0.0, 0.0], [0.0, 1.0]],
                "density": [[0.5, 0.2], [0.2, 0.5]]},
         description="density that does not commute with H"),
    dict(name="trace-single-mode", task="trace-check", expect="FAIL",
         state={"kind": "SingleModeGround", "omega0": 1.0}, description="the ground state is not tracial"),
    dict(name="suppression-single-mode", task="suppression-probe",
         params={"betas": [0.5, 1.0, 2.0]}, description="exponential suppression at k2 < 0"),
    # geometry
    dict(name="geodesic-minkowski", task="geodesic", spacetime=MINK,
         params={"seed": {"q": [0.0, 0.0], "xi": [-1.0, 1.0]}, "affine_range": [0.0, 2.0],
                 "cauchy_times": [-2.0]}, description="null line through the origin"),
    dict(name="geodesic-cylinder", task="geodesic", spacetime=CYL,
         params={"seed": {"q": [0.0, 0.0], "xi": [1.0, -1.0]}, "affine_range": [0.0, 3 * math.pi],
                 "cauchy_times": [3 * math.pi]}, description="null line winding the cylinder"),
    dict(name="r-set-minkowski", task="r-set", spacetime=MINK,
         params={"pairs": [
             {"p": {"q": [0.0, 0.0], "xi": [-1.0, 1.0]}, "p2": {"q": [-1.0, -1.0], "xi": [1.0, -1.0]},
              "expect_in_R": True},
             {"p": {"q": [0.0, 0.0], "xi": [-1.0, 1.0]}, "p2": {"q": [0.0, 0.0], "xi": [1.0, -1.0]},
              "expect_in_R": True},
             {"p": {"q": [0.0, 0.0], "xi": [1.0, 1.0]}, "p2": {"q": [-1.0, -1.0], "xi": [1.0, -1.0]},
              "expect_in_R": False},
             {"p": {"q": [0.0, 0.0], "xi": [-1.0, 1.0]}, "p2": {"q": [1.0, 0.0], "xi": [1.0, -1.0]},
              "expect_in_R": False},
         ]}, description="membership in R and its asymmetry"),
    # wave equation
    dict(name="wave-residual-vacuum", task="wave-residual", spacetime=MINK, state=VAC,
         description="regularised vacuum kernel solves Klein-Gordon in both slots"),
    dict(name="wave-residual-kms", task="wave-residual", spacetime=MINK, state=kms(1.0),
         description="same for the thermal kernel"),
    dict(name="wave-residual-mass-mismatch", task="wave-residual", expect="FAIL", spacetime=MINK, state=VAC,
         params={"operator_mass": 1.5}, description="operator mass differs from the state mass"),
    # pair wavefront scans
    dict(name="wf-scan-vacuum", task="wf-scan", spacetime=MINK, state=VAC,
         params={"pairs": [pair("null-a", "null", [0.0, 0.0], [1.0, 1.0]),
                           pair("space-a", "spacelike", [0.0, 0.0], [0.0, 3.0])]},
         description="pair scan at one null and one spacelike pair"),
    dict(name="theorem51-minkowski", task="theorem51", spacetime=MINK, state=VAC, params={"pairs": MINK_PAIRS},
         description="WF containment in R for the vacuum on Minkowski 1+1"),
    dict(name="theorem51-minkowski-kms", task="theorem51", spacetime=MINK, state=kms(1.0),
         params={"pairs": MINK_PAIRS[:1] + MINK_PAIRS[3:5]},
         description="same for the thermal field at beta=1"),
    dict(name="theorem51-cylinder", task="theorem51", spacetime=CYL, state=VAC, params={"pairs": CYL_PAIRS},
         description="WF containment in R for the vacuum on the cylinder"),
    dict(name="theorem51-negative-control", task="theorem51", expect="FAIL", spacetime=MINK, state=VAC,
         params={"pairs": [MINK_PAIRS[4]], "inject": [{"pair": "space-a", "direction": [-0.5, 0.5, 0.5, -0.5]}]},
         description="synthetic singularity at a spacelike pair must be reported"),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    for sc in SCENARIOS:
        doc = {"schema_version": 1, **sc}
        doc.setdefault("expect", "PASS")
        (OUT / f"{sc['name']}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(SCENARIOS)} scenarios to {OUT}")


if __name__ == "__main__":
    main()
