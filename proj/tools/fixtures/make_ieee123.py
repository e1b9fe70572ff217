#!/usr/bin/env python3
"""Generate the modified IEEE 123-node islanded feeder document.

Topology and line configurations follow the published 123-node test feeder
with these modifications:

  * the substation, its regulators and the 61-610 transformer are removed
    (regulated nodes 9r/25r/160r are merged into 9/25/160, 150/150r dropped);
  * tie points 251/350/451 are dropped, the normally-open ties 54-94 and
    151-300 are kept as switchable branches;
  * extra sectionalizing switches on lines 13-18, 18-21, 23-25, 57-60,
    67-72 and 76-86;
  * droop DGs attach through coupling inductors at new nodes 2054 and 2063;
  * 81 wye ZIP loads (0.4/0.3/0.3) rescaled per phase to the study totals,
    10 of them with full-range direct load control.

Usage: make_ieee123.py [output.json]
"""
import json
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))

BASE_MVA = 1.0
BASE_KV = 2.4018
FT_PER_MILE = 5280.0

# ohm/mile, upper triangle rows for phases in order a,b,c (configs 1..12)
_C_ABC = [[(0.4576, 1.0780), (0.1560, 0.5017), (0.1535, 0.3849)],
          [None, (0.4666, 1.0482), (0.1580, 0.4236)],
          [None, None, (0.4615, 1.0651)]]


def _full(upper):
    m = [[(0.0, 0.0)] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            if upper[i][j] is not None:
                m[i][j] = upper[i][j]
                m[j][i] = upper[i][j]
    return m


def _three(d_a, d_b, d_c, ab, ac, bc):
    return _full([[d_a, ab, ac], [None, d_b, bc], [None, None, d_c]])


S_ONE = (1.3292, 1.3475)
Z0 = (0.0, 0.0)
CONFIGS = {
    1: _three((0.4576, 1.0780), (0.4666, 1.0482), (0.4615, 1.0651), (0.1560, 0.5017), (0.1535, 0.3849), (0.1580, 0.4236)),
    2: _three((0.4666, 1.0482), (0.4615, 1.0651), (0.4576, 1.0780), (0.1580, 0.4236), (0.1560, 0.5017), (0.1535, 0.3849)),
    3: _three((0.4615, 1.0651), (0.4576, 1.0780), (0.4666, 1.0482), (0.1535, 0.3849), (0.1580, 0.4236), (0.1560, 0.5017)),
    4: _three((0.4615, 1.0651), (0.4666, 1.0482), (0.4576, 1.0780), (0.1580, 0.4236), (0.1535, 0.3849), (0.1560, 0.5017)),
    5: _three((0.4666, 1.0482), (0.4576, 1.0780), (0.4615, 1.0651), (0.1560, 0.5017), (0.1580, 0.4236), (0.1535, 0.3849)),
    6: _three((0.4576, 1.0780), (0.4615, 1.0651), (0.4666, 1.0482), (0.1535, 0.3849), (0.1560, 0.5017), (0.1580, 0.4236)),
    7: _three((0.4576, 1.0780), Z0, (0.4615, 1.0651), Z0, (0.1535, 0.3849), Z0),
    8: _three((0.4576, 1.0780), (0.4615, 1.0651), Z0, (0.1535, 0.3849), Z0, Z0),
    9: _three(S_ONE, Z0, Z0, Z0, Z0, Z0),
    10: _three(Z0, S_ONE, Z0, Z0, Z0, Z0),
    11: _three(Z0, Z0, S_ONE, Z0, Z0, Z0),
    12: _three((1.5209, 0.7521), (1.5329, 0.7162), (1.5209, 0.7521), (0.5198, 0.2775), (0.4924, 0.2157), (0.5198, 0.2775)),
}
AMPACITY = {1: 530, 2: 530, 3: 530, 4: 530, 5: 530, 6: 530, 7: 530, 8: 530,
            9: 230, 10: 230, 11: 230, 12: 330}

SECTIONALIZERS = {"L13", "L19", "L24", "L58", "L67", "L77"}
TIE_SWITCHES = [("SW13_152", "13", "152", "abc"), ("SW18_135", "18", "135", "abc"),
                ("SW60_160", "60", "160", "abc"), ("SW97_197", "97", "197", "abc"),
                ("SW54_94", "54", "94", "a"), ("SW151_300", "151", "300", "abc")]
SWITCH_OHM = (0.01, 0.01)

# node, {phase: (kW, kVAr)}; delta loads at 35/65/76 are re-attached as wye
SPOT_LOADS = [
    ("1", {"a": (40, 20)}), ("2", {"b": (20, 10)}), ("4", {"c": (40, 20)}), ("5", {"c": (20, 10)}),
    ("6", {"c": (40, 20)}), ("7", {"a": (20, 10)}), ("9", {"a": (40, 20)}), ("10", {"a": (20, 10)}),
    ("11", {"a": (40, 20)}), ("12", {"b": (20, 10)}), ("16", {"c": (40, 20)}), ("17", {"c": (20, 10)}),
    ("19", {"a": (40, 20)}), ("20", {"a": (40, 20)}), ("22", {"b": (40, 20)}), ("24", {"c": (40, 20)}),
    ("28", {"a": (40, 20)}), ("29", {"a": (40, 20)}), ("30", {"c": (40, 20)}), ("31", {"c": (20, 10)}),
    ("32", {"c": (20, 10)}), ("33", {"a": (40, 20)}), ("34", {"c": (40, 20)}), ("35", {"a": (40, 20)}),
    ("37", {"a": (40, 20)}), ("38", {"b": (20, 10)}), ("39", {"b": (20, 10)}), ("41", {"c": (20, 10)}),
    ("42", {"a": (20, 10)}), ("43", {"b": (40, 20)}), ("45", {"a": (20, 10)}), ("46", {"a": (20, 10)}),
    ("47", {"a": (35, 25), "b": (35, 25), "c": (35, 25)}),
    ("48", {"a": (70, 50), "b": (70, 50), "c": (70, 50)}),
    ("49", {"a": (35, 25), "b": (70, 50), "c": (35, 20)}),
    ("50", {"c": (40, 20)}), ("51", {"a": (20, 10)}), ("52", {"a": (40, 20)}), ("53", {"a": (40, 20)}),
    ("55", {"a": (20, 10)}), ("56", {"b": (20, 10)}), ("58", {"b": (20, 10)}), ("59", {"b": (20, 10)}),
    ("60", {"a": (20, 10)}), ("62", {"c": (40, 20)}), ("63", {"a": (40, 20)}), ("64", {"b": (75, 35)}),
    ("65", {"a": (35, 25), "b": (35, 25), "c": (70, 50)}), ("66", {"c": (75, 35)}),
    ("68", {"a": (20, 10)}), ("69", {"a": (40, 20)}), ("70", {"a": (20, 10)}), ("71", {"a": (40, 20)}),
    ("73", {"c": (40, 20)}), ("74", {"c": (40, 20)}), ("75", {"c": (40, 20)}),
    ("76", {"a": (105, 80), "b": (70, 50), "c": (70, 50)}),
    ("77", {"b": (40, 20)}), ("79", {"a": (40, 20)}), ("80", {"b": (40, 20)}), ("82", {"a": (40, 20)}),
    ("83", {"c": (20, 10)}), ("84", {"c": (20, 10)}), ("85", {"c": (40, 20)}), ("86", {"b": (20, 10)}),
    ("87", {"b": (40, 20)}), ("88", {"a": (40, 20)}), ("90", {"b": (40, 20)}), ("92", {"c": (40, 20)}),
    ("94", {"a": (40, 20)}), ("95", {"b": (20, 10)}), ("96", {"b": (20, 10)}), ("98", {"a": (40, 20)}),
    ("99", {"b": (40, 20)}), ("100", {"c": (40, 20)}), ("102", {"c": (20, 10)}), ("103", {"c": (40, 20)}),
    ("104", {"c": (40, 20)}), ("106", {"b": (40, 20)}), ("107", {"b": (40, 20)}), ("109", {"a": (40, 20)}),
    ("111", {"a": (20, 10)}), ("112", {"a": (20, 10)}), ("113", {"a": (40, 20)}), ("114", {"a": (20, 10)}),
]
DROPPED_LOADS = {"2", "10", "12", "41"}
DR_LOADS = {"1", "22", "28", "47", "48", "52", "65", "76", "87", "100"}
NON_SWITCHABLE_LOADS = {"48"}
TARGET_P = {"a": 1201.0, "b": 1074.0, "c": 1195.0}
TARGET_Q = {"a": 656.1, "b": 626.5, "c": 652.4}

DGS = [
    dict(id="DG1", node="2054", kind="droop", black_start=True, phases="abc", p_min_kw=0, p_max_kw=1200,
         q_min_kvar=-160, q_max_kvar=700, ramp_fraction=0.6, base_mva_per_phase=1.0, base_kv=2.4018,
         coupling_inductor_pu=0.3),
    dict(id="DG2", node="2063", kind="droop", black_start=True, phases="abc", p_min_kw=0, p_max_kw=1000,
         q_min_kvar=-120, q_max_kvar=500, ramp_fraction=0.6, base_mva_per_phase=1.0, base_kv=2.4018,
         coupling_inductor_pu=0.3),
    dict(id="DG3", node="34", kind="pq_dispatchable", black_start=False, phases="c", p_min_kw=0, p_max_kw=150,
         q_min_kvar=-20, q_max_kvar=100, ramp_fraction=0.6),
    dict(id="DG4", node="46", kind="pq_dispatchable", black_start=False, phases="a", p_min_kw=0, p_max_kw=130,
         q_min_kvar=-15, q_max_kvar=70, ramp_fraction=0.6),
    dict(id="DG5", node="59", kind="pq_dispatchable", black_start=False, phases="b", p_min_kw=0, p_max_kw=120,
         q_min_kvar=-10, q_max_kvar=70, ramp_fraction=0.6),
    dict(id="DG6", node="68", kind="pq_nondispatchable", black_start=False, phases="a", p_min_kw=80,
         p_max_kw=80, q_min_kvar=40, q_max_kvar=40, ramp_fraction=1.0,
         forecast={"p_kw": [{"a": 80.0}], "q_kvar": [{"a": 40.0}]}),
]


def matrix_json(cfg, phases, length_ft):
    scale = length_ft / FT_PER_MILE
    idx = {"a": 0, "b": 1, "c": 2}
    re = [[0.0] * 3 for _ in range(3)]
    im = [[0.0] * 3 for _ in range(3)]
    for p in phases:
        for q in phases:
            r, x = CONFIGS[cfg][idx[p]][idx[q]]
            re[idx[p]][idx[q]] = round(r * scale, 12)
            im[idx[p]][idx[q]] = round(x * scale, 12)
    return {"re": re, "im": im}


def diagonal_json(phases, r, x):
    idx = {"a": 0, "b": 1, "c": 2}
    re = [[0.0] * 3 for _ in range(3)]
    im = [[0.0] * 3 for _ in range(3)]
    for p in phases:
        re[idx[p]][idx[p]] = r
        im[idx[p]][idx[p]] = x
    return {"re": re, "im": im}


def scaled_loads():
    kept = [(n, ph) for n, ph in SPOT_LOADS if n not in DROPPED_LOADS]
    raw_p = {p: sum(v[p][0] for _, v in kept if p in v) for p in "abc"}
    raw_q = {p: sum(v[p][1] for _, v in kept if p in v) for p in "abc"}
    out = []
    for node, per_phase in kept:
        p_kw = {p: round(v[0] * TARGET_P[p] / raw_p[p], 1) for p, v in per_phase.items()}
        q_kvar = {p: round(v[1] * TARGET_Q[p] / raw_q[p], 1) for p, v in per_phase.items()}
        out.append([node, p_kw, q_kvar])
    # push the rounding residue onto the largest load of each phase
    for p in "abc":
        for key, target in ((1, TARGET_P[p]), (2, TARGET_Q[p])):
            members = [row for row in out if p in row[key]]
            residue = round(target - sum(row[key][p] for row in members), 1)
            largest = max(members, key=lambda row: row[key][p])
            largest[key][p] = round(largest[key][p] + residue, 1)
    return out


def build():
    lines = [l.split() for l in open(os.path.join(HERE, "ieee123_lines.txt"))]
    nodes = {}
    branches = []

    def touch(node, phases):
        nodes.setdefault(node, set()).update(phases)

    for name, frm, to, phases, cfg, length in lines:
        cfg = int(cfg)
        touch(frm, phases)
        touch(to, phases)
        branches.append({
            "id": name, "from": frm, "to": to, "phases": phases,
            "switchable": name in SECTIONALIZERS, "damaged": False,
            "impedance_ohm": matrix_json(cfg, phases, float(length)),
            "ampacity_a": AMPACITY[cfg],
        })
    for name, frm, to, phases in TIE_SWITCHES:
        touch(frm, phases)
        touch(to, phases)
        branches.append({
            "id": name, "from": frm, "to": to, "phases": phases, "switchable": True, "damaged": False,
            "impedance_ohm": diagonal_json(phases, *SWITCH_OHM), "ampacity_a": 530,
        })
    z_base = BASE_KV ** 2 / BASE_MVA
    for dg in DGS:
        if dg["kind"] != "droop":
            continue
        host = str(int(dg["node"]) - 2000)
        touch(dg["node"], dg["phases"])
        branches.append({
            "id": "X" + dg["id"], "from": dg["node"], "to": host, "phases": dg["phases"],
            "switchable": False, "damaged": False,
            "impedance_ohm": diagonal_json(dg["phases"], 0.0, round(dg["coupling_inductor_pu"] * z_base, 9)),
            "ampacity_a": 530,
        })

    loads = []
    for node, p_kw, q_kvar in scaled_loads():
        phases = "".join(sorted(p_kw))
        loads.append({
            "id": "S" + node, "node": node, "phases": phases, "p_kw": p_kw, "q_kvar": q_kvar,
            "zip": [0.4, 0.3, 0.3], "switchable": node not in NON_SWITCHABLE_LOADS,
            "controllable_dr": node in DR_LOADS, "damaged": False,
            "dr_min_fraction": 0.0, "dr_max_fraction": 1.0,
        })

    ders = []
    for dg in DGS:
        d = dict(dg)
        d["damaged"] = False
        ders.append(d)

    def node_key(n):
        return int(n)

    doc = {
        "name": "ieee123-islanded-base",
        "notes": "Modified IEEE 123-node feeder for islanded black-start studies; see tools/fixtures/make_ieee123.py",
        "base_frequency_hz": 60.0,
        "step_interval": 1.0,
        "base": {"mva_per_phase": BASE_MVA, "kv_ln": BASE_KV},
        "nodes": [{"id": n, "phases": "".join(sorted(nodes[n])), "base_kv": BASE_KV}
                  for n in sorted(nodes, key=node_key)],
        "branches": branches,
        "ders": ders,
        "loads": loads,
    }
    return doc


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "..", "..", "fixtures", "ieee123_base.json")
    doc = build()
    with open(out, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    totals = {p: round(sum(l["p_kw"].get(p, 0) for l in doc["loads"]), 3) for p in "abc"}
    qtot = {p: round(sum(l["q_kvar"].get(p, 0) for l in doc["loads"]), 3) for p in "abc"}
    print(f"{len(doc['nodes'])} nodes, {len(doc['branches'])} branches, {len(doc['loads'])} loads, "
          f"P {totals}, Q {qtot}")


if __name__ == "__main__":
    main()
