#!/usr/bin/env python3
"""Writes the small feeders used by the tests and sweep examples."""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.normpath(os.path.join(HERE, "..", "..", "fixtures"))

KV = 2.4018
SELF = (0.35, 0.65)
MUTUAL = (0.10, 0.30)


def line(bid, a, b, switchable=False, scale=1.0):
    re = [[(SELF if i == j else MUTUAL)[0] * scale for j in range(3)] for i in range(3)]
    im = [[(SELF if i == j else MUTUAL)[1] * scale for j in range(3)] for i in range(3)]
    return {"id": bid, "from": a, "to": b, "phases": "abc", "switchable": switchable,
            "impedance_ohm": {"re": re, "im": im}, "ampacity_a": 400}


def load(lid, node, kw, kvar, dr=False, zip_=(0.3, 0.3, 0.4), switchable=True):
    d = {"id": lid, "node": node, "phases": "abc",
         "p_kw": {p: kw for p in "abc"}, "q_kvar": {p: kvar for p in "abc"},
         "zip": list(zip_), "switchable": switchable, "controllable_dr": dr}
    if dr:
        d["dr_min_fraction"] = 0.5
        d["dr_max_fraction"] = 1.0
    return d


def droop(did, node, pmax, qmax, black_start=True):
    return {"id": did, "node": node, "kind": "droop", "black_start": black_start, "phases": "abc",
            "p_min_kw": 0, "p_max_kw": pmax, "q_min_kvar": -qmax / 4, "q_max_kvar": qmax,
            "ramp_fraction": 1.0, "coupling_inductor_pu": 0.3}


def feeder(name, notes, nodes, branches, ders, loads):
    return {"name": name, "notes": notes, "base_frequency_hz": 60.0, "step_interval": 1.0,
            "base": {"mva_per_phase": 1.0, "kv_ln": KV},
            "nodes": [{"id": n, "phases": "abc", "base_kv": KV} for n in nodes],
            "branches": branches, "ders": ders, "loads": loads}


def chain():
    nodes = [f"n{i}" for i in range(1, 9)]
    branches = [line("L12", "n1", "n2"), line("S23", "n2", "n3", True), line("L34", "n3", "n4"),
                line("S45", "n4", "n5", True), line("L56", "n5", "n6"), line("S67", "n6", "n7", True),
                line("L78", "n7", "n8")]
    ders = [droop("G1", "n1", 900, 500),
            {"id": "G2", "node": "n8", "kind": "pq_dispatchable", "black_start": False, "phases": "abc",
             "p_min_kw": 0, "p_max_kw": 150, "q_min_kvar": -30, "q_max_kvar": 90, "ramp_fraction": 1.0},
            {"id": "PV1", "node": "n6", "kind": "pq_nondispatchable", "black_start": False, "phases": "abc",
             "p_min_kw": 60, "p_max_kw": 60, "q_min_kvar": 0, "q_max_kvar": 0, "ramp_fraction": 1.0,
             "forecast": {"p_kw": [{"a": 20.0, "b": 20.0, "c": 20.0}], "q_kvar": [{"a": 0.0, "b": 0.0, "c": 0.0}]}}]
    loads = [load("D2", "n2", 40, 15), load("D4", "n4", 50, 20, dr=True), load("D6", "n6", 45, 18),
             load("D8", "n8", 35, 12, zip_=(1.0, 0.0, 0.0))]
    return feeder("toy-chain", "Four bus blocks in a chain; one black-start droop unit at the head.",
                  nodes, branches, ders, loads)


def two_droop():
    nodes = [f"m{i}" for i in range(1, 7)]
    branches = [line("L12", "m1", "m2"), line("S23", "m2", "m3", True), line("L34", "m3", "m4"),
                line("S45", "m4", "m5", True), line("L56", "m5", "m6")]
    ders = [droop("G1", "m1", 500, 300), droop("G2", "m6", 450, 300)]
    loads = [load("D2", "m2", 60, 25), load("D3", "m3", 70, 30, dr=True), load("D4", "m4", 65, 25),
             load("D5", "m5", 55, 20)]
    return feeder("toy-two-droop", "Three blocks with black-start droop units at both ends; "
                  "serving all load needs both units.", nodes, branches, ders, loads)


def no_black_start():
    f = chain()
    f["name"] = "toy-no-black-start"
    f["notes"] = "The chain feeder with its droop unit unable to black start."
    f["ders"][0]["black_start"] = False
    return f


def write(name, obj):
    with open(os.path.join(OUT, name), "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def main():
    write("toy_chain.json", chain())
    write("toy_two_droop.json", two_droop())
    write("toy_no_black_start.json", no_black_start())


if __name__ == "__main__":
    main()
