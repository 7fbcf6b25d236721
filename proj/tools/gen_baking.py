#!/usr/bin/env python3
"""Writes the Baking and Baking-Large bundles under domains/.

Output is deterministic. Object counts are solved for so that the largest
Baking-Large task has exactly the target number of ground actions.

Usage: gen_baking.py [--out DIR]
"""

import argparse
import itertools
import random
from pathlib import Path

INGREDIENT_FEATURES = ["organic", "fresh", "local", "premium"]
BOWL_FEATURES = ["ceramic", "labeled"]
WHISK_FEATURES = ["steel"]
PAN_FEATURES = ["nonstick", "round"]
OVEN_FEATURES = ["convection"]

# name, parameters, preconditions, add effects, delete effects
OPERATORS = [
    ("fetch", [("i", "ingredient")], ["stored i"], ["available i"], ["stored i"]),
    ("crack-egg", [("e", "egg"), ("b", "bowl")], ["available e", "clean b"],
     ["has-egg b"], ["available e", "clean b"]),
    ("add-flour", [("f", "flour"), ("b", "bowl")], ["available f", "has-egg b"],
     ["has-flour b"], ["available f", "has-egg b"]),
    ("add-sugar", [("s", "sugar"), ("b", "bowl")], ["available s", "has-flour b"],
     ["has-sugar b"], ["available s", "has-flour b"]),
    ("mix-batter", [("b", "bowl"), ("w", "whisk")], ["has-sugar b", "clean-whisk w"],
     ["batter b", "dirty-whisk w"], ["has-sugar b", "clean-whisk w"]),
    ("separate-egg", [("e", "egg"), ("b", "bowl")], ["available e", "clean b"],
     ["has-yolk b", "whites-separated e"], ["available e", "clean b"]),
    ("beat-whites", [("e", "egg"), ("w", "whisk")], ["whites-separated e", "clean-whisk w"],
     ["stiff-whites e", "dirty-whisk w"], ["whites-separated e", "clean-whisk w"]),
    ("fold", [("e", "egg"), ("b", "bowl")], ["stiff-whites e", "has-yolk b"],
     ["souffle-base b"], ["stiff-whites e", "has-yolk b"]),
    ("wash-whisk", [("w", "whisk")], ["dirty-whisk w"], ["clean-whisk w"], ["dirty-whisk w"]),
    ("wash-bowl", [("b", "bowl")], ["dirty-bowl b"], ["clean b"], ["dirty-bowl b"]),
    # An ungreased pan is always empty.
    ("grease-pan", [("p", "pan"), ("u", "butter")], ["available u", "ungreased p", "empty-pan p"],
     ["greased p"], ["available u", "ungreased p"]),
    ("pour-batter", [("b", "bowl"), ("p", "pan")],
     ["batter b", "greased p", "empty-pan p", "on-counter p", "matches b p"],
     ["cake-batter-in p", "dirty-bowl b"], ["batter b", "empty-pan p"]),
    ("pour-souffle", [("b", "bowl"), ("p", "pan")],
     ["souffle-base b", "greased p", "empty-pan p", "on-counter p", "matches b p"],
     ["souffle-in p", "dirty-bowl b"], ["souffle-base b", "empty-pan p"]),
    ("preheat", [("o", "oven")], ["cold o"], ["hot o"], ["cold o"]),
    ("load-oven", [("p", "pan"), ("o", "oven")], ["on-counter p", "oven-free o", "fits p o"],
     ["in-oven p o"], ["on-counter p", "oven-free o"]),
    # A loaded pan fits its oven; a filled pan is greased.
    ("bake-cake", [("p", "pan"), ("o", "oven")],
     ["in-oven p o", "cake-batter-in p", "hot o", "fits p o", "greased p"],
     ["cake-done p"], ["cake-batter-in p"]),
    ("bake-souffle", [("p", "pan"), ("o", "oven")],
     ["in-oven p o", "souffle-in p", "hot o", "fits p o", "greased p"],
     ["souffle-done p"], ["souffle-in p"]),
    ("unload-oven", [("p", "pan"), ("o", "oven")], ["in-oven p o", "fits p o"],
     ["on-counter p", "oven-free o"], ["in-oven p o"]),
    ("cool-oven", [("o", "oven")], ["hot o", "oven-free o"], ["cold o"], ["hot o"]),
]

SMALL_OPERATORS = ["fetch", "crack-egg", "add-flour", "add-sugar", "mix-batter", "grease-pan", "pour-batter",
                   "preheat", "load-oven", "bake-cake", "unload-oven"]

PREDICATES = (
    [("stored", ["ingredient"]), ("available", ["ingredient"])]
    + [(f, ["ingredient"]) for f in INGREDIENT_FEATURES]
    + [("whites-separated", ["egg"]), ("stiff-whites", ["egg"])]
    + [(p, ["bowl"]) for p in ["clean", "dirty-bowl", "has-egg", "has-flour", "has-sugar", "batter", "has-yolk",
                               "souffle-base"] + BOWL_FEATURES]
    + [(p, ["whisk"]) for p in ["clean-whisk", "dirty-whisk"] + WHISK_FEATURES]
    + [(p, ["pan"]) for p in ["empty-pan", "ungreased", "greased", "cake-batter-in", "souffle-in", "cake-done",
                              "souffle-done", "on-counter"] + PAN_FEATURES]
    + [(p, ["oven"]) for p in ["cold", "hot", "oven-free"] + OVEN_FEATURES]
    + [("in-oven", ["pan", "oven"]), ("fits", ["pan", "oven"]), ("matches", ["bowl", "pan"])]
)

TYPES = ["egg", "flour", "sugar", "butter", "bowl", "whisk", "pan", "oven"]
PREFIX = {"egg": "egg", "flour": "flour", "sugar": "sugar", "butter": "butter", "bowl": "bowl", "whisk": "whisk",
          "pan": "pan", "oven": "oven"}


def used_predicates(ops):
    names = set()
    for _, _, pre, add, dele in ops:
        for lit in pre + add + dele:
            names.add(lit.split()[0])
    return names


def domain_text(name, ops, features):
    keep = used_predicates(ops) | set(features)
    lines = [f"; Kitchen with ingredients, bowls, whisks, pans and ovens. Feature predicates",
             f"; ({', '.join(features)}) describe objects and no action reads them.",
             f"(define (domain {name})",
             "  (:requirements :strips :typing)",
             "  (:types ingredient bowl whisk pan oven - object",
             "          egg flour sugar butter - ingredient)",
             "  (:predicates"]
    var = {"ingredient": "i", "egg": "e", "flour": "f", "sugar": "s", "butter": "u", "bowl": "b", "whisk": "w",
           "pan": "p", "oven": "o"}
    for pred, types in PREDICATES:
        if pred not in keep:
            continue
        args = " ".join(f"?{var[t]} - {t}" for t in types)
        lines.append(f"    ({pred} {args})")
    lines[-1] += ")"
    for op_name, params, pre, add, dele in ops:
        lines.append("")
        lines.append(f"  (:action {op_name}")
        lines.append("    :parameters (" + " ".join(f"?{v} - {t}" for v, t in params) + ")")
        lines.append("    :precondition (and " + " ".join(lit_text(l) for l in pre) + ")")
        eff = [lit_text(l) for l in add] + [f"(not {lit_text(l)})" for l in dele]
        lines.append("    :effect (and " + " ".join(eff) + "))")
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


def lit_text(lit):
    parts = lit.split()
    return "(" + parts[0] + "".join(f" ?{a}" for a in parts[1:]) + ")"


def ground_actions(c, ops):
    n = {"ingredient": c["egg"] + c["flour"] + c["sugar"] + c["butter"], **c}
    total = 0
    for _, params, _, _, _ in ops:
        k = 1
        for _, t in params:
            k *= n[t]
        total += k
    return total


def ground_atoms(c, ops, features):
    n = {"ingredient": c["egg"] + c["flour"] + c["sugar"] + c["butter"], **c}
    keep = used_predicates(ops) | set(features)
    total = 0
    for pred, types in PREDICATES:
        if pred in keep:
            k = 1
            for t in types:
                k *= n[t]
            total += k
    return total


class Kitchen:
    """One task: objects, their features and the initial state."""

    def __init__(self, counts, rng, features, full_first, fits_density=0.8, paired=0):
        self.objects = {t: [f"{PREFIX[t]}{k:02d}" for k in range(1, counts[t] + 1)] for t in TYPES}
        self.features = features
        self.facts = set()
        groups = {"ingredient": INGREDIENT_FEATURES, "bowl": BOWL_FEATURES, "whisk": WHISK_FEATURES,
                  "pan": PAN_FEATURES, "oven": OVEN_FEATURES}
        for group, feats in groups.items():
            feats = [f for f in feats if f in features]
            if not feats:
                continue
            types = ["egg", "flour", "sugar", "butter"] if group == "ingredient" else [group]
            for t in types:
                objs = self.objects[t]
                for idx, o in enumerate(objs):
                    if full_first and idx == 0:
                        chosen = set(feats)
                    elif not full_first:
                        # Every object lacks at least one feature.
                        chosen = {f for f in feats if rng.random() < 0.5}
                        if len(chosen) == len(feats):
                            chosen.discard(rng.choice(feats))
                    elif idx == 1:
                        chosen = set()
                    elif idx - 2 < len(feats) and len(objs) > len(feats) + 1:
                        # One object missing exactly each feature.
                        chosen = set(feats) - {feats[idx - 2]}
                    else:
                        chosen = {f for f in feats if rng.random() < 0.5}
                    for f in chosen:
                        self.facts.add(f"{f} {o}")
        for t in ["egg", "flour", "sugar", "butter"]:
            for o in self.objects[t]:
                self.facts.add(f"stored {o}")
        for b in self.objects["bowl"]:
            self.facts.add(f"clean {b}")
        for w in self.objects["whisk"]:
            self.facts.add(f"clean-whisk {w}")
        for p in self.objects["pan"]:
            self.facts.update({f"empty-pan {p}", f"ungreased {p}", f"on-counter {p}"})
        for o in self.objects["oven"]:
            self.facts.update({f"cold {o}", f"oven-free {o}"})
        for i, p in enumerate(self.objects["pan"]):
            for j, o in enumerate(self.objects["oven"]):
                if (i == 0 and j == 0) or rng.random() < fits_density:
                    self.facts.add(f"fits {p} {o}")
            if not any(f"fits {p} {o}" in self.facts for o in self.objects["oven"]):
                self.facts.add(f"fits {p} {self.objects['oven'][0]}")
        # The first `paired` pans each match only the bowl with the same
        # number, so every dish needs its own bowl.
        bowls = self.objects["bowl"]
        for i, p in enumerate(self.objects["pan"]):
            if i < paired:
                self.facts.add(f"matches {bowls[i]} {p}")
                continue
            for j, b in enumerate(bowls):
                if (i == 0 and j == 0) or rng.random() < fits_density:
                    self.facts.add(f"matches {b} {p}")
            if not any(f"matches {b} {p}" in self.facts for b in bowls):
                self.facts.add(f"matches {bowls[0]} {p}")

    def text(self, domain, name, goal, keep):
        lines = [f"(define (problem {name})", f"  (:domain {domain})", "  (:objects"]
        for t in TYPES:
            if self.objects[t]:
                lines.append("    " + " ".join(self.objects[t]) + f" - {t}")
        lines[-1] += ")"
        facts = sorted(f for f in self.facts if f.split()[0] in keep)
        lines.append("  (:init")
        for k in range(0, len(facts), 4):
            lines.append("    " + " ".join(f"({f})" for f in facts[k:k + 4]))
        lines[-1] += ")"
        lines.append("  (:goal (and " + " ".join(f"({g})" for g in goal) + ")))")
        return "\n".join(lines) + "\n"


def solve_counts(target_actions, target_atoms, ops, features, fixed):
    """Counts with exactly `target_actions` ground actions and atoms closest to `target_atoms`."""
    best = None
    for b, w, p, o in itertools.product(range(2, 6), range(1, 4), range(2, 9), range(1, 4)):
        for e in range(20, 80):
            for f in range(int(e / 1.5), int(e * 1.5) + 1):
                s = f
                base = dict(egg=e, flour=f, sugar=s, butter=0, bowl=b, whisk=w, pan=p, oven=o, **fixed)
                a0 = ground_actions(base, ops)
                per_butter = 1 + p
                rest = target_actions - a0
                if rest < 4 * per_butter or rest % per_butter:
                    continue
                base["butter"] = rest // per_butter
                if not e / 1.5 <= base["butter"] <= e * 1.5:
                    continue
                assert ground_actions(base, ops) == target_actions
                atoms = ground_atoms(base, ops, features)
                score = (abs(atoms - target_atoms), sum(base.values()))
                if best is None or score < best[0]:
                    best = (score, base)
    return best[1]


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def build_large(out):
    rng = random.Random(20240611)
    ops = OPERATORS
    features = INGREDIENT_FEATURES + BOWL_FEATURES + WHISK_FEATURES + PAN_FEATURES + OVEN_FEATURES
    keep = used_predicates(ops) | set(features)
    root = out / "baking_large"
    write(root / "domain.pddl", domain_text("baking-large", ops, features))
    manifest = ["# Domain bundle manifest: key = value, '#' starts a comment.",
                "# Generated by tools/gen_baking.py.",
                "name = baking_large", "domain = domain.pddl", "train = train", "test = test",
                "horizon = 60", "budget = 5000", "eval_interval = 100",
                f"expect.operators = {len(ops)}", "expect.max_ground_actions = 2523",
                "expect.train_atoms_min = 1400", "expect.train_atoms_max = 1800"]

    train_counts = [
        dict(egg=50, flour=50, sugar=50, butter=50, bowl=4, whisk=2, pan=8, oven=2),
        dict(egg=48, flour=52, sugar=46, butter=54, bowl=4, whisk=2, pan=6, oven=2),
        dict(egg=55, flour=45, sugar=50, butter=44, bowl=3, whisk=2, pan=8, oven=2),
        dict(egg=44, flour=56, sugar=54, butter=50, bowl=4, whisk=3, pan=7, oven=2),
        dict(egg=52, flour=48, sugar=48, butter=52, bowl=3, whisk=2, pan=6, oven=3),
    ]
    for k, c in enumerate(train_counts, 1):
        kitchen = Kitchen(c, rng, features, full_first=True)
        goal = ["cake-done pan01", "souffle-done pan02"]
        write(root / "train" / f"train-{k:02d}.pddl", kitchen.text("baking-large", f"baking-large-train-{k:02d}", goal, keep))
        a, n = ground_actions(c, ops), ground_atoms(c, ops, features)
        assert a <= 2523 and 1400 <= n <= 1800, (k, a, n)

    small = dict(egg=4, flour=4, sugar=4, butter=4, bowl=2, whisk=1, pan=2, oven=1)
    per_op = {
        "fetch": (small, ["available egg03"], None),
        "crack-egg": (small, ["has-egg bowl02"], None),
        "add-flour": (small, ["has-flour bowl02"], None),
        "add-sugar": (small, ["has-sugar bowl02"], None),
        "mix-batter": (small, ["batter bowl02"], None),
        "separate-egg": (small, ["has-yolk bowl02"], None),
        "beat-whites": (small, ["stiff-whites egg02"], None),
        "fold": (small, ["souffle-base bowl01"], None),
        "wash-whisk": (small, ["clean-whisk whisk01"], "dirty-whisk"),
        "wash-bowl": (small, ["clean bowl02"], "dirty-bowl"),
        "grease-pan": (small, ["greased pan02"], None),
        "pour-batter": (small, ["cake-batter-in pan02"], None),
        "pour-souffle": (small, ["souffle-in pan01"], None),
        "preheat": (small, ["hot oven01"], None),
        "load-oven": (small, ["in-oven pan02 oven01"], None),
        "bake-cake": (small, ["cake-done pan02"], None),
        "bake-souffle": (small, ["souffle-done pan01"], None),
        "unload-oven": (small, ["on-counter pan01", "cold oven01"], "baking"),
        "cool-oven": (small, ["cold oven01"], "hot"),
    }
    for op_name, (c, goal, prepared) in per_op.items():
        kitchen = Kitchen(c, rng, features, full_first=False, fits_density=1.0)
        if prepared == "dirty-whisk":
            kitchen.facts.discard("clean-whisk whisk01")
            kitchen.facts.add("dirty-whisk whisk01")
        elif prepared == "dirty-bowl":
            kitchen.facts.discard("clean bowl02")
            kitchen.facts.add("dirty-bowl bowl02")
        elif prepared == "hot":
            kitchen.facts.discard("cold oven01")
            kitchen.facts.add("hot oven01")
        elif prepared == "baking":
            # A greased pan01 bakes a cake in a hot oven01.
            kitchen.facts -= {"cold oven01", "oven-free oven01", "empty-pan pan01", "ungreased pan01",
                              "on-counter pan01"}
            kitchen.facts |= {"hot oven01", "greased pan01", "cake-done pan01", "in-oven pan01 oven01"}
        task = f"op-{op_name}"
        write(root / "test" / f"{task}.pddl", kitchen.text("baking-large", f"baking-large-{task}", goal, keep))
        manifest.append(f"expect.requires.{task} = {op_name}")

    # Long-horizon tasks. Each dish has its own bowl; a single oven forces
    # sequential baking and the goal asks for a tidy kitchen.
    def tidy(k):
        return ([f"cold {o}" for o in k.objects["oven"]] + [f"clean {b}" for b in k.objects["bowl"]]
                + [f"clean-whisk {w}" for w in k.objects["whisk"]])

    big = solve_counts(2523, 1600, ops, features, {})
    long_tasks = [
        ("long-two-cakes", big, lambda k: ["cake-done pan01", "cake-done pan02", "on-counter pan01",
                                           "on-counter pan02"], 22),
        ("long-two-souffles", dict(egg=6, flour=4, sugar=4, butter=6, bowl=2, whisk=1, pan=2, oven=1),
         lambda k: ["souffle-done pan01", "souffle-done pan02", "on-counter pan01", "on-counter pan02"], 26),
        ("long-cake-and-souffle", dict(egg=6, flour=5, sugar=5, butter=6, bowl=2, whisk=1, pan=3, oven=1),
         lambda k: ["cake-done pan01", "souffle-done pan02", "on-counter pan01", "on-counter pan02"], 22),
    ]
    for task, c, goal_of, min_len in long_tasks:
        kitchen = Kitchen(c, rng, features, full_first=False, fits_density=1.0, paired=2)
        goal = goal_of(kitchen) + tidy(kitchen)
        write(root / "test" / f"{task}.pddl", kitchen.text("baking-large", f"baking-large-{task}", goal, keep))
        manifest.append(f"expect.min_plan_length.{task} = {min_len}")
    write(root / "manifest.txt", "\n".join(manifest) + "\n")
    print("baking_large: big task counts", big, "actions", ground_actions(big, ops), "atoms",
          ground_atoms(big, ops, features))


def build_small(out):
    rng = random.Random(7)
    ops = [op for op in OPERATORS if op[0] in SMALL_OPERATORS]
    features = ["organic", "fresh", "ceramic", "nonstick", "convection"]
    keep = used_predicates(ops) | set(features)
    root = out / "baking"
    write(root / "domain.pddl", domain_text("baking", ops, features))
    manifest = ["# Domain bundle manifest: key = value, '#' starts a comment.",
                "# Generated by tools/gen_baking.py. Smaller cake-only kitchen.",
                "name = baking", "domain = domain.pddl", "train = train", "test = test",
                "horizon = 30", "budget = 1500", "eval_interval = 50", f"expect.operators = {len(ops)}",
                "stand_in = true"]
    for k in range(1, 4):
        c = dict(egg=5 + k, flour=5, sugar=5, butter=4 + k, bowl=3, whisk=1, pan=3, oven=2)
        kitchen = Kitchen(c, rng, features, full_first=True)
        write(root / "train" / f"train-{k:02d}.pddl",
              kitchen.text("baking", f"baking-train-{k:02d}", ["cake-done pan01"], keep))
    tests = [
        ("test-01", ["has-sugar bowl02"]),
        ("test-02", ["batter bowl01"]),
        ("test-03", ["greased pan02", "in-oven pan02 oven01"]),
        ("test-04", ["cake-done pan02"]),
        ("test-05", ["cake-done pan01", "on-counter pan01"]),
    ]
    for task, goal in tests:
        c = dict(egg=3, flour=3, sugar=3, butter=3, bowl=2, whisk=1, pan=2, oven=1)
        kitchen = Kitchen(c, rng, features, full_first=False, fits_density=1.0)
        write(root / "test" / f"{task}.pddl", kitchen.text("baking", f"baking-{task}", goal, keep))
    write(root / "manifest.txt", "\n".join(manifest) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "domains"))
    args = parser.parse_args()
    out = Path(args.out)
    build_large(out)
    build_small(out)


if __name__ == "__main__":
    main()
