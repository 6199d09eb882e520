#!/usr/bin/env python3
"""Regenerate crates/core/data/vectors.csv.

Produces one 32-dimensional unit vector per object class such that
pairwise cosine similarity is high (> 0.7, with margin) inside a cluster
and low (< 0.6, with margin) everywhere else. The builtin similarity
provider embeds the CSV at compile time; a Rust test re-verifies the
margins, so regenerating with a different seed is safe as long as this
script's own checks pass.
"""

import numpy as np

DIM = 32
WITHIN_MIN = 0.75  # margin above the 0.7 substitution threshold
CROSS_MAX = 0.55   # margin below the 0.6 "unrelated" ceiling

CLUSTERS = [
    ["Table", "Desk", "SideTable", "DiningTable", "CoffeeTable"],
    ["Mug", "Cup"],
    ["FloorLamp", "DeskLamp"],
    ["Bottle", "GlassBottle", "WineBottle", "SoapBottle"],
    ["Knife", "ButterKnife"],
    ["Sofa", "ArmChair"],
    ["Towel", "HandTowel", "Cloth"],
    ["PepperShaker", "SaltShaker"],
    ["Pencil", "Pen"],
]

SINGLETONS = [
    "CounterTop", "Shelf", "Drawer", "Cabinet", "Dresser", "Safe", "Fridge",
    "Microwave", "StoveBurner", "SinkBasin", "BathtubBasin", "Toilet",
    "GarbageCan", "Bed", "Ottoman", "MediaStand", "Television", "Mirror",
    "Window", "HousePlant", "Faucet", "Painting",
    "Apple", "Tomato", "Bread", "Potato", "Lettuce",
    "SlicedApple", "SlicedTomato", "SlicedBread", "SlicedPotato", "SlicedLettuce",
    "Egg", "Spoon", "Fork", "Spatula", "Ladle", "Plate", "Bowl", "Pan", "Pot",
    "Box", "Kettle", "SoapBar", "SprayBottle", "DishSponge",
    "Sponge", "Book", "Newspaper", "Pillow", "Laptop", "RemoteControl",
    "KeyChain", "CreditCard", "Watch", "CellPhone", "AlarmClock", "Disc",
    "Candle", "Statue", "Vase", "TissueBox", "ToiletPaper",
]


def unit(v):
    return v / np.linalg.norm(v)


def sample(rng, existing, limit):
    """A unit vector whose |cosine| to every row of `existing` stays under `limit`."""
    for _ in range(100_000):
        v = unit(rng.standard_normal(DIM))
        if len(existing) == 0 or max(abs(existing @ v)) < limit:
            return v
    raise RuntimeError("rejection sampling exhausted; lower the limits or raise DIM")


def main():
    rng = np.random.default_rng(20240811)
    names, rows = [], []

    # Cluster members: a shared random center plus a small perturbation,
    # keeping centers mutually near-orthogonal.
    centers = []
    for cluster in CLUSTERS:
        center = sample(rng, np.array(centers) if centers else [], 0.30)
        centers.append(center)
        for member in cluster:
            while True:
                v = unit(center + 0.28 * unit(rng.standard_normal(DIM)))
                if v @ center > 0.9:
                    names.append(member)
                    rows.append(v)
                    break

    # Singletons: rejected until far from everything accepted so far.
    for name in SINGLETONS:
        v = sample(rng, np.array(rows), 0.45)
        names.append(name)
        rows.append(v)

    vecs = np.array(rows)
    by_name = dict(zip(names, range(len(names))))
    cluster_of = {m: i for i, c in enumerate(CLUSTERS) for m in c}

    # Verify every pairwise constraint before writing anything.
    sims = vecs @ vecs.T
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            s = sims[i, j]
            same = cluster_of.get(names[i], -1) == cluster_of.get(names[j], -2)
            if same:
                assert s > WITHIN_MIN, (names[i], names[j], s)
            else:
                assert s < CROSS_MAX, (names[i], names[j], s)

    order = sorted(names)
    lines = ["# homeworld builtin class embeddings, version 1",
             "# Class,32 comma-separated components (unit norm)"]
    for name in order:
        v = vecs[by_name[name]]
        lines.append(name + "," + ",".join(f"{x:.6f}" for x in v))
    with open("crates/core/data/vectors.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {len(order)} vectors")


if __name__ == "__main__":
    main()
