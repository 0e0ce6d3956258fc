#!/usr/bin/env python3
"""Walkthrough: what the TIES trim step and DARE pruning actually do.

Trim is deterministic: it keeps the ceil(density * n) largest-magnitude
entries of each tensor.  DARE is random but reproducible: entries drop with
probability p from a counter-based stream keyed by (seed, label, tensor),
and survivors are rescaled by 1/(1-p) so the expected value is unchanged.
"""

import numpy as np

from loramerge import DeltaMap, dare_prune, trim


def main():
    rng = np.random.default_rng(3)
    delta = DeltaMap.from_arrays(
        {"w": rng.standard_normal((4, 8)).astype(np.float32)}, label="en"
    )

    print("original (first row):", np.array2string(delta.layers["w"].values[0], precision=2))
    for density in (1.0, 0.5, 0.25):
        trimmed = trim(delta, density)
        kept = int(np.count_nonzero(trimmed.layers["w"].values))
        print(f"density {density:>4}: {kept:2d}/32 entries survive trim")

    print()
    pruned = dare_prune(delta, drop_rate=0.5, seed=42)
    survivors = pruned.layers["w"].values[pruned.layers["w"].values != 0]
    print(f"DARE p=0.5 seed=42: {survivors.size}/32 survive, each scaled by 2.0")

    again = dare_prune(delta, drop_rate=0.5, seed=42)
    identical = np.array_equal(pruned.layers["w"].values, again.layers["w"].values)
    print(f"same seed reproduces the same mask: {identical}")

    # unbiasedness: the mean over many seeds converges to the input value
    scalar = DeltaMap.from_arrays({"w": np.array([[1.0]], dtype=np.float32)}, label="s")
    for p in (0.1, 0.5, 0.9):
        mean = np.mean(
            [float(dare_prune(scalar, p, seed=s).layers["w"].values[0, 0]) for s in range(4000)]
        )
        print(f"mean of dare_prune(1.0, p={p}) over 4000 seeds: {mean:.3f}")


if __name__ == "__main__":
    main()
