"""Regenerate data/corpus: 20 seeded instances of mixed shape, with and without K."""

from pathlib import Path

import numpy as np

from opframes.harness import K_KINDS, random_bessel_below, random_family, random_frame, random_k
from opframes.instances import Instance, dump_instance

DIMS = [(1, 1, 1), (1, 2, 2), (2, 1, 3), (2, 2, 2), (3, 1, 2), (1, 3, 4), (2, 2, 5), (3, 2, 1), (1, 4, 3), (2, 3, 2)]


def main(out=Path(__file__).resolve().parent / "corpus"):
    out.mkdir(exist_ok=True)
    rng = np.random.default_rng(2024)
    for i in range(20):
        d, n, m = DIMS[i % len(DIMS)]
        T = random_frame(rng, d, n, m, float(rng.uniform(1, 20)))
        k = random_k(rng, d, n, K_KINDS[i % 4]) if i % 2 else None
        families = {}
        if i % 3 != 2:
            families["R"] = random_bessel_below(rng, T, float(rng.uniform(0.1, 0.9)))
        if i % 4 == 0:
            families["S"] = random_family(rng, T)
        (out / f"instance_{i:02d}.json").write_text(dump_instance(Instance(T, k, families)))


if __name__ == "__main__":
    main()
