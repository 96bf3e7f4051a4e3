"""Run the pulse optimizer from many random starts and summarize the outcomes.

This is the study behind the 0.95 threshold on the default training grid.

    python3 scripts/optimizer_seeds.py [--seeds 20] [--iters 300]
"""

import argparse

import numpy as np

from ddsense.control import paper_composite, rect_pi
from ddsense.optim import OptimConfig, grad_ascent, objective


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--iters", type=int, default=300)
    args = ap.parse_args()

    finals = []
    for seed in range(args.seeds):
        cfg = OptimConfig(seed=seed, max_iters=args.iters)
        seq, hist = grad_ascent(cfg)
        finals.append(hist[-1])
        monotone = bool(np.all(np.diff(hist) >= 0))
        angle = sum(s.angle for s in seq) / np.pi
        print(f"seed {seed:3d}: objective {hist[-1]:.4f}  steps {len(hist) - 1:4d}  "
              f"total angle {angle:5.2f} pi  monotone {monotone}")
    grid = OptimConfig().grid
    print(f"\nmin {min(finals):.4f}  median {np.median(finals):.4f}  max {max(finals):.4f}")
    print(f"reference: rect {objective(rect_pi(), grid):.4f}, "
          f"paper composite {objective(paper_composite(), grid):.4f}")


if __name__ == "__main__":
    main()
