"""CPMG NMR of a two-nucleus 13C bath: tau scan, N scan and F_QS^N scaling.

    python3 scripts/nmr_detection.py [--out results]
"""

import argparse
from pathlib import Path

import numpy as np

from ddsense.control import DDSequence, paper_composite, rect_pi
from ddsense.nmr import (
    BathSpec,
    NmrConfig,
    c13_larmor,
    fqs_scaling_check,
    mean_larmor,
    resonance_tau,
    scan_n,
    scan_tau,
)
from ddsense.parallel import make_executor

HYPERFINE_HZ = [[30e3, 0.0, 20e3], [-15e3, 0.0, 40e3]]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--field", type=float, default=380.0, help="gauss")
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    ex = make_executor("auto")

    bath = BathSpec.from_hyperfine(c13_larmor(args.field), 2 * np.pi * np.array(HYPERFINE_HZ))
    t1 = resonance_tau(mean_larmor(bath))
    cfg = NmrConfig(bath, DDSequence(16, t1))

    res = scan_tau(cfg, (0.5 * t1, 3.5 * t1), 401, executor=ex)
    (args.out / "nmr_tau.csv").write_text(res.to_csv_text())
    print(f"predicted tau_1 = {t1 * 1e9:.1f} ns, tau_2 = {3 * t1 * 1e9:.1f} ns")
    for d in res.extras["dips"]:
        if d["depth"] > 0.05:
            print(f"  dip at {d['center'] * 1e9:7.1f} ns, depth {d['depth']:.3f}")

    tau = max(res.extras["dips"], key=lambda d: d["depth"] if d["center"] < 2 * t1 else 0)["center"]
    cfg = NmrConfig(bath, DDSequence(2, tau))
    res = scan_n(cfg, [2, 4, 6, 8, 12, 16, 20, 24], executor=ex)
    (args.out / "nmr_n.csv").write_text(res.to_csv_text())
    print(f"\ndepth vs N fit: a = {res['fit_a'][0]:.3f}, lambda = {res['fit_lambda'][0]:.2e}, "
          f"b = {res['fit_b'][0]:.3f}, rms = {res.extras['fit_rms']:.3g}")

    print("\nr      F_QS^16 (rect)  depth ratio rect  depth ratio composite")
    ratios = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
    rows = {}
    for name, seq in (("rect", rect_pi()), ("composite", paper_composite())):
        c = NmrConfig(bath, DDSequence(16, tau, pulse=tuple(seq)), pulse_model="flip", dephased=True)
        rows[name] = fqs_scaling_check(c, ratios, executor=ex)
        (args.out / f"nmr_scaling_{name}.csv").write_text(rows[name].to_csv_text())
    for i, r in enumerate(ratios):
        print(f"{r:4.2f}   {rows['rect']['f_qs'][i] ** 16:12.4f}  {rows['rect']['depth_ratio'][i]:16.4f}  "
              f"{rows['composite']['depth_ratio'][i]:20.4f}")
    if ex is not None:
        ex.shutdown()


if __name__ == "__main__":
    main()
