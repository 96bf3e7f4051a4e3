"""Monte-Carlo echo magnetometry: eta_r versus pulse detuning for both pulses.

    python3 scripts/echo_sensitivity.py [--shots 1e8] [--seed 0] [--out results]
"""

import argparse
from pathlib import Path

import numpy as np

from ddsense.control import paper_composite, rect_pi
from ddsense.parallel import make_executor
from ddsense.sense import EchoConfig, SensorParams, intrinsic_sensitivity, sensitivity_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=float, default=1e8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    params = SensorParams()
    rs = np.linspace(0, 1.2, 13)
    ex = make_executor("auto")
    print(f"eta_in = {intrinsic_sensitivity(params) * 1e9:.2f} nT/sqrt(Hz)")
    for name, seq in (("rect", rect_pi()), ("composite", paper_composite())):
        cfg = EchoConfig(pi_pulse=tuple(seq), shots=int(args.shots), seed=args.seed)
        res = sensitivity_sweep(cfg, params, rs, executor=ex)
        (args.out / f"echo_{name}.csv").write_text(res.to_csv_text())
        eta = res["eta_r_T_per_sqrtHz"] * 1e9
        print(f"\n{name}: r, eta_r [nT/sqrtHz], f_qs, eta_r*f_qs")
        for r, e, q, p in zip(rs, eta, res["f_qs"], res["eta_r_times_fqs"] * 1e9):
            print(f"  {r:4.2f}  {e:8.2f}  {q:.4f}  {p:8.2f}")
    if ex is not None:
        ex.shutdown()


if __name__ == "__main__":
    main()
