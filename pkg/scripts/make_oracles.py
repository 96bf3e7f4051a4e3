"""Regenerate the frozen oracle files under tests/data.

The oracle integrates every pulse segment with ``scipy.linalg.expm`` on the
raw 2x2 Hamiltonian and computes F_QS / F_QC straight from their unitary
forms, sharing no code with the package beyond the segment table.

    python3 scripts/make_oracles.py
"""

import json
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0 + 0j, -1.0])

# (angle / pi, phase / pi) in time order
COMPOSITE = [(0.5, 0.0), (1.12, 0.5), (0.44, -0.5), (1.12, 0.5), (0.5, 0.0)]
RECT = [(1.0, 0.0)]


def propagator(segments, r, eps=0.0):
    u = np.eye(2, dtype=complex)
    for a, ph in segments:
        h = 0.5 * r * SZ + 0.5 * (1 + eps) * (np.cos(ph * np.pi) * SX + np.sin(ph * np.pi) * SY)
        u = expm(-1j * h * a * np.pi) @ u
    return u


def fqs(u):
    return 0.5 - np.trace(SZ @ u @ SZ @ u.conj().T).real / 4


def fqc(u, v):
    return abs(np.trace(v @ u.conj().T)) / 2


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    rs = np.linspace(0.0, 1.0, 101)
    lines = ["# oracle: scipy.linalg.expm per segment, eps = 0", "delta_ratio,f_qs_composite,f_qs_rect"]
    for r in rs:
        lines.append(
            f"{r:.2f},{fqs(propagator(COMPOSITE, r)):.15e},{fqs(propagator(RECT, r)):.15e}"
        )
    (DATA / "composite_fqs_golden.csv").write_text("\n".join(lines) + "\n")

    u0 = propagator(COMPOSITE, 0.0)
    res = minimize_scalar(
        lambda r: fqc(propagator(COMPOSITE, r), u0), bounds=(0.6, 1.0), method="bounded",
        options={"xatol": 1e-10},
    )
    oracle = {
        "f_qc_composite_min_location": float(res.x),
        "f_qc_composite_min_value": float(res.fun),
        "f_qs_rect_at_1p15": float(fqs(propagator(RECT, 1.15))),
        "f_qs_composite_at_1p15": float(fqs(propagator(COMPOSITE, 1.15))),
    }
    (DATA / "oracles.json").write_text(json.dumps(oracle, indent=2, sort_keys=True) + "\n")
    print(json.dumps(oracle, indent=2))


if __name__ == "__main__":
    main()
