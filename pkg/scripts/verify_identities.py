"""Sweep the structural identities over the builtin models and print a table:
bracket validation, tensoriality of the curvature form, Bochner residuals,
and the commutator [L, Z]."""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from srcurv import models
from srcurv.bochner import bochner_residuals
from srcurv.calculus import ScalarField, commutator_LZ_residual
from srcurv.curvature import r_form
from srcurv.polynomials import scaled_random_polynomial
from srcurv.structure import validate_structure


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--fields", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"{'model':14s} {'bracket':>10s} {'tensoriality':>13s} "
          f"{'bochner H':>10s} {'bochner V':>10s} {'[L,Z]':>10s}")
    for name in models.BUILTIN_NAMES:
        md = models.build(name)
        s = md.structure
        pts = md.sample_points(args.points, rng)
        rep = validate_structure(s, pts, 1e-9)
        bracket = max(rep.bracket_xx_residual.max(), rep.bracket_xz_residual.max())
        tens = np.abs(r_form(s, pts, route="structural")
                      - r_form(s, pts, route="tensorial")).max()
        ctr = md.reference_box.mean(axis=1)
        hw = (md.reference_box[:, 1] - md.reference_box[:, 0]) / 2
        worst_h = worst_v = worst_c = 0.0
        for _ in range(args.fields):
            f = ScalarField.from_polynomial(
                scaled_random_polynomial(s.chart_dim, 4, rng, ctr, hw))
            sub = md.sample_points(5, rng)
            br = bochner_residuals(s, f, sub)
            worst_h = max(worst_h, np.abs(br.horizontal).max())
            worst_v = max(worst_v, np.abs(br.vertical).max())
            if s.v:
                worst_c = max(worst_c, np.abs(commutator_LZ_residual(s, f, sub)).max())
        print(f"{name:14s} {bracket:10.2e} {tens:13.2e} "
              f"{worst_h:10.2e} {worst_v:10.2e} {worst_c:10.2e}")


if __name__ == "__main__":
    main()
