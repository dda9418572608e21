#!/usr/bin/env python3
"""Build a small gallery of dressed flat Lagrangian surfaces and Egoroff nets
from the flat-torus vacuum and export them as OBJ/CSV meshes.

Usage: python scripts/soliton_gallery.py [--out gallery_out] [--points 41]
"""

import argparse
from pathlib import Path

import numpy as np

from dressing_forge import (ExtendedFrame, Grid, VacuumSeed, dress_real,
                            dress_spherical, dress_translation,
                            dress_two_pole, metric_from_frame,
                            project_onto_span)
from dressing_forge.cli import export_immersion_obj, export_metric_csv


def build_cases():
    vacuum = ExtendedFrame(VacuumSeed.constant([1.0, 0.7]))
    pi_diag = project_onto_span(np.array([1.0, 1.0]) / np.sqrt(2))
    pi_perp = project_onto_span(np.array([0.7, -1.0]) / np.linalg.norm([0.7, -1.0]))
    pi_cplx = project_onto_span(np.array([1.0, 0.5 - 0.25j]))
    cases = {
        "flat_torus": vacuum,
        "one_soliton": dress_real(vacuum, 0.6, pi_diag),
        "spherical_soliton": dress_spherical(vacuum, 0.8, pi_perp),
        "breather": dress_two_pole(vacuum, 0.4 + 0.8j, pi_cplx),
        "soliton_translated": dress_translation(dress_real(vacuum, 0.6, pi_diag),
                                                0.9, np.array([0.15, -0.2])),
    }
    return cases


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="gallery_out")
    ap.add_argument("--points", type=int, default=41, help="grid points per axis")
    ap.add_argument("--lam", type=float, default=0.9, help="family parameter")
    ap.add_argument("--half-width", type=float, default=0.9)
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = Grid.from_specs([(-args.half_width, args.half_width, args.points)] * 2)

    for name, frame in build_cases().items():
        metric = metric_from_frame(frame, grid)
        rows = export_metric_csv(metric, out / f"{name}_metric.csv")
        verts = export_immersion_obj(frame, grid, args.lam, (0, 1), {}, (0, 1),
                                     out / f"{name}.obj")
        status = "ok" if metric.h_positive else "left immersion chart"
        print(f"{name:20s} lam={args.lam:g}: {verts} vertices, {rows} metric rows "
              f"(h > 0: {status}, max |Im| {metric.imag_max:.1e})")

        # the lambda -> 0 net, exported as a flat mesh in R^2 x {0}
        net_verts = []
        pts = grid.points()
        for idx in grid.indices():
            X0 = frame.evaluate(pts[idx], 0.0)[1]
            net_verts.append((X0[0].real, X0[1].real))
        lines = [f"v {x:.17g} {y:.17g} 0" for x, y in net_verts]
        m = grid.shape[1]
        for ia in range(grid.shape[0] - 1):
            for ib in range(m - 1):
                v00 = ia * m + ib + 1
                lines.append(f"f {v00} {v00 + m} {v00 + m + 1}")
                lines.append(f"f {v00} {v00 + m + 1} {v00 + 1}")
        (out / f"{name}_net.obj").write_text("\n".join(lines) + "\n")

    print(f"gallery written to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
