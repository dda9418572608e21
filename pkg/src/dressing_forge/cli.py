"""Pipeline driver: parse a JSON scenario, build the seed, apply the dressing
chain, run the verification suite, export geometry and reports.

Scenario files are JSON with ``schema_version`` 1.  Complex numbers are
[re, im] pairs; matrices are row-major arrays of such pairs.  Every tolerance
used by ``verify`` comes from the scenario (``checks.tolerances``) with the
documented defaults below; ``--tol-scale`` multiplies all of them.  Runs are
deterministic: repeated runs on the same scenario produce byte-identical
exports.

Exit codes: 0 all enabled checks pass; 1 check failure; 2 parse error;
3 validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dressing import (dress_extended, dress_permuted, dress_real,
                       dress_spherical, dress_translation, dress_two_pole)
from .errors import (DressingForgeError, RankDeficientError,
                     SphericalViolationError)
from .frames import (ExtendedFrame, PolynomialProfile, SampledProfile,
                     VacuumSeed, metric_from_frame)
from .geometry import (Grid, check_darboux_egoroff, check_lagrangian,
                       check_partial_invariance, check_sphere, limit_net,
                       sample_immersion)
from .linalg import max_abs, project_onto_span
from .loops import pole_tol
from .oracle import PathSpec, integrate_frame
from .report import VerificationReport

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "reality": 1e-10,
    "darboux_egoroff": 1e-4,
    "lagrangian": 1e-10,
    "lagrangian_metric": 1e-10,
    "sphere": 1e-9,
    "partial_invariance": 5e-3,
    "norm_constancy": 1e-10,
    # finite-difference residual, O(grid spacing^2): tighten for fine grids
    "position_equation": 2e-2,
    "potential": 1e-6,
    "metric_real": 1e-9,
    "lambda_zero": 1e-10,
    "lambda_zero_derivative": 1e-7,
    "pde_frame": 1e-6,
    "path_independence": 1e-6,
    "permutability": 1e-9,
}

# checks run by `verify` unless the scenario toggles them; the sphere-type
# checks default on only when the dressed chain keeps |h| constant
BASE_CHECKS = ("reality", "darboux_egoroff", "lagrangian", "position_equation",
               "potential", "metric_real", "lambda_zero", "pde_frame")
SPHERICAL_CHECKS = ("sphere", "partial_invariance")

REALITY_SAMPLE_SEED = 20260809


class ParseError(DressingForgeError):
    pass


class ValidationError(DressingForgeError):
    pass


@dataclass(eq=False)
class Scenario:
    n: int
    seed: VacuumSeed
    grid: Grid
    lambdas: list
    chain: list
    checks: dict
    tolerances: dict
    export: dict | None
    reality_samples: int
    raw: dict = field(repr=False, default_factory=dict)


def _complex_pair(value, rule: str) -> complex:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ValidationError(f"{rule}: complex numbers are [re, im] pairs, got {value!r}")
    return complex(float(value[0]), float(value[1]))


def _complex_matrix(rows, rule: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ValidationError(f"{rule}: expected a row-major matrix of [re, im] pairs")
    out = []
    for row in rows:
        if not isinstance(row, list) or not row:
            raise ValidationError(f"{rule}: expected a row-major matrix of [re, im] pairs")
        out.append([_complex_pair(x, rule) for x in row])
    width = {len(r) for r in out}
    if len(width) != 1:
        raise ValidationError(f"{rule}: ragged matrix rows")
    return np.array(out, dtype=complex)


def parse_scenario(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed scenario JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("scenario root must be a JSON object")
    return raw


def _build_seed(n: int, spec) -> VacuumSeed:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValidationError("seed: must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "constant":
        radii = spec.get("radii")
        if not isinstance(radii, list) or len(radii) != n:
            raise ValidationError(f"seed.radii: need {n} positive radii")
        if any(not isinstance(r, (int, float)) or r <= 0 for r in radii):
            raise ValidationError("seed.radii: radii must be positive numbers")
        return VacuumSeed.constant(radii)
    if kind in ("polynomial", "sampled"):
        profs = spec.get("profiles")
        if not isinstance(profs, list) or len(profs) != n:
            raise ValidationError(f"seed.profiles: need {n} per-axis profiles")
        built = []
        for j, p in enumerate(profs):
            try:
                if kind == "polynomial":
                    built.append(PolynomialProfile(tuple(p["coeffs"]), tuple(p["domain"])))
                else:
                    built.append(SampledProfile(tuple(p["knots"]), tuple(p["values"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValidationError(f"seed.profiles[{j}]: {exc}") from exc
        return VacuumSeed(tuple(built))
    raise ValidationError(f"seed.type: unknown seed type {kind!r}")


def _chain_poles(chain) -> list:
    poles = []
    for entry in chain:
        kind = entry["type"]
        if kind in ("real_one_pole", "spherical"):
            poles.append(1j * entry["alpha"])
        elif kind == "one_pole":
            poles.append(entry["z"])
        elif kind == "two_pole":
            poles.append(entry["z"])
            poles.append(-np.conj(entry["z"]))
        elif kind == "translation":
            poles.append(1j * entry["alpha"])
    return poles


def _validate_chain(n: int, chain_spec) -> list:
    if chain_spec is None:
        return []
    if not isinstance(chain_spec, list):
        raise ValidationError("chain: must be a list of factor specs")
    chain = []
    for i, entry in enumerate(chain_spec):
        where = f"chain[{i}]"
        if not isinstance(entry, dict) or "type" not in entry:
            raise ValidationError(f"{where}: each factor spec needs a 'type'")
        kind = entry["type"]
        out = {"type": kind}
        if kind in ("real_one_pole", "spherical", "translation"):
            alpha = entry.get("alpha")
            if not isinstance(alpha, (int, float)) or alpha == 0:
                raise ValidationError(f"{where}.alpha: must be nonzero real (rule: alpha != 0)")
            out["alpha"] = float(alpha)
        if kind in ("real_one_pole", "spherical", "one_pole", "two_pole"):
            span = _complex_matrix(entry.get("span"), f"{where}.span")
            if span.shape[0] != n:
                raise ValidationError(f"{where}.span: need {n} rows, got {span.shape[0]}")
            try:
                projection = project_onto_span(span)
            except RankDeficientError as exc:
                raise ValidationError(f"{where}.span: {exc} (rule: projection well-formed)") from exc
            if kind in ("real_one_pole", "spherical") and not projection.is_real:
                raise ValidationError(
                    f"{where}.span: real one-pole factors need a real projection "
                    "(rule: conjugation-invariant image)")
            out["projection"] = projection
        if kind in ("one_pole", "two_pole"):
            z = _complex_pair(entry.get("z"), f"{where}.z")
            if abs(z.imag) < 1e-12:
                raise ValidationError(f"{where}.z: pole must lie off the real axis")
            if kind == "two_pole" and abs(z.real) < 1e-12:
                raise ValidationError(f"{where}.z: two-pole factor needs Re z != 0 and Im z != 0")
            out["z"] = z
        if kind == "translation":
            b = entry.get("b")
            if (not isinstance(b, list) or len(b) != n
                    or any(not isinstance(x, (int, float)) for x in b)):
                raise ValidationError(f"{where}.b: must be a real vector of length {n}")
            out["b"] = np.asarray(b, dtype=float)
        if kind not in ("real_one_pole", "spherical", "one_pole", "two_pole", "translation"):
            raise ValidationError(f"{where}.type: unknown factor type {kind!r}")
        chain.append(out)
    return chain


def validate_scenario(raw: dict) -> Scenario:
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    n = raw.get("n")
    if not isinstance(n, int) or not 2 <= n <= 8:
        raise ValidationError("n: dimension must be an integer in [2, 8]")

    seed = _build_seed(n, raw.get("seed"))

    grid_spec = raw.get("grid")
    if not isinstance(grid_spec, list) or len(grid_spec) != n:
        raise ValidationError(f"grid: need {n} per-axis [min, max, points] triples")
    for j, g in enumerate(grid_spec):
        if not isinstance(g, list) or len(g) != 3 or g[0] >= g[1] or int(g[2]) < 2:
            raise ValidationError(f"grid[{j}]: expected [min, max, points] with min < max, points >= 2")
        if not g[0] <= 0.0 <= g[1]:
            raise ValidationError(f"grid[{j}]: grid must contain the origin (path integrals anchor at u = 0)")
    grid = Grid.from_specs([(g[0], g[1], int(g[2])) for g in grid_spec])

    lambdas_spec = raw.get("lambdas", [[1.0, 0.0]])
    lambdas = [_complex_pair(v, "lambdas") for v in lambdas_spec]

    chain = _validate_chain(n, raw.get("chain"))
    poles = _chain_poles(chain)
    for i, p in enumerate(poles):
        for q in poles[:i]:
            if abs(p - q) <= pole_tol(p):
                raise ValidationError(
                    f"chain: poles {p} and {q} collide (rule: distinct factor poles)")
    for lam in lambdas:
        for p in poles:
            if abs(lam - p) <= pole_tol(p):
                raise ValidationError(
                    f"lambdas: {lam} sits on chain pole {p} (rule: lambda list avoids chain poles)")

    checks_spec = raw.get("checks", {})
    if not isinstance(checks_spec, dict):
        raise ValidationError("checks: must be an object of name -> bool toggles")
    tolerances = dict(DEFAULT_TOLERANCES)
    tol_spec = checks_spec.get("tolerances", {})
    for k, v in tol_spec.items():
        if k not in DEFAULT_TOLERANCES:
            raise ValidationError(f"checks.tolerances.{k}: unknown tolerance name")
        tolerances[k] = float(v)
    # tri-state toggles: True/False when the scenario says so, None = decide
    # from applicability (sphere-type checks need a partial-invariant chain)
    enabled = {}
    for name in list(DEFAULT_TOLERANCES):
        if name in ("lagrangian_metric", "norm_constancy", "lambda_zero_derivative",
                    "path_independence", "permutability"):
            continue  # sub-tolerances of other checks
        value = checks_spec.get(name)
        if value is not None and not isinstance(value, bool):
            raise ValidationError(f"checks.{name}: toggle must be true or false")
        enabled[name] = value if value is not None else (None if name in SPHERICAL_CHECKS
                                                         else name in BASE_CHECKS)

    export = raw.get("export")
    if export is not None:
        if not isinstance(export, dict):
            raise ValidationError("export: must be an object")
        fmt = export.get("format")
        if fmt not in ("csv", "obj"):
            raise ValidationError("export.format: must be 'csv' or 'obj'")
        lam = _complex_pair(export.get("lambda", [1.0, 0.0]), "export.lambda")
        export = dict(export)
        export["lambda"] = lam
        slice_axes = export.get("slice_axes", list(range(min(2, n))))
        if (not isinstance(slice_axes, list)
                or any(not isinstance(a, int) or not 0 <= a < n for a in slice_axes)):
            raise ValidationError(f"export.slice_axes: axis indices must lie in [0, {n})")
        export["slice_axes"] = slice_axes
        fixed = {int(k): float(v) for k, v in export.get("fixed", {}).items()}
        for a in fixed:
            if not 0 <= a < n:
                raise ValidationError(f"export.fixed: axis {a} out of range (referenced axes < n)")
        export["fixed"] = fixed
        if fmt == "obj":
            if len(slice_axes) != 2:
                raise ValidationError("export.slice_axes: OBJ export needs exactly two slice axes")
            comps = export.get("obj_components", [0, min(1, n - 1)])
            if (not isinstance(comps, list) or len(comps) != 2
                    or any(not isinstance(c, int) or not 0 <= c < n for c in comps)):
                raise ValidationError(f"export.obj_components: need two component indices in [0, {n})")
            export["obj_components"] = comps

    reality_samples = int(raw.get("reality_samples", 50))

    return Scenario(n=n, seed=seed, grid=grid, lambdas=lambdas, chain=chain,
                    checks=enabled, tolerances=tolerances, export=export,
                    reality_samples=reality_samples, raw=raw)


def load_scenario(path) -> Scenario:
    return validate_scenario(parse_scenario(path))


def apply_chain(scenario: Scenario) -> ExtendedFrame:
    frame = ExtendedFrame(scenario.seed)
    for i, entry in enumerate(scenario.chain):
        kind = entry["type"]
        try:
            if kind == "real_one_pole":
                frame = dress_real(frame, entry["alpha"], entry["projection"])
            elif kind == "spherical":
                frame = dress_spherical(frame, entry["alpha"], entry["projection"])
            elif kind == "one_pole":
                frame = dress_extended(frame, entry["z"], entry["projection"])
            elif kind == "two_pole":
                frame = dress_two_pole(frame, entry["z"], entry["projection"])
            elif kind == "translation":
                frame = dress_translation(frame, entry["alpha"], entry["b"])
        except SphericalViolationError as exc:
            raise ValidationError(
                f"chain[{i}]: sphere-preservation condition violated: {exc} "
                "(rule: projection image orthogonal to h(0))") from exc
    return frame


def _chain_sigma_compatible(frame: ExtendedFrame) -> bool:
    return all(rec.is_sigma_compatible for rec in frame.history)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _reality_check(frame, scenario, tol) -> VerificationReport:
    rng = np.random.default_rng(REALITY_SAMPLE_SEED)
    guard = [p for q in frame.sensitive_points()
             for p in (q, -q, np.conj(q), -np.conj(q))]
    lo = [a[0] for a in scenario.grid.axes]
    hi = [a[-1] for a in scenario.grid.axes]
    tau = 0.0
    sigma = 0.0
    sigma_ok = _chain_sigma_compatible(frame)
    eye = np.eye(frame.n)
    count = 0
    while count < scenario.reality_samples:
        lam = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if any(abs(lam - p) < 0.05 for p in guard):
            continue
        u = np.array([rng.uniform(l, h) for l, h in zip(lo, hi)])
        E = frame.E(u, lam)
        tau = max(tau, max_abs(frame.E(u, np.conj(lam)).conj().T @ E - eye))
        if sigma_ok:
            sigma = max(sigma, max_abs(E.T @ frame.E(u, -lam) - eye))
        count += 1
    report = VerificationReport()
    report.add("reality_tau", tau, tol, samples=scenario.reality_samples)
    if sigma_ok:
        report.add("reality_sigma", sigma, tol, samples=scenario.reality_samples)
    else:
        report.add("reality_sigma_skipped", 0.0, None,
                   reason="history contains sigma-incompatible factors")
    return report


def _position_equation_check(frame, grid, lambdas, tol) -> VerificationReport:
    report = VerificationReport()
    lams = [lam for lam in lambdas if abs(lam.imag) < 1e-14] or [1.0]
    lam = lams[0].real if isinstance(lams[0], complex) else float(lams[0])
    sample = sample_immersion(frame, grid, lam)
    pts = grid.points()
    worst = 0.0
    n = grid.n
    for axis in range(n):
        dX = np.gradient(sample.X, grid.spacing(axis), axis=axis, edge_order=2)
        for idx in grid.indices():
            u = pts[idx]
            E = frame.E(u, lam)
            h = frame.h(u)
            worst = max(worst, max_abs(dX[idx] - h[axis] * E[:, axis]))
    report.add("position_equation", worst, tol, lam=lam)
    return report


def _pde_frame_check(frame, grid, lambdas, tol, path_tol, step) -> VerificationReport:
    report = VerificationReport()
    lams = [lam for lam in lambdas if abs(lam) > 1e-12] or [complex(1.0)]
    lam = lams[0]
    n = frame.n
    corner = np.array([0.6 * a[-1] for a in grid.axes])
    path = PathSpec.staircase(corner)
    E_num, X_num = integrate_frame(n, frame.beta, frame.h, lam, path, step)
    E_ref, X_ref = frame.evaluate(corner, lam)
    residual = max(max_abs(E_num - E_ref), max_abs(X_num - X_ref))
    report.add("pde_frame", residual, tol, step=step, lam=str(lam))
    path_rev = PathSpec.staircase(corner, order=range(n - 1, -1, -1))
    E_rev, X_rev = integrate_frame(n, frame.beta, frame.h, lam, path_rev, step)
    report.add("path_independence", max(max_abs(E_num - E_rev), max_abs(X_num - X_rev)),
               path_tol, step=step)
    return report


def run_verification(scenario: Scenario, frame: ExtendedFrame,
                     tol_scale: float = 1.0, step: float | None = None) -> VerificationReport:
    tols = {k: v * tol_scale for k, v in scenario.tolerances.items()}
    step = 1e-2 if step is None else step
    report = VerificationReport()
    checks = dict(scenario.checks)
    grid = scenario.grid

    # sphere-type checks default on exactly when the chain provably keeps the
    # metric partial-invariant; an explicit toggle always wins
    for name in SPHERICAL_CHECKS:
        if checks.get(name) is None:
            checks[name] = frame.is_partial_invariant

    metric = metric_from_frame(frame, grid)

    if checks.get("reality"):
        report.extend(_reality_check(frame, scenario, tols["reality"]))
    if checks.get("metric_real"):
        if _chain_sigma_compatible(frame):
            report.add("metric_real", metric.imag_max, tols["metric_real"])
        else:
            report.add("metric_real_skipped", metric.imag_max, None,
                       reason="history contains sigma-incompatible factors")
    if checks.get("darboux_egoroff"):
        report.extend(check_darboux_egoroff(
            metric, tols["darboux_egoroff"], symmetric=_chain_sigma_compatible(frame)))
    if checks.get("lagrangian"):
        for lam in scenario.lambdas:
            if abs(lam.imag) > 1e-14:
                continue
            sample = sample_immersion(frame, grid, lam.real)
            sub = check_lagrangian(sample, frame, tols["lagrangian"], tols["lagrangian_metric"])
            report.extend(sub, prefix=f"lam={lam.real:g}/")
    if checks.get("sphere"):
        c = frame.h(np.zeros(frame.n)).real
        for lam in scenario.lambdas:
            if abs(lam.imag) > 1e-14 or lam == 0:
                continue
            sample = sample_immersion(frame, grid, lam.real)
            report.extend(check_sphere(sample, c, tols["sphere"]), prefix=f"lam={lam.real:g}/")
    if checks.get("partial_invariance"):
        report.extend(check_partial_invariance(metric, tols["partial_invariance"],
                                               tols["norm_constancy"]))
    if checks.get("position_equation"):
        report.extend(_position_equation_check(frame, grid, scenario.lambdas,
                                               tols["position_equation"]))
    if checks.get("potential"):
        if metric.phi_closed is not None:
            residual = max_abs(metric.phi - metric.phi_closed)
            report.add("potential_agreement", residual, tols["potential"])
        else:
            report.add("potential_skipped", 0.0, None,
                       reason="no closed-form potential for this chain")
    if checks.get("lambda_zero"):
        if _chain_sigma_compatible(frame):
            _, net_report = limit_net(frame, grid, tols["lambda_zero"],
                                      tols["lambda_zero_derivative"])
            report.extend(net_report)
        else:
            report.add("lambda_zero_skipped", 0.0, None,
                       reason="history contains sigma-incompatible factors")
    if checks.get("pde_frame"):
        report.extend(_pde_frame_check(frame, grid, scenario.lambdas,
                                       tols["pde_frame"], tols["path_independence"], step))
    return report


def _slice_points(grid: Grid, slice_axes, fixed):
    """Grid points of the slice: free coordinates run over the listed axes,
    the rest sit at their fixed values (default 0)."""
    free = list(slice_axes)
    shape = tuple(grid.axes[a].size for a in free)
    for idx in np.ndindex(shape):
        u = np.zeros(grid.n)
        for axis, val in fixed.items():
            u[axis] = val
        for a, i in zip(free, idx):
            u[a] = grid.axes[a][i]
        yield u


def export_immersion_csv(frame, grid: Grid, lam: complex, slice_axes, fixed, path) -> int:
    n = grid.n
    header = [f"u{j + 1}" for j in range(n)]
    for j in range(n):
        header += [f"ReX{j + 1}", f"ImX{j + 1}"]
    lines = [",".join(header)]
    for u in _slice_points(grid, slice_axes, fixed):
        X = frame.evaluate(u, lam)[1]
        row = [_fmt(c) for c in u]
        for j in range(n):
            row += [_fmt(X[j].real), _fmt(X[j].imag)]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    return len(lines) - 1


def export_immersion_obj(frame, grid, lam, slice_axes, fixed, components, path) -> int:
    a, b = slice_axes
    ax_a, ax_b = grid.axes[a], grid.axes[b]
    p, q = components
    verts = []
    for ia in range(ax_a.size):
        for ib in range(ax_b.size):
            u = np.zeros(grid.n)
            for axis, val in fixed.items():
                u[axis] = val
            u[a] = ax_a[ia]
            u[b] = ax_b[ib]
            X = frame.evaluate(u, lam)[1]
            verts.append((X[p].real, X[p].imag, X[q].real))
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in verts]
    m = ax_b.size
    for ia in range(ax_a.size - 1):
        for ib in range(m - 1):
            v00 = ia * m + ib + 1
            v01 = v00 + 1
            v10 = v00 + m
            v11 = v10 + 1
            lines.append(f"f {v00} {v10} {v11}")
            lines.append(f"f {v00} {v11} {v01}")
    Path(path).write_text("\n".join(lines) + "\n")
    return len(verts)


def export_metric_csv(metric, path) -> int:
    grid = metric.grid
    n = grid.n
    pts = grid.points()
    header = [f"u{j + 1}" for j in range(n)]
    for j in range(n):
        header += [f"Reh{j + 1}", f"Imh{j + 1}"]
    header += ["Rephi", "Imphi"]
    if metric.phi_closed is not None:
        header.append("phi_closed")
    for i in range(n):
        for j in range(n):
            if i != j:
                header += [f"Rebeta{i + 1}{j + 1}", f"Imbeta{i + 1}{j + 1}"]
    lines = [",".join(header)]
    for idx in grid.indices():
        row = [_fmt(c) for c in pts[idx]]
        for j in range(n):
            row += [_fmt(metric.h[idx][j].real), _fmt(metric.h[idx][j].imag)]
        row += [_fmt(metric.phi[idx].real), _fmt(metric.phi[idx].imag)]
        if metric.phi_closed is not None:
            row.append(_fmt(metric.phi_closed[idx]))
        for i in range(n):
            for j in range(n):
                if i != j:
                    row += [_fmt(metric.beta[idx][i, j].real), _fmt(metric.beta[idx][i, j].imag)]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    return len(lines) - 1


def export_sweep_csv(frame, grid, lambdas, path) -> int:
    n = grid.n
    pts = grid.points()
    header = ["lam_re", "lam_im"] + [f"u{j + 1}" for j in range(n)]
    for j in range(n):
        header += [f"ReX{j + 1}", f"ImX{j + 1}"]
    lines = [",".join(header)]
    for lam in lambdas:
        for idx in grid.indices():
            u = pts[idx]
            X = frame.evaluate(u, lam)[1]
            row = [_fmt(lam.real), _fmt(lam.imag)] + [_fmt(c) for c in u]
            for j in range(n):
                row += [_fmt(X[j].real), _fmt(X[j].imag)]
            lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    return len(lines) - 1


def _write_report(report: VerificationReport, out_dir: Path, name: str, meta: dict):
    payload = {"schema_version": SCHEMA_VERSION, **meta, **report.to_dict()}
    (out_dir / name).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _grid_meta(scenario: Scenario) -> dict:
    return {
        "grid_points": list(scenario.grid.shape),
        "grid_spacing": [scenario.grid.spacing(k) for k in range(scenario.n)],
        "n": scenario.n,
    }


def cmd_seed(scenario: Scenario, out_dir: Path, args) -> int:
    frame = ExtendedFrame(scenario.seed)
    metric = metric_from_frame(frame, scenario.grid)
    count = export_metric_csv(metric, out_dir / "seed_metric.csv")
    print(f"seed metric written: {count} rows -> {out_dir / 'seed_metric.csv'}")
    print(f"spherical seed: {scenario.seed.is_spherical}, h(0) = {scenario.seed.h0()}")
    return 0


def cmd_dress(scenario: Scenario, out_dir: Path, args) -> int:
    frame = apply_chain(scenario)
    metric = metric_from_frame(frame, scenario.grid)
    count = export_metric_csv(metric, out_dir / "metric.csv")
    print(f"dressed metric written: {count} rows -> {out_dir / 'metric.csv'}")
    print(f"chain length {len(scenario.chain)}; metric real: {metric.is_real} "
          f"(max imag {metric.imag_max:.2e}); h positive: {metric.h_positive}")
    if not metric.h_positive and metric.is_real:
        print("warning: h <= 0 somewhere on the grid (left the immersion chart)")
    return 0


def cmd_verify(scenario: Scenario, out_dir: Path, args) -> int:
    frame = apply_chain(scenario)
    report = run_verification(scenario, frame, tol_scale=args.tol_scale, step=args.step)
    _write_report(report, out_dir, "report.json", _grid_meta(scenario))
    print(report)
    if not report.passed:
        failing = ", ".join(c.name for c in report.failures())
        print(f"FAILED checks: {failing}", file=sys.stderr)
        return 1
    return 0


def cmd_export(scenario: Scenario, out_dir: Path, args) -> int:
    if scenario.export is None:
        raise ValidationError("export: scenario has no export block")
    frame = apply_chain(scenario)
    spec = scenario.export
    lam = spec["lambda"]
    out_path = out_dir / spec.get("path", f"immersion.{spec['format']}")
    if spec["format"] == "csv":
        count = export_immersion_csv(frame, scenario.grid, lam,
                                     spec["slice_axes"], spec["fixed"], out_path)
        print(f"immersion CSV written: {count} rows -> {out_path}")
    else:
        count = export_immersion_obj(frame, scenario.grid, lam, spec["slice_axes"],
                                     spec["fixed"], spec["obj_components"], out_path)
        print(f"immersion OBJ written: {count} vertices -> {out_path}")
    return 0


def cmd_sweep(scenario: Scenario, out_dir: Path, args) -> int:
    frame = apply_chain(scenario)
    count = export_sweep_csv(frame, scenario.grid, scenario.lambdas, out_dir / "sweep.csv")
    print(f"sweep written: {count} rows over {len(scenario.lambdas)} lambda values "
          f"-> {out_dir / 'sweep.csv'}")
    for lam in scenario.lambdas:
        if lam == 0:
            worst = 0.0
            pts = scenario.grid.points()
            for idx in scenario.grid.indices():
                worst = max(worst, max_abs(frame.evaluate(pts[idx], 0.0)[1].imag))
            print(f"lambda=0 slice max |Im X| = {worst:.3e}")
    return 0


def cmd_permute_check(scenario: Scenario, out_dir: Path, args) -> int:
    one_pole_entries = [e for e in scenario.chain
                        if e["type"] in ("real_one_pole", "spherical", "one_pole")]
    if len(one_pole_entries) < 2:
        raise ValidationError("permute-check: scenario chain needs at least two one-pole factors")
    e1, e2 = one_pole_entries[:2]
    z1 = e1.get("z", 1j * e1.get("alpha", 0.0))
    z2 = e2.get("z", 1j * e2.get("alpha", 0.0))
    frame = ExtendedFrame(scenario.seed)
    tol = scenario.tolerances["permutability"] * args.tol_scale
    f12, f21, report = dress_permuted(frame, z1, e1["projection"], z2, e2["projection"],
                                      tol=tol)
    _write_report(report, out_dir, "permute_report.json", _grid_meta(scenario))
    print("permutability discrepancy table:")
    for c in report.checks:
        print(f"  {c}")
    return 0 if report.passed else 1


def cmd_run(scenario: Scenario, out_dir: Path, args) -> int:
    """Full pipeline: dressed metric tables, immersion exports, verification."""
    frame = apply_chain(scenario)
    metric = metric_from_frame(frame, scenario.grid)
    export_metric_csv(metric, out_dir / "metric.csv")
    if scenario.export is not None:
        cmd_export(scenario, out_dir, args)
    report = run_verification(scenario, frame, tol_scale=args.tol_scale, step=args.step)
    _write_report(report, out_dir, "report.json", _grid_meta(scenario))
    print(report)
    if not report.passed:
        failing = ", ".join(c.name for c in report.failures())
        print(f"FAILED checks: {failing}", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "seed": cmd_seed,
    "dress": cmd_dress,
    "verify": cmd_verify,
    "export": cmd_export,
    "sweep": cmd_sweep,
    "permute-check": cmd_permute_check,
    "run": cmd_run,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dressing-forge",
        description="Flat Lagrangian immersions and Egoroff nets by loop-group dressing")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="path to a JSON scenario file")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--step", type=float, default=None,
                       help="RK4 step for the PDE cross-checks (default 1e-2)")
        p.add_argument("--tol-scale", type=float, default=1.0, dest="tol_scale",
                       help="multiply every verification tolerance by this factor")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](scenario, out_dir, args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except DressingForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
