"""Batch front door: JSON config in, CSV/JSON artifacts out, deterministic
exit codes (0 ok, 2 config error, 3 numerical failure, 4 failed verdict).
"""

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import constants, convergence, kernels, spectral
from .assembly import assemble_forms, build_mesh, export_matrix
from .fields import CATALOG, catalog_field
from .levy_operator import apply_L, apply_N
from .solvers import (ComplementProblem, IncompatibleDataError, solve_dirichlet,
                      solve_helmholtz, solve_mixed, solve_neumann, solve_robin)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERDICT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

_SCHEMA = {
    "command": None,
    "kernel": {"family", "alpha", "normalization", "beta", "eps", "eps0", "p", "d", "base"},
    "domain": {"a", "b", "n", "collar", "tail_mode", "quad_order"},
    "problem": {"kind", "f", "g", "g_D", "g_N", "beta", "K", "weight_kind",
                "lambda", "condition", "D_fraction"},
    "apply": {"function", "points", "operator"},
    "eigs": {"condition", "k", "beta", "K", "weight_kind"},
    "evolve": {"equation", "T", "samples", "u0", "u0_mode", "u1_mode", "condition", "k"},
    "dtn": {"lambda", "K", "weight_kind", "link_modes"},
    "sweep": {"experiment", "grid", "u", "p", "points_delta", "normalization",
              "kind", "n", "collar", "k", "condition"},
    "constants": {"name", "d", "parameter"},
    "output": {"dir", "prefix", "matrices"},
    "tolerances": {"compat", "resonance_gap", "fredholm"},
    "threads": None,
}


def validate_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key, val in cfg.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        allowed = _SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(val, dict):
            raise ConfigError(f"config block {key!r} must be an object")
        for sub in val:
            if sub not in allowed:
                raise ConfigError(f"unknown key {key}.{sub}")
    if "command" not in cfg:
        raise ConfigError("config needs a 'command'")
    return cfg


def _field_from_cfg(spec):
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        return catalog_field("constant", value=float(spec))
    if isinstance(spec, dict):
        name = spec.get("name")
        if name not in CATALOG:
            raise ConfigError(f"unknown catalog function {name!r}")
        params = {k: v for k, v in spec.items() if k != "name"}
        return catalog_field(name, **params)
    raise ConfigError(f"cannot interpret function spec {spec!r}")


def _kernel_from_cfg(block):
    if not block or "family" not in block:
        raise ConfigError("kernel block with a 'family' is required")
    params = dict(block)
    family = params.pop("family")
    if family == "fractional":
        params.setdefault("normalization", "exact")
    try:
        return kernels.make_kernel(family, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad kernel parameters: {exc}") from exc


def _mesh_from_cfg(block):
    block = block or {}
    try:
        return build_mesh(block.get("a", 0.0), block.get("b", 1.0),
                          int(block.get("n", 128)), block.get("collar", 2.0))
    except ValueError as exc:
        raise ConfigError(f"bad domain: {exc}") from exc


# ---------------------------------------------------------------------------
# artifact emission
# ---------------------------------------------------------------------------

def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("%.17g" % v if isinstance(v, float) else str(v)
                              for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, payload):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _report_base(cfg):
    import scipy

    return {
        "config": cfg,
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__,
                     "package": "nonlocal-cvp 0.1.0"},
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_constants(cfg, outdir, prefix):
    block = cfg.get("constants", {})
    name = block.get("name", "cd_alpha")
    d = int(block.get("d", 1))
    parameter = float(block.get("parameter", 1.0))
    rep = constants.constant_report(name, d, parameter)
    payload = _report_base(cfg)
    payload["constant"] = {
        "name": rep.name, "d": rep.d, "parameter": rep.parameter,
        "value": rep.value, "quadrature_value": rep.quadrature_value,
        "abs_gap": rep.abs_gap,
        "provenance": "closed Gamma-function form; quadrature cross-check in d=1",
    }
    write_json(os.path.join(outdir, f"{prefix}_constants.json"), payload)
    return EXIT_OK


def _cmd_apply(cfg, outdir, prefix):
    kernel = _kernel_from_cfg(cfg.get("kernel"))
    block = cfg.get("apply", {})
    u = _field_from_cfg(block.get("function"))
    if u is None:
        raise ConfigError("apply needs a function")
    pts = block.get("points")
    if not isinstance(pts, list) or not pts:
        raise ConfigError("apply needs a nonempty point list")
    op = block.get("operator", "L")
    dom = cfg.get("domain", {})
    rows = []
    for x in pts:
        if op == "L":
            val = apply_L(kernel, u, float(x))
        elif op == "N":
            val = apply_N(kernel, (dom.get("a", 0.0), dom.get("b", 1.0)), u, float(x))
        else:
            raise ConfigError(f"unknown operator {op!r}")
        rows.append((float(x), float(val)))
    write_csv(os.path.join(outdir, f"{prefix}_apply.csv"), ["x", "value"], rows)
    payload = _report_base(cfg)
    payload["operator"] = op
    write_json(os.path.join(outdir, f"{prefix}_apply.json"), payload)
    return EXIT_OK


def _problem_from_cfg(cfg, forms):
    block = cfg.get("problem", {})
    kind = block.get("kind", "neumann")
    kernel = forms.kernel
    K_int = tuple(block.get("K", (0.25, 0.75)))
    wkind = block.get("weight_kind", "essinf")
    weight = kernels.WeightSpec(kernel, K_int, wkind)
    kwargs = dict(
        f=_field_from_cfg(block.get("f")),
        g=_field_from_cfg(block.get("g")),
        lam=float(block.get("lambda", 0.0)),
        helmholtz_condition=block.get("condition", "neumann"),
    )
    if kind == "robin":
        kwargs["beta"] = block.get("beta", 1.0)
        kwargs["robin_weight"] = weight
    if kind == "mixed":
        comp = forms.mesh.complement
        frac = float(block.get("D_fraction", 0.5))
        n_d = max(1, int(frac * comp.size))
        kwargs["D_nodes"] = comp[:n_d]
        kwargs["N_nodes"] = comp[n_d:]
        kwargs["g_D"] = _field_from_cfg(block.get("g_D"))
        kwargs["g_N"] = _field_from_cfg(block.get("g_N"))
    tol = cfg.get("tolerances", {}).get("compat")
    return ComplementProblem(forms, kind, compat_tol=tol, **kwargs)


def _cmd_solve(cfg, outdir, prefix):
    import time

    kernel = _kernel_from_cfg(cfg.get("kernel"))
    dom = cfg.get("domain", {})
    mesh = _mesh_from_cfg(dom)
    t0 = time.perf_counter()
    forms = assemble_forms(mesh, kernel, quad_order=int(dom.get("quad_order", 8)),
                           tail_mode=dom.get("tail_mode", "drop"))
    t_assembly = time.perf_counter() - t0
    problem = _problem_from_cfg(cfg, forms)
    solver = {"dirichlet": solve_dirichlet, "neumann": solve_neumann,
              "robin": solve_robin, "mixed": solve_mixed,
              "helmholtz": solve_helmholtz}[problem.kind]
    from .solvers import variational_residual

    t0 = time.perf_counter()
    u = solver(problem)
    t_solve = time.perf_counter() - t0
    rows = [(float(x), float(v)) for x, v in zip(mesh.nodes, u.coeffs)]
    write_csv(os.path.join(outdir, f"{prefix}_solution.csv"), ["node", "value"], rows)
    payload = _report_base(cfg)
    payload["report"] = {
        "kind": problem.kind,
        "compatibility_residual": (float(np.abs(problem.load().sum()))
                                   if problem.kind == "neumann" else None),
        "variational_residual": float(variational_residual(problem, u)),
        "timings": {"assembly_s": t_assembly, "solve_s": t_solve},
        "provenance": "Galerkin solve of the half-weighted nonlocal form",
    }
    if cfg.get("output", {}).get("matrices"):
        export_matrix(os.path.join(outdir, f"{prefix}_stiffness.txt"), forms.E, "E")
    write_json(os.path.join(outdir, f"{prefix}_solve.json"), payload)
    return EXIT_OK


def _cmd_eigs(cfg, outdir, prefix):
    kernel = _kernel_from_cfg(cfg.get("kernel"))
    dom = cfg.get("domain", {})
    mesh = _mesh_from_cfg(dom)
    forms = assemble_forms(mesh, kernel, quad_order=int(dom.get("quad_order", 8)),
                           tail_mode=dom.get("tail_mode", "drop"))
    block = cfg.get("eigs", {})
    condition = block.get("condition", "neumann")
    k = int(block.get("k", 6))
    kw = {}
    if condition == "robin":
        kw = dict(beta=block.get("beta", 1.0),
                  robin_weight=kernels.WeightSpec(kernel, tuple(block.get("K", (0.25, 0.75))),
                                                  block.get("weight_kind", "essinf")))
    spec = spectral.eig(forms, condition, k=k, **kw)
    rows = [(j, float(v)) for j, v in enumerate(spec.values)]
    write_csv(os.path.join(outdir, f"{prefix}_eigenvalues.csv"), ["index", "value"], rows)
    vec_rows = []
    for i, x in enumerate(mesh.nodes):
        vec_rows.append((float(x), *[float(v.coeffs[i]) for v in spec.vectors]))
    write_csv(os.path.join(outdir, f"{prefix}_eigenvectors.csv"),
              ["node"] + [f"mode{j}" for j in range(len(spec))], vec_rows)
    payload = _report_base(cfg)
    payload["report"] = {
        "condition": condition,
        "rayleigh_residual": float(spectral.rayleigh_residual(forms, spec, **kw)),
        "values": [float(v) for v in spec.values],
    }
    write_json(os.path.join(outdir, f"{prefix}_eigs.json"), payload)
    return EXIT_OK


def _cmd_evolve(cfg, outdir, prefix):
    kernel = _kernel_from_cfg(cfg.get("kernel"))
    dom = cfg.get("domain", {})
    mesh = _mesh_from_cfg(dom)
    forms = assemble_forms(mesh, kernel, quad_order=int(dom.get("quad_order", 8)),
                           tail_mode=dom.get("tail_mode", "drop"))
    block = cfg.get("evolve", {})
    condition = block.get("condition", "neumann")
    spec = spectral.eig(forms, condition, k=block.get("k"))
    if "u0_mode" in block:
        u0 = spec.vectors[int(block["u0_mode"])]
    else:
        fld = _field_from_cfg(block.get("u0"))
        if fld is None:
            raise ConfigError("evolve needs u0 or u0_mode")
        from .assembly import DiscreteField
        u0 = DiscreteField(mesh, fld(mesh.nodes))
    T = float(block.get("T", 1.0))
    samples = int(block.get("samples", 32))
    eq = block.get("equation", "heat")
    if eq == "heat":
        times, traj = spectral.evolve_heat(spec, u0, T, samples)
        frames = [f.coeffs for f in traj]
    elif eq == "schrodinger":
        times, arr = spectral.evolve_schrodinger(spec, u0, T, samples)
        frames = [np.abs(row) for row in arr]
    elif eq == "wave":
        u1 = spec.vectors[int(block["u1_mode"])] if "u1_mode" in block else \
            spectral.DiscreteField(mesh, np.zeros(mesh.n_nodes))
        times, traj, _vel = spectral.evolve_wave(spec, u0, u1, T, samples)
        frames = [f.coeffs for f in traj]
    else:
        raise ConfigError(f"unknown equation {eq!r}")
    rows = []
    for t, frame in zip(times, frames):
        rows.append((float(t), *[float(v) for v in frame]))
    write_csv(os.path.join(outdir, f"{prefix}_evolution.csv"),
              ["t"] + [f"n{i}" for i in range(mesh.n_nodes)], rows)
    payload = _report_base(cfg)
    payload["report"] = {"equation": eq, "modes": len(spec)}
    write_json(os.path.join(outdir, f"{prefix}_evolve.json"), payload)
    return EXIT_OK


def _cmd_dtn(cfg, outdir, prefix):
    kernel = _kernel_from_cfg(cfg.get("kernel"))
    dom = cfg.get("domain", {})
    mesh = _mesh_from_cfg(dom)
    forms = assemble_forms(mesh, kernel, quad_order=int(dom.get("quad_order", 8)),
                           tail_mode=dom.get("tail_mode", "drop"))
    block = cfg.get("dtn", {})
    dtn = spectral.dtn_matrix(forms, lam=float(block.get("lambda", 0.0)))
    export_matrix(os.path.join(outdir, f"{prefix}_dtn.txt"), dtn.matrix, "DtN")
    D = dtn.matrix
    payload = _report_base(cfg)
    payload["report"] = {
        "lambda": dtn.lam,
        "symmetry_gap": float(np.abs(D - D.T).max() / max(np.abs(D).max(), 1e-300)),
        "annihilates_constants": float(np.abs(D @ np.ones(D.shape[0])).max()),
        "trace_nodes": int(D.shape[0]),
    }
    write_json(os.path.join(outdir, f"{prefix}_dtn.json"), payload)
    return EXIT_OK


def _cmd_sweep(cfg, outdir, prefix):
    block = cfg.get("sweep", {})
    experiment = block.get("experiment")
    grid = block.get("grid")
    fam = convergence.fractional_family(block.get("normalization", "exact"))
    if experiment == "bbm":
        u = _field_from_cfg(block.get("u", {"name": "monomial", "degree": 1}))
        report = convergence.bbm_sweep((0.0, 1.0), u, float(block.get("p", 2.0)),
                                       grid or [0.8, 0.9, 0.95, 0.99])
    elif experiment == "collapse":
        u = _field_from_cfg(block.get("u", {"name": "gaussian"}))
        report = convergence.collapse_check((0.0, 1.0), u, fam,
                                            grid or [1.0, 1.5, 1.9, 1.99])
    elif experiment == "poincare":
        report = convergence.sharp_constant_sweep(
            (0.0, 1.0), fam, grid or [1.5, 1.8, 1.9, 1.95, 1.99],
            n=int(block.get("n", 128)), collar=float(block.get("collar", 2.0)))
    elif experiment == "solution":
        report = convergence.solution_convergence(
            block.get("kind", "dirichlet"), fam, grid or [1.2, 1.99],
            n=int(block.get("n", 128)), collar=float(block.get("collar", 2.0)))
    elif experiment == "eigs":
        report = convergence.eigen_convergence(
            block.get("condition", "dirichlet"), fam, grid or [1.2, 1.99],
            k=int(block.get("k", 1)), n=int(block.get("n", 128)),
            collar=float(block.get("collar", 2.0)))
    elif experiment == "coefficient":
        fam_k = convergence.fractional_family(block.get("normalization", "exact"))
        value = convergence.limit_coefficient(fam_k, float(block.get("points_delta", 1.0)),
                                              grid or [1.9, 1.95, 1.99])
        payload = _report_base(cfg)
        payload["report"] = {"limit_coefficient": value,
                             "provenance": "Richardson-extrapolated second moment"}
        write_json(os.path.join(outdir, f"{prefix}_coefficient.json"), payload)
        return EXIT_OK
    else:
        raise ConfigError(f"unknown sweep experiment {experiment!r}")
    ref = np.broadcast_to(np.asarray(report.reference, dtype=float), report.grid.shape)
    rows = [(float(g), float(m), float(r), float(e))
            for g, m, r, e in zip(report.grid, report.measured, ref, report.rel_errors)]
    write_csv(os.path.join(outdir, f"{prefix}_{experiment}.csv"),
              ["grid_value", "measured", "reference", "rel_error"], rows)
    payload = _report_base(cfg)
    payload["report"] = {"experiment": experiment, "verdict": report.verdict,
                         "provenance": report.provenance}
    for extra in ("decrease_ok", "uniform_bound_ok"):
        if hasattr(report, extra):
            payload["report"][extra] = bool(getattr(report, extra))
    write_json(os.path.join(outdir, f"{prefix}_{experiment}.json"), payload)
    if report.verdict == "failed":
        return EXIT_VERDICT
    return EXIT_OK


_COMMANDS = {
    "constants": _cmd_constants,
    "apply": _cmd_apply,
    "solve": _cmd_solve,
    "eigs": _cmd_eigs,
    "evolve": _cmd_evolve,
    "dtn": _cmd_dtn,
    "sweep": _cmd_sweep,
}


def run(cfg, outdir="out", prefix="run"):
    """Validated-config entry point; returns the process exit code."""
    validate_config(cfg)
    command = cfg["command"]
    if command not in _COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    return _COMMANDS[command](cfg, outdir, prefix)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="nonlocal-cvp",
        description="Nonlocal complement value problems on an interval: "
                    "solve, spectra, evolutions, and nonlocal-to-local sweeps.")
    parser.add_argument("command", nargs="?", help="constants|apply|solve|eigs|evolve|dtn|sweep")
    parser.add_argument("--config", help="JSON config path")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--prefix", default="run", help="artifact filename prefix")
    parser.add_argument("--threads", type=int, default=1, help="accepted for "
                        "compatibility; execution is single-process")
    # quick flags for the constants command
    parser.add_argument("--name", default=None)
    parser.add_argument("--d", type=int, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--parameter", type=float, default=None)
    args = parser.parse_args(argv)

    try:
        if args.config:
            try:
                with open(args.config) as fh:
                    cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            if args.command and "command" not in cfg:
                cfg["command"] = args.command
        else:
            if not args.command:
                parser.print_usage(sys.stderr)
                return EXIT_CONFIG
            cfg = {"command": args.command}
            if args.command == "constants":
                block = {}
                if args.name:
                    block["name"] = args.name
                if args.d is not None:
                    block["d"] = args.d
                param = args.parameter if args.parameter is not None else args.alpha
                if param is not None:
                    block["parameter"] = param
                cfg["constants"] = block
        return run(cfg, outdir=args.out, prefix=args.prefix)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IncompatibleDataError as exc:
        print(f"numerical failure: {exc} (compatibility condition)", file=sys.stderr)
        return EXIT_NUMERICAL
    except (spectral.ResonanceError, spectral.EigenSolveError,
            spectral.RobinPreconditionError, ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
