"""Command-line front end.

Every subcommand reads an optional JSON run configuration, lets command
line flags override it, validates the result against a schema (unknown
keys are rejected) and writes its artifacts plus ``manifest.json`` into
the output directory.  Exit codes: 0 success, 1 certification failure,
2 numerical failure, 3 input or configuration error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import platform
import sys
import tempfile
import time
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np

from . import boundary, mesh as meshmod
from .errors import ConfigError, InputError, NotElliptic, QDiracError

__all__ = ["main", "run", "SCHEMA", "load_config"]

# ----------------------------------------------------------------- schema

_MESH = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["flat_disc", "hemisphere", "symmetric_sphere",
                          "icosphere", "obj"]},
        "n_r": {"type": "integer", "minimum": 1},
        "n_s": {"type": "integer", "minimum": 3},
        "level": {"type": "integer", "minimum": 0, "maximum": 6},
        "path": {"type": "string"},
        "frame": {"type": "string"},
    },
}

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

_BC = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["fields", "canonical", "family_bcproof", "vekua"]},
        "loop": {"type": "integer", "minimum": 0},
        "V": {"oneOf": [{"enum": ["T", "N", "B"]},
                        {"type": "array", "items": _VEC3}]},
        "Vt": {"oneOf": [_VEC3, {"type": "array", "items": _VEC3},
                         {"type": "object", "additionalProperties": False,
                          "required": ["constant"], "properties": {"constant": _VEC3}}]},
        "steps": {"type": "integer", "minimum": 8},
        "rotated": {"type": "boolean"},
        "t": {"type": "number"},
        "p1": {"type": "integer", "minimum": -8, "maximum": 8},
        "p2": {"type": "integer", "minimum": -8, "maximum": 8},
    },
}

_SOLVER = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "window": {"type": "array", "items": {"type": "number"},
                   "minItems": 2, "maxItems": 2},
        "count": {"type": "integer", "minimum": 1},
        "dense_threshold": {"type": "integer", "minimum": 1},
        "svd_tol": {"type": "number", "exclusiveMinimum": 0},
        "gap": {"type": "number", "exclusiveMinimum": 1},
        "level": {"type": "number"},
        "halfwidth": {"type": "number", "exclusiveMinimum": 0},
        "steps": {"type": "integer", "minimum": 8},
        "reverse": {"type": "boolean"},
        "deform": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
}

_SPINOR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "eigen", "csv"]},
        "q": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "mu": {"type": "number"},
        "index": {"type": "integer", "minimum": 0},
        "path": {"type": "string"},
        "fix": {"type": "integer", "minimum": 0},
        "double": {"type": "boolean"},
    },
}

_VEKUA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "p1": {"type": "array", "items": {"type": "integer", "minimum": -8, "maximum": 8}},
        "p2": {"type": "array", "items": {"type": "integer", "minimum": -8, "maximum": 8}},
        "n_r": {"type": "integer", "minimum": 2},
        "n_s": {"type": "integer", "minimum": 8},
        "K": {"type": "integer", "minimum": 4},
    },
}

_TABLE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_r": {"type": "integer", "minimum": 2},
        "n_s": {"type": "integer", "minimum": 8},
        "mus": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 6}},
        "reflection": {"type": "boolean"},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mesh": _MESH,
        "bc": _BC,
        "solver": _SOLVER,
        "spinor": _SPINOR,
        "vekua": _VEKUA,
        "table": _TABLE,
        "output": {"type": "string"},
    },
}

DEFAULTS = {
    "solver": {"dense_threshold": 1500, "svd_tol": 0.1, "gap": 100.0,
               "level": -1.0, "halfwidth": 0.5, "reverse": False, "deform": []},
    "vekua": {"p1": [0, 1, 0, 1, -1], "p2": [0, 0, -1, 1, -1], "n_r": 16, "n_s": 64},
    "table": {"n_r": 12, "n_s": 48, "mus": [0, 1, 2], "reflection": True},
}


def load_config(path) -> dict:
    """Read a JSON run configuration."""
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc


def validate(config: dict) -> dict:
    """Schema-check ``config`` and fill defaults; returns the resolved copy."""
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from exc
    out = copy.deepcopy(config)
    for key, vals in DEFAULTS.items():
        out[key] = {**vals, **out.get(key, {})}
    return out


# ---------------------------------------------------------------- output

def _atomic_write(path: Path, writer) -> Path:
    """Write through ``writer(tmp_path)`` and rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def _write_text(path, text: str) -> Path:
    return _atomic_write(path, lambda p: Path(p).write_text(text))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path, data) -> Path:
    return _write_text(path, json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return _write_text(path, buf.getvalue())


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "sympy", "matplotlib", "jsonschema"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


# ------------------------------------------------------------ builders

def build_mesh(spec: dict) -> meshmod.TriMesh:
    kind = spec["kind"]

    def need(*keys):
        miss = [k for k in keys if k not in spec]
        if miss:
            raise ConfigError(f"mesh kind {kind!r} needs {', '.join(miss)}")
        return [spec[k] for k in keys]

    if kind == "flat_disc":
        return meshmod.gen_flat_disc(*need("n_r", "n_s"))
    if kind == "hemisphere":
        return meshmod.gen_hemisphere(*need("n_r", "n_s"))
    if kind == "symmetric_sphere":
        return meshmod.gen_symmetric_sphere(*need("n_r", "n_s"))
    if kind == "icosphere":
        return meshmod.gen_icosphere(*need("level"))
    (path,) = need("path")
    try:
        m = meshmod.read_obj(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"mesh file {path} not found") from exc
    if m.boundary_loops:
        frame = (meshmod.read_frame_json(spec["frame"]) if "frame" in spec
                 else meshmod.discrete_frame(m))
        m = meshmod.TriMesh(m.positions, m.faces, m.boundary_loops, m.tag, frame)
    return m


def _need_bc(cfg, mesh):
    if "bc" not in cfg:
        if mesh.boundary_loops:
            raise ConfigError("a boundary condition is required for meshes with boundary")
        return None
    return boundary.bc_from_json(mesh, cfg["bc"])


def _single_bc(cfg, mesh):
    bc = _need_bc(cfg, mesh)
    if isinstance(bc, boundary.BCFamily):
        raise ConfigError("expected a single boundary condition, got a family")
    return bc


# -------------------------------------------------------------- commands

def cmd_gen(cfg, out: Path, res: dict):
    m = build_mesh(cfg["mesh"])
    _atomic_write(out / "mesh.obj", lambda p: meshmod.write_obj(m, p))
    files = ["mesh.obj"]
    if m.frame is not None:
        _atomic_write(out / "frame.json", lambda p: meshmod.write_frame_json(m, p))
        files.append("frame.json")
    res.update(n_vertices=m.n_vertices, n_faces=len(m.faces),
               euler_characteristic=meshmod.euler_characteristic(m), files=files)
    return 0


def cmd_check_bc(cfg, out: Path, res: dict):
    m = build_mesh(cfg["mesh"])
    bc = _single_bc(cfg, m)
    if bc is None:
        raise ConfigError("check-bc needs a mesh with boundary and a condition")
    el = boundary.check_elliptic(m, bc)
    sa = boundary.check_selfadjoint(m, bc)
    report = {"elliptic": el.ok, "margin": el.margin,
              "selfadjoint": sa.ok, "defect": sa.defect,
              "deg_V": boundary.deg_V(m, bc) if el.ok else None}
    report["message"] = (("elliptic" if el.ok else "not elliptic") + f", margin {el.margin:.6g}; "
                         + ("self-adjoint" if sa.ok else "not self-adjoint")
                         + f", defect {sa.defect:.3g}")
    _write_json(out / "check_bc.json", report)
    res.update(report)
    if not el.ok:
        raise NotElliptic(report["message"])
    return 0


def _solver_kw(cfg):
    return {"dense_threshold": cfg["solver"]["dense_threshold"]}


def cmd_spectrum(cfg, out: Path, res: dict):
    from .dirac import assemble
    from .plotting import plot_spectrum
    from .spectral import eigen_constrained
    from .spin import spin_transform

    m = build_mesh(cfg["mesh"])
    bc = _single_bc(cfg, m)
    sol = cfg["solver"]
    system = assemble(m)
    basis = boundary.constraint_basis(m, bc)
    if "window" in sol:
        spec = eigen_constrained(system, basis, window=tuple(sol["window"]), **_solver_kw(cfg))
    else:
        spec = eigen_constrained(system, basis, count=sol.get("count", 8), **_solver_kw(cfg))
    _write_csv(out / "eigenvalues.csv", ["index", "mu", "residual_K", "residual_Q"],
               [(k, mu, rk, rq) for k, (mu, rk, rq) in
                enumerate(zip(spec.eigenvalues, spec.residual_K, spec.residual_Q))])
    plot_spectrum(spec.eigenvalues, out / "spectrum.png")
    files = ["eigenvalues.csv", "spectrum.png"]
    for k in sol["deform"]:
        if k >= len(spec.eigenvalues):
            raise ConfigError(f"deform index {k} beyond the {len(spec.eigenvalues)} eigenvalues")
        r = spin_transform(m, spec.eigenvectors[:, :, k])
        name = f"deform_{k}.obj"
        _atomic_write(out / name, lambda p, r=r: meshmod.write_obj(r.mesh, p))
        files.append(name)
    res.update(eigenvalues=spec.eigenvalues, count=len(spec.eigenvalues),
               asymmetry=spec.asymmetry, ritz_dim=spec.ritz_dim, window=spec.window,
               max_residual_K=float(spec.residual_K.max(initial=0.0)), files=files)
    return 0


def cmd_index(cfg, out: Path, res: dict):
    from .spectral import fredholm_index

    m = build_mesh(cfg["mesh"])
    bc = _single_bc(cfg, m)
    if bc is None:
        raise ConfigError("index needs a mesh with boundary and a condition")
    sol = cfg["solver"]
    rep = fredholm_index(m, bc, threshold=sol["svd_tol"], gap=sol["gap"], **_solver_kw(cfg))
    data = rep.to_json()
    _write_json(out / "index.json", data)
    res.update(data)
    return 0


def cmd_flow(cfg, out: Path, res: dict):
    from .plotting import plot_flow
    from .spectral import spectral_flow

    m = build_mesh(cfg["mesh"])
    sol = cfg["solver"]
    if "bc" not in cfg or cfg["bc"]["kind"] != "family_bcproof":
        raise ConfigError("flow needs bc.kind = family_bcproof")
    bcj = dict(cfg["bc"])
    if "steps" in sol:
        bcj["steps"] = sol["steps"]
    fam = boundary.bc_from_json(m, bcj)
    if sol["reverse"]:
        fam = fam.reversed()
    flow = spectral_flow(m, fam, level=sol["level"], halfwidth=sol["halfwidth"],
                         **_solver_kw(cfg))
    data = flow.to_json()
    data["deg_torus"] = boundary.deg_torus(fam) if fam.closed else None
    _write_json(out / "flow.json", data)
    _write_csv(out / "tracks.csv", ["t", "index", "mu"], flow.track_rows())
    plot_flow(flow, out / "flow.png")
    res.update(data, files=["flow.json", "tracks.csv", "flow.png"])
    return 0


def _spinor_from(cfg, m, bc):
    from .dirac import assemble
    from .spectral import eigen_constrained

    sp = cfg.get("spinor", {"kind": "constant", "q": [1.0, 0.0, 0.0, 0.0]})
    kind = sp["kind"]
    if kind == "constant":
        return np.asarray(sp.get("q", [1.0, 0.0, 0.0, 0.0]), dtype=float), 0.0
    if kind == "csv":
        if "path" not in sp:
            raise ConfigError("spinor kind csv needs path")
        try:
            lam = np.loadtxt(sp["path"], delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read spinor file {sp['path']}: {exc}") from exc
        if lam.shape != (m.n_vertices, 4):
            raise ConfigError(f"spinor file must have {m.n_vertices} rows of 4 values")
        return lam, float(sp.get("mu", 0.0))
    if "mu" not in sp:
        raise ConfigError("spinor kind eigen needs mu")
    mu = float(sp["mu"])
    system = assemble(m)
    spec = eigen_constrained(system, boundary.constraint_basis(m, bc),
                             window=(mu - 0.25, mu + 0.25), **_solver_kw(cfg))
    if not len(spec.eigenvalues):
        raise ConfigError(f"no eigenvalue within 0.25 of {mu}")
    order = np.argsort(np.abs(spec.eigenvalues - mu), kind="stable")
    k = int(sp.get("index", 0))
    if k >= len(order):
        raise ConfigError(f"eigen index {k} beyond the {len(order)} eigenvalues near {mu}")
    return spec.eigenvectors[:, :, order[k]], float(spec.eigenvalues[order[k]])


def cmd_deform(cfg, out: Path, res: dict):
    from .plotting import plot_surfaces
    from .spin import (double_reflect, normalized_mean_curvature, plane_fit,
                       spin_transform, verify_mc_density)

    m = build_mesh(cfg["mesh"])
    bc = _single_bc(cfg, m) if m.boundary_loops else None
    lam, mu = _spinor_from(cfg, m, bc)
    sp = cfg.get("spinor", {})
    r = spin_transform(m, lam, fix=int(sp.get("fix", 0)))
    _atomic_write(out / "deformed.obj", lambda p: meshmod.write_obj(r.mesh, p))
    files = ["deformed.obj"]
    report = r.report()
    Hn = normalized_mean_curvature(r.mesh)
    report.update(mu=mu, mc_density_error=verify_mc_density(m, r, mu),
                  plane_residual=plane_fit(r.mesh.positions)[2],
                  max_interior_abs_H_normalized=float(np.abs(Hn[m.interior_mask]).max(initial=0.0)))
    if sp.get("double", False):
        d = double_reflect(r)
        _atomic_write(out / "doubled.obj", lambda p: meshmod.write_obj(d, p))
        files.append("doubled.obj")
        report["doubled_euler_characteristic"] = meshmod.euler_characteristic(d)
    _write_json(out / "deform.json", report)
    shown = [r.mesh] + ([d] if sp.get("double", False) else [])
    plot_surfaces(shown, ["deformed", "doubled"][:len(shown)], out / "deform.png")
    res.update(report, files=files + ["deform.json", "deform.png"])
    return 0


def cmd_vekua(cfg, out: Path, res: dict):
    from .plotting import plot_vekua
    from .vekua import VekuaSpec, vekua_experiment

    v = cfg["vekua"]
    if len(v["p1"]) != len(v["p2"]):
        raise ConfigError("vekua p1 and p2 lists must have equal length")
    sol = cfg["solver"]
    rows, mismatches = [], []
    for p1, p2 in zip(v["p1"], v["p2"]):
        spec = VekuaSpec(p1, p2, v["n_r"], v["n_s"], v.get("K"))
        r = vekua_experiment(spec, strict=False, threshold=sol["svd_tol"], gap=sol["gap"],
                             **_solver_kw(cfg))
        rows.append(r.row())
        if not r.agrees:
            mismatches.append((p1, p2))
    header = list(rows[0].keys())
    _write_csv(out / "vekua.csv", header, [[r[h] for h in header] for r in rows])
    md = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for r in rows:
        md.append("| " + " | ".join(f"{r[h]:.3g}" if isinstance(r[h], float) else str(r[h])
                                    for h in header) + " |")
    _write_text(out / "vekua.md", "\n".join(md) + "\n")
    _write_json(out / "vekua.json", rows)
    plot_vekua(rows, out / "vekua.png")
    res.update(rows=rows, files=["vekua.csv", "vekua.md", "vekua.json", "vekua.png"])
    if mismatches:
        from .errors import MismatchBeyondTolerance
        raise MismatchBeyondTolerance(f"FEM dimensions disagree with the oracle at {mismatches}")
    return 0


def cmd_table(cfg, out: Path, res: dict):
    from .plotting import plot_surfaces
    from .spin import dirac_sphere_table

    t = cfg["table"]
    tab = dirac_sphere_table(t["n_r"], t["n_s"], t["mus"], t["reflection"],
                             dense_threshold=max(cfg["solver"]["dense_threshold"], 4000))
    files = []
    for s in tab.spheres:
        name = f"sphere_mu{int(s.mu)}_l{s.l}.obj"
        _atomic_write(out / name, lambda p, s=s: meshmod.write_obj(s.result.mesh, p))
        files.append(name)
    data = {"modes": tab.modes, "n_modes": {mu: len(md) for mu, md in tab.modes.items()},
            "spheres": tab.rows()}
    _write_json(out / "table.json", data)
    plot_surfaces([s.result.mesh for s in tab.spheres],
                  [f"mu = {int(s.mu)}, l = {s.l}" for s in tab.spheres], out / "table.png")
    res.update(data, files=files + ["table.json", "table.png"])
    return 0


COMMANDS = {
    "gen": cmd_gen, "check-bc": cmd_check_bc, "spectrum": cmd_spectrum,
    "index": cmd_index, "flow": cmd_flow, "deform": cmd_deform,
    "vekua": cmd_vekua, "table": cmd_table,
}


# ------------------------------------------------------------------ run

def run(command: str, config: dict, out_dir=None, threads: int | None = None,
        seed: int = 0) -> int:
    """Execute one subcommand; returns the exit code.

    ``manifest.json`` in the output directory records the resolved
    configuration, versions, timings, results and the exit status, also
    when the command fails.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    t0 = time.perf_counter()
    results: dict = {}
    manifest = {"command": command, "seed": seed, "threads": threads,
                "versions": _versions(), "config": config}
    out = Path(out_dir or config.get("output") or "out")
    code = 0
    try:
        cfg = validate(config)
        manifest["config"] = cfg
        manifest["tolerances"] = {k: cfg["solver"][k] for k in ("svd_tol", "gap", "dense_threshold")}
        out.mkdir(parents=True, exist_ok=True)
        np.random.seed(seed)
        if threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                code = COMMANDS[command](cfg, out, results)
        else:
            code = COMMANDS[command](cfg, out, results)
        manifest["status"] = "ok"
    except QDiracError as exc:
        code = exc.exit_code
        manifest["status"] = type(exc).__name__
        manifest["error"] = str(exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    manifest["exit_code"] = code
    manifest["results"] = results
    manifest["elapsed_s"] = time.perf_counter() - t0
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "manifest.json", manifest)
    except OSError as exc:
        print(f"error: cannot write manifest: {exc}", file=sys.stderr)
        code = code or InputError.exit_code
    return code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(InputError.exit_code, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qdirac", description="Quaternionic Dirac operators on triangle meshes.")
    p.add_argument("--threads", type=int, default=None, help="BLAS/LAPACK thread limit")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized components")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--out", help="output directory (default: config output or ./out)")
        s.add_argument("--mesh", choices=_MESH["properties"]["kind"]["enum"])
        s.add_argument("--n-r", type=int)
        s.add_argument("--n-s", type=int)
        s.add_argument("--level", type=int, help="icosphere level")
        s.add_argument("--obj", help="OBJ path (mesh kind obj)")
        s.add_argument("--bc", help="boundary condition as inline JSON")
        if name == "vekua":
            s.add_argument("--p1", type=int, nargs="+")
            s.add_argument("--p2", type=int, nargs="+")
        if name == "flow":
            s.add_argument("--steps", type=int)
            s.add_argument("--flow-level", type=float)
            s.add_argument("--reverse", action="store_true", default=None)
        if name == "spectrum":
            s.add_argument("--window", type=float, nargs=2)
            s.add_argument("--count", type=int)
        if name == "deform":
            s.add_argument("--mu", type=float, help="deform with the eigenspinor nearest mu")
            s.add_argument("--double", action="store_true", default=None)
        if name == "table":
            s.add_argument("--mus", type=int, nargs="+")
    return p


def _merge_args(config: dict, a) -> dict:
    cfg = copy.deepcopy(config)
    if a.mesh or a.obj:
        m = cfg.setdefault("mesh", {})
        m["kind"] = a.mesh or "obj"
        if a.obj:
            m["path"] = a.obj
    for key, val in (("n_r", a.n_r), ("n_s", a.n_s), ("level", a.level)):
        if val is not None:
            if a.command in ("vekua", "table") and key != "level":
                cfg.setdefault(a.command, {})[key] = val
            else:
                cfg.setdefault("mesh", {})[key] = val
    if a.bc:
        try:
            cfg["bc"] = json.loads(a.bc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--bc is not valid JSON: {exc}") from exc
    get = lambda k: getattr(a, k, None)  # noqa: E731
    if get("p1") is not None or get("p2") is not None:
        v = cfg.setdefault("vekua", {})
        p1 = get("p1") or v.get("p1") or [0]
        p2 = get("p2") or v.get("p2") or [0]
        if len(p1) == 1 and len(p2) > 1:
            p1 = p1 * len(p2)
        if len(p2) == 1 and len(p1) > 1:
            p2 = p2 * len(p1)
        v["p1"], v["p2"] = p1, p2
    sol = {"steps": get("steps"), "level": get("flow_level"), "reverse": get("reverse"),
           "window": get("window"), "count": get("count")}
    for k, val in sol.items():
        if val is not None:
            cfg.setdefault("solver", {})[k] = val
    if get("mu") is not None:
        cfg["spinor"] = {"kind": "eigen", "mu": get("mu")}
    if get("double"):
        cfg.setdefault("spinor", {"kind": "constant"})["double"] = True
    if get("mus") is not None:
        cfg.setdefault("table", {})["mus"] = get("mus")
    return cfg


def main(argv=None) -> int:
    a = _parser().parse_args(argv)
    try:
        config = load_config(a.config) if a.config else {}
        config = _merge_args(config, a)
    except QDiracError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return run(a.command, config, a.out, a.threads, a.seed)


if __name__ == "__main__":
    sys.exit(main())
