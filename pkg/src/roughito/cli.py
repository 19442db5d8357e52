"""Command line entry point.

Every subcommand is a pure function of its resolved config (CLI flag >
config file > built-in default). Outputs are CSV tables written under the
output directory together with a JSON run manifest that ``reproduce`` can
replay byte for byte.

Exit codes: 0 success, 2 invalid config or input, 3 numerical divergence,
5 replay mismatch, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import SchemeConfig, convergence_study, reference_solution
from .bdg import brownian_generator, bdg_ratio_check
from .errors import DivergedError, InvalidArgumentError, RoughPathError
from .fields import get_field
from .itolemma import get_map, verify_ito_lemma
from .lifts import (
    BracketGrid,
    NoiseSpec,
    bracket_fine,
    bracket_pl,
    dyadic_partition,
    ito_levels,
    ito_lift,
    pl_ito_lift,
    sample_brownian,
    sample_brownian_batch,
    strat_levels,
    strat_lift,
    ztilde_noise,
)
from .paths import GridPath, RoughPathGrid, pl_signature
from .rde import euler_path
from .serialize import fmt, from_csv, to_csv, write_table
from .variation import dp_distance, p_variation

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_MISMATCH, EXIT_USAGE = 0, 2, 3, 5, 64
OUT_ENV = "ROUGHITO_OUT_DIR"
MANIFEST = "manifest.json"

DEFAULTS = {
    "signature": {"input": None, "depth": 2},
    "pvar": {"input": None, "p": 2.5, "level": None, "other": None},
    "lift": {"dim": 1, "T": 1.0, "mesh": 1e-3, "paths": 1, "kind": "ito", "m": 4, "seed": 0},
    "rde": {"field": "gbm", "driver": "ito", "mesh": 1e-4, "T": 1.0, "paths": 100, "seed": 0,
            "xi": 1.0, "mode": "euler"},
    "avg": {"field": "linear1d", "noise": "bm", "mode": "closed-form", "depth": 1, "T": 1.0,
            "fine": 10, "m": "3,4,5,6,7,8", "paths": 1000, "driver": "trivial", "seed": 0,
            "xi": 1.0, "coupling": "per-interval", "scale": 1.0},
    "itolemma": {"map": "square", "dim": 1, "T": 1.0, "mesh": 1e-4, "paths": 100, "seed": 0,
                 "refinements": 3, "bracket": "nominal"},
    "bdg": {"p": 2.5, "q": 2.0, "n": 1, "paths": 10000, "horizons": "0.5,1,2", "steps": 128, "seed": 0},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _grid(T, mesh):
    n = int(round(T / mesh))
    if n < 1 or T <= 0:
        raise InvalidArgumentError("need T > 0 and mesh <= T")
    return np.linspace(0.0, T, n + 1)


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text) -> list[int]:
    return [int(v) for v in _floats(text)]


def _read_path(name):
    if name is None:
        raise InvalidArgumentError("--input is required")
    p = Path(name)
    if not p.is_file():
        raise InvalidArgumentError(f"input file {name} not found")
    return from_csv(p)


# ---------------------------------------------------------------- commands
# each returns ({file name: csv text}, [summary lines])

def cmd_signature(cfg):
    path = _read_path(cfg["input"])
    if isinstance(path, RoughPathGrid):
        raise InvalidArgumentError("signature needs a plain path CSV (t, x...)")
    n = int(cfg["depth"])
    sig = pl_signature(path, n)
    cols = ["t"] + [f"s{k}_{i}" for k in range(1, n + 1) for i in range(path.dim**k)]
    rows = [[float(sig.times[r])] + [float(v) for lv in sig.levels for v in lv[r]] for r in range(len(sig))]
    text = write_table(None, cols, rows)
    last = sig.element(len(sig) - 1)
    return {"signature.csv": text}, [f"terminal signature: {[lv.tolist() for lv in last.levels]}"]


def cmd_pvar(cfg):
    path = _read_path(cfg["input"])
    p = float(cfg["p"])
    rows = []
    if cfg.get("other"):
        other = _read_path(cfg["other"])
        if not (isinstance(path, RoughPathGrid) and isinstance(other, RoughPathGrid)):
            raise InvalidArgumentError("d_p needs two rough path CSVs")
        value = dp_distance(path, other, p)
        rows.append(["dp_distance", p, value])
    else:
        level = cfg.get("level")
        value = p_variation(path, p, None if level is None else int(level))
        rows.append(["p_variation", p, value])
    text = write_table(None, ["quantity", "p", "value"], rows)
    return {"pvar.csv": text}, [fmt(value)]


def cmd_lift(cfg):
    t = _grid(float(cfg["T"]), float(cfg["mesh"]))
    kind = cfg["kind"]
    if kind not in ("ito", "strat", "pl-ito", "bracket", "path"):
        raise InvalidArgumentError(f"unknown lift kind {kind!r}")
    outputs = {}
    for r in range(int(cfg["paths"])):
        z = sample_brownian(t, int(cfg["dim"]), int(cfg["seed"]), replica=r)
        if kind == "path":
            text = to_csv(z)
        elif kind == "ito":
            text = to_csv(ito_lift(z))
        elif kind == "strat":
            text = to_csv(strat_lift(z))
        else:
            part = dyadic_partition(len(z) - 1, int(cfg["m"]))
            if kind == "pl-ito":
                text = to_csv(pl_ito_lift(z, part))
            else:
                q = bracket_pl(z, part)
                d = q.dim
                text = write_table(None, ["t"] + [f"q{i}{j}" for i in range(d) for j in range(d)],
                                   [[float(q.times[k])] + [float(v) for v in q.values[k].ravel()]
                                    for k in range(len(q))])
        outputs[f"{kind}_{r:04d}.csv"] = text
    return outputs, [f"wrote {len(outputs)} {kind} path(s) with {t.size} points"]


def _closed_form_gbm(vf, b_t, qv, driver, xi):
    a = float(vf.meta.get("a", 1.0))
    if driver == "ito":
        return xi * np.exp(a * b_t - 0.5 * a * a * qv)
    return xi * np.exp(a * b_t)


def cmd_rde(cfg):
    t = _grid(float(cfg["T"]), float(cfg["mesh"]))
    vf = get_field(cfg["field"])
    if vf.d != 1:
        raise InvalidArgumentError("the rde command drives fields with d = 1")
    driver = cfg["driver"]
    if driver not in ("ito", "strat"):
        raise InvalidArgumentError("driver must be 'ito' or 'strat'")
    n = int(cfg["paths"])
    z = sample_brownian_batch(t, 1, int(cfg["seed"]), n)
    x1, x2 = (ito_levels if driver == "ito" else strat_levels)(z)
    dx = np.diff(x1, axis=1)
    da = np.diff(x2, axis=1) - x1[:, :-1, :, None] * dx[:, :, None, :]
    y0 = np.full(vf.e, float(cfg["xi"]))
    ys = euler_path(vf, y0, dx, da, t, cfg["mode"])
    em = euler_path(vf, y0, dx, np.zeros_like(da), t)
    closed = vf.meta.get("scalar_linear", False)
    rows = []
    rel = []
    for r in range(n):
        y_t = float(ys[r, -1, 0])
        if closed:
            exact = float(_closed_form_gbm(vf, z[r, -1, 0], t[-1], driver, float(cfg["xi"])))
            err = abs(y_t - exact) / abs(exact)
            rel.append(err)
        else:
            exact, err = float("nan"), float("nan")
        gap = float(np.max(np.abs(ys[r] - em[r])))
        rows.append([r, y_t, exact, err, float(em[r, -1, 0]), gap])
    text = write_table(None, ["path", "y_T", "closed_form", "rel_error", "euler_maruyama_T", "sup_gap_vs_em"], rows)
    lines = []
    if rel:
        lines.append(f"median relative error vs closed form: {fmt(np.median(rel))}")
    lines.append(f"median sup gap vs Euler-Maruyama: {fmt(np.median([row[5] for row in rows]))}")
    return {"rde.csv": text}, lines


def _avg_setup(cfg):
    n_fine = 2 ** int(cfg["fine"])
    T = float(cfg["T"])
    t = np.linspace(0.0, T, n_fine + 1)
    seed = int(cfg["seed"])
    if cfg["driver"] == "trivial":
        gamma = RoughPathGrid(t, np.zeros((t.size, 1)), np.zeros((t.size, 1, 1)))
        z = None
    elif cfg["driver"] == "strat":
        z = sample_brownian(t, 1, seed + 1_000_003)
        z = GridPath(t, float(cfg["scale"]) * z.values)
        gamma = strat_lift(z)
    else:
        raise InvalidArgumentError("driver must be 'trivial' or 'strat'")
    paths = int(cfg["paths"])
    if cfg["noise"] == "bm":
        noise = NoiseSpec.brownian(t, 1, seed, paths)
    elif cfg["noise"] == "zero":
        noise = NoiseSpec.zero(t, 1, seed, paths)
    elif cfg["noise"] == "ztilde":
        if z is None:
            raise InvalidArgumentError("ztilde noise needs the 'strat' driver")
        noise = ztilde_noise(bracket_fine(z), seed, paths)
    else:
        raise InvalidArgumentError("noise must be 'bm', 'zero' or 'ztilde'")
    mode = {"closed-form": "closed-form-linear", "closed-form-linear": "closed-form-linear",
            "monte-carlo": "monte-carlo", "mc": "monte-carlo"}.get(cfg["mode"])
    if mode is None:
        raise InvalidArgumentError(f"unknown expectation mode {cfg['mode']!r}")
    return t, gamma, noise, mode


def cmd_avg(cfg):
    t, gamma, noise, mode = _avg_setup(cfg)
    vf = get_field(cfg["field"])
    xi = np.array([float(cfg["xi"])])
    ms = _ints(cfg["m"])
    base = SchemeConfig(dyadic_partition(t.size - 1, ms[0]), int(cfg["paths"]), int(cfg["depth"]), noise,
                        mode, coupling=cfg["coupling"])
    ref = reference_solution(gamma, vf, xi, base)
    rows = convergence_study(gamma, vf, xi, base, ms, reference=ref)
    table = []
    lines = []
    for row in rows:
        final = float(row["final"][0][0])
        table.append([row["m"], row["intervals"], row["mesh"], final, float(ref.terminal[0]),
                      row["error"], row["max_se"]])
        lines.append(f"m={row['m']} final level-1 {fmt(final)} reference {fmt(ref.terminal[0])} "
                     f"error {fmt(row['error'])}")
    if vf.meta.get("scalar_linear") and cfg["driver"] == "trivial" and cfg["noise"] == "bm":
        a = float(vf.meta["a"])
        for row in rows:
            h = float(row["mesh"])
            prod = xi[0] * (2.0 - np.exp(0.5 * a * a * h)) ** row["intervals"]
            lines.append(f"m={row['m']} product oracle xi*(2-exp(a^2 h/2))^(2^m) = {fmt(prod)}")
        lines.append(f"closed-form target xi*exp(-T/2) = {fmt(xi[0] * np.exp(-0.5 * t[-1]))}")
    text = write_table(None, ["m", "intervals", "mesh", "final_level1", "reference_level1", "error", "max_se"], table)
    return {"avg.csv": text}, lines


def cmd_itolemma(cfg):
    fmap = get_map(cfg["map"], int(cfg["dim"]))
    T = float(cfg["T"])
    mesh = float(cfg["mesh"])
    if cfg["bracket"] not in ("realised", "nominal"):
        raise InvalidArgumentError("bracket must be 'realised' or 'nominal'")
    rows = []
    lines = []
    for k in range(int(cfg["refinements"])):
        h = mesh * 2 ** (int(cfg["refinements"]) - 1 - k)
        t = _grid(T, h)
        # nominal bracket of a standard Brownian motion is t * I
        q = BracketGrid(t, t[:, None, None] * np.eye(fmap.d)) if cfg["bracket"] == "nominal" else None
        reps = [verify_ito_lemma(fmap, sample_brownian(t, fmap.d, int(cfg["seed"]), r), q)
                for r in range(int(cfg["paths"]))]
        res = np.array([[rep.residual1, rep.residual2, rep.terminal1] for rep in reps])
        for c, name in enumerate(("level1_sup", "level2_sup", "level1_terminal")):
            col = res[:, c]
            se = float(np.std(col, ddof=1) / np.sqrt(col.size)) if col.size > 1 else float("nan")
            rows.append([h, name, float(np.median(col)), se])
        lines.append(f"mesh {fmt(h)}: median level-1 residual sup {fmt(np.median(res[:, 0]))} "
                     f"terminal {fmt(np.median(res[:, 2]))}")
    return {"itolemma.csv": write_table(None, ["mesh", "quantity", "median", "se"], rows)}, lines


def cmd_bdg(cfg):
    gen = brownian_generator(1, int(cfg["steps"]))
    rows = []
    lines = []
    for i, h in enumerate(_floats(cfg["horizons"])):
        rep = bdg_ratio_check(gen, float(cfg["p"]), float(cfg["q"]), int(cfg["n"]), int(cfg["paths"]),
                              h, int(cfg["seed"]) + i)
        rows.append([h, rep.pvar_moment, rep.pvar_se, rep.bracket_moment, rep.bracket_se,
                     rep.terminal_moment, rep.terminal_se, rep.ratio, rep.ratio_se,
                     rep.terminal_ratio, rep.terminal_ratio_se])
        lines.append(f"T={h}: ratio {fmt(rep.ratio)} (se {fmt(rep.ratio_se)}), "
                     f"terminal ratio {fmt(rep.terminal_ratio)} (se {fmt(rep.terminal_ratio_se)})")
    cols = ["horizon", "pvar_moment", "pvar_se", "bracket_moment", "bracket_se", "terminal_moment",
            "terminal_se", "ratio", "ratio_se", "terminal_ratio", "terminal_ratio_se"]
    return {"bdg.csv": write_table(None, cols, rows)}, lines


COMMANDS = {
    "signature": cmd_signature,
    "pvar": cmd_pvar,
    "lift": cmd_lift,
    "rde": cmd_rde,
    "avg": cmd_avg,
    "itolemma": cmd_itolemma,
    "bdg": cmd_bdg,
}


# ---------------------------------------------------------------- plumbing

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="roughito", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help=f"output directory (env {OUT_ENV} overrides the default)")
        return p

    p = common(sub.add_parser("signature", help="polygon signature of a path CSV"))
    p.add_argument("--input")
    p.add_argument("--depth", type=int)

    p = common(sub.add_parser("pvar", help="p-variation or d_p distance of stored paths"))
    p.add_argument("--input")
    p.add_argument("--p", type=float)
    p.add_argument("--level", type=int)
    p.add_argument("--other", help="second rough path CSV; switches to d_p")

    p = common(sub.add_parser("lift", help="sample Brownian paths and lift them"))
    p.add_argument("--dim", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--mesh", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--kind", choices=["ito", "strat", "pl-ito", "bracket", "path"])
    p.add_argument("--m", type=int, help="dyadic partition level for pl-ito and bracket")
    p.add_argument("--seed", type=int)

    p = common(sub.add_parser("rde", help="solve RDEs and compare schemes"))
    p.add_argument("--field")
    p.add_argument("--driver", choices=["ito", "strat"])
    p.add_argument("--mesh", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--xi", type=float)
    p.add_argument("--mode", choices=["euler", "ode-approx"])

    p = common(sub.add_parser("avg", help="averaging scheme and its convergence table"))
    p.add_argument("--field")
    p.add_argument("--noise", choices=["bm", "zero", "ztilde"])
    p.add_argument("--mode", choices=["closed-form", "closed-form-linear", "monte-carlo", "mc"])
    p.add_argument("--depth", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--fine", type=int, help="log2 of the fine grid size")
    p.add_argument("--m", help="comma separated dyadic partition levels")
    p.add_argument("--paths", type=int, help="Monte Carlo replicas per interval")
    p.add_argument("--driver", choices=["trivial", "strat"])
    p.add_argument("--seed", type=int)
    p.add_argument("--xi", type=float)
    p.add_argument("--coupling", choices=["per-interval", "shared-path"])
    p.add_argument("--scale", type=float, help="strat driver is the lift of scale * B")

    p = common(sub.add_parser("itolemma", help="pathwise Ito lemma residuals"))
    p.add_argument("--map")
    p.add_argument("--dim", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--mesh", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--refinements", type=int, help="number of dyadic meshes ending at --mesh")
    p.add_argument("--bracket", choices=["realised", "nominal"])

    p = common(sub.add_parser("bdg", help="BDG ratio checks"))
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--horizons")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("reproduce", help="replay a run manifest and compare outputs")
    p.add_argument("manifest")
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge defaults, config file and flags; returns (config, source per key)."""
    cfg = dict(DEFAULTS[command])
    sources = {k: "default" for k in cfg}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise InvalidArgumentError(f"config file {args.config} not found")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidArgumentError("config file must hold a JSON object")
        for k, v in data.items():
            if k not in cfg:
                raise InvalidArgumentError(f"unknown config key {k!r} for {command}")
            cfg[k] = v
            sources[k] = "config"
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
            sources[k] = "cli"
    for k in ("input", "other"):
        if cfg.get(k):
            cfg[k] = str(Path(cfg[k]).resolve())
    return cfg, sources


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def content_hash(command: str, cfg: dict) -> str:
    """Hash of the command, its config and the bytes of referenced input files."""
    h = hashlib.sha256()
    h.update(json.dumps({"command": command, "config": cfg}, sort_keys=True).encode())
    for key in ("input", "other"):
        name = cfg.get(key)
        if name and Path(name).is_file():
            h.update(Path(name).read_bytes())
    return h.hexdigest()


def _out_dir(args, cfg_dir=None) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    return Path(cfg_dir or "roughito-out")


def run_command(command: str, cfg: dict):
    return COMMANDS[command](cfg)


def _grid_spec(cfg):
    return {k: cfg[k] for k in ("T", "mesh", "fine", "m", "steps", "horizons") if k in cfg}


def execute(command: str, cfg: dict, sources: dict, out: Path, argv) -> int:
    start = time.perf_counter()
    outputs, lines = run_command(command, cfg)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        (out / name).write_text(text)
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": cfg,
        "config_sources": sources,
        "seed": cfg.get("seed"),
        "grid": _grid_spec(cfg),
        "content_hash": content_hash(command, cfg),
        "outputs": {name: _sha(text) for name, text in outputs.items()},
        "duration_s": time.perf_counter() - start,
        "version": __version__,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    for line in lines:
        print(line)
    return EXIT_OK


def _first_difference(old: str, new: str) -> str:
    a = old.splitlines()
    b = new.splitlines()
    for r in range(max(len(a), len(b))):
        ra = a[r].split(",") if r < len(a) else []
        rb = b[r].split(",") if r < len(b) else []
        for c in range(max(len(ra), len(rb))):
            va = ra[c] if c < len(ra) else "<missing>"
            vb = rb[c] if c < len(rb) else "<missing>"
            if va != vb:
                return f"row {r} column {c}: recorded {va} replayed {vb}"
    return "no cell differs"


def reproduce(manifest_path: str) -> int:
    path = Path(manifest_path)
    if not path.is_file():
        raise InvalidArgumentError(f"manifest {manifest_path} not found")
    try:
        manifest = json.loads(path.read_text())
        command = manifest["command"]
        cfg = manifest["config"]
        recorded = manifest["outputs"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed manifest: {exc}") from None
    if command not in COMMANDS:
        raise InvalidArgumentError(f"manifest names unknown command {command!r}")
    for key in ("input", "other"):
        if cfg.get(key) and not Path(cfg[key]).is_file():
            raise InvalidArgumentError(f"manifest input {cfg[key]} not found")
    if content_hash(command, cfg) != manifest.get("content_hash"):
        print("mismatch: manifest content hash does not match its config or inputs")
        return EXIT_MISMATCH
    outputs, _ = run_command(command, cfg)
    base = path.parent
    for name in sorted(set(recorded) | set(outputs)):
        if name not in outputs or name not in recorded:
            print(f"mismatch: output {name} present in only one run")
            return EXIT_MISMATCH
        new = outputs[name]
        old_file = base / name
        if _sha(new) != recorded[name]:
            detail = _first_difference(old_file.read_text(), new) if old_file.is_file() else "hash differs"
            print(f"mismatch in {name}: {detail}")
            return EXIT_MISMATCH
        if old_file.is_file() and old_file.read_text() != new:
            print(f"mismatch in {name}: {_first_difference(old_file.read_text(), new)}")
            return EXIT_MISMATCH
    print(f"reproduced {len(outputs)} output(s) byte for byte")
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "reproduce":
            return reproduce(args.manifest)
        cfg, sources = resolve_config(args.command, args)
        return execute(args.command, cfg, sources, _out_dir(args), argv)
    except DivergedError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InvalidArgumentError, RoughPathError, ValueError, OSError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
