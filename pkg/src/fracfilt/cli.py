"""Command-line driver: ``fracfilt <subcommand> --config <path> [--out <dir>] [--seed <u64>]``.

Every run writes ``<subcommand>.csv`` and ``<subcommand>.json`` into the
output directory.  Both embed the generating configuration.  Wall-clock
timings go to a separate ``timings.json`` so that the other two files are
byte-identical across reruns with the same configuration and seed.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 acceptance failure (``selftest`` only).
"""

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import acceptance, basis, duality, evolve, extension, singular
from .specfun import FracOrder

__all__ = ["RunConfig", "ConfigError", "main", "run", "emit", "SUBCOMMANDS"]

SUBCOMMANDS = ("solve", "minimal", "compare", "extend", "dtn-check", "energy-check",
               "cutoff-scan", "duality", "selftest")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPT = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` maps field names to messages."""

    def __init__(self, errors):
        self.errors = dict(errors)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.errors.items()))


@dataclasses.dataclass(frozen=True)
class RunConfig:
    s: float = 0.5
    d: int = 1
    R: float = 1.0
    N: int = 128
    nonlinearity: dict = dataclasses.field(default_factory=lambda: {"name": "linear"})
    u0: dict = dataclasses.field(default_factory=lambda: {"shape": "bump", "width": 0.5, "height": 1.0})
    tau: float = 0.01
    T: float = 0.5
    eps: float = None
    operator: str = "discrete"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    seed: int = 0
    # subcommand parameters
    y_list: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    R_list: tuple = (2.0, 4.0, 8.0)
    k_list: tuple = None
    h: float = 0.0625
    pairs: int = 10
    Rs: tuple = (1.0, 2.0, 4.0, 8.0)
    p: float = None
    alpha: float = 1.5
    r: float = None
    C: float = 10.0
    k: float = 16.0
    n: int = 16
    inner_steps: int = 1024
    chi: dict = dataclasses.field(default_factory=lambda: {"shape": "bump", "width": 0.9, "height": 1.0})
    criteria: tuple = None

    # -- parsing and validation

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError({"<root>": "configuration must be a JSON object"})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError({k: "unknown field" for k in unknown})
        kwargs = {}
        for k, v in data.items():
            kwargs[k] = tuple(v) if isinstance(v, list) else v
        try:
            cfg = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError({"<root>": str(exc)}) from None
        return cfg

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def validate(self, subcommand=None):
        err = {}

        def num(name, cond, msg, integer=False):
            v = getattr(self, name)
            ok_type = isinstance(v, int) if integer else isinstance(v, (int, float))
            if isinstance(v, bool) or not ok_type:
                err[name] = "must be an integer" if integer else "must be a number"
            elif not cond(v):
                err[name] = msg

        num("s", lambda v: 0 < v < 1, "must lie in (0, 1)")
        if self.d != 1:
            err["d"] = "only d = 1 is supported"
        num("R", lambda v: v > 0, "must be positive")
        num("N", lambda v: v >= 1, "must be >= 1", integer=True)
        num("tau", lambda v: v > 0, "must be positive")
        num("T", lambda v: v > 0, "must be positive")
        if self.eps is not None:
            num("eps", lambda v: v >= 0, "must be non-negative")
        if self.operator not in basis.OPERATORS:
            err["operator"] = f"must be one of {list(basis.OPERATORS)}"
        num("newton_tol", lambda v: v > 0, "must be positive")
        num("newton_max_iter", lambda v: v >= 1, "must be >= 1", integer=True)
        num("seed", lambda v: 0 <= v < 2 ** 64, "must be an unsigned 64-bit integer", integer=True)
        try:
            evolve.Nonlinearity.from_spec(dict(self.nonlinearity))
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            err["nonlinearity"] = str(exc)
        for name in ("u0", "chi"):
            msg = _check_shape(getattr(self, name))
            if msg:
                err[name] = msg
        if subcommand in ("extend", "dtn-check"):
            if not self.y_list or any(not (isinstance(y, (int, float)) and y > 0) for y in self.y_list):
                err["y_list"] = "must be a non-empty list of positive heights"
        if subcommand == "minimal":
            rl = self.R_list
            if not rl or any(b <= a for a, b in zip(rl, rl[1:])):
                err["R_list"] = "must be increasing"
            elif any(abs(2 * R / self.h - round(2 * R / self.h)) > 1e-9 for R in rl):
                err["h"] = "2R/h must be an integer for every R in R_list"
            if self.k_list is not None and any(b <= a for a, b in zip(self.k_list, self.k_list[1:])):
                err["k_list"] = "must be increasing"
            try:
                if not evolve.Nonlinearity.from_spec(dict(self.nonlinearity)).phi0_zero:
                    err["nonlinearity"] = "minimal solutions need Phi(0) = 0"
            except (ValueError, KeyError, TypeError, AttributeError):
                pass
        if subcommand == "compare":
            num("pairs", lambda v: v >= 1, "must be >= 1", integer=True)
        if subcommand == "cutoff-scan":
            if not self.Rs or any(R < 1 for R in self.Rs):
                err["Rs"] = "scales must satisfy R >= 1"
            if isinstance(self.s, (int, float)) and 0 < self.s < 1:
                if not self.d < self.alpha < self.d + 2 * self.s:
                    err["alpha"] = f"must lie in (d, d + 2s) = ({self.d}, {self.d + 2 * self.s:g})"
                if self.p is not None:
                    p = self.p
                    if not (p > 1 and 2 * self.s > self.d * (p - 1) / p):
                        err["p"] = "need p > 1 and 2s > d/p'"
        if subcommand == "energy-check":
            r = self.r if self.r is not None else 3 * self.R / 8
            if not 0.25 < r < self.R / 2:
                err["r"] = f"must lie in (1/4, R/2) = (0.25, {self.R / 2:g})"
        if subcommand == "duality":
            num("k", lambda v: v >= 1, "must be >= 1")
            num("n", lambda v: v >= 1, "must be >= 1", integer=True)
            num("inner_steps", lambda v: v >= 1, "must be >= 1", integer=True)
            if not err.get("n") and not err.get("inner_steps") and self.inner_steps % self.n:
                err["inner_steps"] = "must be a multiple of n"
        if subcommand == "selftest" and self.criteria is not None:
            bad = [c for c in self.criteria if c not in acceptance.CRITERIA]
            if bad:
                err["criteria"] = f"unknown criteria {bad}"
        if err:
            raise ConfigError(err)
        return self


_SHAPES = ("bump", "plateau", "step", "random", "sine")


def _check_shape(spec):
    if not isinstance(spec, dict) or spec.get("shape") not in _SHAPES:
        return f"shape must be one of {list(_SHAPES)}"
    for key in ("width", "height", "center", "modes"):
        if key in spec and not isinstance(spec[key], (int, float)):
            return f"{key} must be a number"
    if spec.get("width", 1.0) <= 0:
        return "width must be positive"
    return None


def make_profile(spec, rng=None):
    """Callable on the line for a named initial shape."""
    shape = spec["shape"]
    width = float(spec.get("width", 0.5))
    height = float(spec.get("height", 1.0))
    center = float(spec.get("center", 0.0))
    if shape == "bump":
        return lambda x: acceptance._bump(np.asarray(x, float) - center, width, height)
    if shape == "plateau":
        edge = float(spec.get("edge", 0.25 * width))

        def plateau(x):
            r = np.abs(np.asarray(x, float) - center)
            t = np.clip((r - width) / edge, 0.0, 1.0)
            return height * (1.0 - t ** 4 * (35 - 84 * t + 70 * t ** 2 - 20 * t ** 3))
        return plateau
    if shape == "step":
        return lambda x: np.where(np.abs(np.asarray(x, float) - center) < width, height, 0.0)
    if shape == "sine":
        return lambda x: height * np.sin(math.pi * (np.asarray(x, float) - center) / width)
    if shape == "random":
        modes = int(spec.get("modes", 8))
        rng = rng or np.random.default_rng(0)
        amp = rng.normal(size=modes) / np.arange(1, modes + 1)

        def rand(x):
            x = np.asarray(x, float)
            v = sum(a * np.sin((j + 1) * math.pi * (x + width) / (2 * width)) for j, a in enumerate(amp))
            v = np.where(np.abs(x) < width, v ** 2, 0.0)
            return v
        return rand
    raise ValueError(f"unknown shape {shape!r}")


def _field(cfg, b, spec, rng=None):
    f = make_profile(spec, rng)
    vals = f(b.nodes)
    if spec["shape"] == "random":
        top = float(np.max(np.abs(vals)))
        vals = vals / top * float(spec.get("height", 1.0)) if top > 0 else vals
    return basis.Field.from_values(b, vals)


def _solver(cfg):
    return evolve.SolverConfig(tau=cfg.tau, eps=cfg.eps, newton_tol=cfg.newton_tol,
                               newton_max_iter=cfg.newton_max_iter, operator=cfg.operator)


# ---------------------------------------------------------------------------
# output


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit(out_dir, name, config, columns, rows, metadata):
    """Write ``name.csv`` and ``name.json`` into ``out_dir``.

    The CSV starts with a ``# fracfilt config=...`` comment line followed by
    the header; floats use the shortest round-trip representation.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_json = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    lines = [f"# fracfilt config={cfg_json}", ",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    (out / f"{name}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {
        "config": _plain(config),
        "versions": {"fracfilt": __version__, "numpy": np.__version__, "scipy": _scipy_version()},
        "results": _plain(metadata),
    }
    (out / f"{name}.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return out / f"{name}.csv", out / f"{name}.json"


def _scipy_version():
    import scipy

    return scipy.__version__


# ---------------------------------------------------------------------------
# subcommands


def _cmd_solve(cfg, rng):
    b = basis.build_basis(cfg.R, cfg.d, cfg.N)
    Phi = evolve.Nonlinearity.from_spec(dict(cfg.nonlinearity))
    u0 = _field(cfg, b, cfg.u0, rng)
    tr = evolve.evolve(u0, cfg.T, _solver(cfg), Phi, cfg.s)
    rows = [(t, x, v) for t, f in zip(tr.times, tr.fields) for x, v in zip(b.nodes, f.values)]
    meta = {"eps": tr.meta["eps"], "tau": tr.meta["tau"], "sup_norms": tr.sup_norms,
            "newton_iterations": [d["newton_iterations"] for d in tr.diagnostics],
            "max_residual": max((d["residual"] for d in tr.diagnostics), default=0.0)}
    return ["t", "x", "value"], rows, meta, True


def _cmd_minimal(cfg, rng):
    Phi = evolve.Nonlinearity.from_spec(dict(cfg.nonlinearity))
    prof = make_profile(cfg.u0, rng)
    rep = evolve.minimal_solution(prof, cfg.R_list, cfg.k_list, cfg.T, _solver(cfg), Phi, cfg.s, h=cfg.h)
    rows = []
    for (k, R), tr in sorted(rep.solutions.items()):
        for x, v in zip(tr.basis.nodes, tr.final.values):
            rows.append((k if math.isfinite(k) else "inf", R, x, v))
    meta = {"r_violation": rep.r_violation, "k_violation": rep.k_violation, "cauchy": rep.cauchy,
            "flagged": rep.flagged}
    return ["k", "R", "x", "value"], rows, meta, True


def _cmd_compare(cfg, rng):
    b = basis.build_basis(cfg.R, cfg.d, cfg.N)
    Phi = evolve.Nonlinearity.from_spec(dict(cfg.nonlinearity))
    rows = []
    worst = math.inf
    for i in range(cfg.pairs):
        u = acceptance._random_nonneg(rng, b, rng.uniform(0.5, 2.0))
        w = u + acceptance._random_nonneg(rng, b, rng.uniform(0.0, 1.0))
        r = evolve.compare(basis.Field.from_values(b, u), basis.Field.from_values(b, w), _solver(cfg), Phi,
                           cfg.s, T=cfg.T)
        lo = min(float(r["u"].values.min()), float(r["w"].values.min()))
        worst = min(worst, r["min_gap"])
        rows.append((i, r["min_gap"], lo, r["ordered"]))
    return ["pair", "min_gap", "min_value", "ordered"], rows, {"min_gap": worst, "all_ordered": worst >= -1e-8}, True


def _cmd_extend(cfg, rng):
    b = basis.build_basis(cfg.R, cfg.d, cfg.N)
    f = _field(cfg, b, cfg.u0, rng)
    ys = np.array(sorted(cfg.y_list, reverse=True), dtype=float)
    ext = extension.extend_cylinder(f, cfg.s, ys)
    rows = [(y, x, v) for y, row in zip(ext.y, ext.values) for x, v in zip(b.nodes, row)]
    ref = basis.spectral_frac_laplacian(f, cfg.s)
    dtn = [(y, (extension.dtn_flux(f, cfg.s, y) - ref).norm()) for y in ys]
    return ["y", "x", "value"], rows, {"dtn_table": dtn, "trace_error": ext.trace_error()}, True


def _cmd_dtn(cfg, rng):
    b = basis.build_basis(cfg.R, cfg.d, cfg.N)
    f = _field(cfg, b, cfg.u0, rng)
    ref = basis.spectral_frac_laplacian(f, cfg.s)
    ys = sorted(cfg.y_list, reverse=True)
    errs = [(extension.dtn_flux(f, cfg.s, y) - ref).norm() for y in ys]
    rows = list(zip(ys, errs))
    monotone = all(b2 < a2 for a2, b2 in zip(errs, errs[1:]))
    return ["y", "l2_error"], rows, {"monotone": monotone}, True


def _cmd_energy(cfg, rng):
    b = basis.build_basis(cfg.R, cfg.d, cfg.N)
    f = _field(cfg, b, cfg.u0, rng)
    rule = extension.YRule.gauss_jacobi(cfg.s, 64, rate=2 * math.sqrt(b.lambdas[0]))
    e = extension.weighted_energy(extension.extend_cylinder(f, cfg.s, rule))
    ref = basis.hs_norm(f, cfg.s)
    Phi = evolve.Nonlinearity.from_spec(dict(cfg.nonlinearity))
    tr = evolve.evolve(f, cfg.T, _solver(cfg), Phi, cfg.s)
    r = cfg.r if cfg.r is not None else 3 * cfg.R / 8
    loc = evolve.local_energy_check(tr, r, Phi, cfg.s, C=cfg.C)
    rows = [("extension_energy", e, ref, abs(e - ref) / ref if ref else abs(e)),
            ("local_energy", loc["lhs"], loc["rhs"], loc["rhs"] - loc["lhs"])]
    meta = {"local_energy_holds": loc["holds"], "C": cfg.C, "C_needed": loc["C_needed"], "r": r}
    return ["quantity", "lhs", "rhs", "residual"], rows, meta, True


def _cmd_cutoff(cfg, rng):
    s = cfg.s
    p = cfg.p if cfg.p is not None else singular.default_p(s)
    Rs = tuple(float(R) for R in cfg.Rs)
    lap = singular.cutoff_scaling_scan(s, Rs)
    tp = singular.tp_scaling_scan(s, p, Rs)
    q, expo = singular.qform_scaling_scan(s, cfg.alpha, Rs, p)
    rows = [(R, a[1], a[2], t[1], t[2], qq[1]) for R, a, t, qq in zip(Rs, lap, tp, q)]
    slopes = {}
    if len(Rs) > 1:
        slopes = {"cutoff": singular.loglog_slope(Rs, [a[1] for a in lap]),
                  "tp": singular.loglog_slope(Rs, [t[1] for t in tp]),
                  "qform": singular.loglog_slope(Rs, [qq[1] for qq in q])}
    meta = {"p": p, "targets": {"cutoff": -2 * s, "tp": -p * s, "qform": -expo}, "slopes": slopes}
    cols = ["R", "sup_frac_lap", "sup_frac_lap_scaled", "sup_tp", "sup_tp_scaled", "qform_l1"]
    return cols, rows, meta, True


def _cmd_duality(cfg, rng):
    b = basis.build_basis(cfg.R, cfg.d, cfg.N)
    Phi = evolve.Nonlinearity.from_spec(dict(cfg.nonlinearity))
    u0 = _field(cfg, b, cfg.u0, rng)
    chi = _field(cfg, b, cfg.chi, rng)
    if np.min(chi.values) < 0 or np.max(chi.values) > 1:
        raise ConfigError({"chi": "final datum must take values in [0, 1]"})
    solver = _solver(cfg)
    u = evolve.evolve(u0, cfg.T, solver, Phi, cfg.s)
    w = evolve.evolve(u0, cfg.T, dataclasses.replace(solver, tau=0.5 * cfg.tau, eps=u.meta["eps"]), Phi, cfg.s)
    coef = duality.smooth_coefficient(duality.build_coefficient(u, duality.resample(w, u.times), Phi), cfg.k, cfg.n)
    psi = duality.backward_solve(coef, chi, cfg.T, cfg.s, inner_steps=cfg.inner_steps, operator=cfg.operator)
    ident = duality.energy_identity_check(psi, coef, chi, cfg.s)
    wit = duality.uniqueness_witness(u, w, chi, cfg.k, cfg.n, Phi, cfg.s, operator=cfg.operator)
    stride = max(1, (len(psi) - 1) // 16)
    rows = [(t, x, v) for t, f in list(zip(psi.times, psi.fields))[::stride] for x, v in zip(b.nodes, f.values)]
    meta = {"psi_min": float(psi.values.min()), "psi_max": float(psi.values.max()),
            "energy_identity": ident, "witness": wit["witness"], "bound": wit["bound"],
            "coefficient": coef.report}
    return ["t", "x", "psi"], rows, meta, True


def _cmd_selftest(cfg, rng):
    results = acceptance.run_all(list(cfg.criteria) if cfg.criteria else None)
    for r in results:
        print(acceptance.format_result(r), flush=True)
    rows = [(r.number, r.name, r.passed) for r in results]
    meta = {f"criterion_{r.number}": {"passed": r.passed, "checks": r.checks, "details": r.details}
            for r in results}
    timings = {f"criterion_{r.number}": r.runtime for r in results}
    return ["criterion", "name", "passed"], rows, meta, all(r.passed for r in results), timings


_COMMANDS = {
    "solve": _cmd_solve, "minimal": _cmd_minimal, "compare": _cmd_compare, "extend": _cmd_extend,
    "dtn-check": _cmd_dtn, "energy-check": _cmd_energy, "cutoff-scan": _cmd_cutoff,
    "duality": _cmd_duality, "selftest": _cmd_selftest,
}


def run(subcommand, cfg, out_dir="."):
    """Validate, execute and emit; returns the process exit code."""
    if subcommand not in _COMMANDS:
        raise ConfigError({"subcommand": f"must be one of {list(SUBCOMMANDS)}"})
    cfg.validate(subcommand)
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    result = _COMMANDS[subcommand](cfg, rng)
    columns, rows, meta, ok = result[:4]
    timings = result[4] if len(result) > 4 else {}
    emit(out_dir, subcommand, cfg.to_dict(), columns, rows, meta)
    timings = {"total": time.perf_counter() - t0, **timings}
    Path(out_dir, "timings.json").write_text(json.dumps({subcommand: timings}, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK if ok else EXIT_ACCEPT


def _parser():
    p = argparse.ArgumentParser(prog="fracfilt", description="Fractional filtration numerical laboratory")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="path to a JSON configuration (defaults are used when omitted)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed; overrides the config")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        data = {}
        if args.config:
            try:
                data = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError({"--config": f"cannot read: {exc.strerror}"}) from None
            except json.JSONDecodeError as exc:
                raise ConfigError({"--config": f"invalid JSON: {exc}"}) from None
        if args.seed is not None:
            data = {**data, "seed": args.seed}
        cfg = RunConfig.from_dict(data)
        return run(args.subcommand, cfg, args.out)
    except ConfigError as exc:
        for k, v in exc.errors.items():
            print(f"config error: {k}: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (evolve.ConvergenceError, RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, NotImplementedError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
