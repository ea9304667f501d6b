"""Batch command line: ``acimresp <command> --config cfg.json``.

Exit status 0 when every enabled assertion holds, 1 on a numerical
failure (the failing invariant is named on stderr), 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conjugacy import BranchSystem, Conjugacy, check_assumption_a
from .errors import AcimError, NoDecay, PoleHit
from .maps import (AnalyticMap, ObservablePoly, PerturbationField,
                   chebyshev_markov_map, perturbed_map, validate_markov)
from .oracles import chebyshev_closed_form_checks, finite_difference_response
from .spectral import ChebGrid
from .susceptibility import Response, pade_poles
from .transfer import assemble, lemma_checks

SCHEMA_VERSION = 1
COMMANDS = ("acim", "spectrum", "kappa", "psi", "respond", "pade", "check")


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    pass


@dataclass
class RunConfig:
    raw: dict
    f: AnalyticMap
    conj: Conjugacy
    N: int
    X: PerturbationField
    A: ObservablePoly
    lambdas: list
    n_max: int
    pade_L: int
    pade_M: int
    h: float
    ellipse_r: float
    hash: str


def _poly(cfg, key, default=None):
    c = cfg.get(key, default)
    if c is None:
        raise ConfigError(f"missing polynomial '{key}'")
    if not isinstance(c, list) or not c or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in c):
        raise ConfigError(f"'{key}' must be a nonempty list of numbers")
    return [float(v) for v in c]


def _build_map(desc) -> AnalyticMap:
    if not isinstance(desc, dict) or "family" not in desc:
        raise ConfigError("'map' must be an object with a 'family'")
    fam = desc["family"]
    if fam == "chebyshev":
        m = desc.get("m")
        if not isinstance(m, int) or m < 2:
            raise ConfigError("chebyshev map needs integer m >= 2")
        return chebyshev_markov_map(m)
    if fam == "perturbed":
        base = _build_map(desc.get("base"))
        X = PerturbationField(_poly(desc, "X"))
        t = desc.get("t")
        if not isinstance(t, (int, float)):
            raise ConfigError("perturbed map needs numeric t")
        return perturbed_map(base, X, float(t))
    if fam == "explicit":
        return AnalyticMap.from_coeffs(_poly(desc, "coeffs"), m=desc.get("m"))
    raise ConfigError(f"unknown map family {fam!r}")


def _lambda(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, list) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"bad lambda entry {v!r}; use a number or [re, im]")


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_config(path, n_override=None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    if n_override is not None:
        raw = dict(raw, N=n_override)
    N = raw.get("N", 48)
    if not isinstance(N, int) or not 8 <= N <= 256:
        raise ConfigError("N must be an integer in [8, 256]")
    variant = raw.get("conjugacy", "sine")
    if variant not in ("sine", "quintic"):
        raise ConfigError(f"unknown conjugacy {variant!r}")
    pade = raw.get("pade", {"L": 8, "M": 8})
    try:
        f = _build_map(raw.get("map"))
    except AcimError as exc:
        raise ConfigError(f"map rejected: {exc}") from exc
    return RunConfig(
        raw=raw, f=f, conj=Conjugacy(variant), N=N,
        X=PerturbationField(_poly(raw, "X", [1.0])),
        A=ObservablePoly(_poly(raw, "A", [0.0, 0.0, 0.0, 1.0])),
        lambdas=[_lambda(v) for v in raw.get("lambdas", [0.1, 0.2, 0.5, 1.0])],
        n_max=int(raw.get("n_max", 12)),
        pade_L=int(pade.get("L", 8)), pade_M=int(pade.get("M", 8)),
        h=float(raw.get("h", 1e-3)),
        ellipse_r=float(raw.get("assumption_a_r", 1.5)),
        hash=config_hash(raw))


# --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    return v


class Output:
    def __init__(self, outdir: Path, cfg: RunConfig):
        self.dir = outdir
        self.cfg = cfg
        outdir.mkdir(parents=True, exist_ok=True)

    def table(self, name, header, rows):
        with open(self.dir / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(header) + ["config_hash"])
            for r in rows:
                w.writerow([_fmt(v) for v in r] + [self.cfg.hash])

    def report(self, name, data):
        data = dict(_jsonable(data), config_hash=self.cfg.hash,
                    schema_version=SCHEMA_VERSION)
        (self.dir / f"{name}.json").write_text(
            json.dumps(data, sort_keys=True, indent=2) + "\n")


def _pipeline(cfg):
    tm = assemble(BranchSystem(cfg.f, cfg.conj), ChebGrid(cfg.N))
    return tm, tm.spectrum()


def cmd_acim(cfg, out, plot):
    tm, sd = _pipeline(cfg)
    y = tm.grid.nodes[::-1]
    gap = tm.grid.gap[::-1]
    x = cfg.conj.omega(y)
    sig = sd.sigma0(y)
    rho = sig / cfg.conj.omega_prime_gap(gap)
    out.table("acim", ["y", "sigma0", "x", "rho"], zip(y, sig, x, rho))
    if plot:
        out.table("rho_plot", ["x", "rho"], zip(x, rho))
    mass = sd.sigma0.integral()
    ok = abs(mass - 1) < 1e-9 and np.all(sd.sigma0.values > 0)
    out.report("acim", {"mass": mass, "sigma0_min": sd.sigma0.values.min(),
                        "sigma0_prime_left": sd.sigma0.at_endpoint(-1, derivative=1),
                        "sigma0_prime_right": sd.sigma0.at_endpoint(1, derivative=1),
                        "passed": ok})
    if not ok:
        raise CheckFailed("acim: mass or positivity")


def cmd_spectrum(cfg, out, plot):
    tm, sd = _pipeline(cfg)
    ev = sd.eigenvalues
    out.table("spectrum", ["k", "re", "im", "modulus", "residual"],
              ((k, ev[k].real, ev[k].imag, abs(ev[k]), sd.residuals[k]) for k in range(len(ev))))
    out.report("spectrum", {"gap": sd.gap, "mu0": [ev[0].real, ev[0].imag],
                            "reliable": sd.reliable().tolist(), "passed": True})


def cmd_kappa(cfg, out, plot):
    tm, sd = _pipeline(cfg)
    r = Response(tm, cfg.X, cfg.A, sd)
    a = r.kappas(cfg.n_max, "decomposition")
    b = r.kappas(cfg.n_max, "raw")
    diff = np.abs(a - b)
    out.table("kappa", ["n", "kappa_decomposition", "kappa_raw", "abs_diff"],
              zip(range(len(a)), a, b, diff))
    worst = int(np.argmax(diff / (1 + np.abs(a))))
    ok = bool(np.all(diff <= 1e-7 * (1 + np.abs(a))))
    out.report("kappa", {"n_max": cfg.n_max, "worst_n": worst,
                         "worst_rel_diff": diff[worst] / (1 + abs(a[worst])), "passed": ok})
    if not ok:
        raise CheckFailed(f"kappa: routes disagree at n = {worst}")


def _split(z):
    z = complex(z)
    return z.real, z.imag


def cmd_psi(cfg, out, plot):
    tm, sd = _pipeline(cfg)
    r = Response(tm, cfg.X, cfg.A, sd)
    rows = []
    for lam in cfg.lambdas:
        lr, li = _split(lam)
        try:
            v = r.psi(lam)
            rows.append((lr, li, *_split(v), "ok", ""))
        except PoleHit as exc:
            rows.append((lr, li, "", "", "pole", _fmt(float(np.real(exc.pole)))))
        except NoDecay:
            rows.append((lr, li, "", "", "no_decay", ""))
    out.table("psi", ["lambda_re", "lambda_im", "psi_re", "psi_im", "status", "pole"], rows)
    if plot:
        out.table("psi_plot", ["lambda", "psi"],
                  ((row[0], row[2]) for row in rows if row[4] == "ok" and row[1] == 0))
    poles = [{"location": loc, "coefficient": c} for loc, c in r.poles()]
    out.report("psi", {"poles": poles, "c_minus": r.dec.c_minus, "c_plus": r.dec.c_plus,
                       "I_minus": r.I_minus, "I_plus": r.I_plus, "I_tilde": r.I_tilde,
                       "eigen_residuals": r.eigen_residuals, "passed": True})


def cmd_respond(cfg, out, plot):
    tm, sd = _pipeline(cfg)
    r = Response(tm, cfg.X, cfg.A, sd)
    value = r.psi_at_one()
    rep = {"psi_at_one": value, "oracle": None, "passed": True}
    row = [value, "", "", "", ""]
    if cfg.X.vanishes_at_endpoints:
        est = finite_difference_response(cfg.f, cfg.X, cfg.A, cfg.h, cfg.N, cfg.conj)
        err = abs(value - est.richardson_value)
        tol = est.tolerance()
        ok = err <= tol
        rep["oracle"] = {"central": est.value, "richardson": est.richardson_value,
                         "h": est.h, "abs_error": err, "tol": tol,
                         "halving_ratio": est.halving_ratio}
        rep["passed"] = ok
        row = [value, est.richardson_value, err, tol, est.halving_ratio]
    out.table("respond", ["psi_at_one", "richardson", "abs_error", "tol", "halving_ratio"], [row])
    out.report("respond", rep)
    if not rep["passed"]:
        raise CheckFailed("respond: psi_at_one disagrees with the finite-difference oracle")


def cmd_pade(cfg, out, plot):
    tm, sd = _pipeline(cfg)
    r = Response(tm, cfg.X, cfg.A, sd)
    k = r.kappas(cfg.pade_L + cfg.pade_M, "decomposition")
    p = pade_poles(k, cfg.pade_L, cfg.pade_M)
    out.table("pade", ["index", "pole_re", "pole_im", "modulus", "residue_re", "residue_im"],
              ((i, z.real, z.imag, abs(z), c.real, c.imag)
               for i, (z, c) in enumerate(zip(p.poles.astype(complex), p.residues.astype(complex)))))
    out.report("pade", {"L": p.L, "M": p.M, "condition": p.condition, "passed": True})


def cmd_check(cfg, out, plot):
    tm, sd = _pipeline(cfg)
    lem = lemma_checks(tm, sd)
    dom = check_assumption_a(tm.bs, r=cfg.ellipse_r)
    val = validate_markov(cfg.f)
    rows = [(c.name, c.value, c.tol, c.passed) for c in lem.checks]
    rows.append(("assumption_a_margin", dom.margin, 0.0, dom.passed))
    rows.append(("markov_valid", val.critical_value_defect, 1e-10, val.passed))
    rep = {"lemmas": lem.as_dict(), "assumption_a": dom.as_dict(), "markov": val.as_dict()}
    fam = cfg.raw["map"].get("family")
    if fam == "chebyshev" and cfg.raw["map"].get("m") in (2, 3) and cfg.conj.variant == "sine":
        cf = chebyshev_closed_form_checks(cfg.raw["map"]["m"], cfg.N)
        rows += [("closed_form_" + c.name, c.value, c.tol, c.passed) for c in cf.checks]
        rep["closed_form"] = cf.as_dict()
    ok = all(r[3] for r in rows)
    rep["passed"] = ok
    out.table("check", ["check", "value", "tol", "passed"], rows)
    out.report("check", rep)
    if not ok:
        failed = [r[0] for r in rows if not r[3]]
        raise CheckFailed("check: failed " + ", ".join(failed))


HANDLERS = {"acim": cmd_acim, "spectrum": cmd_spectrum, "kappa": cmd_kappa,
            "psi": cmd_psi, "respond": cmd_respond, "pade": cmd_pade, "check": cmd_check}


def build_parser():
    p = argparse.ArgumentParser(prog="acimresp",
                                description="Invariant densities and linear response "
                                            "of analytic Markov interval maps.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--n", type=int, default=None, help="override grid size N")
    p.add_argument("--plot-data", action="store_true", help="also write plot series CSVs")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, args.n)
    except ConfigError as exc:
        print(f"acimresp: config error: {exc}", file=sys.stderr)
        return 2
    out = Output(Path(args.out), cfg)
    try:
        HANDLERS[args.command](cfg, out, args.plot_data)
    except CheckFailed as exc:
        print(f"acimresp: {exc}", file=sys.stderr)
        return 1
    except AcimError as exc:
        print(f"acimresp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
