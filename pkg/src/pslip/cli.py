"""``pslip`` command line: rates, spectra, phase portraits and self checks."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import svg
from .action_angle import WellGeometry, fourier_coeffs
from .bifurcation import BifurcationParams, base_exponent, bif_LS, gamma, regime_selector
from .classical import special_energies
from .config import RunConfig, load
from .errors import PslipError, ValidationError, ValidityWarning
from .instanton import (
    classical_instanton,
    fragility_action,
    phase_portrait,
    quantum_finiteT_instanton,
    quantum_T0_instanton,
    quantum_Tto0_instanton,
)
from .keldysh import EffectiveHamiltonian
from .params import OscParams
from .susceptibility import compute_spectrum, crossover_temperature, omega_I, peak_prefactor

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _workers():
    raw = os.environ.get("PSLIP_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"PSLIP_THREADS must be an integer, got {raw!r}", field="PSLIP_THREADS") from None
    if n < 1:
        raise ValidationError("PSLIP_THREADS must be >= 1", field="PSLIP_THREADS")
    return n


def _num(v):
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# ---------------------------------------------------------------- regimes
def resolve_regime(cfg: RunConfig) -> str:
    r = cfg["regime"]
    if r != "auto":
        return r
    pr = cfg.params()
    v = cfg.values
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        # damped intrawell frequency when the detuning is below Δ_B, else the undamped one
        if v["kappa"] < 2 * v["lam"] and v["delta"] < math.sqrt(4 * v["lam"] ** 2 - v["kappa"] ** 2):
            damping = regime_selector(_bif(cfg))
        else:
            damping = regime_selector(pr)
    if damping == "overdamped":
        return "bifurcation"
    if cfg["T"] is not None and cfg["T"] >= 10 * cfg["omega_p"]:
        return "classical"
    return "quantum"


def _bif(cfg):
    """Overdamped parameters; with regime=auto ε follows from delta."""
    v = cfg.values
    eps = v["eps"]
    if v["regime"] == "auto":
        if not v["kappa"] < 2 * v["lam"]:
            raise ValidationError("kappa >= 2*lam: no bistable states at any detuning", field="kappa")
        eps = (math.sqrt(4 * v["lam"] ** 2 - v["kappa"] ** 2) - v["delta"]) / (2 * v["lam"])
        if not eps > 0:
            raise ValidationError("delta is beyond the damped bifurcation point; no bistable states", field="delta")
    return BifurcationParams(eps, v["lam"], v["g"], v["kappa"], v["omega_p"], v["T"], v["n_B"])


def _path(cfg, regime, params=None):
    pr = cfg.params() if params is None else params
    geo = WellGeometry(pr, cfg["n_max"])
    if regime == "classical":
        if not pr.temperature > 0:
            raise ValidationError("classical regime needs T > 0 (or n_B > 0)", field="T")
        return classical_instanton(geo)
    if pr.occupation == 0:
        return quantum_T0_instanton(geo)
    return quantum_finiteT_instanton(geo)


def rate_report(cfg: RunConfig, params: OscParams | None = None) -> dict:
    regime = resolve_regime(cfg)
    if regime == "bifurcation":
        b = _bif(cfg)
        out = {
            "regime": "bifurcation",
            "eps": b.eps,
            "Delta_B": b.Delta_B,
            "Delta": b.Delta,
            "damping": _quiet(regime_selector, b),
            "kappa_over_omega_min": b.kappa / b.omega_min if b.omega_min > 0 else math.inf,
            "iS0_quantum": base_exponent(b, "quantum"),
            "iS0_classical": base_exponent(b, "classical") if b.temperature > 0 else math.nan,
        }
        return out
    pr = cfg.params() if params is None else params
    geo = WellGeometry(pr, cfg["n_max"])
    se = special_energies(pr)
    out = {
        "regime": regime,
        "delta_over_2lam": pr.ratio,
        "damping": _quiet(regime_selector, pr),
        "kappa_over_omega_min": pr.kappa / se.omega_min,
        "I_top": geo.I_top,
        "I_D": geo.I_D if geo.I_D is not None else math.nan,
    }
    if regime == "classical":
        path = _path(cfg, regime, pr)
        out.update(iS0=path.action, R=path.R, p_star=path.p_star, T=pr.temperature)
        peak = peak_prefactor(1, pr, "classical") * pr.omega_p / pr.temperature
    else:
        nb = pr.occupation
        out["n_B"] = nb
        if nb == 0:
            t0 = quantum_T0_instanton(geo)
            lim = quantum_Tto0_instanton(geo)
            fragile = lim.I_F is not None and lim.I_F < geo.I_top
            out.update(
                iS0=lim.action, R=lim.R, R_T0=t0.R, iS0_T0=t0.action, p_star=t0.p_star,
                fragile=fragile, I_F=lim.I_F if fragile else math.nan,
            )
        else:
            path = quantum_finiteT_instanton(geo)
            out.update(iS0=path.action, R=path.R, p_star=path.p_star)
        peak = peak_prefactor(1, pr, "quantum", n_B=nb)
        out["crossover_T"] = crossover_temperature(pr)
    chi_peak = peak * math.sqrt(math.pi / (pr.kappa * abs(omega_I(pr))))
    out["chi1_peak"] = chi_peak
    out["perturbativity"] = 2 * cfg["alpha"] * chi_peak / abs(out["iS0"])
    return out


def _quiet(fn, *a):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        return fn(*a)


# ---------------------------------------------------------------- commands
def _emit(args, text_by_ext, primary):
    """Write PREFIX.ext files when --out is given, else print the primary text."""
    if args.out:
        for ext, text in text_by_ext.items():
            with open(f"{args.out}.{ext}", "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    else:
        sys.stdout.write(text_by_ext[primary])


def _sweep_values(cfg, default_lo, default_hi):
    lo = cfg["sweep_min"] if cfg["sweep_min"] is not None else default_lo
    hi = cfg["sweep_max"] if cfg["sweep_max"] is not None else default_hi
    return np.linspace(lo, hi, cfg["points"])


def cmd_rate(cfg: RunConfig, args) -> int:
    fmt = args.format
    if cfg["sweep"] in ("delta", "n_B") and cfg["sweep_min"] is not None and cfg["sweep_max"] is not None:
        rows = []
        for v in _sweep_values(cfg, 0, 1):
            pr = cfg.params()
            pr = pr.with_(delta=float(v)) if cfg["sweep"] == "delta" else pr.with_(n_B=float(v))
            rep = rate_report(cfg, pr)
            rep = {cfg["sweep"]: float(v), **rep}
            rows.append(rep)
        keys = list(dict.fromkeys(k for r in rows for k in r))
        csv = ",".join(keys) + "\n" + "".join(",".join(_num(r.get(k)) for k in keys) + "\n" for r in rows)
        js = json.dumps(_jsonable(rows), indent=1, sort_keys=True) + "\n"
        xs = [r[cfg["sweep"]] for r in rows]
        pic = svg.line_plot([("iS0", xs, [r["iS0"] for r in rows])], xlabel=cfg["sweep"], ylabel="iS0")
        files = {"csv": csv, "json": js}
        if fmt == "svg":
            files["svg"] = pic
        _emit(args, files, fmt)
        return EXIT_OK
    rep = rate_report(cfg)
    csv = "key,value\n" + "".join(f"{k},{_num(v)}\n" for k, v in rep.items())
    files = {"csv": csv, "json": json.dumps(_jsonable(rep), indent=1, sort_keys=True) + "\n"}
    if fmt == "svg":
        regime = rep["regime"]
        if regime == "bifurcation":
            raise ValidationError("rate --format svg needs the classical or quantum regime", field="format")
        path = _path(cfg, regime)
        files["svg"] = svg.line_plot(
            [("p_inst", path.I, path.p)], xlabel="I", ylabel="p", title=f"activation path ({path.regime})"
        )
    _emit(args, files, fmt)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, args) -> int:
    regime = resolve_regime(cfg)
    fmt = args.format
    if regime == "bifurcation":
        b = _bif(cfg)
        # ν grid spans υ in [-10, 10] unless given
        scale = 2 * b.lam * b.Delta_B * b.eps / b.kappa
        nu = _sweep_values(cfg, -10 * scale, 10 * scale)
        ups = b.upsilon(nu)
        q = bif_LS(ups, b, alpha=cfg["alpha"], regime="quantum")
        c = bif_LS(ups, b, alpha=cfg["alpha"], regime="classical") if b.temperature > 0 else np.full(len(nu), math.nan)
        csv = "nu,upsilon,iS1_quantum,iS1_classical\n" + "".join(
            f"{_num(a)},{_num(u)},{_num(x)},{_num(y)}\n" for a, u, x, y in zip(nu, ups, q, c)
        )
        js = json.dumps(_jsonable({
            "regime": "bifurcation", "alpha": cfg["alpha"], "eps": b.eps,
            "spectrum": [{"nu": a, "upsilon": u, "iS1_quantum": x, "iS1_classical": y} for a, u, x, y in zip(nu, ups, q, c)],
        }), indent=1, sort_keys=True) + "\n"
        files = {"csv": csv, "json": js}
        if fmt == "svg":
            tr = [("quantum", ups, q)]
            if b.temperature > 0:
                tr.append(("classical", ups, c, "5 3"))
            files["svg"] = svg.line_plot(tr, xlabel="upsilon", ylabel="iS1", title="overdamped LS")
        _emit(args, files, fmt)
        return EXIT_OK
    pr = cfg.params()
    geo = WellGeometry(pr, cfg["n_max"])
    w_min = geo.special.omega_min
    nu = _sweep_values(cfg, -2.5 * w_min, 2.5 * w_min)
    path = _path(cfg, regime)
    harm = None
    if cfg["harmonics"]:
        h = cfg["harmonics"]
        harm = [k for k in range(-h, h + 1) if k != 0]
    spec = compute_spectrum(path, nu, harmonics=harm, alpha=cfg["alpha"], workers=_workers())
    files = {"csv": spec.to_csv(), "json": spec.to_json()}
    if fmt == "svg":
        traces = [(f"|chi_{n}|", nu, spec.chi(n)) for n in spec.harmonics]
        traces.append(("iS1/(2 alpha)", nu, spec.dominant_chi(), "5 3"))
        marks = [(n * w_min, f"{n}w_min") for n in spec.harmonics]
        if geo.I_D is not None:
            wD = float(geo.omega_of_I(geo.I_D))
            marks += [(n * wD, f"{n}w(I_D)") for n in spec.harmonics if n < 0]
        files["svg"] = svg.line_plot(traces, xlabel="nu", ylabel="|chi_n|", title=spec.regime, logy=True, vlines=marks)
    _emit(args, files, fmt)
    return EXIT_OK


def _fragility_table(cfg):
    lam, g = cfg["lam"], cfg["g"]
    lo = cfg["sweep_min"] if cfg["sweep_min"] is not None else -0.95
    hi = cfg["sweep_max"] if cfg["sweep_max"] is not None else 0.9
    rows = []
    for r in np.linspace(lo, hi, cfg["points"]):
        pr = OscParams(delta=2 * lam * float(r), lam=lam, g=g, kappa=cfg["kappa"], n_B=0.0)
        geo = WellGeometry(pr, cfg["n_max"])
        se = geo.special
        I_F, yF = fragility_action(geo)
        has = yF is not None
        E_F = float(geo.E_of_I(I_F)) if has and I_F > 0 else (se.E_min if has else math.nan)
        rows.append((float(r), I_F if has else math.nan, geo.I_top, E_F, se.E_min, se.E_D))
    return rows


def cmd_portrait(cfg: RunConfig, args) -> int:
    fmt = args.format
    if cfg["portrait"] == "fragility":
        rows = _fragility_table(cfg)
        head = "delta_over_2lam,I_F,I_top,E_F,E_min,E_D\n"
        csv = head + "".join(",".join(_num(v) for v in r) + "\n" for r in rows)
        keys = head.strip().split(",")
        js = json.dumps(_jsonable([dict(zip(keys, r)) for r in rows]), indent=1, sort_keys=True) + "\n"
        files = {"csv": csv, "json": js}
        if fmt == "svg":
            xs = [r[0] for r in rows]
            files["svg"] = svg.line_plot(
                [("E_F", xs, [r[3] for r in rows]), ("E_min", xs, [r[4] for r in rows], "5 3"),
                 ("E_D", xs, [r[5] for r in rows], "2 2")],
                xlabel="delta/2lam", ylabel="E", title="zero-temperature fragility region",
            )
        _emit(args, files, fmt)
        return EXIT_OK
    regime = resolve_regime(cfg)
    if regime == "bifurcation":
        raise ValidationError("portrait needs the classical or quantum regime", field="regime")
    pr = cfg.params()
    if regime == "classical" and not pr.temperature > 0:
        raise ValidationError("classical regime needs T > 0 (or n_B > 0)", field="T")
    geo = WellGeometry(pr, cfg["n_max"])
    pp = phase_portrait(geo, mode=regime, grid=(cfg["grid"], cfg["grid"]))
    I, p, K = pp["I"], pp["p"], pp["K0"]
    lines = ["I,p,K0\n"]
    for i, a in enumerate(I):
        for j, b in enumerate(p):
            lines.append(f"{_num(a)},{_num(b)},{_num(K[i, j])}\n")
    csv = "".join(lines)
    doc = {
        "regime": regime,
        "I": I, "p": p, "K0": [list(r) for r in K],
        "fixed_points": pp["fixed_points"], "markers": pp["markers"],
        "lines": {k: (None if v is None else {"I": list(v[0]), "p": list(v[1])}) for k, v in pp["lines"].items()},
    }
    files = {"csv": csv, "json": json.dumps(_jsonable(doc), sort_keys=True) + "\n"}
    if fmt == "svg":
        overlay = []
        for name, v in pp["lines"].items():
            if v is None or name in ("p=0", "I=0"):
                continue
            dash = "6 4" if name in ("p_lt", "T=0") else None
            overlay.append((name, v[0], v[1], dash))
        pts = [(a, b, "") for a, b in pp["fixed_points"]]
        for k, v in pp["markers"].items():
            pts.append((v, 0.0, k))
        path = pp["path"]
        files["svg"] = svg.map_plot(
            I, p, K, lines=overlay, points=pts, shade=(path.I, np.clip(path.p, p.min(), p.max())),
            xlabel="I", ylabel="p", title=f"K0 ({regime})",
        )
    _emit(args, files, fmt)
    return EXIT_OK


# ---------------------------------------------------------------- selfcheck
def _checks(cfg):
    pr = cfg.params()
    geo = WellGeometry(pr, cfg["n_max"])
    out = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except PslipError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))

    fr = (0.1, 0.5, 0.9)

    def sum_rules():
        worst = 0.0
        for f in fr:
            tab = fourier_coeffs(f * geo.I_top, geo, n_max=cfg["n_max"])
            worst = max(worst, tab.residual_I, tab.residual_Gamma)
        return worst < 1e-6, f"max residual {worst:.2e} at n_max={cfg['n_max']}"

    def relaxation():
        worst = 0.0
        for mode in ("classical", "quantum"):
            p2 = pr if mode == "quantum" or pr.temperature > 0 else pr.with_(T=1.0)
            H = EffectiveHamiltonian(WellGeometry(p2, cfg["n_max"]), mode)
            for f in fr:
                I = f * geo.I_top
                worst = max(worst, abs(-H.dK0_dp(I, 0.0) - 2 * pr.kappa * I) / (2 * pr.kappa * I))
        return worst < 1e-8, f"max relative error {worst:.2e}"

    def series_integral():
        H = EffectiveHamiltonian(geo, "quantum")
        worst = 0.0
        for f in fr:
            I = f * geo.I_top
            pt = geo.point(I)
            hi = float(min(pt.p_lt[0], pt.p_gt[0]))
            for q in (-0.5 * hi, 0.3 * hi, 0.7 * hi):
                kl, kg = H.K0_integral_rep(I, q)
                gl, gg = H.rates
                ref = gl * kl + gg * kg
                s = H.K0(I, q)
                scale = abs(2 * pr.kappa * I * q) + abs(ref)
                worst = max(worst, abs(s - ref) / scale)
        return worst < 1e-6, f"max relative difference {worst:.2e}"

    def detailed_balance():
        g0 = WellGeometry(pr.with_(n_B=0.0), cfg["n_max"])
        path = quantum_T0_instanton(g0)
        I_F, _ = fragility_action(g0)
        m = (path.I > 0) & (path.I < min(I_F, g0.I_top))
        if g0.I_D is not None:
            m &= np.abs(path.I - g0.I_D) > 1e-3 * g0.I_top
        worst = float(np.max(path.residual[m])) if np.any(m) else 0.0
        return worst < 1e-8, f"max K0 residual {worst:.2e} on the non-fragile range"

    def scale_invariance():
        p2 = OscParams(delta=pr.ratio * 2 * 1.7, lam=1.7, g=0.3, kappa=pr.kappa, n_B=0.0)
        a = quantum_T0_instanton(WellGeometry(pr.with_(n_B=0.0), cfg["n_max"])).R
        b = quantum_T0_instanton(WellGeometry(p2, cfg["n_max"])).R
        return abs(a - b) / abs(a) < 1e-8, f"R^T=0 {a!r} vs {b!r}"

    def kappa_scaling():
        nb = pr.occupation if pr.occupation > 0 else 0.5
        from .susceptibility import chi_n

        w = geo.special.omega_min
        vals = []
        for k in (pr.kappa, pr.kappa / 4):
            p2 = pr.with_(kappa=k, n_B=nb)
            vals.append(chi_n(1, 0.7 * w, quantum_finiteT_instanton(WellGeometry(p2, cfg["n_max"]))).value)
        r = vals[1] / vals[0]
        return abs(r - 2) / 2 < 1e-10, f"ratio {r!r}"

    def prefactor_identity():
        from .classical import cosh_sinh_beta
        from .instanton import p_star_quantum

        nb = pr.occupation
        A1 = peak_prefactor(1, pr, "quantum", n_B=nb)
        alt = 2 * math.sinh(p_star_quantum(geo, nb) / 2) * cosh_sinh_beta(pr)[0]
        return abs(A1 - alt) / A1 < 1e-10, f"A_1 {A1!r} vs {alt!r}"

    def gamma_reflection():
        ys = np.linspace(-20, 20, 50)
        err = max(abs(abs(gamma(0.5 + 1j * y)) ** 2 * math.cosh(math.pi * y) / math.pi - 1) for y in ys)
        return err < 1e-12, f"max relative error {err:.2e}"

    check("action-angle/sum-rules", sum_rules)
    check("keldysh/relaxation-identity", relaxation)
    check("keldysh/series-vs-integral", series_integral)
    check("instanton/zero-T-detailed-balance", detailed_balance)
    check("instanton/scale-invariance", scale_invariance)
    check("log-susceptibility/kappa-scaling", kappa_scaling)
    check("log-susceptibility/A1-identity", prefactor_identity)
    check("bifurcation-regime/gamma-reflection", gamma_reflection)
    return out


def cmd_selfcheck(cfg: RunConfig, args) -> int:
    results = _quiet(_checks, cfg)
    if args.format == "json":
        text = json.dumps([{"check": n, "pass": ok, "detail": d} for n, ok, d in results], indent=1) + "\n"
    else:
        text = "".join(f"{'PASS' if ok else 'FAIL'} {n}: {d}\n" for n, ok, d in results)
    ext = "json" if args.format == "json" else "txt"
    _emit(args, {ext: text}, ext)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERIC


COMMANDS = {"rate": cmd_rate, "spectrum": cmd_spectrum, "portrait": cmd_portrait, "selfcheck": cmd_selfcheck}


def build_parser():
    ap = _Parser(prog="pslip", description="Phase-slip rates and their logarithmic susceptibility.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH", help="flat key = value file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key (repeatable)")
        sp.add_argument("--out", metavar="PREFIX", help="write PREFIX.<ext> files instead of stdout")
        sp.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(args.set)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        field = f"{exc.field}: " if exc.field else ""
        print(f"pslip: invalid input: {field}{exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"pslip: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PslipError, ArithmeticError) as exc:
        print(f"pslip: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
