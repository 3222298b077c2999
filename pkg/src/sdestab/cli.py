"""Command-line entry point: declarative JSON configs in, CSV/JSON artifacts out.

Exit status: 0 success, 2 configuration error, 3 a coefficient fails its
regularity check, 4 a simulation produced a non-finite state.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import coefficients as coef
from . import drift_removal as dr
from . import noise as nz
from . import rate_analysis as ra
from . import sde_engine as eng
from . import yamada_watanabe as yw
from .errors import ConfigError, DomainError, QuadratureError, SetupError, SimulationError

SCHEMA = "sdestab-config/1"
SUBCOMMANDS = ("check-coefficients", "yw-table", "simulate", "stability-rate", "stable-rate",
               "drift-removal", "report")
EXIT_OK, EXIT_CONFIG, EXIT_CONDITION, EXIT_SIMULATION = 0, 2, 3, 4


# config validation ------------------------------------------------------------

def _get(cfg, key, kind, default=..., where=""):
    name = f"{where}{key}"
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"missing required field {name!r}", name)
        return default
    val = cfg[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is int and isinstance(val, float) and val.is_integer():
        val = int(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(f"field {name!r} must be of type {kind.__name__}, got {val!r}", name)
    return val


def _positive(val, name, strict=True):
    if not math.isfinite(val) or (val <= 0 if strict else val < 0):
        raise ConfigError(f"field {name!r} must be {'positive' if strict else 'non-negative'}, "
                          f"got {val!r}", name)
    return val


def _n_list(cfg, key="n_list"):
    ns = _get(cfg, key, list)
    if len(ns) < 1 or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in ns):
        raise ConfigError(f"field {key!r} must be a non-empty list of positive integers", key)
    if len(set(ns)) != len(ns):
        raise ConfigError(f"field {key!r} has repeated values", key)
    return sorted(ns)


def _driver(cfg):
    d = _get(cfg, "driver", dict, {"kind": "WIENER"})
    kind = _get(d, "kind", str, where="driver.")
    if kind == "WIENER":
        return nz.WIENER
    if kind == "STABLE":
        alpha = _get(d, "alpha", float, where="driver.")
        if not 1.0 < alpha < 2.0:
            raise ConfigError(f"field 'driver.alpha' must lie in (1, 2), got {alpha!r}",
                              "driver.alpha")
        return nz.stable(alpha)
    raise ConfigError(f"field 'driver.kind' must be WIENER or STABLE, got {kind!r}", "driver.kind")


def _drift(spec, where):
    builder = _get(spec, "builder", str, where=where)
    if builder == "indicator":
        beta = _get(spec, "beta", float, where=where)
        lo = _get(spec, "lo", float, 0.0, where=where)
        hi = _get(spec, "hi", float, 1.0, where=where)
        if not lo < hi:
            raise ConfigError(f"field '{where}hi' must exceed '{where}lo'", f"{where}hi")
        return coef.indicator_drift(beta, lo, hi)
    if builder == "constant":
        return coef.constant(_get(spec, "value", float, where=where))
    raise ConfigError(f"field '{where}builder' must be indicator or constant, got {builder!r}",
                      f"{where}builder")


def _family(cfg):
    f = _get(cfg, "family", dict)
    builder = _get(f, "builder", str, where="family.")
    params = _get(f, "params", dict, {}, where="family.")
    mode = _get(f, "distance_mode", str, None, where="family.")
    if mode is not None and mode not in coef.DistanceMode.__members__:
        raise ConfigError(f"field 'family.distance_mode' must be one of "
                          f"{sorted(coef.DistanceMode.__members__)}, got {mode!r}",
                          "family.distance_mode")
    if builder == "mollified_jump":
        low = _get(params, "low", float, 1.0, where="family.params.")
        high = _get(params, "high", float, 2.0, where="family.params.")
        jump = _get(params, "jump_at", float, 0.0, where="family.params.")
        if not 0 < low < high:
            raise ConfigError("fields 'family.params.low/high' need 0 < low < high",
                              "family.params.low")
        fam = coef.mollified_jump_family(low, high, jump, mode or "L2_SQUARED")
    elif builder == "constant_shift":
        base = _positive(_get(params, "base", float, 1.0, where="family.params."),
                         "family.params.base")
        fam = coef.constant_shift_family(base)
    else:
        raise ConfigError(f"field 'family.builder' must be mollified_jump or constant_shift, "
                          f"got {builder!r}", "family.builder")
    if "drift" in f:
        d = _drift(_get(f, "drift", dict, where="family."), "family.drift.")
        md = None
        if "member_drift" in f:
            md_coef = _drift(_get(f, "member_drift", dict, where="family."), "family.member_drift.")
            md = lambda n, c=md_coef: c  # noqa: E731
        fam = coef.with_drift(fam, d, md)
    if "domain" in f:
        dom = _get(f, "domain", list, where="family.")
        if len(dom) != 2 or not all(isinstance(v, (int, float)) for v in dom) or not dom[0] < dom[1]:
            raise ConfigError("field 'family.domain' must be [lo, hi] with lo < hi", "family.domain")
        fam = replace(fam, domain=(float(dom[0]), float(dom[1])))
    return fam


def _template(cfg, driver):
    T = _positive(_get(cfg, "T", float, 1.0), "T")
    h = _positive(_get(cfg, "h", float), "h")
    if h > T or abs(T / h - round(T / h)) > 1e-9 * (T / h):
        raise ConfigError("field 'h' must divide 'T' into an integer number of steps", "h")
    x0 = _get(cfg, "x0", float, 0.0)
    return eng.SimSpec(diffusion=None, x0=x0, horizon_T=T, step_h=h, driver=driver)


def _seed(cfg):
    seed = _get(cfg, "seed", int)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"field 'seed' must be an unsigned 64-bit integer, got {seed!r}", "seed")
    return seed


def _replicas(cfg, default=...):
    r = _get(cfg, "replicas", int, default)
    if r < 2:
        raise ConfigError(f"field 'replicas' must be at least 2, got {r!r}", "replicas")
    return r


def _refinement(cfg):
    k = _get(cfg, "noise_refinement", int, 1)
    if k < 1:
        raise ConfigError("field 'noise_refinement' must be a positive integer", "noise_refinement")
    return k


def load_config(path, seed_override=None):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", "config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON (line {exc.lineno}): {exc.msg}",
                          "config") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", "config")
    schema = _get(cfg, "schema", str)
    if schema != SCHEMA:
        raise ConfigError(f"field 'schema' must be {SCHEMA!r}, got {schema!r}", "schema")
    if seed_override is not None:
        cfg = {**cfg, "seed": seed_override}
    _seed(cfg)
    return cfg


# output helpers ------------------------------------------------------------------

def _out_dir(args, cfg):
    out = args.out or cfg.get("out") or os.environ.get("SDESTAB_OUT")
    if not out:
        raise ConfigError("no output directory: pass --out, set 'out' or SDESTAB_OUT", "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(out, subcommand, cfg):
    """Config echo, version and wall-clock; written before any data file."""
    manifest = {"subcommand": subcommand, "version": __version__, "config": cfg,
                "wall_clock": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_csv(path, columns, rows, title=None):
    """CSV with an optional ``# title`` line naming the series and axes."""
    with open(path, "w", newline="") as fh:
        if title:
            fh.write(f"# {title}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _say(msg):
    print(msg, flush=True)


# subcommands -------------------------------------------------------------------

def cmd_yw_table(cfg, out, args):
    m_max = _get(cfg, "m_max", int, 8)
    points = _get(cfg, "grid_points", int, 4096)
    if m_max < 1:
        raise ConfigError("field 'm_max' must be >= 1", "m_max")
    if points < 16:
        raise ConfigError("field 'grid_points' must be >= 16", "grid_points")
    rows = [yw.level_diagnostics(yw.level(m), points) for m in range(1, m_max + 1)]
    cols = list(rows[0])
    write_csv(out / "yw_table.csv", cols, [[r[c] for c in cols] for r in rows])
    bad = [r["m"] for r in rows if min(v for k, v in r.items() if k.endswith("_margin")) < 0]
    if bad:
        _say(f"negative invariant margin at levels {bad}")
        return EXIT_CONDITION
    _say(f"wrote {m_max} levels, all margins >= 0")
    return EXIT_OK


def _check_family(fam, n_list, driver):
    rows, ok = [], True
    targets = [("limit", fam.limit_sigma)] + [(n, fam.member(n)) for n in n_list]
    for label, c in targets:
        g = coef.default_grid(c, fam.domain)
        if driver.is_stable:
            rep = coef.check_belfadli_ouknine(c, driver.alpha, g)
        else:
            rep = coef.check_nakao_legall(c, g)
        ok &= rep.passed
        wx, wy = rep.witness if rep.witness else (math.nan, math.nan)
        rows.append([label, rep.exponent, int(rep.passed), rep.min_value, rep.worst_violation,
                     wx, wy, rep.grid_size])
    return ok, rows


def cmd_check_coefficients(cfg, out, args):
    fam = _family(cfg)
    driver = _driver(cfg)
    n_list = _n_list(cfg)
    ok, rows = _check_family(fam, n_list, driver)
    write_csv(out / "conditions.csv",
              ["coefficient", "exponent", "passed", "min_value", "worst_violation",
               "witness_x", "witness_y", "grid_size"], rows)
    dist_rows = []
    try:
        for n, d in zip(n_list, coef.family_distances(fam, n_list)):
            dist_rows.append([n, d, fam.rate_constant_C0 / n, int(d <= fam.rate_constant_C0 / n * (1 + 1e-9))])
    except QuadratureError as exc:
        _say(f"distance quadrature failed: {exc}")
        return EXIT_CONDITION
    write_csv(out / "distances.csv", ["n", "distance", "rate_bound", "within_rate"], dist_rows)
    within = all(r[3] for r in dist_rows)
    if not (ok and within):
        failed = [r[0] for r in rows if not r[2]]
        _say(f"regularity check failed for {failed or 'rate bound'}")
        return EXIT_CONDITION
    _say("all coefficients pass")
    return EXIT_OK


def cmd_simulate(cfg, out, args):
    fam = _family(cfg)
    driver = _driver(cfg)
    tpl = _template(cfg, driver)
    n = _get(cfg, "n", int)
    if n < 1:
        raise ConfigError("field 'n' must be a positive integer", "n")
    seed = _seed(cfg)
    replica = _get(cfg, "replica", int, 0)
    factor = _refinement(cfg)
    limit = replace(tpl, diffusion=fam.limit_sigma, drift=fam.drift())
    member = replace(tpl, diffusion=fam.member(n), drift=fam.drift(n))
    key = nz.NoiseKey(seed, replica)
    pair = eng.coupled_simulate(limit, member, key, factor)
    write_csv(out / "path.csv", ["t", "x", "x_n", "difference"],
              zip(pair.grid, pair.x_path, pair.xn_path, pair.y_path),
              title="coupled paths: time t vs limit state x and approximating state x_n")
    if args.dump_noise:
        nz.write_noise_dump(out / "noise.bin", eng.noise_for(limit, key, factor))
    _say(f"terminal |X - X_n| = {float(abs(pair.y_path[-1]))!r}")
    return EXIT_OK


def _threads(args):
    t = args.threads if args.threads is not None else 1
    return os.cpu_count() or 1 if t == 0 else t


def _battery(cfg, args, fam, driver, p_list, claims, experiment_id):
    """Run a strong-error sweep; ``claims`` maps (p, statistic) -> claimed exponent."""
    tpl = _template(cfg, driver)
    n_list = _n_list(cfg)
    if min(n_list) <= 2:
        raise ConfigError("field 'n_list' must contain only n > 2 (log-rate fits)", "n_list")
    replicas = _replicas(cfg)
    seed = _seed(cfg)
    safety = _get(cfg, "safety", float, ra.DEFAULT_SAFETY)
    if safety < 1:
        raise ConfigError("field 'safety' must be >= 1", "safety")
    batch = _get(cfg, "batch_size", int, eng.DEFAULT_BATCH)
    if batch < 1:
        raise ConfigError("field 'batch_size' must be positive", "batch_size")
    factor = _refinement(cfg)
    check = _get(cfg, "refinement_check", bool, True)
    threads = _threads(args)
    refinement = None
    if check:
        # primary run at h sums the h/2 noise in pairs, so both runs share one path
        est = eng.estimate_strong_error(fam, n_list, p_list, replicas, tpl, seed, 2 * factor,
                                        batch, threads)
        half = eng.estimate_strong_error(fam, n_list, p_list, replicas,
                                         replace(tpl, step_h=tpl.step_h / 2), seed, factor,
                                         batch, threads)
        refinement = [[a.n, a.p, a.terminal_error, b.terminal_error,
                       abs(a.terminal_error - b.terminal_error) / a.terminal_error,
                       a.sup_error, b.sup_error,
                       abs(a.sup_error - b.sup_error) / a.sup_error] for a, b in zip(est, half)]
    else:
        est = eng.estimate_strong_error(fam, n_list, p_list, replicas, tpl, seed, factor,
                                        batch, threads)
    experiments = []
    for p in p_list:
        rows = [e for e in est if e.p == p]
        fits, verdicts = {}, {}
        for stat, getter in (("terminal", eng.ErrorEstimate.terminal),
                             ("sup", eng.ErrorEstimate.sup)):
            pts = [getter(e) for e in rows]
            if len(pts) >= 4 and all(v > 0 for _, v, _ in pts):
                fits[stat] = ra.fit_log_rate(pts)
            q = claims.get((p, stat))
            if q is not None:
                verdicts[stat] = ra.bound_verdict(pts, q, safety)
        moment = {"alpha": driver.alpha} if driver.is_stable else {"p": p}
        experiments.append(ra.Experiment(
            experiment_id=f"{experiment_id}-p{p!r}", family=fam.name, driver=driver.label(),
            moment=moment, n_list=n_list, estimates=rows, fits=fits, verdicts=verdicts,
            config_echo=cfg, seed=seed))
    return experiments, refinement


REFINEMENT_LIMIT = 0.10


def _emit_battery(out, battery):
    experiments, refinement = battery
    ra.emit_report(experiments, out)
    if refinement is not None:
        write_csv(out / "refinement.csv",
                  ["n", "p", "terminal_error_h", "terminal_error_h2", "terminal_rel_change",
                   "sup_error_h", "sup_error_h2", "sup_rel_change"], refinement,
                  title="strong errors at step h and h/2 on the same noise path")
        worst = max(max(r[4], r[7]) for r in refinement)
        _say(f"step refinement h -> h/2: max relative change {worst:.3f}"
             + ("" if worst < REFINEMENT_LIMIT else
                f" exceeds {REFINEMENT_LIMIT}; discretisation error not separated"))
    for exp in experiments:
        for stat, v in sorted(exp.verdicts.items()):
            shape_rows = []
            for e in exp.estimates:
                n, val, ci = getattr(e, stat)()
                shape_rows.append([n, math.log(n), val, ci, v.C_hat * math.log(n) ** -v.q_claimed])
            write_csv(out / f"plot_{exp.experiment_id}_{stat}.csv",
                      ["n", "log_n", "error", "ci", "bound_shape"], shape_rows,
                      title=f"{stat} strong error of order {exp.moment} vs log n; "
                            f"bound_shape = C_hat * (log n)^-{v.q_claimed!r}")
            _say(f"{exp.experiment_id} {stat}: {v.status}"
                 + (f" (witness n = {v.witness_n})" if v.witness_n is not None else ""))


def cmd_stability_rate(cfg, out, args):
    fam = _family(cfg)
    driver = _driver(cfg)
    if driver.is_stable:
        raise ConfigError("stability-rate needs driver.kind = WIENER; use stable-rate",
                          "driver.kind")
    p_raw = _get(cfg, "p", list, [1.0, 2.0])
    if not p_raw or not all(isinstance(p, (int, float)) and p >= 1 for p in p_raw):
        raise ConfigError("field 'p' must be a non-empty list of orders >= 1", "p")
    p_list = [float(p) for p in p_raw]
    ok, _ = _check_family(fam, _n_list(cfg), driver)
    if not ok:
        _say("family fails the regularity check")
        return EXIT_CONDITION
    claims = {(p, "sup"): ra.claimed_exponent(p, sup=True) for p in p_list}
    if 1.0 in p_list:
        claims[(1.0, "terminal")] = ra.claimed_exponent(1.0)
    _emit_battery(out, _battery(cfg, args, fam, driver, p_list, claims, "stability"))
    return EXIT_OK


def cmd_stable_rate(cfg, out, args):
    fam = _family(cfg)
    driver = _driver(cfg)
    if not driver.is_stable:
        raise ConfigError("stable-rate needs driver.kind = STABLE", "driver.kind")
    ok, _ = _check_family(fam, _n_list(cfg), driver)
    if not ok:
        _say("family fails the regularity check")
        return EXIT_CONDITION
    p = driver.alpha - 1.0
    claims = {(p, "terminal"): ra.claimed_exponent(alpha=driver.alpha)}
    _emit_battery(out, _battery(cfg, args, fam, driver, [p], claims, "stable"))
    return EXIT_OK


def cmd_drift_removal(cfg, out, args):
    fam = _family(cfg)
    if fam.limit_b is None:
        raise ConfigError("drift-removal needs 'family.drift'", "family.drift")
    if not all(math.isfinite(v) for v in fam.domain):
        raise ConfigError("drift-removal needs a bounded 'family.domain'", "family.domain")
    driver = _driver(cfg)
    if driver.is_stable:
        raise ConfigError("drift-removal is for the WIENER driver", "driver.kind")
    n_list = _n_list(cfg)
    seed = _seed(cfg)
    mode = _get(cfg.get("family", {}), "distance_mode", str, "L1", where="family.")
    if mode == "SUP":
        raise ConfigError("drift-removal supports distance_mode L1 or L2_SQUARED", "family.distance_mode")

    sf = dr.ScaleFunction(fam.limit_b, fam.limit_sigma, fam.domain)
    invariance = dr.verify_invariance(sf)
    write_json(out / "invariance.json", {"scale_function": sf.echo(), "report": invariance.to_dict()})
    if not invariance.passed:
        _say("transformed coefficient fails the regularity check")
        return EXIT_CONDITION

    td = dr.transformed_family_distance(fam, n_list, mode)
    fit = td.fit
    write_csv(out / "drift_removal.csv", ["n", "distance", "fitted_C", "fitted_q"],
              [[n, d, fit.C if fit else math.nan, fit.q if fit else math.nan]
               for n, d in zip(td.n_list, td.distances)],
              title="transformed-coefficient distance over the common image vs n")

    h_list = _get(cfg, "h_list", list, [])
    if h_list:
        if not all(isinstance(h, (int, float)) and h > 0 for h in h_list):
            raise ConfigError("field 'h_list' must hold positive steps", "h_list")
        tpl = _template({**cfg, "h": float(max(h_list))}, driver)
        spec = replace(tpl, diffusion=fam.limit_sigma, drift=fam.limit_b)
        rt_reps = _get(cfg, "roundtrip_replicas", int, 256)
        # simulated paths are unconstrained, so the roundtrip uses the scale function on R
        rt = dr.roundtrip_drift_removal(spec, nz.NoiseKey(seed, 0), h_list, rt_reps)
        write_csv(out / "roundtrip.csv", ["h", "discrepancy", "ci"],
                  [[p.h, p.discrepancy, p.ci] for p in rt.points],
                  title="mean sup-path discrepancy of the transform roundtrip vs step h")
        write_json(out / "roundtrip_fit.json",
                   {"c": rt.c, "r2": rt.r_squared, "q_free": rt.q_free,
                    "r2_free": rt.r_squared_free, "monotone": rt.monotone})

    if "replicas" in cfg:
        claims = {(1.0, "terminal"): ra.claimed_exponent(1.0),
                  (1.0, "sup"): ra.claimed_exponent(1.0, sup=True)}
        _emit_battery(out, _battery(cfg, args, fam, driver, [1.0], claims, "drift"))
    _say(f"transformed distance fit q = {fit.q if fit else float('nan')!r}")
    return EXIT_OK


def _estimate_from_row(row):
    return eng.ErrorEstimate(**{k: row[k] for k in ra.CSV_COLUMNS})


def cmd_report(cfg, out, args):
    src = _get(cfg, "input", str)
    try:
        with open(src) as fh:
            stored = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read stored results {src}: {exc}", "input") from exc
    experiments = []
    for s in stored.get("experiments", []):
        moment = {k: s[k] for k in ("p", "alpha") if k in s}
        fits = {k: ra.RateFit(ra.RateModel(v["model"]), v["C"], v["q"], v["r2"],
                              tuple(v["n_range"])) for k, v in s.get("fit", {}).items()}
        verdicts = {k: ra.Verdict(v["status"], v["witness_n"], v["C_hat"], v["safety"],
                                  v["q_claimed"]) for k, v in s.get("verdict", {}).items()}
        experiments.append(ra.Experiment(s["experiment_id"], s["family"], s["driver"], moment,
                                         s["n_list"], [_estimate_from_row(r) for r in s["errors"]],
                                         fits, verdicts, s["config_echo"], s["seed"]))
    ra.emit_report(experiments, out)
    _say(f"re-emitted {len(experiments)} experiments")
    return EXIT_OK


COMMANDS = {
    "check-coefficients": cmd_check_coefficients,
    "yw-table": cmd_yw_table,
    "simulate": cmd_simulate,
    "stability-rate": cmd_stability_rate,
    "stable-rate": cmd_stable_rate,
    "drift-removal": cmd_drift_removal,
    "report": cmd_report,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="sdestab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", help="output directory (default: config 'out' or $SDESTAB_OUT)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--threads", type=int, default=None, help="worker threads, 0 = auto")
    ap.add_argument("--dump-noise", action="store_true", help="write the driving noise (simulate)")
    return ap


def run(subcommand, config_path, out=None, seed=None, threads=None, dump_noise=False):
    """Programmatic entry point; returns the exit status."""
    args = argparse.Namespace(subcommand=subcommand, config=config_path, out=out, seed=seed,
                              threads=threads, dump_noise=dump_noise)
    try:
        if threads is not None and threads < 0:
            raise ConfigError("--threads must be >= 0", "threads")
        cfg = load_config(config_path, seed)
        out_dir = _out_dir(args, cfg)
        write_manifest(out_dir, subcommand, cfg)
        return COMMANDS[subcommand](cfg, out_dir, args)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation failed at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except (SetupError, DomainError, QuadratureError) as exc:
        print(f"condition failure: {exc}", file=sys.stderr)
        return EXIT_CONDITION


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.seed, args.threads, args.dump_noise)


if __name__ == "__main__":
    sys.exit(main())
