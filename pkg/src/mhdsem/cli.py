"""Batch front-end: run configured cases, verify invariants, sweep parameters.

Run configurations are plain-text key=value files (one pair per line, `#`
comments, unknown keys rejected).  Each run writes an append-only
diagnostics.csv at the configured cadence and a summary.csv at the end; a
positivity failure is recorded as a crash time in the summary and flips the
exit status (the crash time is data, not an error of the tool).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from mhdsem.cases import (CASE_NAMES, CaseSpec, build_case, case_defaults,
                          eoc, l2_error, L2_VARIABLES)
from mhdsem.dgcore import divergence_error, entropy_rate, total_entropy
from mhdsem.physics import PositivityError, cons_to_prim, max_signal_speed
from mhdsem.timeint import TimeConfig, advance

__all__ = ["RunConfig", "parse_config", "run", "main"]

_KEYS = {
    "case": str,
    "elements": str,          # "8" or "8,8,8"
    "N": int,
    "mesh_type": str,
    "t_end": float,
    "cfl": float,
    "fixed_dt": float,
    "gamma": float,
    "mu": float,
    "eta": float,
    "prandtl": float,
    "alpha": float,
    "ch_policy": str,
    "mode": str,
    "cadence": int,
    "seed": int,
    "levels": str,            # manufactured refinement levels, e.g. "4,8"
    "vtk_times": str,         # comma-separated dump times
}

_REQUIRED = ("case",)


@dataclass
class RunConfig:
    """A fully resolved run: case spec, time controls, output cadence."""

    spec: CaseSpec
    time: TimeConfig
    cadence: int = 10
    seed: int = 0
    levels: tuple[int, ...] = ()
    vtk_times: tuple[float, ...] = ()


def _parse_elements(text: str) -> tuple[int, int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3 or any(v < 1 for v in parts):
        raise ValueError(f"bad elements spec {text!r}")
    return tuple(parts)


def parse_config(text: str) -> RunConfig:
    """Parse a key=value run configuration.

    Defaults: gamma=5/3, CFL=0.5, alpha=0, ch_policy=proportional, N=3;
    per-case defaults (mesh type, end time, viscosity) fill anything the
    file does not set.  Unknown keys and malformed lines are rejected with
    the line number.
    """
    raw: dict[str, object] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"line {ln}: expected key=value, got {body!r}")
        key, val = (part.strip() for part in body.split("=", 1))
        if key not in _KEYS:
            raise ValueError(f"line {ln}: unknown key {key!r}")
        if key in raw:
            raise ValueError(f"line {ln}: duplicate key {key!r}")
        try:
            raw[key] = _KEYS[key](val)
        except ValueError as exc:
            raise ValueError(f"line {ln}: bad value for {key}: {exc}") from None
    for key in _REQUIRED:
        if key not in raw:
            raise ValueError(f"missing required key {key!r}")
    case = raw.pop("case")
    if case not in CASE_NAMES:
        raise ValueError(f"unknown case {case!r}")

    merged = case_defaults(case)
    merged.setdefault("elements", (4, 4, 4))
    spec_fields = {f.name for f in fields(CaseSpec)}
    for key, val in list(raw.items()):
        if key == "elements":
            merged["elements"] = _parse_elements(val)
        elif key in spec_fields:
            merged[key] = val
    spec = CaseSpec(case=case, N=merged.pop("N", raw.get("N", 3)),
                    **merged)

    tcfg = TimeConfig(t_end=raw.get("t_end", merged.get("t_end", spec.t_end)),
                      cfl=raw.get("cfl", 0.5),
                      fixed_dt=raw.get("fixed_dt"),
                      ch_policy=raw.get("ch_policy", spec.ch_policy),
                      alpha=raw.get("alpha", spec.alpha))
    levels = tuple(int(v) for v in str(raw["levels"]).split(",")) \
        if "levels" in raw else ()
    vtk_times = tuple(float(v) for v in str(raw["vtk_times"]).split(",")) \
        if "vtk_times" in raw else ()
    return RunConfig(spec=spec, time=tcfg, cadence=raw.get("cadence", 10),
                     seed=raw.get("seed", 0), levels=levels,
                     vtk_times=vtk_times)


DIAG_HEADER = ("step", "t", "dt", "S_total", "dSdt_semi_discrete", "divB_L2",
               "min_p", "max_v_plus_cf", "c_h")


class _DiagnosticsWriter:
    """Append-only CSV writer, flushed per record (crash leaves a prefix)."""

    def __init__(self, path: Path):
        self._fh = open(path, "w", newline="")
        self._csv = csv.writer(self._fh)
        self._csv.writerow(DIAG_HEADER)
        self._fh.flush()

    def record(self, step, t, dt, u, mesh, cfg):
        p = cons_to_prim(u, cfg.params)[2]
        row = [step, t, dt,
               total_entropy(u, mesh, cfg.params),
               entropy_rate(u, mesh, cfg, t),
               divergence_error(u, mesh),
               float(p.min()),
               float(max_signal_speed(u, cfg.params).max()),
               cfg.params.ch]
        # cast keeps shortest round-trip formatting for numpy scalars too
        self._csv.writerow([repr(float(v)) if isinstance(v, float) else v
                            for v in row])
        self._fh.flush()

    def close(self):
        self._fh.close()


def _single_run(cfg: RunConfig, outdir: Path, label: str = ""):
    """Advance one case to t_end with diagnostics; returns run record."""
    mesh, u0, rhs_cfg, exact = build_case(cfg.spec)
    diag = _DiagnosticsWriter(outdir / (f"diagnostics{label}.csv"))
    dumps = sorted(cfg.vtk_times)

    state = {"crash_time": None, "u": u0, "t": 0.0, "steps": 0}

    def on_step(step, t, dt, u):
        if step % cfg.cadence == 0:
            diag.record(step, t, dt, u, mesh, rhs_cfg)
        while dumps and t >= dumps[0] - 1e-12:
            mesh.dump_vtk(outdir / f"fields{label}_t{dumps[0]:g}.vtk",
                          _dump_fields(u, rhs_cfg.params))
            dumps.pop(0)

    try:
        diag.record(0, 0.0, 0.0, u0, mesh, rhs_cfg)
        u, t, steps = advance(u0, mesh, rhs_cfg, cfg.time, on_step=on_step)
        diag.record(steps, t, 0.0, u, mesh, rhs_cfg)
        state.update(u=u, t=t, steps=steps)
    except PositivityError as exc:
        state["crash_time"] = exc.time if exc.time is not None else -1.0
    finally:
        diag.close()
    state["mesh"] = mesh
    state["exact"] = exact
    state["rhs_cfg"] = rhs_cfg
    return state


def _dump_fields(u, params):
    rho, v, p, B, psi = cons_to_prim(u, params)
    return {"rho": rho, "p": p,
            "magnetic_energy": 0.5 * np.sum(B * B, axis=-1), "psi": psi}


def run(cfg: RunConfig, outdir: str | Path) -> int:
    """Execute a configured run; returns the process exit status."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = open(outdir / "summary.csv", "w", newline="")
    out = csv.writer(summary)
    status = 0

    if cfg.spec.case == "manufactured" and cfg.levels:
        errs = []
        for lev in cfg.levels:
            lcfg = RunConfig(
                spec=CaseSpec(**{**_spec_dict(cfg.spec),
                                 "elements": (lev, lev, lev)}),
                time=cfg.time, cadence=cfg.cadence, seed=cfg.seed)
            state = _single_run(lcfg, outdir, label=f"_{lev}")
            if state["crash_time"] is not None:
                out.writerow(["crash_time", repr(state["crash_time"])])
                status = 1
                break
            errs.append(l2_error(state["u"], state["exact"], state["t"],
                                 state["mesh"], cfg.spec.gamma))
        if errs:
            out.writerow(["level"] + [f"L2({v})" for v in L2_VARIABLES])
            for lev, err in zip(cfg.levels, errs):
                out.writerow([lev] + [repr(err[v]) for v in L2_VARIABLES])
            if len(errs) >= 2:
                out.writerow(["avg_EOC"] + [
                    repr(float(np.mean(eoc([e[v] for e in errs]))))
                    for v in L2_VARIABLES])
    else:
        state = _single_run(cfg, outdir)
        if state["crash_time"] is not None:
            out.writerow(["crash_time", repr(state["crash_time"])])
            status = 1
        else:
            out.writerow(["t_end", repr(state["t"])])
            out.writerow(["steps", state["steps"]])
            out.writerow(["S_total", repr(total_entropy(
                state["u"], state["mesh"], state["rhs_cfg"].params))])
            out.writerow(["divB_L2", repr(divergence_error(
                state["u"], state["mesh"]))])
            if state["exact"] is not None:
                err = l2_error(state["u"], state["exact"], state["t"],
                               state["mesh"], cfg.spec.gamma)
                for v in L2_VARIABLES:
                    out.writerow([f"L2({v})", repr(err[v])])
    summary.close()
    return status


def _spec_dict(spec: CaseSpec) -> dict:
    return {f.name: getattr(spec, f.name) for f in fields(CaseSpec)}


def _cmd_run(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    if args.cadence is not None:
        cfg.cadence = args.cadence
    return run(cfg, args.output)


def _cmd_verify(args) -> int:
    from mhdsem.verification import run_checks
    ok = run_checks(full=args.full, seed=args.seed)
    print("verification:", "all checks passed" if ok else "FAILURES above")
    return 0 if ok else 1


def _cmd_sweep(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    values = [float(v) for v in args.values.split(",")]
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    status = 0
    rows = []
    mesh0, u0, rhs0, _ = build_case(cfg.spec)
    S0 = total_entropy(u0, mesh0, rhs0.params)
    del mesh0, u0, rhs0
    for val in values:
        sub = RunConfig(spec=cfg.spec, time=cfg.time, cadence=cfg.cadence,
                        seed=cfg.seed, levels=cfg.levels,
                        vtk_times=cfg.vtk_times)
        if args.param == "alpha":
            sub.time = TimeConfig(t_end=cfg.time.t_end, cfl=cfg.time.cfl,
                                  fixed_dt=cfg.time.fixed_dt,
                                  ch_policy=cfg.time.ch_policy, alpha=val)
        elif args.param == "dt":
            sub.time = TimeConfig(t_end=cfg.time.t_end, cfl=cfg.time.cfl,
                                  fixed_dt=val, ch_policy=cfg.time.ch_policy,
                                  alpha=cfg.time.alpha)
        elif args.param == "cfl":
            sub.time = TimeConfig(t_end=cfg.time.t_end, cfl=val,
                                  fixed_dt=None, ch_policy=cfg.time.ch_policy,
                                  alpha=cfg.time.alpha)
        else:
            raise ValueError(f"unknown sweep parameter {args.param!r}")
        subdir = outdir / f"{args.param}_{val:g}"
        subdir.mkdir(exist_ok=True)
        code = run(sub, subdir)
        status = max(status, code)
        if code == 0:
            with open(subdir / "summary.csv") as fh:
                vals = {r[0]: r[1] for r in csv.reader(fh) if r}
            rows.append([val, vals.get("S_total"), repr(S0),
                         vals.get("divB_L2")])
    with open(outdir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([args.param, "S_total_final", "S_total_initial",
                    "divB_L2_final"])
        w.writerows(rows)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mhdsem",
        description="entropy-stable DG spectral element solver for "
                    "resistive GLM-MHD")
    parser.add_argument("--serial", action="store_true",
                        help="force single-threaded kernels")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured case")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--output", required=True)
    p_run.add_argument("--cadence", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_ver = sub.add_parser("verify", help="run the invariant/property suite")
    p_ver.add_argument("--full", action="store_true",
                       help="include the long-running criteria")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.set_defaults(func=_cmd_verify)

    p_sw = sub.add_parser("sweep", help="parameter sweep (dt, alpha, cfl)")
    p_sw.add_argument("--config", required=True)
    p_sw.add_argument("--output", required=True)
    p_sw.add_argument("--param", required=True, choices=("dt", "alpha", "cfl"))
    p_sw.add_argument("--values", required=True)
    p_sw.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    if args.serial:
        import numba
        numba.set_num_threads(1)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
