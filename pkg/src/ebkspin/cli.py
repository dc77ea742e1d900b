"""Command-line front end.

Subcommands: ``spectrum``, ``verify``, ``orbit``, ``angles``.  Options live in
a JSON config file (--config) with flat keys documented in the README; a few
common ones can be overridden on the command line (--tol, --seed, --out and
the model parameters).  All CSV output uses 17 significant digits and fixed
seeds, so identical configs give byte-identical files.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import actions, integrability, quantize
from .errors import ConfigError, EbkspinError, NumericalError
from .dynamics import integrate_skew
from .models import (
    BrokenAxialFlow,
    model_from_config,
    spherical_flow_triple,
)

_FMT = "%.17g"


def _fmt_row(values):
    return ",".join(_FMT % v for v in values)


def _load_config(args):
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config: %s" % exc) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config is not valid JSON: %s" % exc) from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    # command-line overrides
    for key in ("tol", "seed", "out", "model"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key, val in (getattr(args, "set", None) or {}).items():
        cfg[key] = val
    return cfg


def _model_of(cfg):
    model_cfg = cfg.get("model")
    if model_cfg is None:
        raise ConfigError("missing 'model' entry")
    if isinstance(model_cfg, str):
        model_cfg = {"name": model_cfg}
    return model_from_config(model_cfg)


def _positive(cfg, key, default):
    val = float(cfg.get(key, default))
    if val <= 0:
        raise ConfigError("'%s' must be positive" % key)
    return val


class _KeyValue(argparse.Action):
    """--set key=value pairs appended into a dict (JSON-decoded values)."""

    def __call__(self, parser, namespace, values, option_string=None):
        store = getattr(namespace, self.dest, None) or {}
        for item in values:
            if "=" not in item:
                raise argparse.ArgumentError(self, "expected key=value")
            key, raw = item.split("=", 1)
            try:
                store[key] = json.loads(raw)
            except json.JSONDecodeError:
                store[key] = raw
        setattr(namespace, self.dest, store)


def run_spectrum(cfg):
    model = _model_of(cfg)
    s = float(cfg.get("s", 0.5))
    out = cfg.get("out", "spectrum.csv")
    tol = _positive(cfg, "tol", 1e-10)
    kwargs = {"rtol": tol}
    if "n_max" in cfg:
        kwargs["n_max"] = float(cfg["n_max"])
    else:
        if "n_r_max" not in cfg or "l_max" not in cfg:
            raise ConfigError("spectrum needs 'n_max' or both 'n_r_max'/'l_max'")
        kwargs["n_r_max"] = int(cfg["n_r_max"])
        kwargs["l_max"] = int(cfg["l_max"])
        if kwargs["n_r_max"] < 0 or kwargs["l_max"] < 0:
            raise ConfigError("ranges must be nonnegative")
    result = quantize.build_spectrum(model, s, **kwargs)

    with open(out, "w") as fh:
        fh.write("n_r,l,m_s,j,m_j,E,multiplicity\n")
        for line in result.lines:
            for (n_r, l, m_s, j, m_j, E) in line.states():
                fh.write(
                    "%d,%d,%s,%s,%s,%s,%d\n"
                    % (n_r, l, _FMT % m_s, _FMT % j, _FMT % m_j, _FMT % E,
                       line.multiplicity)
                )
    summary = {
        "model": cfg.get("model"),
        "spin": s,
        "levels": [
            {
                "n": line.n,
                "j": line.j,
                "energy": line.energy,
                "multiplicity": line.multiplicity,
                "labels": [list(t) for t in line.labels],
            }
            for line in result.lines
        ],
        "skipped": result.skipped,
    }
    summary_path = cfg.get("summary_out", out + ".json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print("wrote %d states in %d levels -> %s" % (
        sum(line.multiplicity for line in result.lines), len(result.lines), out))
    return 0


_DEFAULT_BOXES = {
    "KeplerModel": ((-1.2, 1.2), (0.4, 2.5)),
    "HOModel": ((-1.5, 1.5), (0.3, 1.8)),
}


def run_verify(cfg):
    model = _model_of(cfg)
    tol = _positive(cfg, "tol", 1e-6)
    n_points = int(cfg.get("n_points", 200))
    if n_points <= 0:
        raise ConfigError("'n_points' must be positive")
    seed = int(cfg.get("seed", 0))
    out = cfg.get("out", "verify.json")
    box = cfg.get("box")
    if box is None:
        box = _DEFAULT_BOXES[type(model).__name__]
    flows = list(spherical_flow_triple(model))
    if cfg.get("broken", False):
        flows[2] = BrokenAxialFlow()
    report = integrability.involution_report(
        flows, box, n_points=n_points, tol=tol, seed=seed, min_L=0.05,
        min_radius=0.1,
    )
    payload = {"involution": report.to_dict(), "broken": bool(cfg.get("broken"))}
    if cfg.get("delta", True):
        E, L = _verify_torus(cfg, model)
        p0, x0 = model.torus_point(E, L)
        delta_rows = []
        times = cfg.get("delta_times", [1.1, 2 * np.pi])
        for a in range(3):
            for b in range(a + 1, 3):
                worst = 0.0
                for t in times:
                    for tp in times:
                        worst = max(
                            worst,
                            integrability.skew_commutator_delta(
                                flows[a], flows[b], p0, x0, t, tp, tol=1e-11
                            ).norm,
                        )
                name = "%s-%s" % (
                    getattr(flows[a], "name", type(flows[a]).__name__),
                    getattr(flows[b], "name", type(flows[b]).__name__),
                )
                delta_rows.append(
                    {"pair": name, "max_delta": worst, "passed": worst <= tol}
                )
        payload["delta"] = delta_rows
        payload["passed"] = report.passed and all(r["passed"] for r in delta_rows)
    else:
        payload["passed"] = report.passed
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    print("verify: %s (max involution residual %.3g) -> %s"
          % ("PASS" if payload["passed"] else "FAIL", report.max_residual, out))
    return 0


def _verify_torus(cfg, model):
    if "E" in cfg and "L" in cfg:
        return float(cfg["E"]), float(cfg["L"])
    L = float(cfg.get("L", 1.0))
    return model.probe_energy(L), L


def run_orbit(cfg):
    model = _model_of(cfg)
    tol = _positive(cfg, "tol", 1e-10)
    out = cfg.get("out", "orbit.csv")
    E = cfg.get("E")
    L = cfg.get("L")
    if E is None or L is None:
        raise ConfigError("orbit needs 'E' and 'L'")
    E, L = float(E), float(L)
    p0, x0 = model.torus_point(E, L)
    t_final = float(cfg.get("t_final", 0.0))
    s0 = np.asarray(cfg.get("spin", [0.0, 0.0, 1.0]), dtype=float)
    s0 = s0 / np.linalg.norm(s0)
    traj = integrate_skew(model, p0, x0, t_final, tol=tol, s0=s0)
    traj.to_csv(out)
    print("wrote %d trajectory rows -> %s" % (len(traj.t), out))
    return 0


def run_angles(cfg):
    model = _model_of(cfg)
    tol = _positive(cfg, "tol", 1e-11)
    out = cfg.get("out", "angles.csv")
    E_values = cfg.get("E_values")
    L_values = cfg.get("L_values")
    if not E_values or not L_values:
        raise ConfigError("angles needs nonempty 'E_values' and 'L_values'")
    rows = []
    for L in L_values:
        for E in E_values:
            I_r = actions.radial_action(model, E, L)
            ra = actions.rotation_angle_radial(model, E, L, tol=tol)
            omega_r, omega_L = actions.frequencies(model, E, L)
            rows.append((E, L, I_r, omega_r, omega_L, ra.alpha))
    with open(out, "w") as fh:
        fh.write("E,L,I_r,omega_r,omega_L,alpha_r\n")
        for row in rows:
            fh.write(_fmt_row(row) + "\n")
    print("wrote %d torus rows -> %s" % (len(rows), out))
    return 0


_COMMANDS = {
    "spectrum": run_spectrum,
    "verify": run_verify,
    "orbit": run_orbit,
    "angles": run_angles,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ebkspin",
        description="Torus quantisation of spinning particles: spectra, "
        "integrability checks, orbit and rotation-angle dumps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output path (overrides config)")
        p.add_argument("--tol", type=float, help="tolerance override")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument("--model", help="model name override (kepler | ho)")
        p.add_argument(
            "--set", nargs="+", action=_KeyValue, metavar="KEY=VALUE",
            help="override any config key (values parsed as JSON)",
        )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](_load_config(args))
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except (NumericalError, EbkspinError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
