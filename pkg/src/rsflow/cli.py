"""Command-line entry point.

Subcommands: plan, check-rsf, simulate, verify-frozen, verify-identities,
canonical, slice-image.  Exit code 0 means every requested threshold was
met; anything else is a failure (CI-friendly).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import rsff
from .rsf import canonical_antisymmetric, check_rsf, decomposition_plan, zero_pattern
from .solver import parse_config, run_simulation
from .verify import (frozen_convergence_study, identity_suite, lemma1_check,
                     VelocityHistory)


def _cmd_plan(args) -> int:
    try:
        plan = decomposition_plan(args.d)
    except ValueError as exc:
        print(f"error: {exc} (the decomposition is stated for d >= 3)",
              file=sys.stderr)
        return 2
    if args.json:
        print(plan.to_json())
    else:
        parts = []
        for i in range(plan.m):
            axes = plan.component_axes(i)
            parts.append("(" + ",".join(f"u{a}" for a in axes) + ")")
        print(f"d={plan.d} M={plan.m}: " + "|".join(parts))
    return 0


def _cmd_check_rsf(args) -> int:
    vf, _ = rsff.read_field(args.field)
    violation = check_rsf(vf, zero_pattern(vf.grid.d))
    print(f"rsf_violation={violation:.6e}")
    return 0 if violation <= args.threshold else 1


def _cmd_simulate(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    try:
        result = run_simulation(cfg, outdir=args.out, keep_history=False)
    except RuntimeError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1
    last = result.diagnostics[-1]
    print(f"done: t={last['time']:.4g} energy={last['energy']:.6g} "
          f"mass={last['mass']:.6g} rsf_dev={last['rsf_dev']:.3e}")
    return 0


def _cmd_verify_frozen(args) -> int:
    if args.snapshots:
        history = VelocityHistory.from_rsff_dir(args.snapshots)
        from .rsf import component_vorticities
        from .verify import advect_flowmap, pullback_error
        plan = decomposition_plan(3)
        w0 = component_vorticities(history.velocity_field(0), plan)
        w1 = component_vorticities(history.velocity_field(-1), plan)
        n = history.grid.dims[0]
        fmap = advect_flowmap(history, history.t0, history.t1,
                              2 * (len(history.times) - 1),
                              stride=max(1, n // 32))
        errs = {"omega_h": pullback_error(w1[0], fmap, w0[0]),
                "omega_rest": pullback_error(w1[1], fmap, w0[1])}
        out = {"scenario": "snapshots", "errors": errs}
        ok = all(e["l2_normalized"] <= args.threshold for e in errs.values())
    else:
        report = frozen_convergence_study(tuple(args.resolutions))
        out = json.loads(report.to_json())
        ok = (report.orders["omega_h"] >= args.min_order
              and report.orders["omega_rest"] >= args.min_order)
    text = json.dumps(out, indent=2)
    if args.report:
        Path(args.report).write_text(text)
    print(text)
    return 0 if ok else 1


def _cmd_verify_identities(args) -> int:
    dims = args.d if args.d else list(range(3, 9))
    worst = identity_suite(dims=dims, seeds=args.seeds)
    if args.inject_violation:
        worst["lemma1_negative_control"] = lemma1_check(4, 2, 0, violate=True)
    ok = True
    for name, val in worst.items():
        if name.endswith("negative_control"):
            passed = val > 1e-3
        else:
            passed = val <= args.tol
        ok = ok and passed
        print(f"{name}: {val:.3e} [{'PASS' if passed else 'FAIL'}]")
    return 0 if ok else 1


def _cmd_canonical(args) -> int:
    if args.matrix:
        a = np.asarray(json.loads(Path(args.matrix).read_text()), dtype=float)
    else:
        rng = np.random.default_rng(args.seed)
        d = args.d
        raw = rng.normal(size=(d, d))
        a = 0.5 * (raw - raw.T)
    rot = canonical_antisymmetric(a)
    print(rot.to_json())
    return 0


PALETTE = [(33, 102, 172), (146, 197, 222), (247, 247, 247),
           (244, 165, 130), (178, 24, 43)]


def banded_rgb(values: np.ndarray, levels=None) -> np.ndarray:
    """Few-level color coding of a 2D slice (symmetric bands by default)."""
    vmax = float(np.max(np.abs(values)))
    if levels is None:
        if vmax == 0:
            levels = [0.0]
        else:
            levels = list(np.linspace(-vmax, vmax, len(PALETTE) - 1))
    idx = np.searchsorted(np.asarray(levels, dtype=float), values)
    nb = len(levels) + 1
    palette = np.asarray(
        [PALETTE[int(round(i * (len(PALETTE) - 1) / max(nb - 1, 1)))]
         for i in range(nb)], dtype=np.uint8)
    return palette[idx]


def write_ppm(path, rgb: np.ndarray) -> None:
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())


def _cmd_slice_image(args) -> int:
    vf, _ = rsff.read_field(args.snapshot)
    comp_index = {"u1": 0, "u2": 1, "u3": 2, "rho": 3}[args.component]
    if comp_index >= vf.ncomp:
        print(f"error: snapshot has no component {args.component}", file=sys.stderr)
        return 2
    vals = vf.components[comp_index].values
    if not 0 <= args.axis3 < vals.shape[2]:
        print(f"error: slice index {args.axis3} out of range "
              f"0..{vals.shape[2] - 1}", file=sys.stderr)
        return 2
    levels = [float(x) for x in args.levels.split(",")] if args.levels else None
    write_ppm(args.out, banded_rgb(vals[:, :, args.axis3], levels))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsflow")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="print the invariant decomposition plan")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_plan)

    sp = sub.add_parser("check-rsf", help="zero-pattern violation of a field file")
    sp.add_argument("--field", required=True)
    sp.add_argument("--threshold", type=float, default=1e-10)
    sp.set_defaults(fn=_cmd_check_rsf)

    sp = sub.add_parser("simulate", help="run the solver from a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_simulate)

    sp = sub.add_parser("verify-frozen", help="pullback-conservation campaign")
    sp.add_argument("--snapshots")
    sp.add_argument("--resolutions", type=int, nargs="+", default=[32, 64, 128])
    sp.add_argument("--report")
    sp.add_argument("--min-order", type=float, default=2.5)
    sp.add_argument("--threshold", type=float, default=1e-3)
    sp.set_defaults(fn=_cmd_verify_frozen)

    sp = sub.add_parser("verify-identities", help="closed-form identity suite")
    sp.add_argument("--d", type=int, nargs="*")
    sp.add_argument("--seeds", type=int, default=20)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--inject-violation", action="store_true")
    sp.set_defaults(fn=_cmd_verify_identities)

    sp = sub.add_parser("canonical", help="rotation-plane form of an antisymmetric matrix")
    sp.add_argument("--matrix", help="JSON file with a square matrix")
    sp.add_argument("--d", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=_cmd_canonical)

    sp = sub.add_parser("slice-image", help="banded PPM of a snapshot slice")
    sp.add_argument("--snapshot", required=True)
    sp.add_argument("--component", choices=["u1", "u2", "u3", "rho"], required=True)
    sp.add_argument("--axis3", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--levels")
    sp.set_defaults(fn=_cmd_slice_image)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
