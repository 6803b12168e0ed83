"""Command-line front end.

Exit codes: 0 success, 1 config or validation failure, 2 usage errors
(argparse's own). Reports land in --out as CSV/JSON plus PNG figures;
wall-clock numbers go to timings.json only, so the rest of the output
directory is byte-stable for a fixed config and seed.
"""

import argparse
import json
import sys
import time

import numpy as np

from .config import (
    ConfigError,
    apply_overrides,
    config_hash,
    default_config,
    load_config,
    scenario_from_config,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simstack",
        description="stacked-metasurface wave-domain combiner: channels, training, link experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="scenario config (JSON)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--snr", help="comma-separated SNR grid in dB, e.g. 0,4,8,12,16")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY.path=VALUE",
            help="config override, repeatable (e.g. train.eta0=0.9)",
        )
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel realizations")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("channels", help="synthesize and save one channel realization")
    common(p, out_required=False)
    p.add_argument("--index", type=int, default=0, help="realization index")
    p.add_argument("--save", required=True, help="output .npz path")

    p = sub.add_parser("train", help="train one realization and report convergence")
    common(p)
    p.add_argument("--index", type=int, default=0, help="realization index")

    p = sub.add_parser("multiuser", help="multi-user separation experiment")
    common(p)

    p = sub.add_parser("jamming", help="jamming experiment (mode from config: aware|agnostic)")
    common(p)

    p = sub.add_parser("sweep", help="parameter sweep over one axis")
    common(p)
    p.add_argument("--axis", required=True, help="one of N, B, eta0, beta, sigma, alpha")
    p.add_argument("--values", required=True, help="comma-separated axis values")

    p = sub.add_parser("validate", help="run the built-in invariant checks")
    p.add_argument("--config", help="also validate this config file")

    return parser


def _load_scenario(args):
    cfg = load_config(args.config) if args.config else default_config()
    if args.override:
        cfg = apply_overrides(cfg, args.override)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if getattr(args, "snr", None):
        try:
            cfg["snr_grid_db"] = [float(v) for v in args.snr.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--snr must be comma-separated numbers, got {args.snr!r}")
    return cfg, scenario_from_config(cfg)


def _cmd_channels(args) -> int:
    from .channels import build_channel_set, save_channel_set
    from .experiments import _corr_sqrt_for, _draw_layout, scenario_geometry
    from .seeding import derive_seed, rng_from

    cfg, scenario = _load_scenario(args)
    geom = scenario_geometry(scenario)
    i = args.index
    layout = _draw_layout(scenario, scenario.users.count, rng_from(scenario.master_seed, "layout", i))
    user_seeds = [derive_seed(scenario.master_seed, "user_ch", i, k) for k in range(scenario.users.count)]
    jammer_layout = None
    jammer_seed = None
    if scenario.jamming.mode != "none":
        jammer_layout = _draw_layout(scenario, 1, rng_from(scenario.master_seed, "jammer_pos", i))
        jammer_seed = derive_seed(scenario.master_seed, "jammer_ch", i)
    ch = build_channel_set(
        geom,
        layout,
        user_seeds,
        jammer_layout=jammer_layout,
        jammer_seed=jammer_seed,
        corr_sqrt=_corr_sqrt_for(scenario, geom),
        seed=derive_seed(scenario.master_seed, "realization", i),
    )
    save_channel_set(ch, args.save)
    print(f"wrote {args.save}: {ch.users} users, {ch.atoms} atoms x {ch.layers} layers, "
          f"{ch.antennas} antennas, config {config_hash(cfg)[:12]}")
    return 0


def _cmd_train(args) -> int:
    import os

    from .experiments import _prepare_and_train
    from .report import _write_csv, _write_json, _versions

    cfg, scenario = _load_scenario(args)
    t0 = time.perf_counter()
    mode = scenario.jamming.mode
    bundle, pb, record = _prepare_and_train((scenario, args.index, mode))
    elapsed = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    name = f"train_record_r{args.index}.csv"
    _write_csv(os.path.join(args.out, name),
               ["episode", "loss_mean", "loss_std", "eta"], record.rows())
    from .core import save_phase_book

    pb_name = f"phasebook_r{args.index}.txt"
    save_phase_book(pb, os.path.join(args.out, pb_name))
    manifest = {
        "kind": "train",
        "config": cfg,
        "config_hash": config_hash(cfg),
        "realization": args.index,
        "episodes_run": record.episodes_run,
        "termination": record.termination,
        "final_loss_mean": float(record.loss_mean[-1]) if record.episodes_run else None,
        "files": sorted([name, pb_name]) + ["manifest.json"],
        "versions": _versions(),
    }
    _write_json(os.path.join(args.out, "manifest.json"), manifest)
    _write_json(os.path.join(args.out, "timings.json"), {"train_s": elapsed})
    if record.episodes_run:
        print(f"trained realization {args.index}: {record.episodes_run} episodes "
              f"({record.termination}), final loss {record.loss_mean[-1]:.6g}")
    else:
        print(f"trained realization {args.index}: 0 episodes ({record.termination})")
    print(f"report in {args.out}")
    return 0


def _cmd_experiment(args, kind: str) -> int:
    from .experiments import run_jamming, run_multiuser
    from .report import write_report

    cfg, scenario = _load_scenario(args)
    t0 = time.perf_counter()
    if kind == "multiuser":
        report = run_multiuser(scenario, jobs=args.jobs)
    else:
        report = run_jamming(scenario, jobs=args.jobs)
    run_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    write_report(report, args.out, config=cfg, figures=not args.no_figures,
                 timings={"experiment_s": run_s})
    print(f"{report.kind}: {scenario.realizations} realizations, "
          f"final loss {report.loss_curves['mean'][-1]:.6g}, "
          f"noise-free MSE {report.noise_free_mse['mean']:.6g}")
    snr = report.metrics["snr_db"]
    for j in range(len(snr)):
        print(f"  snr {snr[j]:5.1f} dB: ser {report.metrics['ser'][j]:.6g}, "
              f"sum rate {report.metrics['sum_rate'][j]:.4f} bit/s/Hz")
    print(f"report in {args.out} ({time.perf_counter() - t0:.1f}s to write)")
    return 0


def _cmd_sweep(args) -> int:
    from .experiments import SWEEP_AXES, run_sweep
    from .report import write_sweep_report

    cfg, scenario = _load_scenario(args)
    axis = args.axis
    if axis not in SWEEP_AXES:
        raise ConfigError(f"--axis must be one of {SWEEP_AXES}")
    try:
        if axis in ("N", "B"):
            values = [int(v) for v in args.values.split(",") if v.strip()]
        else:
            values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}")
    if not values:
        raise ConfigError("--values is empty")
    t0 = time.perf_counter()
    results = run_sweep(scenario, axis, values, jobs=args.jobs)
    run_s = time.perf_counter() - t0
    write_sweep_report(axis, results, args.out, config=cfg,
                       figures=not args.no_figures, timings={"sweep_s": run_s})
    for value, rep in results:
        line = f"  {axis}={value}: noise-free MSE {rep.noise_free_mse['mean']:.6g}"
        if len(rep.metrics["snr_db"]):
            line += f", ser@top {rep.metrics['ser'][-1]:.6g}"
        print(line)
    print(f"report in {args.out}")
    return 0


def _cmd_validate(args) -> int:
    failures = []
    checks = []

    def check(name, fn):
        checks.append(name)
        try:
            fn()
            print(f"ok: {name}")
        except Exception as exc:  # noqa: BLE001 - report and count every failure
            failures.append((name, exc))
            print(f"FAIL: {name}: {exc}")

    def _diffraction_coefficient():
        from .channels import rs_coefficient

        lam = 0.125
        w = rs_coefficient(np.zeros(3), np.array([0.0, 0.0, lam]), (lam / 2) ** 2, lam)
        want = (lam / 4) * (1 / (2 * np.pi * lam) - 1j / lam)
        assert abs(w - want) < 1e-15 * abs(want) + 1e-18

    def _forward_equivalence():
        from .channels import build_channel_set
        from .core import PhaseBook, equivalent_channel, forward
        from .geometry import build_geometry, draw_user_layout
        from .seeding import rng_from

        geom = build_geometry(0.125, layers=3, atoms_x=4, atoms_y=4, bs_antennas=4)
        layout = draw_user_layout(2, rng_from(7, "validate-layout"))
        ch = build_channel_set(geom, layout, [11, 12])
        pb = PhaseBook.random(3, 16, seed=5)
        s = rng_from(9).standard_normal(2) + 1j * rng_from(10).standard_normal(2)
        direct = forward(ch, pb, s)
        via_eq = equivalent_channel(ch, pb).full @ s
        assert np.max(np.abs(direct - via_eq)) < 1e-12

    def _gradient_check():
        from .channels import build_channel_set
        from .core import PhaseBook, assign_antennas, equivalent_channel
        from .geometry import build_geometry, draw_user_layout
        from .seeding import rng_from
        from .signals import gen_frame
        from .training import batch_loss, layer_gradient

        geom = build_geometry(0.125, layers=2, atoms_x=3, atoms_y=3, bs_antennas=4)
        layout = draw_user_layout(2, rng_from(21, "validate-layout"))
        ch = build_channel_set(geom, layout, [31, 32])
        pb = PhaseBook.random(2, 9, seed=41)
        assignment = assign_antennas(equivalent_channel(ch, pb))
        pilots = gen_frame(2, 8, seed=51).symbols
        grad = layer_gradient(ch, pb, pilots, assignment=assignment, layer=1)
        eps = 1e-6
        pb_hi = pb.copy()
        pb_hi.phases[0, 0] += eps
        pb_lo = pb.copy()
        pb_lo.phases[0, 0] -= eps
        hi, _ = batch_loss(ch, pb_hi, pilots, assignment=assignment)
        lo, _ = batch_loss(ch, pb_lo, pilots, assignment=assignment)
        fd = (hi - lo) / (2 * eps)
        assert abs(grad[0] - fd) <= 1e-5 * max(abs(fd), 1e-6)

    def _quantizer_idempotent():
        from .core import PhaseBook
        from .impairments import quantize_phases

        pb = PhaseBook.random(2, 16, seed=3)
        q1 = quantize_phases(pb, 3)
        q2 = quantize_phases(q1, 3)
        assert np.array_equal(q1.phases, q2.phases)
        assert np.max(np.abs(np.angle(np.exp(1j * (q1.phases - pb.phases))))) <= np.pi / 8 + 1e-12

    def _seed_determinism():
        from .seeding import derive_seed

        assert derive_seed(0, "a", 1) == derive_seed(0, "a", 1)
        assert derive_seed(0, "a", 1) != derive_seed(0, "a", 2)
        assert derive_seed(0, "a", 1) != derive_seed(1, "a", 1)

    def _config_roundtrip():
        cfg = default_config()
        scenario_from_config(cfg)
        assert config_hash(cfg) == config_hash(json.loads(json.dumps(cfg)))

    check("diffraction coefficient oracle", _diffraction_coefficient)
    check("forward matches equivalent channel", _forward_equivalence)
    check("analytic gradient matches finite differences", _gradient_check)
    check("phase quantizer idempotent and bounded", _quantizer_idempotent)
    check("seed derivation deterministic and key-sensitive", _seed_determinism)
    check("default config valid with canonical hash", _config_roundtrip)

    if args.config:
        def _user_config():
            scenario_from_config(load_config(args.config))

        check(f"user config {args.config}", _user_config)

    print(f"{len(checks) - len(failures)}/{len(checks)} checks passed")
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "channels":
            return _cmd_channels(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "multiuser":
            return _cmd_experiment(args, "multiuser")
        if args.command == "jamming":
            return _cmd_experiment(args, "jamming")
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "validate":
            return _cmd_validate(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
