"""Monte Carlo experiment orchestration.

Every stochastic draw is seeded through (master seed, purpose, index)
derivation, so reruns are bit-reproducible and the aware/agnostic jamming
paths consume identical payload, noise and jammer-sample streams: any
difference between their reports is attributable to training alone.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import build_channel_set, correlation_matrix, correlation_sqrt
from .core import (
    EquivalentChannel,
    PhaseBook,
    assign_antennas,
    cumulative_layer_channels,
    diagonality_metrics,
    equivalent_channel,
)
from .geometry import build_geometry, draw_user_layout
from .impairments import ImpairmentConfig, apply_phase_impairments, impairment_coupling
from .seeding import derive_seed, rng_from
from .signals import (
    awgn,
    constellation_mse,
    gen_frame,
    jammer_waveform,
    normalize_received,
    ser,
    sinr_and_sumrate,
    snr_to_noise_variance,
)
from .training import TrainConfig, train

JAMMING_MODES = ("none", "aware", "agnostic")
SWEEP_AXES = ("N", "B", "eta0", "beta", "sigma", "alpha")


@dataclass
class GeometryParams:
    wavelength: float = 0.125
    layers: int = 5
    atoms_x: int = 8
    atoms_y: int = 8
    atom_spacing: float | None = None
    total_thickness: float | None = None
    bs_antennas: int | None = None  # defaults to 2K
    bs_spacing: float | None = None
    bs_standoff: float | None = None


@dataclass
class UserParams:
    count: int = 4
    rician_factor: float = 1.0
    pathloss_exponent: float = 2.2
    reference_gain_db: float = -30.0
    azimuth_deg: tuple = (-60.0, 60.0)
    elevation_deg: tuple = (-30.0, 30.0)
    distance_m: tuple = (20.0, 60.0)


@dataclass
class JammingParams:
    mode: str = "none"
    jsr_db: float = 0.0
    power_jitter: tuple = (0.5, 1.5)

    def __post_init__(self):
        if self.mode not in JAMMING_MODES:
            raise ValueError(f"jamming mode must be one of {JAMMING_MODES}")


@dataclass
class Scenario:
    geometry: GeometryParams = field(default_factory=GeometryParams)
    users: UserParams = field(default_factory=UserParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    jamming: JammingParams = field(default_factory=JammingParams)
    impairments: ImpairmentConfig = field(default_factory=ImpairmentConfig)
    snr_grid_db: tuple = (0.0, 4.0, 8.0, 12.0, 16.0)
    realizations: int = 8
    payload_slots: int = 4096
    constellation_slots: int = 256
    master_seed: int = 0


@dataclass
class RealizationResult:
    index: int
    assignment: np.ndarray
    pb: PhaseBook
    record: object
    eq: EquivalentChannel
    noise_free_mse: float
    constellation_received: np.ndarray  # raw noise-free received (K, Uc)
    constellation_ideal: np.ndarray
    diagonality: list
    metrics: dict  # snr_db -> {"ser", "sum_rate", "mse"}
    jammer_mean_power: float
    channels: object = None
    user_distances: np.ndarray | None = None
    pathloss_exponent: float = 2.2


@dataclass
class ExperimentReport:
    kind: str
    scenario: Scenario
    realizations: list
    loss_curves: dict  # {"episodes", "mean", "std"} aggregated across realizations
    metrics: dict  # {"snr_db", "ser", "ser_std", "sum_rate", ..., "mse", ...}
    diagonality: dict  # {"layer", "avg_offdiag_power", ...} aggregated
    noise_free_mse: dict  # {"mean", "std", "per_realization"}


def scenario_geometry(scenario: Scenario):
    g = scenario.geometry
    antennas = g.bs_antennas if g.bs_antennas is not None else 2 * scenario.users.count
    return build_geometry(
        wavelength=g.wavelength,
        layers=g.layers,
        atoms_x=g.atoms_x,
        atoms_y=g.atoms_y,
        bs_antennas=antennas,
        atom_spacing=g.atom_spacing,
        total_thickness=g.total_thickness,
        bs_spacing=g.bs_spacing,
        bs_standoff=g.bs_standoff,
    )


def monte_carlo_aggregate(series: list) -> dict:
    """Elementwise mean and population std over realizations, reduced in
    the given (fixed) order."""
    if not series:
        raise ValueError("nothing to aggregate")
    stacked = np.stack([np.asarray(s, dtype=float) for s in series])
    return {"mean": stacked.mean(axis=0), "std": stacked.std(axis=0)}


def _deg_pair_to_rad(pair) -> tuple:
    return (math.radians(pair[0]), math.radians(pair[1]))


def _draw_layout(scenario: Scenario, count: int, rng) -> object:
    u = scenario.users
    return draw_user_layout(
        count,
        rng,
        azimuth_range=_deg_pair_to_rad(u.azimuth_deg),
        elevation_range=_deg_pair_to_rad(u.elevation_deg),
        distance_range=u.distance_m,
        rician_factor=u.rician_factor,
        pathloss_exponent=u.pathloss_exponent,
        reference_gain=10 ** (u.reference_gain_db / 10),
    )


@dataclass
class _Bundle:
    index: int
    channels: object
    layout: object
    jammer_layout: object
    pb0: PhaseBook
    assignment: object
    pilots: object
    jam_power_range: tuple | None
    jammer_mean_power: float


def _prepare(scenario: Scenario, geom, corr_sqrt, i: int, with_jammer: bool) -> _Bundle:
    ms = scenario.master_seed
    k = scenario.users.count
    layout = _draw_layout(scenario, k, rng_from(ms, "layout", i))
    user_seeds = [derive_seed(ms, "user_ch", i, kk) for kk in range(k)]
    jammer_layout = None
    jammer_seed = None
    jam_power_range = None
    jammer_mean_power = 0.0
    if with_jammer:
        jammer_layout = _draw_layout(scenario, 1, rng_from(ms, "jammer_pos", i))
        jammer_seed = derive_seed(ms, "jammer_ch", i)
        jsr_lin = 10 ** (scenario.jamming.jsr_db / 10)
        mean_beta = float(np.mean([layout.pathloss(kk) for kk in range(k)]))
        beta_jam = jammer_layout.pathloss(0)
        p_nom = jsr_lin * mean_beta / (0.5 * beta_jam)
        lo, hi = scenario.jamming.power_jitter
        jam_power_range = (lo * p_nom, hi * p_nom)
        jammer_mean_power = 0.5 * 0.5 * (jam_power_range[0] + jam_power_range[1])
    ch = build_channel_set(
        geom,
        layout,
        user_seeds,
        jammer_layout=jammer_layout,
        jammer_seed=jammer_seed,
        corr_sqrt=corr_sqrt,
        seed=derive_seed(ms, "realization", i),
    )
    pb0 = PhaseBook.random(geom.layers, geom.atoms_per_layer, derive_seed(ms, "init_phases", i))
    assignment = assign_antennas(equivalent_channel(ch, pb0))
    pilots = gen_frame(k, scenario.train.pilots, derive_seed(ms, "pilots", i))
    return _Bundle(
        index=i,
        channels=ch,
        layout=layout,
        jammer_layout=jammer_layout,
        pb0=pb0,
        assignment=assignment,
        pilots=pilots,
        jam_power_range=jam_power_range,
        jammer_mean_power=jammer_mean_power,
    )


def _train_bundle(scenario: Scenario, bundle: _Bundle, train_with_jammer: bool):
    ms = scenario.master_seed
    cfg = scenario.train
    if cfg.noise_variance > 0:
        cfg = replace(cfg, noise_seed=derive_seed(ms, "train_noise", bundle.index))
    jam = None
    if train_with_jammer:
        jam = jammer_waveform(
            scenario.train.pilots,
            bundle.jam_power_range,
            derive_seed(ms, "jam_train", bundle.index),
        )
    return train(
        bundle.channels, bundle.pilots.symbols, cfg, bundle.pb0, bundle.assignment, jam=jam
    )


def _evaluate(
    scenario: Scenario,
    bundle: _Bundle,
    pb: PhaseBook,
    record,
    eval_with_jammer: bool,
    impairments: ImpairmentConfig | None = None,
) -> RealizationResult:
    ms = scenario.master_seed
    i = bundle.index
    ch = bundle.channels
    k = ch.users
    imp = impairments if impairments is not None else scenario.impairments

    eq = equivalent_channel(ch, pb).select(bundle.assignment)
    if imp.active:
        pb_eval = apply_phase_impairments(pb, imp, derive_seed(ms, "phase_noise", i))
        coupling = impairment_coupling(imp, ch.atoms)
        eq_eval = equivalent_channel(ch, pb_eval, coupling=coupling).select(bundle.assignment)
        pb_diag = pb_eval
        diag_coupling = coupling
    else:
        eq_eval = eq
        pb_diag = pb
        diag_coupling = None

    # noise-free constellation (jamming contribution included when present)
    frame_c = gen_frame(k, scenario.constellation_slots, derive_seed(ms, "constellation", i))
    y_c = eq_eval.selected @ frame_c.symbols
    if eval_with_jammer:
        jw = jammer_waveform(
            scenario.constellation_slots,
            bundle.jam_power_range,
            derive_seed(ms, "jam_const", i),
        )
        y_c = y_c + np.outer(eq_eval.jammer_selected, jw.samples)
    noise_free_mse = constellation_mse(normalize_received(y_c), frame_c.symbols)

    diagonality = [
        diagonality_metrics(full[bundle.assignment.antenna_for_user, :])
        for full in cumulative_layer_channels(ch, pb_diag, coupling=diag_coupling)
    ]

    metrics = {}
    for j, snr_db in enumerate(scenario.snr_grid_db):
        sigma2 = snr_to_noise_variance(snr_db, eq.selected, branches=eq.full.shape[0])
        frame = gen_frame(k, scenario.payload_slots, derive_seed(ms, "payload", i, j))
        noise = awgn((k, scenario.payload_slots), sigma2, derive_seed(ms, "noise", i, j))
        y = eq_eval.selected @ frame.symbols + noise
        if eval_with_jammer:
            jw = jammer_waveform(
                scenario.payload_slots,
                bundle.jam_power_range,
                derive_seed(ms, "jam_eval", i, j),
            )
            y = y + np.outer(eq_eval.jammer_selected, jw.samples)
        jam_power = bundle.jammer_mean_power if eval_with_jammer else 0.0
        _, sum_rate = sinr_and_sumrate(eq_eval, sigma2, jam_power)
        metrics[float(snr_db)] = {
            "ser": ser(y, frame.bits),
            "sum_rate": sum_rate,
            "mse": constellation_mse(normalize_received(y), frame.symbols),
        }

    return RealizationResult(
        index=i,
        assignment=bundle.assignment.antenna_for_user.copy(),
        pb=pb,
        record=record,
        eq=eq,
        noise_free_mse=noise_free_mse,
        constellation_received=y_c,
        constellation_ideal=frame_c.symbols,
        diagonality=diagonality,
        metrics=metrics,
        jammer_mean_power=bundle.jammer_mean_power if eval_with_jammer else 0.0,
        channels=ch,
        user_distances=bundle.layout.distance.copy(),
        pathloss_exponent=bundle.layout.pathloss_exponent,
    )


def _pad_to_longest(curves: list) -> np.ndarray:
    """Right-pad convergence traces with their final value so realizations
    that stopped early still contribute a full-length curve."""
    longest = max(len(c) for c in curves)
    out = np.empty((len(curves), longest))
    for r, c in enumerate(curves):
        out[r, : len(c)] = c
        out[r, len(c) :] = c[-1]
    return out


def _aggregate(kind: str, scenario: Scenario, results: list) -> ExperimentReport:
    snr = [float(s) for s in scenario.snr_grid_db]
    metric_agg = {"snr_db": np.array(snr)}
    for key in ("ser", "sum_rate", "mse"):
        series = [[rr.metrics[s][key] for s in snr] for rr in results]
        if snr:
            agg = monte_carlo_aggregate(series)
            metric_agg[key] = agg["mean"]
            metric_agg[key + "_std"] = agg["std"]
        else:
            metric_agg[key] = np.array([])
            metric_agg[key + "_std"] = np.array([])

    loss_mat = _pad_to_longest([rr.record.loss_mean for rr in results])
    loss_agg = monte_carlo_aggregate(list(loss_mat))
    loss_curves = {
        "episodes": np.arange(1, loss_mat.shape[1] + 1),
        "mean": loss_agg["mean"],
        "std": loss_agg["std"],
    }

    layers = len(results[0].diagonality)
    diag_agg = {"layer": np.arange(1, layers + 1)}
    for key in ("avg_diag_power", "avg_offdiag_power", "offdiag_suppression_db"):
        series = [[rr.diagonality[l][key] for l in range(layers)] for rr in results]
        diag_agg[key] = monte_carlo_aggregate(series)["mean"]

    mse_series = [rr.noise_free_mse for rr in results]
    nf_mean = float(np.mean(mse_series))
    nf_std = float(np.std(mse_series))

    return ExperimentReport(
        kind=kind,
        scenario=scenario,
        realizations=results,
        loss_curves=loss_curves,
        metrics=metric_agg,
        diagonality=diag_agg,
        noise_free_mse={
            "mean": nf_mean,
            "std": nf_std,
            "per_realization": np.array(mse_series),
        },
    )


def _realize_one(args) -> RealizationResult:
    """One full realization (prepare, train, evaluate). Top-level so a
    process pool can ship it to workers; results depend only on
    (scenario, index, mode), so parallel and sequential runs agree."""
    scenario, _, mode = args
    bundle, pb, record = _prepare_and_train(args)
    return _evaluate(scenario, bundle, pb, record, eval_with_jammer=(mode != "none"))


def _run_realizations(scenario: Scenario, mode: str, jobs: int) -> list:
    if scenario.realizations < 1:
        raise ValueError("need at least one realization")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    args = [(scenario, i, mode) for i in range(scenario.realizations)]
    if jobs == 1 or len(args) == 1:
        return [_realize_one(a) for a in args]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
        return list(pool.map(_realize_one, args))


def run_multiuser(scenario: Scenario, jobs: int = 1) -> ExperimentReport:
    """Jam-free separation experiment over independent channel draws."""
    return _aggregate("multiuser", scenario, _run_realizations(scenario, "none", jobs))


def run_jamming(scenario: Scenario, jobs: int = 1) -> ExperimentReport:
    """Jamming experiment; scenario.jamming.mode selects whether training
    sees the jammer (aware) or not (agnostic). Evaluation always does."""
    mode = scenario.jamming.mode
    if mode not in ("aware", "agnostic"):
        raise ValueError("jamming experiment needs mode 'aware' or 'agnostic'")
    return _aggregate("jamming_" + mode, scenario, _run_realizations(scenario, mode, jobs))


def _corr_sqrt_for(scenario: Scenario, geom):
    if np.isinf(scenario.users.rician_factor):
        return None
    return correlation_sqrt(correlation_matrix(geom))


def _apply_axis(scenario: Scenario, axis: str, value) -> Scenario:
    if axis == "N":
        side = math.isqrt(int(value))
        if side * side != int(value):
            raise ValueError(f"N axis values must be perfect squares, got {value}")
        geometry = replace(scenario.geometry, atoms_x=side, atoms_y=side)
        return replace(scenario, geometry=geometry)
    if axis == "B":
        imp = replace(scenario.impairments, quant_bits=int(value))
        return replace(scenario, impairments=imp)
    if axis == "eta0":
        return replace(scenario, train=replace(scenario.train, eta0=float(value)))
    if axis == "beta":
        return replace(scenario, train=replace(scenario.train, beta=float(value)))
    if axis == "sigma":
        imp = replace(scenario.impairments, phase_noise_sigma=float(value))
        return replace(scenario, impairments=imp)
    if axis == "alpha":
        imp = replace(scenario.impairments, coupling_alpha=float(value))
        return replace(scenario, impairments=imp)
    raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")


def run_sweep(scenario: Scenario, axis: str, values, jobs: int = 1) -> list:
    """Clone the scenario per axis value (child master seed derived from
    (master, axis, value)) and run the appropriate experiment. Returns a
    list of (value, report) pairs in the given order."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    out = []
    for value in values:
        sub = _apply_axis(scenario, axis, value)
        key = int(value) if axis in ("N", "B") else float(value)
        sub = replace(sub, master_seed=derive_seed(scenario.master_seed, "sweep", axis, key))
        if sub.jamming.mode == "none":
            out.append((value, run_multiuser(sub, jobs=jobs)))
        else:
            out.append((value, run_jamming(sub, jobs=jobs)))
    return out


def _prepare_and_train(args):
    scenario, i, mode = args
    geom = scenario_geometry(scenario)
    corr_sqrt = _corr_sqrt_for(scenario, geom)
    bundle = _prepare(scenario, geom, corr_sqrt, i, with_jammer=(mode != "none"))
    pb, record = _train_bundle(scenario, bundle, train_with_jammer=(mode == "aware"))
    return bundle, pb, record


def run_impairment_study(scenario: Scenario, variants: dict, jobs: int = 1) -> dict:
    """Train once per realization, then evaluate every impairment variant
    on the very same trained system and payload/noise/jammer streams, so
    variant differences are attributable to the impairment alone.

    variants maps a label to an ImpairmentConfig (use an all-None config
    for the continuous reference). Returns {label: ExperimentReport}.
    """
    if not variants:
        raise ValueError("need at least one variant")
    if scenario.realizations < 1:
        raise ValueError("need at least one realization")
    mode = scenario.jamming.mode
    with_jammer = mode != "none"
    args = [(scenario, i, mode) for i in range(scenario.realizations)]
    if jobs > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            trained = list(pool.map(_prepare_and_train, args))
    else:
        trained = [_prepare_and_train(a) for a in args]
    reports = {}
    for label, imp in variants.items():
        results = [
            _evaluate(scenario, bundle, pb, record, eval_with_jammer=with_jammer, impairments=imp)
            for bundle, pb, record in trained
        ]
        kind = "impairment_" + str(label)
        reports[label] = _aggregate(kind, scenario, results)
    return reports


def distance_robustness(
    scenario: Scenario,
    scale_range=(0.5, 1.5),
    slots: int | None = None,
    report: ExperimentReport | None = None,
    realization: int = 0,
) -> dict:
    """Re-evaluate the trained system with per-user, per-slot distance
    rescaling. Only pathloss magnitudes change: angles and the fast-fading
    draw stay frozen, so each received point moves radially.
    """
    lo, hi = scale_range
    if not 0 < lo <= hi:
        raise ValueError("scale range must be positive with lo <= hi")
    if report is None:
        report = run_multiuser(scenario)
    rr = report.realizations[realization]
    k = rr.eq.selected.shape[0]
    ms = scenario.master_seed
    if slots is None:
        slots = scenario.constellation_slots
    # same frame stream as the nominal constellation dump, so a degenerate
    # scale range {1.0} reproduces it bit for bit
    frame = gen_frame(k, slots, derive_seed(ms, "constellation", realization))
    scales = rng_from(ms, "distance_scales", realization).uniform(lo, hi, size=(k, slots))
    amp = scales ** (-rr.pathloss_exponent / 2)
    received = rr.eq.selected @ (amp * frame.symbols)
    return {
        "received": received,
        "ideal": frame.symbols,
        "scales": scales,
        "realization": realization,
    }
