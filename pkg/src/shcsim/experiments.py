"""Experiment runner: declarative configs in, CSV plus a JSON manifest out.

Experiments
-----------
pol-sweep       full-factorial (azimuth, elevation) grid at fixed OSNR
osnr-sweep      BER versus OSNR with per-subcarrier breakdown and theory overlay
tap-sweep       BER versus equalizer length for {FD-CDC on, off} x {DSCM, single carrier}
cdc-complexity  the multiplier/adder accounting table
loopback        one transparent (or configured) link run, per-subcarrier quality

Config files are flat ``key = value`` text (# comments allowed); every value
can be overridden on the command line with ``--set key=value``.  Each run
writes ``<out>.manifest.json`` echoing the full config, seed and library
version, which is sufficient to reproduce the CSV byte for byte.

Sweep points run in parallel worker processes (SHCSIM_WORKERS, default: all
cores) with per-point seeds derived deterministically from the config seed;
rows are written in grid order regardless of completion order.
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelConfig, apply_channel, cd_delay_spread_s
from .complexity import complexity_table
from .constellation import make_constellation
from .errors import ConfigurationError, SyncError
from .frontend import coherent_detect
from .metrics import (
    count_ber_per_subcarrier,
    osnr_to_snr_db,
    q_factor_db,
    theory_ber_qam,
)
from .rxdsp import CdcConfig, EqualizerConfig, equalize_and_demap, prepare_subcarriers
from .txdsp import SubcarrierPlan, build_dscm_tx, prbs
from .waveform import ComplexWaveform

EXPERIMENTS = ("pol-sweep", "osnr-sweep", "tap-sweep", "cdc-complexity", "loopback")

MIN_BER_SYMBOLS = 1 << 14  # floor for statistically meaningful BER points


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    # signal
    modulation: int = 16
    n_sc: int = 4
    total_baud: float = 50e9
    beta: float = 0.1
    sps_out: int = 2
    rrc_span: int = 64
    symbols_per_point: int = 65536
    seed: int = 1
    coding: str = "alamouti"
    # channel
    fiber_km: float = 0.0
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0
    azimuth_deg: float = 0.0
    elevation_deg: float = 0.0
    linewidth_hz: float = 100e3
    osnr_db: float | str = 26.0
    # equalizer
    eq_taps: int = 9
    eq_mu: float = 3e-3
    eq_mu_p: float = 5e-2
    eq_train_blocks: int = 10000
    eq_phase_update: str = "gradient"
    # chromatic dispersion compensation
    cdc: str = "none"  # "none" or "fdcdc"
    cdc_fft: int = 64
    cdc_overlap: int | str = "auto"
    # per-experiment knobs
    grid_step_deg: float = 15.0
    q2_source: str = "evm"  # "evm" or "ber"
    osnr_list: tuple = (17.0, 18.0, 19.0, 20.0, 21.0, 22.0, 23.0, 24.0)
    tap_list: tuple = (1, 3, 5, 7, 9, 11, 13, 15)
    fft_list: tuple = (256, 512, 1024, 2048)
    data_len: int = 65536

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}, want one of {EXPERIMENTS}"
            )
        if self.modulation not in (4, 16, 32, 64):
            raise ConfigurationError(f"unsupported modulation {self.modulation}")
        if self.coding not in ("alamouti", "none"):
            raise ConfigurationError(f"unknown coding {self.coding!r}")
        if self.q2_source not in ("evm", "ber"):
            raise ConfigurationError(f"unknown q2_source {self.q2_source!r}")
        if self.cdc not in ("none", "fdcdc"):
            raise ConfigurationError(f"cdc must be 'none' or 'fdcdc', got {self.cdc!r}")
        if self.experiment in ("pol-sweep", "osnr-sweep", "tap-sweep"):
            if self.symbols_per_point < MIN_BER_SYMBOLS:
                raise ConfigurationError(
                    f"symbols_per_point must be >= {MIN_BER_SYMBOLS} for BER sweeps"
                )
        if self.experiment == "pol-sweep" and 180.0 % self.grid_step_deg != 0:
            raise ConfigurationError(
                f"grid_step_deg {self.grid_step_deg} must divide 180"
            )
        if self.experiment == "osnr-sweep":
            if list(self.osnr_list) != sorted(self.osnr_list):
                raise ConfigurationError("osnr_list must be ascending")
        if self.experiment == "tap-sweep":
            taps = list(self.tap_list)
            if taps != sorted(taps) or any(t % 2 == 0 or t < 1 for t in taps):
                raise ConfigurationError("tap_list must be ascending odd values")

    def channel_config(self, osnr=None, azimuth=None, elevation=None) -> ChannelConfig:
        return ChannelConfig(
            fiber_km=self.fiber_km,
            dispersion_ps_nm_km=self.dispersion_ps_nm_km,
            wavelength_nm=self.wavelength_nm,
            azimuth_deg=self.azimuth_deg if azimuth is None else azimuth,
            elevation_deg=self.elevation_deg if elevation is None else elevation,
            linewidth_hz=self.linewidth_hz,
            osnr_db=self.osnr_db if osnr is None else osnr,
        )

    def equalizer_config(self, n_taps=None) -> EqualizerConfig:
        return EqualizerConfig(
            n_taps=self.eq_taps if n_taps is None else n_taps,
            mu=self.eq_mu,
            mu_p=self.eq_mu_p,
            n_train=self.eq_train_blocks,
            phase_update=self.eq_phase_update,
        )


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    field = next(
        (f for f in dataclasses.fields(ExperimentConfig) if f.name == name), None
    )
    if field is None:
        raise ConfigurationError(f"unknown config key {name!r}")
    if name in ("osnr_list",):
        # "off"/"inf" entries disable noise loading for that point.
        return tuple(
            np.inf if v.strip() in ("off", "inf") else float(v)
            for v in raw.split(",")
            if v.strip()
        )
    if name in ("tap_list", "fft_list"):
        return tuple(int(v) for v in raw.split(",") if v.strip())
    if name == "osnr_db":
        return "off" if raw == "off" else float(raw)
    if name == "cdc_overlap":
        return "auto" if raw == "auto" else int(raw)
    if field.type in ("int",):
        return int(float(raw))
    if field.type in ("float",):
        return float(raw)
    return raw


def load_config(path: str | None = None, overrides=()) -> ExperimentConfig:
    """Build a config from a flat key=value file plus key=value overrides."""
    values: dict = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            key, raw = line.split("=", 1)
            values[key.strip()] = _parse_value(key.strip(), raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        values[key.strip()] = _parse_value(key.strip(), raw)
    if "experiment" not in values:
        raise ConfigurationError("config must set 'experiment'")
    return ExperimentConfig(**values)


def _derived_seed(base: int, *key: int) -> int:
    ss = np.random.SeedSequence([int(base)] + [int(k) for k in key])
    return int(ss.generate_state(1, np.uint64)[0])


def build_transmission(cfg: ExperimentConfig, n_sc=None, symbols=None, coding=None):
    """Deterministic transmit build: per-subcarrier PRBS seeds derive from
    the config seed and the subcarrier index."""
    n_sc = cfg.n_sc if n_sc is None else n_sc
    symbols = cfg.symbols_per_point if symbols is None else symbols
    coding = cfg.coding if coding is None else coding
    plan = SubcarrierPlan(n_sc=n_sc, total_baud=cfg.total_baud, beta=cfg.beta)
    const = make_constellation(cfg.modulation)
    k = const.bits_per_symbol
    bits = [prbs(symbols * k, _derived_seed(cfg.seed, 1, s)) for s in range(n_sc)]
    return build_dscm_tx(bits, const, plan, sps_out=cfg.sps_out,
                         rrc_span=cfg.rrc_span, coding=coding)


def _cdc_config(cfg: ExperimentConfig, sc_rate: float, fft_size=None):
    if cfg.cdc != "fdcdc" or cfg.fiber_km == 0:
        return None
    overlap = cfg.cdc_overlap
    if overlap == "auto":
        spread = cd_delay_spread_s(cfg.fiber_km, cfg.dispersion_ps_nm_km,
                                   cfg.wavelength_nm, sc_rate)
        overlap = int(np.ceil(spread * sc_rate))
    return CdcConfig(
        fft_size=cfg.cdc_fft if fft_size is None else fft_size,
        overlap=int(overlap),
        fiber_km=cfg.fiber_km,
        dispersion_ps_nm_km=cfg.dispersion_ps_nm_km,
        wavelength_nm=cfg.wavelength_nm,
    )


def run_link_once(cfg: ExperimentConfig, tx, channel_cfg, point_seed: int,
                  eq: EqualizerConfig | None = None, cdc="config"):
    """One end-to-end link realization; returns (RxResult, sync_failed)."""
    lo_carrier = ComplexWaveform(
        np.ones(len(tx.signal), dtype=np.complex128), tx.signal.sample_rate
    )
    sig, lo = apply_channel(tx.signal, lo_carrier, channel_cfg, point_seed)
    detected = coherent_detect(sig, lo)
    if cdc == "config":
        cdc = _cdc_config(cfg, 2.0 * tx.plan.sc_baud)
    eq = cfg.equalizer_config() if eq is None else eq
    sync_failed = False
    try:
        prepared = prepare_subcarriers(detected, tx, cdc=cdc)
    except SyncError:
        # Recorded, not fatal: fall back to the construction offset of zero.
        sync_failed = True
        prepared = prepare_subcarriers(detected, tx, cdc=cdc, sync=0)
    rx = equalize_and_demap(prepared, tx, eq, coding=tx.coding)
    return rx, sync_failed


def _q2_from_rx(cfg: ExperimentConfig, rx, ber: float):
    """Q^2 estimate per the configured source; NaN when unmeasurable."""
    if cfg.q2_source == "ber":
        if 0.0 < ber < 0.5:
            return q_factor_db(ber)
        return float("nan")
    mse = np.mean([10.0 ** (sc.evm_db / 10.0) for sc in rx.subcarriers])
    snr_db = -10.0 * np.log10(max(mse, 1e-12))
    ber_est = float(theory_ber_qam(cfg.modulation, snr_db))
    ber_est = min(max(ber_est, 1e-300), 0.499999)
    return q_factor_db(ber_est)


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if value != value:  # NaN
            return "nan"
        return format(value, ".10g")
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_manifest(path: str, cfg: ExperimentConfig, header: list[str],
                    extra: dict | None = None) -> None:
    manifest = {
        "experiment": cfg.experiment,
        "library": "shcsim",
        "version": __version__,
        "seed": cfg.seed,
        "csv_schema": header,
        "config": dataclasses.asdict(cfg),
    }
    if cfg.coding == "alamouti":
        # Alamouti sends each source pair on both polarizations: half the
        # information rate of conventional dual polarization at equal baud.
        manifest["net_info_bit_rate"] = (
            cfg.total_baud * np.log2(cfg.modulation) / 2.0
        )
    if extra:
        manifest.update(extra)
    Path(str(path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n"
    )


def _worker_count() -> int:
    env = os.environ.get("SHCSIM_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


_WORKER_TX_CACHE: dict = {}


def _pol_point(args):
    cfg, az, el, point_seed = args
    key = ("pol", cfg)
    tx = _WORKER_TX_CACHE.get(key)
    if tx is None:
        tx = build_transmission(cfg)
        _WORKER_TX_CACHE.clear()
        _WORKER_TX_CACHE[key] = tx
    rx, sync_failed = run_link_once(
        cfg, tx, cfg.channel_config(azimuth=az, elevation=el), point_seed
    )
    rep = count_ber_per_subcarrier(rx.ref_bits, rx.bits)
    q2 = _q2_from_rx(cfg, rx, rep.ber)
    return [az, el, rep.ber, q2, int(sync_failed)]


def _parallel_map(func, jobs):
    if _worker_count() == 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=_worker_count()) as pool:
        return list(pool.map(func, jobs, chunksize=1))


POL_SWEEP_HEADER = ["kind", "azimuth_deg", "elevation_deg", "ber", "q2_db", "sync_failed"]


def run_pol_sweep(cfg: ExperimentConfig, out_path: str) -> list[list]:
    """Azimuth/elevation grid at fixed OSNR; summary row carries the Q^2 spread."""
    step = cfg.grid_step_deg
    angles = np.arange(-90.0, 90.0 + step / 2, step)
    jobs = []
    for i, az in enumerate(angles):
        for j, el in enumerate(angles):
            seed = _derived_seed(cfg.seed, 2, i * len(angles) + j)
            jobs.append((cfg, float(az), float(el), seed))
    points = _parallel_map(_pol_point, jobs)

    rows = [["point"] + p for p in points]
    q2s = [p[3] for p in points if p[3] == p[3]]
    spread = (max(q2s) - min(q2s)) if q2s else float("nan")
    rows.append(["summary", "", "", "", spread, ""])
    _write_csv(out_path, POL_SWEEP_HEADER, rows)
    _write_manifest(out_path, cfg, POL_SWEEP_HEADER, {"q2_spread_db": spread})
    return rows


OSNR_SWEEP_HEADER = [
    "osnr_db", "ber_avg", "ber_sc1", "ber_sc2", "ber_sc3", "ber_sc4",
    "theory_ber", "low_confidence",
]


def _osnr_point(args):
    cfg, osnr, point_seed = args
    key = ("osnr", cfg)
    tx = _WORKER_TX_CACHE.get(key)
    if tx is None:
        tx = build_transmission(cfg)
        _WORKER_TX_CACHE.clear()
        _WORKER_TX_CACHE[key] = tx
    loaded = "off" if np.isinf(osnr) else osnr
    rx, _ = run_link_once(cfg, tx, cfg.channel_config(osnr=loaded), point_seed)
    rep = count_ber_per_subcarrier(rx.ref_bits, rx.bits)
    per_sc = [r.ber for r in rep.per_subcarrier] + [""] * (4 - len(rep.per_subcarrier))
    if np.isinf(osnr):
        theory = 0.0
    else:
        theory = float(
            theory_ber_qam(cfg.modulation, osnr_to_snr_db(osnr, cfg.total_baud))
        )
    return [osnr, rep.ber] + per_sc[:4] + [theory, int(rep.low_confidence)]


def run_osnr_sweep(cfg: ExperimentConfig, out_path: str) -> list[list]:
    """BER vs OSNR rows with per-subcarrier breakdown and theory overlay."""
    jobs = [
        (cfg, float(osnr), _derived_seed(cfg.seed, 3, i))
        for i, osnr in enumerate(cfg.osnr_list)
    ]
    rows = _parallel_map(_osnr_point, jobs)
    _write_csv(out_path, OSNR_SWEEP_HEADER, rows)
    _write_manifest(out_path, cfg, OSNR_SWEEP_HEADER)
    return rows


TAP_SWEEP_HEADER = [
    "series", "cdc", "n_taps", "ber", "bit_errors", "bits", "low_confidence",
    "knee_taps",
]

TAP_SWEEP_SERIES = (
    ("dscm", "fdcdc"),
    ("dscm", "none"),
    ("single-carrier", "fdcdc"),
    ("single-carrier", "none"),
)


def _tap_series(args):
    cfg, series, cdc_mode, series_idx = args
    n_sc = cfg.n_sc if series == "dscm" else 1
    symbols = cfg.symbols_per_point * (1 if series == "dscm" else cfg.n_sc)
    tx = build_transmission(cfg, n_sc=n_sc, symbols=symbols)
    lo_carrier = ComplexWaveform(
        np.ones(len(tx.signal), dtype=np.complex128), tx.signal.sample_rate
    )
    seed = _derived_seed(cfg.seed, 4, series_idx)
    sig, lo = apply_channel(tx.signal, lo_carrier, cfg.channel_config(), seed)
    detected = coherent_detect(sig, lo)
    sc_rate = 2.0 * tx.plan.sc_baud
    cdc = None
    if cdc_mode == "fdcdc":
        # The single-carrier stream needs a bigger block than the DSCM
        # preset: keep the FFT at least four times the overlap.
        spread = cd_delay_spread_s(cfg.fiber_km, cfg.dispersion_ps_nm_km,
                                   cfg.wavelength_nm, sc_rate)
        overlap = int(np.ceil(spread * sc_rate))
        fft_size = max(cfg.cdc_fft, 1 << int(np.ceil(np.log2(max(4 * overlap, 2)))))
        cdc = _cdc_config(
            dataclasses.replace(cfg, cdc="fdcdc"), sc_rate, fft_size=fft_size
        )
    prepared = prepare_subcarriers(detected, tx, cdc=cdc)

    rows = []
    for taps in cfg.tap_list:
        rx = equalize_and_demap(prepared, tx, cfg.equalizer_config(n_taps=taps))
        rep = count_ber_per_subcarrier(rx.ref_bits, rx.bits)
        rows.append([series, cdc_mode, taps, rep.ber, rep.bit_errors,
                     rep.bits_compared, int(rep.low_confidence)])

    bers = [r[3] for r in rows]
    floor = min(bers)
    knee = next(
        (r[2] for r, b in zip(rows, bers) if b <= max(1.1 * floor, floor)), rows[-1][2]
    )
    for r in rows:
        r.append(knee)
    return rows


def run_tap_sweep(cfg: ExperimentConfig, out_path: str) -> list[list]:
    """Four labeled curves: {DSCM, single carrier} x {FD-CDC, none}.

    The pre-equalizer chain runs once per curve and only the equalizer is
    rerun per tap count.  The knee column repeats each curve's knee, the
    smallest tap count whose BER is within 10 percent of the curve's floor.
    The single-carrier series carries n_sc times the per-subcarrier symbol
    count so every curve compares equal bit totals.
    """
    jobs = [
        (cfg, series, cdc_mode, i)
        for i, (series, cdc_mode) in enumerate(TAP_SWEEP_SERIES)
    ]
    blocks = _parallel_map(_tap_series, jobs)
    rows = [row for block in blocks for row in block]
    _write_csv(out_path, TAP_SWEEP_HEADER, rows)
    knees = {
        f"knee_{series}_{cdc}": block[0][-1]
        for (series, cdc), block in zip(TAP_SWEEP_SERIES, blocks)
    }
    _write_manifest(out_path, cfg, TAP_SWEEP_HEADER, knees)
    return rows


CDC_COMPLEXITY_HEADER = ["scheme", "fft_size", "per_symbol_mults", "per_symbol_adds"]


def run_cdc_complexity(cfg: ExperimentConfig, out_path: str) -> list[list]:
    """Complexity table rows; deterministic, no RNG."""
    table = complexity_table(cfg.fft_list, data_len=cfg.data_len)
    rows = [
        [r["scheme"], r["fft_size"], r["per_symbol_mults"], r["per_symbol_adds"]]
        for r in table
    ]
    _write_csv(out_path, CDC_COMPLEXITY_HEADER, rows)
    _write_manifest(out_path, cfg, CDC_COMPLEXITY_HEADER)
    return rows


LOOPBACK_HEADER = ["subcarrier", "ber", "evm_db", "snr_db", "sync_offset"]


def run_loopback(cfg: ExperimentConfig, out_path: str) -> list[list]:
    """Single link realization, per-subcarrier quality report."""
    tx = build_transmission(cfg)
    rx, _ = run_link_once(cfg, tx, cfg.channel_config(),
                          _derived_seed(cfg.seed, 5, 0))
    rows = []
    for idx, sc in enumerate(rx.subcarriers, start=1):
        rep = count_ber_per_subcarrier([sc.ref_bits], [sc.bits])
        rows.append([idx, rep.ber, sc.evm_db, sc.snr_db, sc.sync_offset])
    _write_csv(out_path, LOOPBACK_HEADER, rows)
    _write_manifest(out_path, cfg, LOOPBACK_HEADER)
    return rows


RUNNERS = {
    "pol-sweep": run_pol_sweep,
    "osnr-sweep": run_osnr_sweep,
    "tap-sweep": run_tap_sweep,
    "cdc-complexity": run_cdc_complexity,
    "loopback": run_loopback,
}


def run_experiment(cfg: ExperimentConfig, out_path: str) -> list[list]:
    return RUNNERS[cfg.experiment](cfg, out_path)
