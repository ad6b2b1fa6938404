"""Acceptance gate: the five headline criteria, one pass/fail line each.

Every tolerance here is pinned; the experiments run at their stated scale
(2^16 symbols per subcarrier per point).  Criterion 2's modulation-gap
clause is implemented exactly as stated and is expected to fail on an ideal
channel: the 16QAM-to-32QAM crossing gap over AWGN is ~3 dB, not 8-10 dB
(the experimental 9 dB gap was dominated by hardware penalties that scale
with the modulation order).  See notes in the repository root README.
"""

import time

import numpy as np
import pytest

from shcsim import (
    CdcConfig,
    ComplexWaveform,
    DualPolWaveform,
    EqualizerConfig,
    EqualizerState,
    alamouti_encode,
    alamouti_equalize,
    apply_cd,
    count_ber_per_subcarrier,
    evm_db,
    fd_cdc,
    make_constellation,
    measured_osnr_db,
    prbs,
    qam_map,
    rotation_matrix,
)
from shcsim.experiments import (
    ExperimentConfig,
    build_transmission,
    load_config,
    run_link_once,
    run_osnr_sweep,
    run_pol_sweep,
    run_tap_sweep,
)
HD_FEC = 3.8e-3


def report(criterion: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}")
    return ok


def log_crossing(osnr_list, ber_list, threshold=HD_FEC) -> float:
    """OSNR where the BER curve crosses the threshold (log-linear interp)."""
    osnr = np.asarray(osnr_list, dtype=float)
    ber = np.asarray(ber_list, dtype=float)
    above = ber > threshold
    if not above.any() or above.all():
        raise AssertionError("threshold crossing not bracketed by the sweep")
    i = int(np.flatnonzero(above)[-1])
    x0, x1 = osnr[i], osnr[i + 1]
    y0, y1 = np.log10(ber[i]), np.log10(ber[i + 1])
    t = (np.log10(threshold) - y0) / (y1 - y0)
    return float(x0 + t * (x1 - x0))


def test_criterion_1_polarization_insensitivity(tmp_path):
    """Fig. 5 scale: 13x13 grid, 16QAM 4SC, OSNR 26 dB, 2^16 symbols/SC."""
    t0 = time.monotonic()
    cfg = load_config(None, ["experiment=pol-sweep", "seed=5"])
    assert cfg.grid_step_deg == 15.0 and cfg.symbols_per_point == 65536
    assert cfg.osnr_db == 26.0 and cfg.modulation == 16 and cfg.n_sc == 4
    rows = run_pol_sweep(cfg, str(tmp_path / "pol.csv"))
    points = [r for r in rows if r[0] == "point"]
    assert len(points) == 13 * 13
    q2 = np.array([r[4] for r in points], dtype=float)
    spread = float(q2.max() - q2.min())
    elapsed = time.monotonic() - t0

    # Fading contrast: same receiver without Alamouti coding at azimuth 90.
    base_cfg = ExperimentConfig(experiment="loopback", coding="none",
                                azimuth_deg=90.0, osnr_db=26.0, seed=5,
                                symbols_per_point=65536)
    tx = build_transmission(base_cfg)
    rx, _ = run_link_once(base_cfg, tx, base_cfg.channel_config(), 17)
    baseline = count_ber_per_subcarrier(rx.ref_bits, rx.bits)

    ok = report(
        "criterion 1 (polarization insensitivity)",
        spread < 0.5 and baseline.ber > 0.4 and elapsed < 600.0,
        f"Q^2 spread {spread:.3f} dB over 169 points (< 0.5), "
        f"non-Alamouti BER at 90 deg {baseline.ber:.3f} (> 0.4), "
        f"sweep wall time {elapsed:.0f} s (< 600)",
    )
    assert ok


@pytest.fixture(scope="module")
def osnr_curves(tmp_path_factory):
    out = tmp_path_factory.mktemp("osnr")
    common = ["experiment=osnr-sweep", "seed=5"]
    c16 = load_config(None, common + ["modulation=16",
                                      "osnr_list=19,20,21,22,23,24"])
    r16 = run_osnr_sweep(c16, str(out / "m16.csv"))
    c16sc = load_config(None, common + [
        "modulation=16", "n_sc=1", "symbols_per_point=262144",
        "osnr_list=19,20,21,22,23,24",
    ])
    r16sc = run_osnr_sweep(c16sc, str(out / "m16sc.csv"))
    c32 = load_config(None, common + ["modulation=32",
                                      "osnr_list=22,23,24,25,26,27"])
    r32 = run_osnr_sweep(c32, str(out / "m32.csv"))
    return r16, r16sc, r32


def test_criterion_2_16qam_crossing_and_carrier_parity(osnr_curves):
    """Figs. 7-8 property form: crossing vs theory and DSCM/single-carrier."""
    r16, r16sc, _ = osnr_curves
    sim = log_crossing([r[0] for r in r16], [r[1] for r in r16])
    theory = log_crossing([r[0] for r in r16], [r[6] for r in r16])
    sim_sc = log_crossing([r[0] for r in r16sc], [r[1] for r in r16sc])
    ok = report(
        "criterion 2a (16QAM crossing vs theory)",
        abs(sim - theory) < 1.0,
        f"simulated crossing {sim:.2f} dB vs theory {theory:.2f} dB "
        f"(|diff| {abs(sim - theory):.2f} < 1.0)",
    )
    ok &= report(
        "criterion 2c (DSCM vs single carrier at threshold)",
        abs(sim - sim_sc) < 0.3,
        f"DSCM {sim:.2f} dB vs single carrier {sim_sc:.2f} dB "
        f"(|diff| {abs(sim - sim_sc):.2f} < 0.3)",
    )
    assert ok


def test_criterion_2_modulation_order_gap(osnr_curves):
    """As stated: 32QAM crossing 8-10 dB above 16QAM (tolerance +-1.5 dB).

    Expected red on an ideal channel; the AWGN gap at the HD-FEC threshold
    is ~2.9 dB and the paper's 9 dB was dominated by a modulation-dependent
    hardware penalty that is declared out of scope.  Kept at the stated
    tolerance rather than weakened.
    """
    r16, _, r32 = osnr_curves
    c16 = log_crossing([r[0] for r in r16], [r[1] for r in r16])
    c32 = log_crossing([r[0] for r in r32], [r[1] for r in r32])
    gap = c32 - c16
    ok = report(
        "criterion 2b (16->32QAM crossing gap)",
        7.5 <= gap <= 10.5,
        f"measured gap {gap:.2f} dB vs stated 9 +- 1.5 dB "
        "(ideal-channel AWGN gap is ~2.9 dB; see ledger note)",
    )
    assert ok


TAPS = "1,3,5,7,9,11,13,15,17,21,25,31,37,45,53,61"


def _knees(rows):
    return {(r[0], r[1]): r[7] for r in rows}


def test_criterion_3_cdc_absorption(tmp_path):
    """Figs. 10-11 property form over 80 km, D = 17 ps/nm/km."""
    ok = True
    knee_detail = []
    paper_points_ok = True
    for m, osnr in ((16, 22.0), (32, 25.0)):
        cfg = load_config(None, [
            "experiment=tap-sweep", f"modulation={m}", "fiber_km=80",
            f"osnr_db={osnr}", f"tap_list={TAPS}", "seed=5",
        ])
        rows = run_tap_sweep(cfg, str(tmp_path / f"taps{m}.csv"))
        knees = _knees(rows)
        diff = knees[("dscm", "none")] - knees[("dscm", "fdcdc")]
        knee_detail.append(f"{m}QAM: {knees[('dscm', 'none')]}-"
                           f"{knees[('dscm', 'fdcdc')]}={diff}")
        ok &= 2 <= diff <= 6
        if m == 16:
            # The published operating points: 9 taps with FD-CDC sit at the
            # floor, 13 taps without CDC within 10 percent of that floor.
            ber = {(r[0], r[1], r[2]): r[3] for r in rows}
            floor_cdc = min(r[3] for r in rows
                            if r[0] == "dscm" and r[1] == "fdcdc")
            paper_points_ok = (
                ber[("dscm", "fdcdc", 9)] <= 1.1 * floor_cdc
                and ber[("dscm", "none", 13)] <= 1.1 * floor_cdc
            )
    ok = report(
        "criterion 3a (DSCM knee difference 4 +- 2 taps)",
        ok, "; ".join(knee_detail),
    )
    ok &= report(
        "criterion 3a context (paper points: 9 taps at floor with FD-CDC, "
        "13 without within 10 percent)",
        paper_points_ok, "both satisfied on the 16QAM sweep",
    )

    # (b) FD-CDC BER independent of FFT size on the DSCM subcarriers.
    cfg_b = ExperimentConfig(experiment="loopback", modulation=16,
                             fiber_km=80.0, osnr_db=22.0, seed=5)
    tx = build_transmission(cfg_b)
    errors = []
    for nfft in (64, 128, 256):
        cdc = CdcConfig(fft_size=nfft, overlap=8, fiber_km=80.0)
        rx, _ = run_link_once(cfg_b, tx, cfg_b.channel_config(), 777, cdc=cdc)
        rep = count_ber_per_subcarrier(rx.ref_bits, rx.bits)
        errors.append(rep.bit_errors)
    bits = rep.bits_compared
    tol = 3.0 * np.sqrt(2.0 * max(errors))
    ok_b = report(
        "criterion 3b (FD-CDC FFT-size independence)",
        max(errors) - min(errors) <= tol,
        f"errors for N=64/128/256: {errors} over {bits} bits "
        f"(max spread {max(errors) - min(errors)} <= {tol:.0f} counting noise)",
    )

    assert ok and ok_b


def test_criterion_3c_single_carrier_without_cdc(tmp_path):
    """As stated: single carrier without CDC never reaches within 10x of its
    FD-CDC floor BER up to 61 taps.

    Expected red: a centered 61-tap T/2 window spans +-15.25 symbols, which
    exactly covers the +-15-symbol dispersion memory of 80 km at 50 GBd, so
    a fully trained LMS can marginally lock there (seed dependent) and land
    within a factor ~3 of the floor.  The paper-tagged weaker property, BER
    above the HD-FEC threshold at every tested tap count, does hold and is
    reported alongside.  Kept at the stated tolerance rather than weakened.
    """
    cfg_c = load_config(None, [
        "experiment=tap-sweep", "modulation=16", "fiber_km=80",
        "osnr_db=22", f"tap_list={TAPS}", "seed=5",
    ])
    rows_c = run_tap_sweep(cfg_c, str(tmp_path / "taps_sc.csv"))
    sc_cdc = [r[3] for r in rows_c if r[0] == "single-carrier" and r[1] == "fdcdc"]
    sc_raw = [r[3] for r in rows_c if r[0] == "single-carrier" and r[1] == "none"]
    floor = min(sc_cdc)
    report(
        "criterion 3c context (no-CDC stays above HD-FEC at all taps)",
        min(sc_raw) > HD_FEC,
        f"min no-CDC BER {min(sc_raw):.2e} vs HD-FEC {HD_FEC:.1e}",
    )
    ok_c = report(
        "criterion 3c (single carrier fails without CDC up to 61 taps)",
        min(sc_raw) > 10.0 * floor,
        f"min no-CDC BER {min(sc_raw):.2e} vs 10x FD-CDC floor "
        f"{10 * floor:.2e} (see ledger: 61 T/2 taps equals the CD memory)",
    )
    assert ok_c


def test_criterion_4_complexity_exact():
    """Fig. 12 regression: formulas and orderings, exact values."""
    from shcsim import complexity_table, fdcdc_complexity, proposed_complexity

    sc = fdcdc_complexity(65536, 512, 106)
    dscm = fdcdc_complexity(65536, 64, 8)
    prop = proposed_complexity(65536)
    ok = abs(sc.per_symbol_mults - 512 * 10 / 300) < 1e-12
    ok &= abs(sc.per_symbol_mults - 17.07) < 0.01
    ok &= abs(dscm.per_symbol_mults - 64 * 7 / 48) < 1e-12
    ok &= abs(dscm.per_symbol_mults - 9.33) < 0.01
    ok &= prop.per_symbol_mults == 8.0 and prop.per_symbol_adds == 8.0
    rows = complexity_table((256, 512, 1024, 2048))
    by_scheme = {}
    for r in rows:
        by_scheme.setdefault(r["scheme"], []).append(r["per_symbol_mults"])
    for d, s in zip(by_scheme["dscm-fdcdc"], by_scheme["single-carrier-fdcdc"]):
        ok &= 8.0 < d < s
    ok = report(
        "criterion 4 (complexity accounting)",
        ok,
        f"per-symbol mults: single-carrier {sc.per_symbol_mults:.2f} (~17.07), "
        f"DSCM {dscm.per_symbol_mults:.2f} (~9.33), proposed "
        f"{prop.per_symbol_mults:.0f} (= 8); orderings hold at every N",
    )
    assert ok


def test_criterion_5_unit_property_bundle():
    t0 = time.monotonic()
    rng = np.random.default_rng(3)

    # Alamouti round trip over a noiseless identity channel: BER exactly 0.
    cfg = ExperimentConfig(experiment="loopback", osnr_db="off",
                           linewidth_hz=0.0, symbols_per_point=16384,
                           eq_train_blocks=4096, seed=5)
    tx = build_transmission(cfg)
    rx, _ = run_link_once(cfg, tx, cfg.channel_config(), 1)
    loopback = count_ber_per_subcarrier(rx.ref_bits, rx.bits)
    ok = report("criterion 5.1 (Alamouti loopback BER = 0)",
                loopback.bit_errors == 0,
                f"{loopback.bit_errors} errors in {loopback.bits_compared} bits")

    # apply_cd then fd_cdc: residual EVM < -30 dB.
    n = 1 << 14
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    spec = np.fft.fft(x)
    f = np.fft.fftfreq(n, 1 / 25e9)
    spec[np.abs(f) > 6.9e9] = 0
    w = ComplexWaveform(np.fft.ifft(spec), 25e9)
    rec = fd_cdc(apply_cd(w, 80.0), CdcConfig(fft_size=128, overlap=8, fiber_km=80.0))
    resid = evm_db(rec.samples, w.samples)
    ok &= report("criterion 5.2 (FD-CDC cascade residual)",
                 resid < -30.0, f"residual EVM {resid:.1f} dB (< -30)")

    # Rotation matrices unitary within 1e-12.
    worst = 0.0
    for az in np.linspace(-90, 90, 13):
        for el in np.linspace(-90, 90, 13):
            r = rotation_matrix(az, el)
            worst = max(worst, float(np.max(np.abs(r @ r.conj().T - np.eye(2)))))
    ok &= report("criterion 5.3 (rotation unitarity)",
                 worst < 1e-12, f"max |R R^H - I| = {worst:.2e} (< 1e-12)")

    # LMS and phase updates are exact fixed points at zero error.
    const = make_constellation(4)
    src = qam_map(prbs(8192, seed=21), const)
    frame = alamouti_encode(src)
    state = EqualizerState.initial(1)
    state.w11[0] = 1.0
    state.w22[0] = -1.0
    eq = EqualizerConfig(n_taps=1, mu=1e-2, mu_p=1e-2, n_train=1 << 20)
    res = alamouti_equalize(frame.ex, eq, frame.source, const, sps=1, state=state)
    stable = (
        not np.any(res.err_odd) and not np.any(res.err_even)
        and np.array_equal(res.state.w11, state.w11)
        and np.array_equal(res.state.w12, state.w12)
        and np.array_equal(res.state.w21, state.w21)
        and np.array_equal(res.state.w22, state.w22)
        and res.state.p1 == state.p1 and res.state.p2 == state.p2
    )
    ok &= report("criterion 5.4 (zero-error fixed point bit-stable)",
                 stable, "state identical after 4096 zero-error blocks")

    # OSNR loader calibrated within +-0.2 dB over 15..40 dB.
    n = 1 << 16
    sig = DualPolWaveform(
        ComplexWaveform(rng.standard_normal(n) + 1j * rng.standard_normal(n), 100e9),
        ComplexWaveform(rng.standard_normal(n) + 1j * rng.standard_normal(n), 100e9),
    )
    from shcsim import apply_channel
    from shcsim.channel import ChannelConfig

    worst_err = 0.0
    lo = ComplexWaveform(np.ones(n, dtype=complex), 100e9)
    for target in (15.0, 20.0, 25.0, 30.0, 35.0, 40.0):
        out, _ = apply_channel(sig, lo, ChannelConfig(osnr_db=target), rng_seed=7)
        worst_err = max(worst_err, abs(measured_osnr_db(sig, out) - target))
    ok &= report("criterion 5.5 (OSNR loader calibration)",
                 worst_err < 0.2, f"worst |error| {worst_err:.3f} dB (< 0.2)")

    elapsed = time.monotonic() - t0
    ok &= report("criterion 5.6 (bundle runtime)",
                 elapsed < 300.0, f"{elapsed:.0f} s (< 300)")
    assert ok
