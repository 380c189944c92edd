"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them all;
on failure the line precedes the assertion message).  The statistical checks
run on seeded synthetic ensembles, so every run evaluates the same channels.
"""
import dataclasses
import time

import numpy as np
import pytest

from plkeygen import (
    NoisySounder,
    PortPair,
    Spectrum,
    TdstConfig,
    Termination,
    TmtObservation,
    TopologyParams,
    asymmetry_metric,
    ctf_forward,
    ctf_reverse,
    extract_two_port,
    key_distance,
    normalize_transadmittance,
    normalize_transimpedance,
    observe,
    peak_support_coincidence,
    quantize_levels,
    coded_arrange,
    solve_abcd,
    synthesize,
    tdst_key,
    transadmittance_observables,
    transimpedance_observables,
    zin_port1,
    zin_port2,
)
from plkeygen.runner import ExperimentConfig, emit_csv, run, single_realization
from plkeygen.spectral import broadband_grid

GRID = broadband_grid(1024)
PARAMS = TopologyParams()
TERM = Termination.from_constants(GRID, 1.0, 1e4)


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {criterion}: {detail}"


def synth_channel(seed: int, grid=GRID, params=PARAMS):
    """Random topology reduced to the two-port between its first two outlets,
    with the third outlet presenting a receiver impedance."""
    top = synthesize(seed, params)
    rng = np.random.default_rng(seed + 123)
    a, b, e = (int(x) for x in rng.choice(np.array(top.outlets), 3, replace=False))
    return extract_two_port(top, PortPair(a, b), grid, overrides={e: 1e4})


@pytest.fixture(scope="module")
def warm_kernels():
    # trigger jit compilation outside any timed section
    ch = synth_channel(10_001)
    obs = TmtObservation(ctf_forward(ch, TERM), zin_port1(ch, TERM.z_l),
                         zin_port2(ch, TERM.z_l), TERM)
    solve_abcd(obs)
    tdst_key(ctf_forward(ch, TERM))
    return True


@pytest.fixture(scope="module")
def channels_100(warm_kernels):
    return [synth_channel(seed) for seed in range(100)]


def test_criterion_1_reciprocity_1000_channels(warm_kernels):
    t0 = time.monotonic()
    worst = 0.0
    for seed in range(1000):
        ch = synth_channel(seed)
        worst = max(worst, float(np.max(np.abs(ch.reciprocity_defect()))))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    report(1, ok, f"worst |AD-CB-1| = {worst:.2e}, {elapsed:.1f}s for 1000 channels")


def test_criterion_2_matched_termination_symmetry(channels_100):
    matched = Termination.from_constants(GRID, 50.0, 50.0)
    worst = 0.0
    for ch in channels_100:
        h1 = ctf_forward(ch, matched)
        h2 = ctf_reverse(ch, matched)
        worst = max(worst, float(np.max(np.abs(h1.values - h2.values)
                                        / np.abs(h1.values))))
    report(2, worst <= 1e-12, f"max relative |H1-H2| = {worst:.2e} at Z_T = Z_L")


def test_criterion_3_normalization_symmetry(channels_100):
    worst_z = worst_y = 0.0
    for ch in channels_100:
        i1g, v2, i2g, v1 = transimpedance_observables(ch, TERM)
        zin1 = zin_port1(ch, TERM.z_l)
        zin2 = zin_port2(ch, TERM.z_l)
        z21, z12 = normalize_transimpedance(i1g, v2, i2g, v1, zin1, zin2, TERM)
        worst_z = max(worst_z, float(np.max(np.abs(z21.values - z12.values)
                                            / np.abs(z21.values))))
        v1g, i2, v2g, i1 = transadmittance_observables(ch, TERM)
        y21, y12 = normalize_transadmittance(v1g, i2, v2g, i1, zin1, zin2, TERM)
        worst_y = max(worst_y, float(np.max(np.abs(y21.values - y12.values)
                                            / np.abs(y21.values))))
    ok = worst_z < 1e-9 and worst_y < 1e-9
    report(3, ok, f"trans-impedance asym = {worst_z:.2e}, trans-admittance asym = {worst_y:.2e}")


def test_criterion_4_source_impedance_sweep(channels_100):
    zts = [1.0, 10.0, 100.0, 1000.0, 10_000.0]
    medians = []
    for zt in zts:
        term = Termination.from_constants(GRID, zt, 1e4)
        vals = [asymmetry_metric(ctf_forward(ch, term), ctf_reverse(ch, term))
                for ch in channels_100]
        medians.append(float(np.median(vals)))
    decreasing = all(a > b for a, b in zip(medians, medians[1:]))
    report(4, decreasing,
           "median asymmetry over Z_T sweep: "
           + ", ".join(f"{m:.3f}" for m in medians))


def test_criterion_5_tmt_round_trip(warm_kernels):
    worst = 0.0
    all_valid = True
    for seed in range(500):
        ch = synth_channel(seed)
        obs = TmtObservation(ctf_forward(ch, TERM), zin_port1(ch, TERM.z_l),
                             zin_port2(ch, TERM.z_l), TERM)
        sol = solve_abcd(obs)
        all_valid &= bool(sol.valid.all())
        h2 = ctf_reverse(ch, TERM)
        worst = max(worst, float(np.max(np.abs(sol.h2_hat.values - h2.values)
                                        / np.abs(h2.values))))
    # noisy reconstruction mismatch at the pinned estimator settings
    from plkeygen import delta_mismatch

    medians = []
    for seed in range(100):
        ch = synth_channel(seed)
        snd = NoisySounder(snr_h_db=30.0, snr_z_db=30.0, n_avg=10, seed=seed)
        obs = TmtObservation(
            h1_hat=observe(ctf_forward(ch, TERM), snd, stream=0),
            zin1_hat=observe(zin_port1(ch, TERM.z_l), snd, snr_db=30.0, stream=3),
            zin2_hat=observe(zin_port2(ch, TERM.z_l), snd, snr_db=30.0, stream=4),
            term=TERM,
        )
        sol = solve_abcd(obs)
        h2_alice = observe(ctf_reverse(ch, TERM), snd, stream=1)
        delta = delta_mismatch(h2_alice, sol.h2_hat)[sol.valid]
        medians.append(20 * np.log10(float(np.nanmedian(delta))))
    med_db = float(np.median(medians))
    ok = all_valid and worst <= 1e-6 and med_db <= -20.0
    report(5, ok, f"noiseless max rel H2 err = {worst:.2e} over 500 channels; "
                  f"median mismatch at 30 dB = {med_db:.1f} dB")


def test_criterion_6_peak_support_coincidence(warm_kernels):
    # sharp taper for localization: the coincidence statement is about peak
    # positions, so the narrowest-main-lobe window does the measuring
    cfg = TdstConfig(pad_factor=4, gamma=0.01, m=5, window=0.1)
    worst = 1.0
    n_perfect = 0
    for seed in range(100):
        ch = synth_channel(seed)
        c = peak_support_coincidence(ctf_forward(ch, TERM), ctf_reverse(ch, TERM),
                                     cfg, tol_samples=1)
        worst = min(worst, c)
        n_perfect += c == 1.0
    report(6, n_perfect == 100,
           f"{n_perfect}/100 topologies at coincidence 1.0 (worst {worst:.2f})")


def test_criterion_7_security_ordering(warm_kernels):
    t0 = time.monotonic()
    base = ExperimentConfig()  # N=200, eps=3 samples, M=5, pad 4, 30 dB
    results = {}
    for method, quantizer in (("tdst", "binary-gray"), ("tmt", "coded")):
        cfg = dataclasses.replace(base, method=method, quantizer=quantizer,
                                  n_realizations=200, master_seed=42)
        rows = [single_realization(cfg, 0, r) for r in range(200)]
        d_ab = float(np.mean([r["d_ab"] for r in rows]))
        d_ae = float(np.mean([r["d_ae"] for r in rows]))
        results[method] = d_ae / d_ab if d_ab > 0 else np.inf
    elapsed = time.monotonic() - t0
    ok = results["tdst"] >= 1.5 and results["tmt"] >= 2.0 and elapsed < 300.0
    report(7, ok, f"distance ratios: TDST {results['tdst']:.2f} (>= 1.5), "
                  f"TMT-coded {results['tmt']:.2f} (>= 2.0); {elapsed:.0f}s")


def test_criterion_8_limiting_and_interpolation_trends(warm_kernels):
    base = ExperimentConfig()
    ratios = []
    for m in range(1, 16):
        cfg = dataclasses.replace(base, method="tdst", n_realizations=100,
                                  master_seed=7,
                                  tdst=dataclasses.replace(base.tdst, m=m))
        rows = [single_realization(cfg, 0, r) for r in range(100)]
        d_ab = float(np.mean([r["d_ab"] for r in rows]))
        d_ae = float(np.mean([r["d_ae"] for r in rows]))
        ratios.append(d_ae / d_ab if d_ab > 0 else np.inf)
    nonincreasing = all(ratios[i] >= ratios[i + 1] - 1e-12
                        for i in range(len(ratios) - 1))

    # interpolation benefit, compared at a fixed block duration of three
    # un-interpolated samples so only the localization accuracy varies
    means = {}
    for pad in (0, 1, 2, 4):
        cfg = dataclasses.replace(
            base, method="tdst", n_realizations=400, master_seed=7,
            tdst=dataclasses.replace(base.tdst, pad_factor=pad,
                                     epsilon_samples=3 * (1 + pad)))
        means[pad] = float(np.mean([single_realization(cfg, 0, r)["d_ab"]
                                    for r in range(400)]))
    no_increase = all(means[p] <= means[0] for p in (1, 2, 4))
    ok = nonincreasing and no_increase
    finite = [f"{r:.2f}" for r in ratios]
    report(8, ok, f"ratio(M) nonincreasing={nonincreasing} [{finite[0]}..{finite[-1]}]; "
                  f"mean d_ab per pad {means} (baseline pad 0)")


def test_criterion_9_quantizer_properties():
    # Gray adjacency, exhaustive per alphabet up to 8 bits
    adjacency_ok = True
    for nbits in range(1, 9):
        levels = np.arange(2 ** nbits)
        gray = levels ^ (levels >> 1)
        diff = gray[:-1] ^ gray[1:]
        adjacency_ok &= bool(np.all((diff != 0) & ((diff & (diff - 1)) == 0)))

    # binary distance == Hamming: exhaustive pairs up to length 7 through the
    # public function, all pairs up to length 12 through the vectorized
    # identity, plus random spot checks of the function at length 12
    distance_ok = True
    for length in range(1, 8):
        keys = np.array([[(i >> k) & 1 for k in range(length)]
                         for i in range(2 ** length)], dtype=np.uint8)
        for i in range(2 ** length):
            for j in range(2 ** length):
                want = int(bin(i ^ j).count("1"))
                distance_ok &= key_distance(keys[i], keys[j]) == want
        if not distance_ok:
            break
    for length in range(8, 13):
        ints = np.arange(2 ** length, dtype=np.int64)
        xors = ints[:, None] ^ ints[None, :]
        pops = np.bitwise_count(xors)
        bits = ((ints[:, None] >> np.arange(length, dtype=np.int64)[None, :]) & 1)
        sums = np.abs(bits[:, None, :] - bits[None, :, :]).sum(axis=2)
        distance_ok &= bool(np.array_equal(pops.astype(np.int64), sums))
        rng = np.random.default_rng(length)
        for _ in range(2000):
            i, j = rng.integers(0, 2 ** length, 2)
            want = int(bin(int(i) ^ int(j)).count("1"))
            distance_ok &= key_distance(bits[int(i)], bits[int(j)]) == want

    # coded keys separate shape-identical, amplitude-scaled spectra
    mags = np.array([0.11, 0.47, 0.83, 1.0])
    from plkeygen import FrequencyGrid

    g = FrequencyGrid(1e6, 1e6, 4)
    qa = quantize_levels(Spectrum(g, mags.astype(complex)), nbits=8)
    qb = quantize_levels(Spectrum(g, (2 * mags).astype(complex)), nbits=8)
    ka = coded_arrange(qa, qa.lsb_value, full_scale=8.0)
    kb = coded_arrange(qb, qb.lsb_value, full_scale=8.0)
    coded_ok = (np.array_equal(qa.symbols, qb.symbols)
                and not np.array_equal(ka.symbols, kb.symbols))

    ok = adjacency_ok and distance_ok and coded_ok
    report(9, ok, f"gray adjacency={adjacency_ok}, distance==hamming={distance_ok}, "
                  f"coded amplitude separation={coded_ok}")


def test_criterion_10_byte_identical_sweeps(tmp_path, warm_kernels):
    outputs = []
    for method, quantizer in (("tdst", "binary-gray"), ("tmt", "coded")):
        cfg = ExperimentConfig.from_dict({
            "method": method,
            "quantizer": quantizer,
            "n_realizations": 2,
            "master_seed": 99,
            "sweep": {"variable": "m", "values": [2, 5]},
        })
        pair = []
        for tag in ("first", "second"):
            path = tmp_path / f"{method}-{tag}.csv"
            emit_csv(run(cfg), str(path))
            pair.append(path.read_bytes())
        outputs.append(pair[0] == pair[1])
    report(10, all(outputs), f"byte-identical reruns per method: {outputs}")
