"""Propagation tests: ideal-mode correctness, a device-level oracle for a
compiled 2x2 layer, leak bookkeeping, Monte-Carlo interference, and seed
reproducibility."""

import math

import numpy as np
import pytest

from spnn.device import MziParams, crosstalk_mean_db, mzi_transfer, mzi_with_crosstalk
from spnn.mesh import compile_layer
from spnn.numerics import Rng, db_to_power, dbm_to_mw, random_unitary
from spnn.propagation import (
    NetworkSpec,
    crosstalk_power_matrix,
    freeze_noise,
    ideal_transfer,
    insertion_loss_per_port,
    monte_carlo_interference,
    network_cascade,
    propagate_signal,
    propagate_with_crosstalk,
    resolve_crosstalk_fields,
    transfer_matrix,
)

P = MziParams()


def _random_field(n, seed):
    r = Rng(seed)
    return r.standard_normal(n) + 1j * r.standard_normal(n)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_ideal_mode_realizes_w_over_smax(n):
    w = Rng(n).standard_normal((n, n)) + 1j * Rng(n + 50).standard_normal((n, n))
    layout = compile_layer(w)
    x = _random_field(n, 3)
    out = propagate_signal(layout, P, x, mode="ideal")
    np.testing.assert_allclose(out, (w / layout.s_max) @ x, atol=1e-7)


def test_lossy_transfer_matches_matrix_propagation():
    w = random_unitary(4, Rng(2))
    layout = compile_layer(w)
    x = _random_field(4, 4)
    t = transfer_matrix([layout], P, mode="lossy")
    np.testing.assert_allclose(
        propagate_signal(layout, P, x, mode="lossy"), t @ x, atol=1e-12
    )


def test_compiled_2x2_matches_device_level_oracle():
    """Rebuild a compiled 2x2 layer's crosstalk propagation from the
    device-level splitter, stage by stage, with deterministic X draws."""
    w = random_unitary(2, Rng(8))
    layout = compile_layer(w)
    x = _random_field(2, 9)
    res = propagate_with_crosstalk(layout, P, x, rng=None)

    v, u = layout.v_mesh[0], layout.u_mesh[0]
    sig, leak_v = mzi_with_crosstalk(
        P, v.phases, x, x_db=crosstalk_mean_db(P, v.phases.theta)
    )
    screen_sigma = np.exp(1j * layout.v_screen) * np.array(
        [mzi_transfer(P, pl.phases)[0, 0] for pl in layout.sigma_stage]
    )
    sig, leak_v = sig * screen_sigma, leak_v * screen_sigma
    sig, leak_u = mzi_with_crosstalk(
        P, u.phases, sig, x_db=crosstalk_mean_db(P, u.phases.theta)
    )
    leak_v = mzi_transfer(P, u.phases) @ leak_v  # no re-leak downstream
    u_screen = np.exp(1j * layout.u_screen)
    sig, leak_v, leak_u = sig * u_screen, leak_v * u_screen, leak_u * u_screen

    np.testing.assert_allclose(res.signal, sig, atol=1e-12)
    assert res.n_components == 2
    np.testing.assert_allclose(res.leak_fields[:, 0], leak_v, atol=1e-12)
    np.testing.assert_allclose(res.leak_fields[:, 1], leak_u, atol=1e-12)


def test_component_count_is_n_times_n_minus_1():
    n = 6
    layout = compile_layer(Rng(1).standard_normal((n, n)))
    res = propagate_with_crosstalk(layout, P, _random_field(n, 2), rng=Rng(3))
    assert res.n_components == n * (n - 1)
    assert len(res.components()) == n * (n - 1) * n


def test_first_order_power_bookkeeping():
    """Signal power plus incoherent leak power never exceeds launch power
    (no gain, physical leak accounting)."""
    n = 8
    layout = compile_layer(Rng(4).standard_normal((n, n)))
    x = np.exp(1j * Rng(5).uniform(0.0, 2.0 * math.pi, n))
    res = propagate_with_crosstalk(layout, P, x, rng=Rng(6))
    total = float(np.sum(np.abs(res.signal) ** 2)) + float(
        np.sum(crosstalk_power_matrix(res))
    )
    assert total <= float(np.sum(np.abs(x) ** 2)) + 1e-12


def test_zero_crosstalk_matches_signal_path():
    n = 4
    layout = compile_layer(Rng(7).standard_normal((n, n)))
    x = _random_field(n, 8)
    p0 = MziParams(xb_db=-300.0, xc_db=-300.0, xtalk_sigma_frac=0.0)
    res = propagate_with_crosstalk(layout, p0, x, rng=None)
    ref = propagate_signal(layout, p0, x, mode="lossy")
    np.testing.assert_allclose(res.signal, ref, atol=1e-10)
    assert float(np.sum(crosstalk_power_matrix(res))) < 1e-25


def test_gain_applies_to_signal_and_leaks_alike():
    n = 4
    layout = compile_layer(Rng(9).standard_normal((n, n)))
    x = _random_field(n, 10)
    frozen = freeze_noise([layout], P, Rng(11))
    base = propagate_with_crosstalk(
        layout, P, x, resample="frozen", frozen=frozen, include_gain=False
    )
    gained = propagate_with_crosstalk(
        layout, P, x, resample="frozen", frozen=frozen, include_gain=True
    )
    factor = db_to_power(layout.nau_loss_db - layout.gain_db)
    np.testing.assert_allclose(
        np.abs(gained.signal) ** 2, factor * np.abs(base.signal) ** 2, rtol=1e-12
    )
    np.testing.assert_allclose(
        crosstalk_power_matrix(gained),
        factor * crosstalk_power_matrix(base),
        rtol=1e-12,
    )


def test_nominal_leak_birth_books_x_times_launch_power():
    n = 4
    layout = compile_layer(Rng(12).standard_normal((n, n)))
    x = _random_field(n, 13)
    launch_mw = 2.5
    frozen = freeze_noise([layout], P, None)  # deterministic mean X
    res = propagate_with_crosstalk(
        layout,
        P,
        x,
        resample="frozen",
        frozen=frozen,
        leak_birth="nominal",
        nominal_power_mw=launch_mw,
    )
    for slot, source in enumerate(res.sources):
        x_lin = 10.0 ** (frozen[source] / 10.0)
        born = res.birth_power[slot]
        # Either the MZI saw no light (nothing to leak) or the leak is
        # booked at exactly X times the nominal launch power.
        assert born == pytest.approx(0.0, abs=1e-18) or born == pytest.approx(
            x_lin * launch_mw, rel=1e-12
        )


def test_network_cascade_frozen_seed_is_bit_reproducible():
    n = 4
    layers = [compile_layer(Rng(20 + k).standard_normal((n, n))) for k in range(2)]
    spec = NetworkSpec(layers, P)
    a = network_cascade(spec, rng=Rng(33))
    b = network_cascade(spec, rng=Rng(33))
    assert a.signal.tobytes() == b.signal.tobytes()
    assert a.leak_fields.tobytes() == b.leak_fields.tobytes()


def test_network_il_monotone_in_scale():
    sizes = [2, 4, 8]
    avg = []
    for n in sizes:
        ratios = []
        for i in range(5):
            layout = compile_layer(Rng(100 * n + i).standard_normal((n, n)))
            il = insertion_loss_per_port([layout], P, include_gain=False)
            ratios.append(np.mean(10.0 ** (-il / 10.0)))
        avg.append(-10.0 * math.log10(np.mean(ratios)))
    assert avg[0] < avg[1] < avg[2]


def test_identity_network_with_lossless_params():
    n = 4
    layout = compile_layer(np.eye(n))
    spec = NetworkSpec([layout], P.lossless())
    res = network_cascade(spec, rng=None, crosstalk=False)
    x = spec.launch_field()
    factor = db_to_power(layout.nau_loss_db - layout.gain_db)  # net gain
    np.testing.assert_allclose(
        np.abs(res.signal) ** 2, factor * np.abs(x) ** 2, rtol=1e-9
    )


def test_monte_carlo_zero_components():
    stats = monte_carlo_interference(np.array([]), 0.7, trials=100, rng=Rng(1))
    assert stats["received_mean_mw"] == pytest.approx(0.49)
    assert stats["xtalk_max_mw"] == 0.0


def test_monte_carlo_uniform_phase_expectation():
    a_s, a_x = 0.8, 0.3
    stats = monte_carlo_interference(
        np.array([a_x]), a_s, trials=100_000, rng=Rng(2)
    )
    assert stats["received_mean_mw"] == pytest.approx(
        a_s**2 + a_x**2, rel=0.01
    )
    assert stats["received_min_mw"] == pytest.approx((a_s - a_x) ** 2, abs=2e-4)
    assert stats["xtalk_aligned_mw"] == pytest.approx(a_x**2)


def test_resolve_crosstalk_fields_reproducible_and_power_scale():
    n = 4
    layout = compile_layer(Rng(40).standard_normal((n, n)))
    x = _random_field(n, 41)
    res = propagate_with_crosstalk(layout, P, x, rng=Rng(42))
    out1 = resolve_crosstalk_fields(res, Rng(7))
    out2 = resolve_crosstalk_fields(res, Rng(7))
    assert out1.tobytes() == out2.tobytes()
    # Expected combined power is signal power + incoherent leak power.
    trials = [
        np.sum(np.abs(resolve_crosstalk_fields(res, Rng(1000 + t))) ** 2)
        for t in range(400)
    ]
    expect = float(
        np.sum(np.abs(res.signal) ** 2) + np.sum(crosstalk_power_matrix(res))
    )
    assert np.mean(trials) == pytest.approx(expect, rel=0.05)


def test_launch_field_power():
    layout = compile_layer(np.eye(2))
    spec = NetworkSpec([layout], P, input_power_dbm=3.0)
    x = spec.launch_field()
    assert float(np.abs(x[0]) ** 2) == pytest.approx(dbm_to_mw(3.0))


def test_ideal_transfer_of_cascade():
    n = 3
    ws = [Rng(50 + k).standard_normal((n, n)) for k in range(2)]
    layers = [compile_layer(w) for w in ws]
    expected = (ws[1] / layers[1].s_max) @ (ws[0] / layers[0].s_max)
    np.testing.assert_allclose(ideal_transfer(layers, P), expected, atol=1e-7)
