import numpy as np
import pytest

from fmcwsim.errors import ConfigError
from fmcwsim.waveform import (
    IQMatrix,
    RadarParams,
    SPEED_OF_LIGHT,
    fmcw_chirp,
    load_iq,
    meta_from_params,
    sample_frames,
    save_iq,
)


def test_sample_count_reference_values():
    params = RadarParams()
    # 1 us sweep at 100 MHz complex sampling
    assert params.samples_per_frame == 100


def test_wavelength_identity():
    params = RadarParams()
    assert abs(params.wavelength * params.carrier_freq - SPEED_OF_LIGHT) < 1e-12 * SPEED_OF_LIGHT
    # printed to three significant figures
    assert abs(params.wavelength - 0.0857) < 5e-5


def test_non_integer_sample_count_rejected():
    with pytest.raises(ConfigError):
        RadarParams(sample_rate=99.5e6)


def test_invalid_timing_rejected():
    with pytest.raises(ConfigError):
        RadarParams(frame_period=0.5e-6)  # shorter than the sweep
    with pytest.raises(ConfigError):
        RadarParams(bandwidth=200e6)  # exceeds sampling rate
    with pytest.raises(ConfigError):
        RadarParams(n_frames=0)


def test_chirp_constant_envelope():
    s = fmcw_chirp(RadarParams())
    assert s.samples.size == 100
    np.testing.assert_allclose(np.abs(s.samples), 1.0, rtol=0, atol=1e-15)


def test_chirp_instantaneous_frequency_at_last_sample():
    # Oracle: finite-difference the sampled phase. Increments of a quadratic
    # phase estimate the frequency at midpoints, so extrapolate half a step
    # to land on the final sample time.
    params = RadarParams()
    s = fmcw_chirp(params)
    phase = np.unwrap(np.angle(s.samples))
    df = np.diff(phase) * params.sample_rate / (2 * np.pi)
    f_last = df[-1] + 0.5 * (df[-1] - df[-2])
    L = params.samples_per_frame
    expected = params.bandwidth * (L - 1) / L
    assert abs(f_last - expected) <= 1e-9 * expected


def test_chirp_sweeps_zero_to_bandwidth():
    params = RadarParams()
    s = fmcw_chirp(params)
    phase = np.unwrap(np.angle(s.samples))
    df = np.diff(phase) * params.sample_rate / (2 * np.pi)
    assert df[0] < params.bandwidth / params.samples_per_frame  # starts near 0
    assert np.all(np.diff(df) > 0)  # monotone up-chirp


def test_chirp_autocorrelation_compression():
    # Pulse-compression sanity: the zero-lag correlation is L while shifted
    # correlations are small. With bandwidth = f_s/2 the main lobe is two
    # samples wide, so lag 1 still rides it; lags >= 2 must collapse.
    s = fmcw_chirp(RadarParams()).samples
    L = s.size
    assert abs(np.vdot(s, s)) == pytest.approx(L, rel=1e-12)
    acf = [abs(np.vdot(s[k:], s[:-k])) for k in range(1, 31)]
    assert acf[0] < 0.7 * L
    assert max(acf[1:]) < 0.25 * L
    assert np.mean(acf[1:]) < 0.1 * L


def test_sample_frames_shapes():
    meta = meta_from_params(RadarParams())
    single = sample_frames([np.zeros(100)], meta)
    assert single.data.shape == (100, 1)
    assert np.all(single.data == 0)

    many = sample_frames([np.zeros(100)] * 3000, meta)
    assert many.data.shape == (100, 3000)


def test_sample_frames_round_trip_columns():
    rng = np.random.default_rng(7)
    frames = [rng.standard_normal(100) + 1j * rng.standard_normal(100) for _ in range(5)]
    matrix = sample_frames(frames, meta_from_params(RadarParams()))
    for i, f in enumerate(frames):
        assert np.array_equal(matrix.data[:, i], f)


def test_sample_frames_ragged_rejected():
    meta = meta_from_params(RadarParams())
    with pytest.raises(ValueError):
        sample_frames([np.zeros(100), np.zeros(99)], meta)


def test_iq_file_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    data = (rng.standard_normal((100, 7)) + 1j * rng.standard_normal((100, 7))).astype(
        np.complex64
    )
    meta = meta_from_params(RadarParams(), scenario_id="roundtrip", seed=99)
    matrix = IQMatrix(data.astype(np.complex128), meta)
    path = save_iq(matrix, tmp_path / "x.iq")
    assert path.exists() and (tmp_path / "x.iq.json").exists()
    back = load_iq(path)
    assert back.meta == meta
    # float32 storage: exact because the source was float32-representable
    np.testing.assert_array_equal(back.data.astype(np.complex64), data)
