import numpy as np
import pytest

from fmcwsim.dsp import (
    GrayImage,
    Pmf,
    Spectrogram,
    dechirp_conj,
    gray_pmf,
    load_pgm,
    load_pmf_csv,
    save_pgm,
    save_pmf_csv,
    slow_time,
    spectrogram_to_csv,
    stft_spectrogram,
    svd_denoise,
    to_grayscale,
)
from fmcwsim.errors import FormatError
from fmcwsim.waveform import IQMatrix, RadarParams, fmcw_chirp, meta_from_params

PARAMS = RadarParams(n_frames=4)
META = meta_from_params(PARAMS)


def iq(data):
    return IQMatrix(np.asarray(data, dtype=complex), META)


# ------------------------------------------------------------------ dechirp


def test_dechirp_self_mixing_gives_unit_dc():
    ref = fmcw_chirp(PARAMS)
    X = iq(np.tile(ref.samples[:, None], (1, 4)))
    out = dechirp_conj(X, ref)
    np.testing.assert_allclose(out.data, np.ones((100, 4)), rtol=0, atol=1e-14)


def test_dechirp_zero_input():
    ref = fmcw_chirp(PARAMS)
    out = dechirp_conj(iq(np.zeros((100, 4))), ref)
    assert np.all(out.data == 0)


def test_dechirp_reflector_beat_tone():
    # Oracle: mixing a k-sample-delayed chirp with the conjugate reference
    # gives exp(-j 2 pi (B/T0) tau_k t) for n >= k; the magnitude of the beat
    # frequency is (B/T0) * (k / f_s), negative sign by the convention that
    # keeps approaching-target Doppler positive.
    k = 4
    ref = fmcw_chirp(PARAMS)
    L = PARAMS.samples_per_frame
    delayed = np.zeros(L, dtype=complex)
    delayed[k:] = ref.samples[:-k]
    out = dechirp_conj(iq(delayed[:, None]), ref).data[:, 0]

    n = np.arange(L)
    tau = k / PARAMS.sample_rate
    expected = np.exp(-2j * np.pi * PARAMS.chirp_rate * tau * n / PARAMS.sample_rate)
    expected *= np.exp(1j * np.pi * PARAMS.chirp_rate * tau * tau)
    expected[:k] = 0
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)

    beat_cycles_per_sample = PARAMS.chirp_rate * tau / PARAMS.sample_rate
    assert beat_cycles_per_sample == pytest.approx(0.02)
    peak_bin = int(np.argmax(np.abs(np.fft.fft(out))))
    assert peak_bin == L - int(round(beat_cycles_per_sample * L))


def test_dechirp_length_mismatch_rejected():
    ref = fmcw_chirp(PARAMS)
    with pytest.raises(ValueError):
        dechirp_conj(iq(np.zeros((64, 2))), ref)


# ---------------------------------------------------------------------- svd


def random_iq(rows, cols, seed=0):
    rng = np.random.default_rng(seed)
    return iq(rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))


def test_svd_threshold_one_is_identity():
    X = random_iq(40, 60)
    Y = svd_denoise(X, 1)
    assert np.linalg.norm(Y.data - X.data) <= 1e-10 * np.linalg.norm(X.data)


def test_svd_rank_one_fully_removed():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    b = rng.standard_normal(60) + 1j * rng.standard_normal(60)
    X = iq(np.outer(a, b))
    Y = svd_denoise(X, 2)
    assert np.linalg.norm(Y.data) <= 1e-10 * np.linalg.norm(X.data)


def test_svd_reconstruction_and_orthogonality():
    X = random_iq(30, 50, seed=3)
    kept = svd_denoise(X, 3)
    removed = X.data - kept.data
    # removed + kept rebuild the input exactly and are Frobenius-orthogonal
    norm2 = np.linalg.norm(X.data) ** 2
    assert abs(np.vdot(removed, kept.data)) <= 1e-10 * norm2


def test_svd_static_wall_suppression_oracle():
    # Two explicit components: a strong slow-time-constant wall and a weak
    # moving tone. Cutting the leading component must crush the zero-Doppler
    # line by >= 20 dB while the moving ridge loses <= 1 dB.
    params = RadarParams(n_frames=1000)
    L, C = params.samples_per_frame, params.n_frames
    n, i = np.arange(L), np.arange(C)

    def beat(k):
        tone = np.exp(-2j * np.pi * params.chirp_rate * (k / params.sample_rate) * n / params.sample_rate)
        tone = tone.astype(complex)
        tone[:k] = 0
        return tone

    f_d = 2 * 1.0 / params.wavelength  # 23.33 Hz
    wall = 1.0 * np.outer(beat(1), np.ones(C))
    target = 0.01 * np.outer(beat(3), np.exp(2j * np.pi * f_d * params.frame_period * i))
    X = IQMatrix(wall + target, meta_from_params(params))

    def line_power(matrix, bin_index):
        spec = stft_spectrogram(slow_time(matrix), 128, 1, 0.5, params.frame_period)
        z = 10 ** (spec.magnitudes_db / 20.0)
        return float(np.mean(z[bin_index] ** 2))

    dc, ridge = 64, 64 + 3
    before_dc, before_ridge = line_power(X, dc), line_power(X, ridge)
    Y = svd_denoise(X, 2)
    after_dc, after_ridge = line_power(Y, dc), line_power(Y, ridge)
    assert 10 * np.log10(before_dc / after_dc) >= 20.0
    assert 10 * np.log10(before_ridge / after_ridge) <= 1.0


def test_svd_invalid_threshold_rejected():
    X = random_iq(10, 10)
    with pytest.raises(ValueError):
        svd_denoise(X, 0)
    with pytest.raises(ValueError):
        svd_denoise(X, 12)


# ---------------------------------------------------------------- slow time


def test_slow_time_sums_fast_time():
    ones = iq(np.ones((100, 3)))
    np.testing.assert_array_equal(slow_time(ones), [100.0, 100.0, 100.0])
    assert np.all(slow_time(iq(np.zeros((100, 2)))) == 0)


def test_slow_time_single_row_selection():
    rng = np.random.default_rng(5)
    row = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    data = np.zeros((100, 7), dtype=complex)
    data[42] = row
    np.testing.assert_array_equal(slow_time(iq(data)), row)


# --------------------------------------------------------------------- stft


def test_stft_window_span_and_axes():
    y = np.zeros(1000, dtype=complex)
    spec = stft_spectrogram(y, window_length=128, hop=1, kaiser_beta=0.5, frame_period=1e-3)
    assert spec.window_length * 1e-3 == pytest.approx(0.128)
    assert spec.magnitudes_db.shape == (128, 1000 - 128 + 1)
    assert spec.freq_axis.size == 128
    assert spec.freq_axis[64] == 0.0
    step = spec.freq_axis[1] - spec.freq_axis[0]
    assert step == pytest.approx(1.0 / (128 * 1e-3))
    assert spec.freq_axis[0] == pytest.approx(-500.0)


def test_stft_pure_tone_lands_in_expected_bin():
    # Oracle: a tone at f_D falls in bin round(f_D * W * T) from DC.
    f_d = 23.34
    T = 1e-3
    i = np.arange(1000)
    y = np.exp(2j * np.pi * f_d * T * i)
    spec = stft_spectrogram(y, 128, 1, 0.5, T)
    expected_bin = 64 + int(round(f_d * 128 * T))
    assert int(round(f_d * 128 * T)) == 3
    assert spec.freq_axis[expected_bin] == pytest.approx(23.4375)
    argmax = np.argmax(spec.magnitudes_db, axis=0)
    assert np.all(argmax == expected_bin)


def test_stft_constant_input_concentrates_at_dc():
    # Rectangular window (beta = 0): integer-bin sampling of the Dirichlet
    # kernel leaves every off-DC bin at exact zero.
    y = np.full(300, 2.0, dtype=complex)
    spec = stft_spectrogram(y, 128, 1, 0.0, 1e-3)
    dc = spec.magnitudes_db[64]
    off = np.delete(spec.magnitudes_db, 64, axis=0)
    assert np.all(dc - off.max(axis=0) >= 40.0)


def test_stft_parseval_rectangular_window():
    rng = np.random.default_rng(9)
    y = rng.standard_normal(400) + 1j * rng.standard_normal(400)
    W = 64
    spec = stft_spectrogram(y, W, 7, 0.0, 1e-3)
    z2 = (10 ** (spec.magnitudes_db / 20.0)) ** 2
    for idx, l in enumerate(range(0, 400 - W + 1, 7)):
        lhs = z2[:, idx].sum()
        rhs = W * np.sum(np.abs(y[l : l + W]) ** 2)
        assert abs(lhs - rhs) <= 1e-9 * rhs


def test_stft_window_longer_than_input_rejected():
    with pytest.raises(ValueError):
        stft_spectrogram(np.zeros(64, dtype=complex), 128, 1, 0.5, 1e-3)


# ---------------------------------------------------------------- grayscale


def flat_spec(values_db):
    values_db = np.asarray(values_db, dtype=float)
    return Spectrogram(
        magnitudes_db=values_db,
        freq_axis=np.arange(values_db.shape[0], dtype=float),
        time_axis=np.arange(values_db.shape[1], dtype=float),
        window_length=values_db.shape[0],
        hop=1,
    )


def test_grayscale_anchor_points():
    spec = flat_spec([[-10.0, -40.0, -70.0, -90.0]])
    img = to_grayscale(spec, dynamic_range_db=60.0)
    assert img.pixels[0, 0] == 255          # the peak
    assert img.pixels[0, 1] == 128          # halfway: 255 * 0.5 rounds up
    assert img.pixels[0, 2] == 0            # exactly peak - 60 dB
    assert img.pixels[0, 3] == 0            # below the floor clips


def test_grayscale_constant_image_saturates():
    img = to_grayscale(flat_spec(np.full((4, 5), -33.0)))
    assert np.all(img.pixels == 255)


def test_grayscale_monotone_with_shared_anchor():
    rng = np.random.default_rng(13)
    a = rng.uniform(-80.0, 0.0, (16, 20))
    a.flat[0] = 0.0  # fix the anchor
    drop = rng.uniform(0.0, 20.0, a.shape)
    drop.flat[0] = 0.0
    b = a - drop
    ga = to_grayscale(flat_spec(a)).pixels
    gb = to_grayscale(flat_spec(b)).pixels
    assert np.all(ga.astype(int) >= gb.astype(int))


def test_grayscale_requires_positive_range():
    with pytest.raises(ValueError):
        to_grayscale(flat_spec(np.zeros((2, 2))), dynamic_range_db=0.0)


# ---------------------------------------------------------------------- pmf


def test_pmf_uniform_image_is_indicator():
    img = GrayImage(np.full((8, 8), 17, dtype=np.uint8), 60.0)
    pmf = gray_pmf(img, 256)
    assert pmf.probabilities[17] == 1.0
    assert pmf.probabilities.sum() == pytest.approx(1.0, abs=1e-12)


def test_pmf_two_level_image():
    pixels = np.zeros((2, 10), dtype=np.uint8)
    pixels[1] = 255
    pmf = gray_pmf(GrayImage(pixels, 60.0), 256)
    assert pmf.probabilities[0] == 0.5
    assert pmf.probabilities[255] == 0.5


def test_pmf_random_image_normalised():
    rng = np.random.default_rng(21)
    img = GrayImage(rng.integers(0, 256, (50, 70), dtype=np.uint8).astype(np.uint8), 60.0)
    for bins in (256, 64, 16):
        pmf = gray_pmf(img, bins)
        assert abs(pmf.probabilities.sum() - 1.0) <= 1e-12
        assert pmf.n_bins == bins


def test_pmf_bad_bin_count_rejected():
    img = GrayImage(np.zeros((2, 2), dtype=np.uint8), 60.0)
    with pytest.raises(ValueError):
        gray_pmf(img, 100)
    with pytest.raises(ValueError):
        gray_pmf(GrayImage(np.zeros((0, 0), dtype=np.uint8), 60.0), 256)


def test_pmf_type_invariants():
    with pytest.raises(ValueError):
        Pmf(np.array([0.5, 0.4]))  # does not sum to 1
    with pytest.raises(ValueError):
        Pmf(np.array([1.5, -0.5]))


# ----------------------------------------------------------------- file I/O


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    pixels = rng.integers(0, 256, (48, 96)).astype(np.uint8)
    path = save_pgm(GrayImage(pixels, 60.0), tmp_path / "img.pgm")
    back = load_pgm(path)
    assert np.array_equal(back, pixels)


def test_pgm_rejects_other_formats(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
    with pytest.raises(FormatError):
        load_pgm(path)


def test_pmf_csv_round_trip(tmp_path):
    pmf = Pmf(np.array([0.25, 0.5, 0.25]))
    path = save_pmf_csv(pmf, tmp_path / "p.csv")
    back = load_pmf_csv(path)
    np.testing.assert_array_equal(back.probabilities, pmf.probabilities)


def test_pmf_csv_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("a,b\n0,0.5\n")
    with pytest.raises(FormatError):
        load_pmf_csv(path)


def test_spectrogram_csv_dump(tmp_path):
    spec = flat_spec(np.zeros((4, 6)))
    path = spectrogram_to_csv(spec, tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    assert lines[0].startswith("freq_hz\\time_s")


# ------------------------------------------------------------- determinism


def test_pipeline_determinism():
    params = RadarParams(n_frames=300)
    rng = np.random.default_rng(77)
    data = rng.standard_normal((100, 300)) + 1j * rng.standard_normal((100, 300))
    ref = fmcw_chirp(params)

    def run():
        X = IQMatrix(data.copy(), meta_from_params(params))
        Y = svd_denoise(dechirp_conj(X, ref), 2)
        spec = stft_spectrogram(slow_time(Y), 128, 1, 0.5, params.frame_period)
        return to_grayscale(spec).pixels

    assert np.array_equal(run(), run())


def test_png_export(tmp_path):
    pytest.importorskip("matplotlib")
    from fmcwsim.dsp import save_png

    rng = np.random.default_rng(8)
    img = GrayImage(rng.integers(0, 256, (32, 40)).astype(np.uint8), 60.0)
    path = save_png(img, tmp_path / "img.png")
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
