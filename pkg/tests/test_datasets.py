"""CSV dataset round trips, parse diagnostics, atomic file replacement."""

import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pullsim import (
    DataError,
    PeakTrack,
    SoftPullModel,
    Spectrogram,
    SpectrogramDataset,
    atomic_write,
    dbm_to_mw,
    fit_adler_model,
    power_averaged_dataset,
    pulled_detuning_soft,
    read_responsivity_csv,
    read_spectrogram_csv,
    read_track_csv,
    responsivity_numeric,
    write_fit_csv,
    write_responsivity_csv,
    write_spectrogram_csv,
    write_track_csv,
)
from pullsim.analysis import ResponsivityCurve


def sample_dataset():
    rng = np.random.default_rng(17)
    return SpectrogramDataset(
        power_db=rng.uniform(-160.0, 0.0, size=(6, 4)),
        freq_axis_hz=np.linspace(10e3, 250e3, 6),
        power_axis_dbm=np.linspace(-50.0, -20.0, 4),
    )


def sample_track(n=8):
    p = np.linspace(-45.0, -20.0, n)
    y = pulled_detuning_soft(SoftPullModel(131e3, 300.0), dbm_to_mw(p))
    return PeakTrack(
        p_inj_dbm=p,
        f_peak=y,
        linewidth_3db=np.full(n, 488.28125),
        valid=np.arange(n) % 3 != 2,
        clamped=np.arange(n) % 4 == 0,
    )


def paths(tmp_path):
    return (
        str(tmp_path / "matrix.csv"),
        str(tmp_path / "freq.csv"),
        str(tmp_path / "power.csv"),
    )


class TestDatasetType:
    def test_requires_exactly_one_column_axis(self):
        with pytest.raises(DataError, match="exactly one"):
            SpectrogramDataset(
                power_db=np.zeros((2, 2)), freq_axis_hz=np.arange(2.0)
            )
        with pytest.raises(DataError, match="exactly one"):
            SpectrogramDataset(
                power_db=np.zeros((2, 2)),
                freq_axis_hz=np.arange(2.0),
                power_axis_dbm=np.arange(2.0),
                time_axis_s=np.arange(2.0),
            )

    def test_shape_mismatch_names_dimensions(self):
        with pytest.raises(DataError, match="2 frequencies, 3 columns"):
            SpectrogramDataset(
                power_db=np.zeros((3, 2)),
                freq_axis_hz=np.arange(2.0),
                power_axis_dbm=np.arange(3.0),
            )

    def test_non_monotone_axis_rejected(self):
        with pytest.raises(DataError, match="monotone"):
            SpectrogramDataset(
                power_db=np.zeros((3, 2)),
                freq_axis_hz=np.array([0.0, 2.0, 1.0]),
                power_axis_dbm=np.arange(2.0),
            )


class TestSpectrogramRoundTrip:
    def test_byte_identical_rewrite(self, tmp_path):
        ds = sample_dataset()
        m1, f1, c1 = paths(tmp_path)
        write_spectrogram_csv(ds, m1, f1, c1)
        first = tuple(open(p, "rb").read() for p in (m1, f1, c1))
        write_spectrogram_csv(ds, m1, f1, c1)
        second = tuple(open(p, "rb").read() for p in (m1, f1, c1))
        assert first == second

    def test_read_after_write_identity(self, tmp_path):
        ds = sample_dataset()
        m, f, c = paths(tmp_path)
        write_spectrogram_csv(ds, m, f, c)
        back = read_spectrogram_csv(m, f, c)
        np.testing.assert_allclose(back.power_db, ds.power_db, rtol=1e-9)
        np.testing.assert_allclose(back.freq_axis_hz, ds.freq_axis_hz, rtol=1e-9)
        assert back.col_kind == "power_dbm"
        # %.9e carries 10 significant digits, so reprinting reproduces bytes
        write_spectrogram_csv(back, m + ".2", f + ".2", c + ".2")
        assert open(m, "rb").read() == open(m + ".2", "rb").read()

    def test_time_axis_variant(self, tmp_path):
        ds = SpectrogramDataset(
            power_db=np.zeros((3, 2)),
            freq_axis_hz=np.arange(3.0),
            time_axis_s=np.array([0.5, 1.0]),
        )
        m, f, c = paths(tmp_path)
        write_spectrogram_csv(ds, m, f, c)
        assert open(m).readline().startswith("# rows=frequency_hz columns=time_s")
        back = read_spectrogram_csv(m, f, c)
        assert back.col_kind == "time_s"

    def test_missing_orientation_rejected(self, tmp_path):
        m, f, c = paths(tmp_path)
        write_spectrogram_csv(sample_dataset(), m, f, c)
        body = open(m).read().splitlines()[1:]
        open(m, "w").write("\n".join(body) + "\n")
        with pytest.raises(DataError, match="orientation"):
            read_spectrogram_csv(m, f, c)

    def test_ragged_row_names_location(self, tmp_path):
        m, f, c = paths(tmp_path)
        write_spectrogram_csv(sample_dataset(), m, f, c)
        lines = open(m).read().splitlines()
        lines[3] = lines[3] + ",0.0"
        open(m, "w").write("\n".join(lines) + "\n")
        with pytest.raises(DataError, match="row 4"):
            read_spectrogram_csv(m, f, c)

    def test_non_numeric_cell_names_location(self, tmp_path):
        m, f, c = paths(tmp_path)
        write_spectrogram_csv(sample_dataset(), m, f, c)
        lines = open(m).read().splitlines()
        cells = lines[2].split(",")
        cells[1] = "bogus"
        lines[2] = ",".join(cells)
        open(m, "w").write("\n".join(lines) + "\n")
        with pytest.raises(DataError, match=r"row 3, column 2"):
            read_spectrogram_csv(m, f, c)

    def test_axis_length_mismatch_named(self, tmp_path):
        m, f, c = paths(tmp_path)
        write_spectrogram_csv(sample_dataset(), m, f, c)
        lines = open(f).read().splitlines()
        open(f, "w").write("\n".join(lines[:-1]) + "\n")
        with pytest.raises(DataError, match="does not match"):
            read_spectrogram_csv(m, f, c)

    def test_wrong_axis_unit_rejected(self, tmp_path):
        m, f, c = paths(tmp_path)
        write_spectrogram_csv(sample_dataset(), m, f, c)
        lines = open(c).read().splitlines()
        lines[0] = "time_s"
        open(c, "w").write("\n".join(lines) + "\n")
        with pytest.raises(DataError, match="expected one of"):
            read_spectrogram_csv(m, f, c)


class TestTrackAndCurveRoundTrip:
    def test_track_round_trip(self, tmp_path):
        track = sample_track()
        path = str(tmp_path / "track.csv")
        write_track_csv(track, path)
        back = read_track_csv(path)
        np.testing.assert_allclose(back.p_inj_dbm, track.p_inj_dbm, rtol=1e-9)
        np.testing.assert_allclose(back.f_peak, track.f_peak, rtol=1e-9)
        np.testing.assert_array_equal(back.valid, track.valid)
        np.testing.assert_array_equal(back.clamped, track.clamped)
        write_track_csv(back, path + ".2")
        assert open(path, "rb").read() == open(path + ".2", "rb").read()

    def test_track_header_enforced(self, tmp_path):
        path = str(tmp_path / "t.csv")
        open(path, "w").write("nope\n")
        with pytest.raises(DataError, match="header"):
            read_track_csv(path)

    def test_responsivity_round_trip(self, tmp_path):
        curve = responsivity_numeric(sample_track().valid_subset())
        path = str(tmp_path / "resp.csv")
        write_responsivity_csv(curve, path)
        back = read_responsivity_csv(path)
        np.testing.assert_allclose(
            back.responsivity_hz_per_db, curve.responsivity_hz_per_db, rtol=1e-9
        )
        write_responsivity_csv(back, path + ".2")
        assert open(path, "rb").read() == open(path + ".2", "rb").read()

    def test_responsivity_bad_width_rejected(self, tmp_path):
        path = str(tmp_path / "r.csv")
        open(path, "w").write("power_dbm,responsivity_hz_per_db\n1.0,2.0,3.0\n")
        with pytest.raises(DataError, match="expected 2"):
            read_responsivity_csv(path)

    def test_fit_csv_shape(self, tmp_path):
        fit = fit_adler_model(sample_track(n=9))
        path = str(tmp_path / "fit.csv")
        write_fit_csv(fit, path)
        lines = open(path).read().splitlines()
        assert lines[0] == "parameter,value"
        keys = [ln.split(",")[0] for ln in lines[1:]]
        assert keys[:2] == ["delta_f0_hat_hz", "beta_hat_per_mw"]
        assert "converged" in keys and "beta_at_bound" in keys


class TestAtomicWrite:
    def test_replaces_existing_content(self, tmp_path):
        path = str(tmp_path / "f.txt")
        atomic_write(path, "old\n")
        atomic_write(path, "new\n")
        assert open(path).read() == "new\n"

    def test_failure_leaves_no_temp_files(self, tmp_path):
        path = str(tmp_path / "f.txt")
        with pytest.raises(TypeError):
            atomic_write(path, 12345)  # neither str nor bytes
        assert os.listdir(tmp_path) == []

    def test_bytes_payload(self, tmp_path):
        path = str(tmp_path / "f.bin")
        atomic_write(path, b"\x00\x01")
        assert open(path, "rb").read() == b"\x00\x01"


class TestPowerAveraging:
    def test_linear_power_mean(self):
        spg = Spectrogram(
            time_axis=np.array([0.0, 1.0, 2.0]),
            freq_axis=np.array([10.0, 20.0]),
            power_db=np.array([[0.0, -10.0, -30.0], [-20.0, -20.0, -40.0]]),
        )
        ds = power_averaged_dataset(spg, np.array([-30.0, -30.0, -20.0]))
        # first two columns share -30 dBm: mean(1, 0.1) = 0.55 -> -2.596 dB
        assert ds.power_db[0, 0] == pytest.approx(10 * np.log10(0.55))
        assert ds.power_db[0, 1] == pytest.approx(-30.0)
        np.testing.assert_allclose(ds.power_axis_dbm, [-30.0, -20.0])

    def test_schedule_length_checked(self):
        spg = Spectrogram(
            time_axis=np.array([0.0, 1.0]),
            freq_axis=np.array([10.0, 20.0]),
            power_db=np.zeros((2, 2)),
        )
        with pytest.raises(DataError, match="schedule"):
            power_averaged_dataset(spg, np.array([-30.0]))


@settings(max_examples=20, deadline=None)
@given(
    st.lists(
        st.floats(min_value=-160.0, max_value=0.0, allow_nan=False),
        min_size=4,
        max_size=4,
    )
)
def test_matrix_values_survive_round_trip(tmp_path_factory, values):
    tmp = tmp_path_factory.mktemp("rt")
    ds = SpectrogramDataset(
        power_db=np.array(values).reshape(2, 2),
        freq_axis_hz=np.array([1.0, 2.0]),
        power_axis_dbm=np.array([-30.0, -20.0]),
    )
    m, f, c = str(tmp / "m.csv"), str(tmp / "f.csv"), str(tmp / "c.csv")
    write_spectrogram_csv(ds, m, f, c)
    back = read_spectrogram_csv(m, f, c)
    np.testing.assert_allclose(back.power_db, ds.power_db, rtol=1e-9, atol=1e-300)
