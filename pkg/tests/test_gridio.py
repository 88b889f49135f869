import struct

import jsonschema
import numpy as np
import pytest

from excursions.geometry import measure
from excursions.gridio import (
    JSON_SCHEMAS,
    GridFormatError,
    measure_report,
    read_grid,
    read_report,
    write_grid,
    write_report,
)
from excursions.models import CovarianceModel, GaussianFieldSpec, GridWindow
from excursions.simulate import FieldRealization, SeedSpec, simulate_white_noise


def small_field():
    vals = np.arange(12, dtype=float).reshape(3, 4) * 0.5 - 2.0
    return FieldRealization(GridWindow((3, 4), 0.25), vals)


class TestRoundTrip:
    def test_known_values_bitwise(self, tmp_path):
        f = small_field()
        p = tmp_path / "f.xgrd"
        write_grid(f, p)
        g = read_grid(p)
        assert g.window == f.window
        assert np.array_equal(g.values, f.values)

    @pytest.mark.parametrize("dims", [(17,), (5, 7), (3, 4, 5)])
    def test_all_dimensions(self, tmp_path, dims):
        spec = GaussianFieldSpec(0.0, CovarianceModel("nugget", dim=len(dims)))
        f = simulate_white_noise(spec, GridWindow(dims, 0.5), SeedSpec(1, 0))
        p = tmp_path / "g.xgrd"
        write_grid(f, p)
        g = read_grid(p)
        assert g.values.shape == dims
        assert np.array_equal(g.values, f.values)


class TestErrors:
    def test_corrupted_magic_names_offset(self, tmp_path):
        p = tmp_path / "bad.xgrd"
        write_grid(small_field(), p)
        blob = bytearray(p.read_bytes())
        blob[:4] = b"NOPE"
        p.write_bytes(bytes(blob))
        with pytest.raises(GridFormatError, match="offset 0"):
            read_grid(p)

    def test_version_mismatch(self, tmp_path):
        p = tmp_path / "v9.xgrd"
        write_grid(small_field(), p)
        blob = bytearray(p.read_bytes())
        struct.pack_into("<H", blob, 4, 9)
        p.write_bytes(bytes(blob))
        with pytest.raises(GridFormatError, match="version"):
            read_grid(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "t.xgrd"
        write_grid(small_field(), p)
        blob = p.read_bytes()
        p.write_bytes(blob[:-5])
        with pytest.raises(GridFormatError, match="truncated"):
            read_grid(p)

    def test_dimension_overflow(self, tmp_path):
        p = tmp_path / "o.xgrd"
        header = b"XGRD" + struct.pack("<HB", 1, 2)
        header += struct.pack("<2Q", 1 << 40, 1 << 40)
        header += struct.pack("<2d", 1.0, 1.0)
        p.write_bytes(header)
        with pytest.raises(GridFormatError, match="overflow"):
            read_grid(p)

    def test_bad_dimension_count(self, tmp_path):
        p = tmp_path / "d.xgrd"
        p.write_bytes(b"XGRD" + struct.pack("<HB", 1, 7))
        with pytest.raises(GridFormatError, match="dimension"):
            read_grid(p)


class TestReports:
    def test_measure_report_validates(self, tmp_path):
        f = small_field()
        report = measure_report(f.window, measure(f, [-1.0, 0.0]))
        jsonschema.validate(report, JSON_SCHEMAS[report["schema"]])
        p = tmp_path / "r.json"
        write_report(report, p)
        again = read_report(p)
        assert again == report

    def test_report_requires_schema_key(self, tmp_path):
        with pytest.raises(ValueError):
            write_report({"x": 1}, tmp_path / "x.json")
