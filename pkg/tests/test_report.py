import xml.etree.ElementTree as ET

from trollscope.report import (
    read_json,
    sha256_file,
    svg_histogram,
    svg_lines,
    write_csv,
    write_json,
    write_manifest,
)


class TestJsonCsv:
    def test_json_round_trip(self, tmp_path):
        p = tmp_path / "x.json"
        payload = {"a": 1, "b": [1.5, 2.5], "c": {"d": "e"}}
        write_json(p, payload)
        assert read_json(p) == payload

    def test_csv_writer(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, ["k", "v"], [(1, 2.5), (3, 4.5)])
        lines = p.read_text().strip().splitlines()
        assert lines == ["k,v", "1,2.5", "3,4.5"]


class TestManifest:
    def test_hashes_every_file(self, tmp_path):
        (tmp_path / "sub").mkdir()
        (tmp_path / "a.txt").write_text("alpha")
        (tmp_path / "sub" / "b.txt").write_text("beta")
        manifest = write_manifest(tmp_path)
        assert set(manifest["files"]) == {"a.txt", "sub/b.txt"}
        assert manifest["files"]["a.txt"] == sha256_file(tmp_path / "a.txt")
        # the manifest itself is excluded from itself
        assert "MANIFEST.json" not in manifest["files"]

    def test_identical_content_identical_hash(self, tmp_path):
        (tmp_path / "a").write_text("same")
        (tmp_path / "b").write_text("same")
        assert sha256_file(tmp_path / "a") == sha256_file(tmp_path / "b")


class TestSvg:
    def test_lines_chart_is_valid_xml(self, tmp_path):
        p = tmp_path / "chart.svg"
        svg_lines(p, "demo", [1, 2, 3], {"s1": [0.1, 0.4, 0.2], "s2": [0.3, 0.2, 0.5]})
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
        polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
        assert len(polylines) == 2

    def test_histogram_is_valid_xml(self, tmp_path):
        p = tmp_path / "hist.svg"
        svg_histogram(p, "demo", [0.0, 0.5, 1.0], {"g": [3, 7]})
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
        assert any(e.tag.endswith("polyline") for e in root.iter())

    def test_degenerate_ranges_do_not_crash(self, tmp_path):
        svg_lines(tmp_path / "flat.svg", "flat", [1, 2], {"s": [0.5, 0.5]})
        assert (tmp_path / "flat.svg").read_text().startswith("<svg")
