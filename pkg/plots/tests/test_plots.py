import hashlib

import pytest

from lwfplots import heatmap, report

HEATMAP_ROWS = [
    "x1,x2,value",
    "0,0,0",
    "1,0,0",
    "0,1,0",
    "0.5,0,1.2",
    "0,0.5,1.2",
    "0.5,0.5,1.2",
    "0.3333333333,0.3333333333,1.6",
]

REPORT_ROWS = [
    "experiment,label,formula,estimate,stderr,z,pass",
    "fix-mean,d=1 x=0.5,1.3863,1.3871,0.004,0.2,True",
    "fix-mean,d=2,1.6219,1.6305,0.005,1.72,True",
    "explosion,c=1 p=1,2.0,2.131,0.02,6.55,False",
]


def write(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestHeatmap:
    def test_single_panel(self, tmp_path):
        csv = write(tmp_path / "a.csv", HEATMAP_ROWS)
        out = tmp_path / "a.png"
        assert heatmap.main([csv, str(out), "--title", "panel"]) == 0
        assert out.stat().st_size > 0

    def test_four_panel_composite(self, tmp_path):
        csvs = [write(tmp_path / f"p{i}.csv", HEATMAP_ROWS) for i in range(4)]
        out = tmp_path / "composite.png"
        code = heatmap.main(csvs + [str(out), "--title", "a", "b", "c", "d"])
        assert code == 0 and out.stat().st_size > 0

    def test_golden_hash_stable(self, tmp_path):
        csv = write(tmp_path / "a.csv", HEATMAP_ROWS)
        out1, out2 = tmp_path / "r1.png", tmp_path / "r2.png"
        assert heatmap.main([csv, str(out1)]) == 0
        assert heatmap.main([csv, str(out2)]) == 0
        assert sha(out1) == sha(out2)

    def test_empty_csv_errors(self, tmp_path):
        csv = tmp_path / "empty.csv"
        csv.write_text("")
        assert heatmap.main([str(csv), str(tmp_path / "o.png")]) == 1

    def test_header_only_errors(self, tmp_path):
        csv = write(tmp_path / "h.csv", ["x1,x2,value"])
        assert heatmap.main([str(csv), str(tmp_path / "o.png")]) == 1

    def test_bad_header_errors(self, tmp_path):
        csv = write(tmp_path / "b.csv", ["a,b,c", "0,0,1"])
        assert heatmap.main([str(csv), str(tmp_path / "o.png")]) == 1

    def test_single_point_no_crash(self, tmp_path):
        csv = write(tmp_path / "one.csv", ["x1,x2,value", "0.5,0.25,1.0"])
        out = tmp_path / "one.png"
        assert heatmap.main([str(csv), str(out)]) == 0
        assert out.stat().st_size > 0

    def test_off_simplex_rejected(self, tmp_path):
        csv = write(tmp_path / "o.csv", ["x1,x2,value", "0.8,0.8,1.0"])
        assert heatmap.main([str(csv), str(tmp_path / "o.png")]) == 1

    def test_darker_is_larger_colormap(self):
        import matplotlib.pyplot as plt

        cmap = plt.get_cmap(heatmap.CMAP)
        low, high = cmap(0.1), cmap(0.9)
        assert sum(high[:3]) < sum(low[:3])


class TestReport:
    def test_renders(self, tmp_path):
        csv = write(tmp_path / "rep.csv", REPORT_ROWS)
        out = tmp_path / "rep.png"
        assert report.main([csv, str(out)]) == 0
        assert out.stat().st_size > 0

    def test_hash_stable(self, tmp_path):
        csv = write(tmp_path / "rep.csv", REPORT_ROWS)
        out1, out2 = tmp_path / "r1.png", tmp_path / "r2.png"
        assert report.main([csv, str(out1)]) == 0
        assert report.main([csv, str(out2)]) == 0
        assert sha(out1) == sha(out2)

    def test_single_row(self, tmp_path):
        csv = write(tmp_path / "rep.csv", REPORT_ROWS[:2])
        assert report.main([csv, str(tmp_path / "o.png")]) == 0

    def test_empty_errors(self, tmp_path):
        csv = tmp_path / "rep.csv"
        csv.write_text("")
        assert report.main([str(csv), str(tmp_path / "o.png")]) == 1

    def test_comment_headers_skipped(self, tmp_path):
        csv = write(tmp_path / "rep.csv", ["# generated", "# seed = 0"] + REPORT_ROWS)
        assert report.main([str(csv), str(tmp_path / "o.png")]) == 0

    def test_bad_header_errors(self, tmp_path):
        csv = write(tmp_path / "rep.csv", ["a,b,c,d,e,f,g", "1,2,3,4,5,6,7"])
        assert report.main([str(csv), str(tmp_path / "o.png")]) == 1
