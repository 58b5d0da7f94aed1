"""Unit tests for the CSV readers and the four renderers."""

import pytest
from click.testing import CliRunner

from samplegen import write_aggregate, write_fieldmap, write_spectrum
from mrls_plots import HashMismatchError, SchemaError
from mrls_plots.cli import detect_kind, main
from mrls_plots.io import check_hash_consistency, read_table, require_columns
from mrls_plots.render import PlotJob, render

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class TestReadTable:
    def test_metadata_split_from_body(self, sample_dir):
        table = read_table(sample_dir / "fieldmap_yoz.csv")
        assert table.config_hash == "deadbeefcafe0123"
        assert table.metadata["banner"] == "mrls 0.1.0"
        assert list(table.frame.columns) == [
            "u",
            "v",
            "power_w_m2",
            "power_normalized",
        ]
        assert len(table.frame) == 25  # 5x5 grid, no rows lost to parsing

    def test_row_and_column_counts_preserved(self, sample_dir):
        # Round-trip property: every emitted schema parses without loss.
        raw = (sample_dir / "aggregate.csv").read_text().splitlines()
        data_rows = [r for r in raw if r and not r.startswith("#")]
        table = read_table(sample_dir / "aggregate.csv")
        assert len(table.frame) == len(data_rows) - 1
        assert len(table.frame.columns) == len(data_rows[0].split(","))

    def test_empty_body_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("# mrls 0.1.0\n# config_hash=abc\n")
        with pytest.raises(SchemaError, match="no CSV data"):
            read_table(p)

    def test_require_columns_names_missing(self, sample_dir):
        table = read_table(sample_dir / "spectrum.csv")
        with pytest.raises(SchemaError, match="missing column 'p_music_db'"):
            require_columns(table, ["theta_deg", "p_music_db"])


class TestHashConsistency:
    def test_matching_hashes_accepted(self, sample_dir):
        tables = [
            read_table(sample_dir / "aggregate.csv"),
            read_table(sample_dir / "trials.csv"),
        ]
        check_hash_consistency(tables)  # no exception

    def test_conflicting_hashes_refused(self, tmp_path):
        a = write_spectrum(tmp_path / "a.csv", config_hash="aaaa")
        b = write_spectrum(tmp_path / "b.csv", config_hash="bbbb")
        with pytest.raises(HashMismatchError, match="aaaa.*bbbb|bbbb.*aaaa"):
            check_hash_consistency([read_table(a), read_table(b)])

    def test_hashless_file_compatible_with_any(self, tmp_path):
        a = write_fieldmap(tmp_path / "a.csv", hash_line=False)
        b = write_spectrum(tmp_path / "b.csv", config_hash="bbbb")
        check_hash_consistency([read_table(a), read_table(b)])

    def test_render_enforces_hash_check(self, tmp_path):
        a = write_aggregate(tmp_path / "a.csv", config_hash="aaaa")
        b = write_aggregate(tmp_path / "b.csv", config_hash="bbbb")
        job = PlotJob(inputs=(a, b), kind="line", output=tmp_path / "x.png")
        with pytest.raises(HashMismatchError):
            render(job)


class TestRenderKinds:
    def test_heatmap_round_trip(self, sample_dir, tmp_path):
        out = render(
            PlotJob(
                inputs=(sample_dir / "fieldmap_yoz.csv",),
                kind="heatmap",
                output=tmp_path / "heat.png",
            )
        )
        assert out.read_bytes().startswith(PNG_MAGIC)

    def test_line_from_aggregate_two_systems(self, sample_dir, tmp_path):
        out = render(
            PlotJob(
                inputs=(sample_dir / "aggregate.csv",),
                kind="line",
                output=tmp_path / "line.png",
                y_column="rmse_deg",
            )
        )
        assert out.read_bytes().startswith(PNG_MAGIC)

    def test_line_from_trace(self, sample_dir, tmp_path):
        out = render(
            PlotJob(
                inputs=(sample_dir / "trace.csv",),
                kind="line",
                output=tmp_path / "trace.png",
            )
        )
        assert out.read_bytes().startswith(PNG_MAGIC)

    def test_surface_from_spectrum(self, sample_dir, tmp_path):
        out = render(
            PlotJob(
                inputs=(sample_dir / "spectrum.csv",),
                kind="surface",
                output=tmp_path / "surf.png",
            )
        )
        assert out.read_bytes().startswith(PNG_MAGIC)

    def test_scatter_from_trials(self, sample_dir, tmp_path):
        out = render(
            PlotJob(
                inputs=(sample_dir / "trials.csv",),
                kind="scatter",
                output=tmp_path / "scat.png",
            )
        )
        assert out.read_bytes().startswith(PNG_MAGIC)

    def test_deterministic_output(self, sample_dir, tmp_path):
        # Identical inputs must give byte-identical images.
        outs = []
        for name in ("a.png", "b.png"):
            render(
                PlotJob(
                    inputs=(sample_dir / "spectrum.csv",),
                    kind="surface",
                    output=tmp_path / name,
                )
            )
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]

    def test_missing_column_names_column(self, tmp_path):
        bad = write_fieldmap(tmp_path / "bad.csv", drop_column="power_normalized")
        job = PlotJob(inputs=(bad,), kind="heatmap", output=tmp_path / "x.png")
        with pytest.raises(SchemaError, match="missing column 'power_normalized'"):
            render(job)

    def test_unknown_kind_rejected(self, sample_dir, tmp_path):
        with pytest.raises(SchemaError, match="unknown plot kind"):
            PlotJob(
                inputs=(sample_dir / "trace.csv",),
                kind="sparkline",
                output=tmp_path / "x.png",
            )

    def test_no_inputs_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="at least one input"):
            PlotJob(inputs=(), kind="line", output=tmp_path / "x.png")


class TestDetectKind:
    def test_all_samples_detected(self, sample_dir):
        expected = {
            "fieldmap_yoz.csv": "heatmap",
            "spectrum.csv": "surface",
            "aggregate.csv": "line",
            "trials.csv": "scatter",
            "trace.csv": "line",
        }
        for name, kind in expected.items():
            assert detect_kind(sample_dir / name) == kind, name

    def test_unknown_columns_give_none(self, tmp_path):
        p = tmp_path / "other.csv"
        p.write_text("alpha,beta\n1,2\n")
        assert detect_kind(p) is None


class TestCli:
    def test_render_success_exit_zero(self, sample_dir, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            main,
            [
                "render",
                "--input",
                str(sample_dir / "aggregate.csv"),
                "--output",
                str(tmp_path / "agg.png"),
                "--kind",
                "line",
                "--y",
                "mean_snr_db",
            ],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "agg.png").read_bytes().startswith(PNG_MAGIC)

    def test_schema_error_nonzero_and_named(self, tmp_path):
        bad = write_aggregate(tmp_path / "bad.csv", drop_column="rmse_deg")
        runner = CliRunner()
        result = runner.invoke(
            main,
            [
                "render",
                "--input",
                str(bad),
                "--output",
                str(tmp_path / "x.png"),
                "--kind",
                "line",
                "--y",
                "rmse_deg",
            ],
        )
        assert result.exit_code != 0
        assert "rmse_deg" in result.output

    def test_make_all_renders_every_sample(self, sample_dir, tmp_path):
        runner = CliRunner()
        out_dir = tmp_path / "figs"
        result = runner.invoke(
            main,
            ["make-all", "--input", str(sample_dir), "--output", str(out_dir)],
        )
        assert result.exit_code == 0, result.output
        produced = {p.name for p in out_dir.glob("*.png")}
        assert produced == {
            "fieldmap_yoz.png",
            "spectrum.png",
            "aggregate.png",
            "trials.png",
            "trace.png",
        }

    def test_make_all_empty_dir_fails(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        runner = CliRunner()
        result = runner.invoke(
            main, ["make-all", "--input", str(empty), "--output", str(tmp_path / "f")]
        )
        assert result.exit_code != 0
