import json

import numpy as np
import pytest

from bandmask import cli, stats, stimuli
from bandmask.records import RecordWriter, ResponseRecord, BLOCK_TEST
from bandmask.taxonomy import CATEGORIES
from conftest import OBSERVER_CMD, simulate_records, synthetic_manifest


def run_cli(*args):
    return cli.main([str(a) for a in args])


@pytest.fixture()
def labels_csv(tmp_path):
    # 1104 fake rows; --no-render flows never open the files
    rows = [f"/img/{CATEGORIES[i % 16]}/{i:04d}.png,{CATEGORIES[i % 16]}" for i in range(1104)]
    path = tmp_path / "labels.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


class TestGenerate:
    def test_n29_one_per_condition(self, image_corpus, tmp_path, capsys):
        out = tmp_path / "set29"
        assert run_cli("generate", "--images", image_corpus, "--n", 29,
                       "--seed", 7, "--out", out) == 0
        manifest = stimuli.StimulusManifest.load(out / "manifest.json")
        assert set(manifest.condition_counts().values()) == {1}
        assert len(list((out / "stimuli").glob("*.png"))) == 29
        assert "condition balance" in capsys.readouterr().out

    def test_determinism_identical_manifests(self, labels_csv, tmp_path):
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            assert run_cli("generate", "--labels", labels_csv, "--n", 1100,
                           "--seed", 11, "--out", out, "--no-render") == 0
        a = (outs[0] / "manifest.json").read_bytes()
        b = (outs[1] / "manifest.json").read_bytes()
        assert a == b

    def test_balance_1100(self, labels_csv, tmp_path):
        out = tmp_path / "big"
        assert run_cli("generate", "--labels", labels_csv, "--n", 1100,
                       "--seed", 3, "--out", out, "--no-render") == 0
        manifest = stimuli.StimulusManifest.load(out / "manifest.json")
        assert set(manifest.condition_counts().values()) <= {37, 38}

    def test_missing_dir_is_validation_error(self, tmp_path):
        assert run_cli("generate", "--images", tmp_path / "nope", "--out",
                       tmp_path / "o") == cli.EXIT_VALIDATION


class TestRunAndAnalyze:
    def _write_manifest(self, tmp_path, n=58, seed=4):
        manifest = synthetic_manifest(n, seed)
        path = tmp_path / "manifest.json"
        path.write_text(manifest.to_json())
        return manifest, path

    def test_run_session_via_cli(self, tmp_path):
        _, mpath = self._write_manifest(tmp_path)
        out = tmp_path / "resp.csv"
        cmd = " ".join(OBSERVER_CMD + ["--kind", "oracle", "--manifest", str(mpath)])
        assert run_cli("run", "--manifest", mpath, "--observer-cmd", cmd,
                       "--out", out, "--all-test") == 0
        assert out.exists()

    def test_missing_observer_arg_rejected(self, tmp_path):
        _, mpath = self._write_manifest(tmp_path)
        assert run_cli("run", "--manifest", mpath, "--out", tmp_path / "r.csv",
                       "--all-test") == cli.EXIT_VALIDATION

    def _write_records(self, tmp_path, manifest, records, name="resp.csv"):
        # remap synthetic ids onto manifest ids so validation passes
        path = tmp_path / name
        with RecordWriter(path) as w:
            for r, entry in zip(records, manifest.entries * (len(records) // len(manifest) + 1)):
                w.write(
                    ResponseRecord(
                        observer_id=r.observer_id,
                        stimulus_id=entry.stimulus_id,
                        block=r.block,
                        sd=r.sd,
                        band_index=r.band_index,
                        true_category=r.true_category,
                        response_category=r.response_category,
                        correct=r.correct,
                        timestamp=r.timestamp,
                    )
                )
        return path

    def test_analyze_oracle_degenerate_flag(self, tmp_path, capsys):
        manifest, mpath = self._write_manifest(tmp_path, n=580, seed=1)
        records = simulate_records(0, 0, 1, 20, base=1.0, floor=1.0)
        rpath = self._write_records(tmp_path, manifest, records)
        out = tmp_path / "analysis"
        assert run_cli("analyze", "--responses", rpath, "--manifest", mpath,
                       "--out-dir", out) == 0
        fit = json.loads((out / "channel_fit.json").read_text())["channel_fit"]
        assert fit["degenerate"] is True
        assert "degenerate" in capsys.readouterr().out
        prof = json.loads((out / "thresholds.json").read_text())["thresholds"]
        assert set(prof["flags"]) == {"clamped_at_0"}

    def test_analyze_synthetic_recovers_properties(self, tmp_path):
        manifest, mpath = self._write_manifest(tmp_path, n=2900, seed=2)
        records = simulate_records(4.0, 4.5, 0.42, 100, seed=5)
        rpath = self._write_records(tmp_path, manifest, records)
        out = tmp_path / "analysis"
        assert run_cli("analyze", "--responses", rpath, "--manifest", mpath,
                       "--out-dir", out, "--svg") == 0
        props = json.loads((out / "properties.json").read_text())["properties"]
        assert props["bandwidth"] == pytest.approx(0.989, rel=0.08)
        assert props["center_frequency"] == pytest.approx(39.6, rel=0.05)
        assert (out / "heatmap.svg").exists() and (out / "channel.svg").exists()
        # provenance embedded in every artifact
        doc = json.loads((out / "properties.json").read_text())
        assert "input_digests" in doc["provenance"]

    def test_analyze_unknown_stimulus_exit_2(self, tmp_path, capsys):
        manifest, mpath = self._write_manifest(tmp_path)
        rpath = tmp_path / "resp.csv"
        with RecordWriter(rpath) as w:
            w.write(ResponseRecord("x", "ghost_id", BLOCK_TEST, 0.0, -1,
                                   "cat", "cat", True, "t"))
        assert run_cli("analyze", "--responses", rpath, "--manifest", mpath,
                       "--out-dir", tmp_path / "a") == cli.EXIT_VALIDATION
        assert "ghost_id" in capsys.readouterr().err

    def test_analyze_excluded_observer_exit_2(self, tmp_path, capsys):
        manifest, mpath = self._write_manifest(tmp_path, n=580, seed=1)
        records = simulate_records(0, 0, 1, 20, base=0.0, floor=0.0)  # always wrong
        rpath = self._write_records(tmp_path, manifest, records)
        assert run_cli("analyze", "--responses", rpath, "--manifest", mpath,
                       "--out-dir", tmp_path / "a") == cli.EXIT_VALIDATION
        assert "excluded" in capsys.readouterr().err
        # --include-excluded overrides (degenerate fit tolerated)
        assert run_cli("analyze", "--responses", rpath, "--manifest", mpath,
                       "--out-dir", tmp_path / "a", "--include-excluded",
                       "--normalize-baseline") in (0, cli.EXIT_VALIDATION)


class TestCorrelate:
    def _summaries(self, tmp_path, seed=0):
        rng = np.random.default_rng(seed)
        rows = []
        for i in range(24):
            adv = i < 10
            bw = rng.uniform(2, 6)
            rows.append(
                stats.ObserverSummary(
                    observer_id=f"net{i}",
                    bandwidth=bw,
                    center_frequency=rng.uniform(20, 45),
                    peak_noise_sensitivity=rng.uniform(0.3, 1.5),
                    group="adversarial" if adv else "non_adversarial",
                    shape_bias=0.9 - 0.22 * bw + rng.normal(0, 0.05),
                    whitebox_accuracy=float(np.clip(
                        (0.1 * bw if adv else 0.01 * bw) + rng.normal(0, 0.03), 0, 1)),
                )
            )
        path = tmp_path / "summaries.csv"
        stats.write_summaries_csv(path, rows)
        return path

    def test_report_written_with_planted_slopes(self, tmp_path, capsys):
        spath = self._summaries(tmp_path)
        out = tmp_path / "report.json"
        assert run_cli("correlate", "--summaries", spath, "--out", out,
                       "--svg-dir", tmp_path / "svg") == 0
        doc = json.loads(out.read_text())
        assert doc["m"] == 18 and doc["alpha"] == 0.05
        fit = next(f for f in doc["fits"]
                   if f["target"] == "shape_bias" and f["group"] == "all_networks"
                   and f["property"] == "bandwidth")
        assert np.sign(fit["slope"]) == -1
        assert (tmp_path / "svg" / "shape_bias.svg").exists()
        assert "18 fits" in capsys.readouterr().out

    def test_alpha_m_echoed_in_provenance(self, tmp_path):
        spath = self._summaries(tmp_path)
        out = tmp_path / "report.json"
        assert run_cli("correlate", "--summaries", spath, "--out", out,
                       "--alpha", 0.05, "--m", 18) == 0
        doc = json.loads(out.read_text())
        assert doc["significance_threshold"] == pytest.approx(0.05 / 18)
        assert "input_digests" in doc["provenance"]

    def test_cue_conflict_merge(self, tmp_path):
        spath = self._summaries(tmp_path)
        cc = tmp_path / "cc.csv"
        lines = ["observer_id,image_id,shape_category,texture_category,response_category"]
        for i in range(10):
            lines.append(f"net0,i{i},cat,elephant,{'cat' if i < 7 else 'elephant'}")
        cc.write_text("\n".join(lines) + "\n")
        out = tmp_path / "report.json"
        assert run_cli("correlate", "--summaries", spath, "--cue-conflict", cc,
                       "--out", out) == 0
        assert json.loads(out.read_text())["provenance"]["shape_bias_mode"] == "all_images"


class TestVerifyNoise:
    def test_json_report_stdout(self, capsys):
        assert run_cli("verify-noise", "--seed", 3, "--sd", 0.08, "--band", 3) == 0
        captured = capsys.readouterr()
        doc = json.loads(captured.out)
        assert len(doc["reports"]) == 1
        rep = doc["reports"][0]
        assert rep["in_band_power_fraction"] >= 0.99
        assert abs(rep["sample_sd"] - 0.08) < 1e-9

    def test_all_conditions_to_file(self, tmp_path):
        out = tmp_path / "spectra.json"
        assert run_cli("verify-noise", "--seed", 1, "--out", out) == 0
        doc = json.loads(out.read_text())
        assert len(doc["reports"]) == 28

    def test_bad_filter_rejected(self):
        assert run_cli("verify-noise", "--sd", 0.33) == cli.EXIT_VALIDATION
