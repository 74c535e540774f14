"""Tests for the command-line front end: exit codes, files, determinism."""

import csv
import json

import pytest

from qpke.cli import _parse_message, _parse_range, main
from qpke.protocol import load_private_key


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestFlagParsing:
    """Message and range parsing helpers."""

    def test_bit_message(self):
        assert _parse_message("0110") == (0, 1, 1, 0)
        assert _parse_message("1") == (1,)

    def test_hex_message(self):
        assert _parse_message("0xd6") == (1, 1, 0, 1, 0, 1, 1, 0)
        assert _parse_message("0x1") == (0, 0, 0, 1)

    def test_invalid_message(self):
        for bad in ("", "012", "0x", "0xZZ", "abc"):
            with pytest.raises(ValueError):
                _parse_message(bad)

    def test_range(self):
        assert _parse_range("32:62", "--n-range") == (32, 62)
        with pytest.raises(ValueError, match="LOW:HIGH"):
            _parse_range("32", "--n-range")
        with pytest.raises(ValueError, match="integers"):
            _parse_range("a:b", "--n-range")


class TestKeygenCommand:
    """Key generation: files, determinism, and validation."""

    def test_writes_loadable_key(self, tmp_path, capsys):
        out = tmp_path / "key.json"
        code, stdout, _ = run_cli(
            ["keygen", "--n", "48", "--N", "8", "--seed", "7", "--out", str(out)],
            capsys,
        )
        assert code == 0
        key = load_private_key(out)
        assert key.n == 48
        assert key.length == 8
        assert "key_id=" in stdout
        assert "fingerprint=" in stdout
        assert (tmp_path / "key.json.manifest.json").exists()

    def test_deterministic_key_file(self, tmp_path, capsys):
        paths = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            code, _, _ = run_cli(
                ["keygen", "--n", "40", "--N", "4", "--seed", "3", "--out", str(out)],
                capsys,
            )
            assert code == 0
            paths.append(out)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_range_sampling(self, tmp_path, capsys):
        out = tmp_path / "key.json"
        code, _, _ = run_cli(
            ["keygen", "--n-range", "32:62", "--N", "2", "--seed", "11", "--out", str(out)],
            capsys,
        )
        assert code == 0
        assert 32 <= load_private_key(out).n <= 62

    def test_precision_cap_rejected(self, tmp_path, capsys):
        code, _, stderr = run_cli(
            ["keygen", "--n", "70", "--N", "2", "--seed", "1", "--out", str(tmp_path / "k")],
            capsys,
        )
        assert code == 2
        assert "error" in stderr

    def test_requires_exactly_one_precision_flag(self, tmp_path, capsys):
        base = ["--N", "2", "--seed", "1", "--out", str(tmp_path / "k")]
        code, _, _ = run_cli(["keygen"] + base, capsys)
        assert code == 2
        code, _, _ = run_cli(
            ["keygen", "--n", "40", "--n-range", "32:62"] + base, capsys
        )
        assert code == 2

    def test_unwritable_output_is_io_error(self, tmp_path, capsys):
        out = tmp_path / "missing-dir" / "key.json"
        code, _, stderr = run_cli(
            ["keygen", "--n", "40", "--N", "2", "--seed", "1", "--out", str(out)],
            capsys,
        )
        assert code == 3
        assert "error" in stderr


@pytest.fixture
def key_file(tmp_path, capsys):
    out = tmp_path / "key.json"
    code = main(["keygen", "--n", "40", "--N", "8", "--seed", "5", "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    return out


class TestRoundtripCommand:
    """Encrypt-then-decrypt through the CLI."""

    def test_bit_message_matches(self, key_file, tmp_path, capsys):
        report = tmp_path / "rt.json"
        code, stdout, _ = run_cli(
            [
                "roundtrip",
                "--key",
                str(key_file),
                "--message",
                "01101001",
                "--seed",
                "2",
                "--json",
                str(report),
            ],
            capsys,
        )
        assert code == 0
        assert "match=true" in stdout
        assert "encrypt_ms=" in stdout
        payload = json.loads(report.read_text())
        assert payload["schema_version"] == 1
        assert payload["results"]["match"] is True
        assert payload["results"]["num_bits"] == 8
        assert payload["manifest"]["run_id"]

    def test_hex_message(self, key_file, capsys):
        code, stdout, _ = run_cli(
            ["roundtrip", "--key", str(key_file), "--message", "0xA5", "--seed", "2"],
            capsys,
        )
        assert code == 0
        assert "match=true" in stdout

    def test_redundant_encoding(self, key_file, capsys):
        code, stdout, _ = run_cli(
            [
                "roundtrip",
                "--key",
                str(key_file),
                "--message",
                "0110",
                "--alpha",
                "2",
                "--seed",
                "9",
            ],
            capsys,
        )
        assert code == 0
        assert "match=true" in stdout

    def test_oversize_message_exits_4_with_remedy(self, key_file, capsys):
        code, _, stderr = run_cli(
            ["roundtrip", "--key", str(key_file), "--message", "0" * 9, "--seed", "2"],
            capsys,
        )
        assert code == 4
        assert "increase the length of her public key" in stderr

    def test_missing_key_file_is_io_error(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["roundtrip", "--key", str(tmp_path / "nope.json"), "--message", "01"],
            capsys,
        )
        assert code == 3

    def test_malformed_message_is_usage_error(self, key_file, capsys):
        code, _, _ = run_cli(
            ["roundtrip", "--key", str(key_file), "--message", "21", "--seed", "2"],
            capsys,
        )
        assert code == 2


class TestAttackCommand:
    """Attack experiments through the CLI."""

    def test_forward_search_files(self, tmp_path, capsys):
        json_path = tmp_path / "fs.json"
        csv_path = tmp_path / "fs.csv"
        code, stdout, _ = run_cli(
            [
                "attack",
                "--attack",
                "forward-search",
                "--alpha",
                "1",
                "--trials",
                "2000",
                "--seed",
                "4",
                "--json",
                str(json_path),
                "--csv",
                str(csv_path),
            ],
            capsys,
        )
        assert code == 0
        assert "theory=0.75" in stdout
        payload = json.loads(json_path.read_text())
        assert {r["rule"] for r in payload["results"]} == {
            "identify-all",
            "parity-aware",
        }
        for record in payload["results"]:
            assert record["theory"] == 0.75
            assert abs(record["success_rate"] - 0.75) < 0.05
        with open(csv_path, newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 2
        assert rows[0]["attack"] == "forward-search"
        assert rows[0]["run_id"] == payload["manifest"]["run_id"]

    def test_single_rule_selection(self, tmp_path, capsys):
        csv_path = tmp_path / "fs.csv"
        code, _, _ = run_cli(
            [
                "attack",
                "--attack",
                "forward-search",
                "--alpha",
                "2",
                "--trials",
                "500",
                "--rule",
                "parity-aware",
                "--seed",
                "4",
                "--csv",
                str(csv_path),
            ],
            capsys,
        )
        assert code == 0
        with open(csv_path, newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 1
        assert rows[0]["rule"] == "parity-aware"
        assert float(rows[0]["theory"]) == 0.625

    def test_cpa_distance_is_zero(self, tmp_path, capsys):
        json_path = tmp_path / "cpa.json"
        code, _, _ = run_cli(
            [
                "attack",
                "--attack",
                "cpa",
                "--n",
                "6",
                "--N",
                "2",
                "--seed",
                "1",
                "--json",
                str(json_path),
            ],
            capsys,
        )
        assert code == 0
        record = json.loads(json_path.read_text())["results"][0]
        assert record["success_rate"] < 1e-12
        assert record["theory"] == 0.0

    def test_cca_transcript(self, tmp_path, capsys):
        json_path = tmp_path / "cca.json"
        code, stdout, _ = run_cli(
            [
                "attack",
                "--attack",
                "cca",
                "--n",
                "8",
                "--N",
                "3",
                "--k",
                "4",
                "--seed",
                "6",
                "--json",
                str(json_path),
            ],
            capsys,
        )
        assert code == 0
        assert "uses:4/4" in stdout
        payload = json.loads(json_path.read_text())
        transcript = payload["results"]["transcript"]
        assert len(transcript) == 6
        assert sum(1 for t in transcript if t["accepted"]) == 4
        assert payload["results"]["session"]["uses_consumed"] == 4

    def test_unknown_attack_is_usage_error(self, capsys):
        code, _, _ = run_cli(["attack", "--attack", "grover"], capsys)
        assert code == 2


class TestAnalyzeCommand:
    """Entropy accounting reports through the CLI."""

    def test_default_margin(self, capsys):
        code, stdout, _ = run_cli(["analyze", "--seed", "1"], capsys)
        assert code == 0
        assert "margin=2.9387" in stdout
        assert "satisfied=false" in stdout

    def test_threshold_two_satisfied(self, capsys):
        code, stdout, _ = run_cli(
            ["analyze", "--threshold", "2", "--seed", "1"], capsys
        )
        assert code == 0
        assert "satisfied=true" in stdout

    def test_fixed_precision_values(self, tmp_path, capsys):
        json_path = tmp_path / "an.json"
        code, stdout, _ = run_cli(
            [
                "analyze",
                "--n-range",
                "48:48",
                "--N",
                "256",
                "--k",
                "16",
                "--seed",
                "1",
                "--json",
                str(json_path),
            ],
            capsys,
        )
        assert code == 0
        assert "H(d)=12288.0000" in stdout
        records = {r["quantity"]: r for r in json.loads(json_path.read_text())["results"]}
        assert records["private_key_entropy"]["value_bits"] == 12288.0
        assert records["holevo_cap"]["value_bits"] == 4096.0
        assert records["secrecy_margin"]["value_bits"] == 3.0

    def test_zero_copies_infinite_margin(self, capsys):
        code, stdout, _ = run_cli(["analyze", "--k", "0", "--seed", "1"], capsys)
        assert code == 0
        assert "cap=0.0" in stdout
        assert "margin=inf" in stdout
        assert "satisfied=true" in stdout

    def test_mutual_information_estimate(self, tmp_path, capsys):
        json_path = tmp_path / "mi.json"
        code, _, _ = run_cli(
            [
                "analyze",
                "--mi-strategy",
                "fixed",
                "--mi-n",
                "1",
                "--trials",
                "3000",
                "--seed",
                "8",
                "--json",
                str(json_path),
            ],
            capsys,
        )
        assert code == 0
        records = json.loads(json_path.read_text())["results"]
        mi = [r for r in records if r["quantity"] == "mutual_information"]
        assert len(mi) == 1
        assert mi[0]["value_bits"] == pytest.approx(1.0, abs=0.05)


class TestSweepCommand:
    """Grid sweeps to CSV."""

    def test_ensemble_sweep(self, tmp_path, capsys):
        code, stdout, _ = run_cli(
            [
                "sweep",
                "--experiment",
                "ensemble",
                "--n",
                "1:12",
                "--seed",
                "1",
                "--out",
                str(tmp_path / "out"),
            ],
            capsys,
        )
        assert code == 0
        csv_path = tmp_path / "out" / "sweep-ensemble.csv"
        raw = csv_path.read_bytes()
        assert b"\r\n" in raw
        with open(csv_path, newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 12
        assert all(float(r["max_abs_deviation"]) < 1e-12 for r in rows)
        assert all(float(r["entropy_bits"]) == pytest.approx(1.0) for r in rows)
        assert (tmp_path / "out" / "sweep-ensemble.csv.manifest.json").exists()

    def test_forward_search_sweep_matches_theory_column(self, tmp_path, capsys):
        code, _, _ = run_cli(
            [
                "sweep",
                "--experiment",
                "forward-search",
                "--alphas",
                "1:4",
                "--trials",
                "300",
                "--rule",
                "identify-all",
                "--seed",
                "2",
                "--out",
                str(tmp_path / "out"),
            ],
            capsys,
        )
        assert code == 0
        with open(tmp_path / "out" / "sweep-forward-search.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [int(r["alpha"]) for r in rows] == [1, 2, 3, 4]
        assert [float(r["theory"]) for r in rows] == [
            0.75,
            0.5625,
            pytest.approx(27 / 64),
            pytest.approx(81 / 256),
        ]

    def test_empty_grid_is_usage_error(self, tmp_path, capsys):
        code, _, stderr = run_cli(
            [
                "sweep",
                "--experiment",
                "ensemble",
                "--n",
                "8:3",
                "--seed",
                "1",
                "--out",
                str(tmp_path / "out"),
            ],
            capsys,
        )
        assert code == 2
        assert "no valid cells" in stderr

    def test_oversized_grid_rejected(self, tmp_path, capsys):
        code, _, stderr = run_cli(
            [
                "sweep",
                "--experiment",
                "ensemble",
                "--n",
                "1:20000",
                "--seed",
                "1",
                "--out",
                str(tmp_path / "out"),
            ],
            capsys,
        )
        assert code == 2
        assert "cap" in stderr

    def test_sweep_is_byte_deterministic(self, tmp_path, capsys):
        blobs = []
        for name in ("one", "two"):
            code, _, _ = run_cli(
                [
                    "sweep",
                    "--experiment",
                    "forward-search",
                    "--alphas",
                    "1:2",
                    "--trials",
                    "200",
                    "--seed",
                    "13",
                    "--out",
                    str(tmp_path / name),
                ],
                capsys,
            )
            assert code == 0
            blobs.append((tmp_path / name / "sweep-forward-search.csv").read_bytes())
        assert blobs[0] == blobs[1]


class TestSeedHandling:
    """Flag, environment fallback, and entropy sourcing."""

    def test_env_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("QPKE_SEED", "123")
        out = tmp_path / "env.json"
        code, stdout, _ = run_cli(
            ["keygen", "--n", "40", "--N", "2", "--out", str(out)], capsys
        )
        assert code == 0
        assert "seed=123 (env)" in stdout
        flag_out = tmp_path / "flag.json"
        monkeypatch.delenv("QPKE_SEED")
        code = main(
            ["keygen", "--n", "40", "--N", "2", "--seed", "123", "--out", str(flag_out)]
        )
        capsys.readouterr()
        assert code == 0
        assert out.read_bytes() == flag_out.read_bytes()

    def test_invalid_env_seed(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("QPKE_SEED", "not-a-number")
        code, _, stderr = run_cli(
            ["keygen", "--n", "40", "--N", "2", "--out", str(tmp_path / "k")], capsys
        )
        assert code == 2
        assert "QPKE_SEED" in stderr

    def test_entropy_seed_recorded(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("QPKE_SEED", raising=False)
        code, stdout, _ = run_cli(
            ["keygen", "--n", "40", "--N", "2", "--out", str(tmp_path / "k.json")],
            capsys,
        )
        assert code == 0
        assert "(entropy)" in stdout
        manifest = json.loads((tmp_path / "k.json.manifest.json").read_text())
        assert isinstance(manifest["manifest"]["seed"], int)


class TestDeterminism:
    """Identical flags and seed reproduce identical payloads."""

    def test_attack_outputs_identical(self, tmp_path, capsys):
        blobs = []
        for name in ("one", "two"):
            json_path = tmp_path / f"{name}.json"
            csv_path = tmp_path / f"{name}.csv"
            code, _, _ = run_cli(
                [
                    "attack",
                    "--attack",
                    "forward-search",
                    "--alpha",
                    "2",
                    "--trials",
                    "500",
                    "--seed",
                    "17",
                    "--json",
                    str(json_path),
                    "--csv",
                    str(csv_path),
                ],
                capsys,
            )
            assert code == 0
            blobs.append(json_path.read_bytes() + csv_path.read_bytes())
        assert blobs[0] == blobs[1]

    def test_run_id_stable_across_reruns(self, tmp_path, capsys):
        ids = []
        for name in ("one", "two"):
            json_path = tmp_path / f"{name}.json"
            code, _, _ = run_cli(
                [
                    "analyze",
                    "--n-range",
                    "48:48",
                    "--seed",
                    "9",
                    "--json",
                    str(json_path),
                ],
                capsys,
            )
            assert code == 0
            ids.append(json.loads(json_path.read_text())["manifest"]["run_id"])
        assert ids[0] == ids[1]

    def test_different_seeds_differ(self, tmp_path, capsys):
        outs = []
        for seed in ("1", "2"):
            json_path = tmp_path / f"s{seed}.json"
            code, _, _ = run_cli(
                [
                    "attack",
                    "--attack",
                    "forward-search",
                    "--trials",
                    "400",
                    "--seed",
                    seed,
                    "--json",
                    str(json_path),
                ],
                capsys,
            )
            assert code == 0
            outs.append(json.loads(json_path.read_text()))
        assert outs[0]["manifest"]["run_id"] != outs[1]["manifest"]["run_id"]
