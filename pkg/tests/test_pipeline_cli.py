import json
import os

import numpy as np
import pytest

from otsuki import jsonio
from otsuki.cli import run_cli
from otsuki.errors import RouteDisagreementError
from otsuki.pipeline import (bounds_check, cache_key, cache_load, cache_store,
                             compute_index, spectral_index_formula,
                             index_bounds, verify_family)


@pytest.fixture(scope="module")
def report23():
    return compute_index(2, 3, method="both", n=512, n_traj=1024)


class TestFormulas:
    @pytest.mark.parametrize("p,q", [(2, 3), (5, 8), (7, 10), (3, 5)])
    def test_index_bounds_recomputed(self, p, q):
        b = index_bounds(p, q)
        if q % 2:
            assert b["thm_lower"] == 6 * q + 8 * p - 3
            assert b["thm_upper"] == 10 * q + 4 * p - 5
        else:
            assert b["thm_lower"] == 3 * q + 4 * p - 3
            assert b["thm_upper"] == 5 * q + 2 * p - 5
        assert (b["nul_lower"], b["nul_upper"]) == (9, 13)

    @pytest.mark.parametrize("p,q,expect", [(2, 3, 12), (5, 8, 16), (7, 10, 22)])
    def test_spectral_index_formula(self, p, q, expect):
        assert spectral_index_formula(p, q) == expect


class TestComputeIndex:
    def test_headline_small_mesh(self, report23):
        assert report23.ind == 31
        assert report23.nul == 9
        assert report23.spectral_index == 12

    def test_per_mode_counts(self, report23):
        by_l = {r.l: r for r in report23.per_mode}
        assert (by_l[0].neg, by_l[0].zero) == (13, 3)
        assert (by_l[1].neg, by_l[1].zero) == (9, 2)
        assert (by_l[2].neg, by_l[2].zero) == (0, 1)
        assert by_l[1].method == "both"

    def test_assembly_identity(self, report23):
        by_l = {r.l: r for r in report23.per_mode}
        assert report23.ind == by_l[0].neg + 2 * by_l[1].neg + 2 * by_l[2].neg
        assert report23.nul == by_l[0].zero + 2 * by_l[1].zero + 2 * by_l[2].zero

    def test_bounds_check_passes(self, report23):
        result = bounds_check(report23)
        assert result["thm_lower_ok"] and result["thm_upper_ok"]
        assert result["nul_ok"] and result["rough_upper_ok"]
        assert result["bounds"]["rough_upper"] == 5 * 12 + 2

    def test_flags_record_root_regime(self, report23):
        assert report23.flags["s2"] == pytest.approx(0.5, abs=1e-6)
        assert report23.flags["s1_below_minus_one"] is True
        assert report23.flags["abs_s1_gt_s2"] is True
        assert report23.flags["edwards_applicable"] == {"1": True, "2": True}

    def test_determinism_modulo_timestamp(self, report23):
        second = compute_index(2, 3, method="both", n=512, n_traj=1024)
        d1 = report23.to_json_dict()
        d2 = second.to_json_dict()
        d1.pop("timestamp")
        d2.pop("timestamp")
        assert jsonio.dumps(d1) == jsonio.dumps(d2)

    def test_unknown_method_rejected(self):
        from otsuki.errors import ValidationError
        with pytest.raises(ValidationError):
            compute_index(2, 3, method="fancy")

    def test_route_disagreement_fails_loudly(self, monkeypatch):
        import otsuki.pipeline as pipeline

        _orig = pipeline._direct_mode_counts

        def wrong(l, traj, n, tau_zero):
            return [(r, neg + 1, zero) for (r, neg, zero) in _orig(l, traj, n, tau_zero)]

        monkeypatch.setattr(pipeline, "_direct_mode_counts", wrong)
        with pytest.raises(RouteDisagreementError):
            compute_index(2, 3, method="both", n=512, n_traj=1024)

    def test_edwards_fallback_flagged(self, monkeypatch):
        import otsuki.pipeline as pipeline
        from otsuki.errors import EdwardsInapplicableError

        def refuse(l, traj, **kwargs):
            raise EdwardsInapplicableError("forced")

        monkeypatch.setattr(pipeline, "boundary_form", refuse)
        report = compute_index(2, 3, method="both", n=512, n_traj=1024)
        assert report.flags["edwards_applicable"] == {"1": False, "2": False}
        assert report.ind == 31 and report.nul == 9
        by_l = {r.l: r for r in report.per_mode}
        assert by_l[1].method == "direct"

    def test_edwards_method_raises_when_inapplicable(self, monkeypatch):
        import otsuki.pipeline as pipeline
        from otsuki.errors import EdwardsInapplicableError

        def refuse(l, traj, **kwargs):
            raise EdwardsInapplicableError("forced")

        monkeypatch.setattr(pipeline, "boundary_form", refuse)
        with pytest.raises(EdwardsInapplicableError):
            compute_index(2, 3, method="edwards", n=512, n_traj=1024)


class TestCache:
    def test_round_trip(self, report23, tmp_path):
        path = cache_store(report23, cache_dir=str(tmp_path))
        assert os.path.basename(path) == cache_key(2, 3, 512) + ".json"
        doc = cache_load(2, 3, 512, cache_dir=str(tmp_path))
        assert doc == json.loads(jsonio.dumps(report23.to_json_dict()))
        assert jsonio.dumps(doc) == jsonio.dumps(report23.to_json_dict())

    def test_version_bump_misses(self, report23, tmp_path):
        cache_store(report23, cache_dir=str(tmp_path))
        assert cache_load(2, 3, 512, cache_dir=str(tmp_path), version="2") is None

    def test_wrong_mesh_misses(self, report23, tmp_path):
        cache_store(report23, cache_dir=str(tmp_path))
        assert cache_load(2, 3, 1024, cache_dir=str(tmp_path)) is None

    def test_corrupt_entry_warns_and_misses(self, report23, tmp_path):
        path = cache_store(report23, cache_dir=str(tmp_path))
        with open(path, "w") as fh:
            fh.write("{ not json")
        with pytest.warns(UserWarning):
            assert cache_load(2, 3, 512, cache_dir=str(tmp_path)) is None

    def test_directory_created_on_demand(self, report23, tmp_path):
        target = tmp_path / "fresh" / "cache"
        cache_store(report23, cache_dir=str(target))
        assert target.is_dir()

    def test_env_var_default(self, report23, tmp_path, monkeypatch):
        monkeypatch.setenv("OTSUKI_CACHE", str(tmp_path / "envcache"))
        cache_store(report23)
        assert cache_load(2, 3, 512) is not None


class TestJsonFormat:
    def test_seventeen_digit_floats(self):
        text = jsonio.dumps({"x": 0.1, "y": 2.0, "z": [1, True, None]})
        assert '"x": 0.10000000000000001' in text
        assert '"y": 2.0' in text
        assert '"z": [1, true, null]' in text

    def test_round_trips_through_json(self):
        vals = [0.1, 1e-17, 13.957728399277759, -0.6585659592776205]
        doc = json.loads(jsonio.dumps({"v": vals}))
        assert doc["v"] == vals


class TestVerifyBattery:
    def test_family23_all_pass(self):
        rows = verify_family(2, 3, n=512)
        assert all(r["ok"] for r in rows), [r for r in rows if not r["ok"]]
        names = {r["check"] for r in rows}
        assert "l=0 counts" in names and "route agreement l=1" in names


class TestCli:
    def test_geodesic_json(self, capsys):
        assert run_cli(["geodesic", "--p", "2", "--q", "3"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["p"] == 2 and doc["q"] == 3
        assert doc["Xi"] == pytest.approx(2 * np.pi * 2 / 3 / 2, rel=1e-10)

    def test_geodesic_b_override(self, capsys):
        assert run_cli(["geodesic", "--b", "-0.3"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["b"] == -0.3 and "t0" not in doc

    def test_inadmissible_ratio_exits_1(self, capsys):
        assert run_cli(["index", "--p", "1", "--q", "2"]) == 1
        assert "1/2" in capsys.readouterr().err

    def test_unknown_flag_exits_1(self, capsys):
        assert run_cli(["geodesic", "--frobnicate"]) == 1

    def test_spectrum_subcommand(self, capsys):
        code = run_cli(["spectrum", "--p", "2", "--q", "3", "--l", "0",
                        "--bc", "antiperiodic", "--channel", "2",
                        "--n", "512", "--cutoff", "0.5"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc[0]["bc"] == "antiperiodic"
        assert doc[0]["neg"] == 1 and doc[0]["zero"] == 1

    def test_twisted_spectrum_needs_omega(self, capsys):
        code = run_cli(["spectrum", "--p", "2", "--q", "3", "--l", "1",
                        "--bc", "twisted", "--n", "512"])
        assert code == 1

    def test_edwards_subcommand(self, capsys, tmp_path):
        out = tmp_path / "edwards.json"
        code = run_cli(["edwards", "--p", "2", "--q", "3", "--l", "2",
                        "--n", "512", "--json-out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["l"] == 2
        assert doc["zero_total"] == 1
        assert len(doc["a"]) == 4

    def test_index_uses_cache(self, capsys, tmp_path):
        args = ["index", "--p", "2", "--q", "3", "--method", "direct",
                "--n", "512", "--cache-dir", str(tmp_path)]
        assert run_cli(args) == 0
        first = json.loads(capsys.readouterr().out)
        assert first["ind"] == 31 and first["nul"] == 9
        assert run_cli(args) == 0
        second = json.loads(capsys.readouterr().out)
        assert second["timestamp"] == first["timestamp"]   # served from cache

    def test_sweep_jsonl(self, capsys, tmp_path):
        listing = tmp_path / "families.txt"
        listing.write_text("# one family\n2/3\n")
        code = run_cli(["sweep", "--input", str(listing), "--method", "direct",
                        "--n", "512"])
        assert code == 0
        lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.strip()]
        assert len(lines) == 1
        doc = json.loads(lines[0])
        assert (doc["p"], doc["q"], doc["ind"]) == (2, 3, 31)
