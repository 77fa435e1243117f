import json
import subprocess
import sys

import numpy as np
import pytest

from cachemec.harness import (
    CSV_COLUMNS,
    BnbSizeCapError,
    SweepSpec,
    rows_to_csv,
    run_single,
    run_sweep,
)
from cachemec.scenario import GenConfig, gen_scenario, save_scenario
from cachemec.schemes import SchemeId

from conftest import profitable_gen


def small_spec(**kw):
    base = profitable_gen(seed=0, K=2, L=3, N_p=2, N=4)
    args = dict(
        base=base, var="dmax", values=[1e4, 3e4], seeds=[1, 2],
        schemes=[SchemeId.RELAXATION, SchemeId.NO_CACHING],
    )
    args.update(kw)
    return SweepSpec(**args)


class TestRunSweep:
    def test_fixed_column_set(self):
        rows = run_sweep(small_spec())
        assert set(rows[0]) == set(CSV_COLUMNS)
        csv_text = rows_to_csv(rows)
        assert csv_text.splitlines()[0] == ",".join(CSV_COLUMNS)

    def test_empty_value_list_gives_header_only(self):
        rows = run_sweep(small_spec(values=[]))
        assert rows == []
        assert rows_to_csv(rows) == ",".join(CSV_COLUMNS) + "\n"

    def test_no_caching_rows_constant_across_capacity(self):
        rows = run_sweep(small_spec(values=[1e4, 5e4], seeds=[7]))
        vals = {
            r["sweep_value"]: r["objective_J"]
            for r in rows
            if r["scheme"] == "no-caching" and r["seed"] == "7"
        }
        assert len(set(vals.values())) == 1

    def test_byte_identical_across_runs_and_workers(self):
        a = rows_to_csv(run_sweep(small_spec()))
        b = rows_to_csv(run_sweep(small_spec()))
        c = rows_to_csv(run_sweep(small_spec(workers=4)))
        assert a == b == c

    def test_mean_rows_are_arithmetic_means(self):
        rows = run_sweep(small_spec())
        for value in ("10000.0", "30000.0"):
            for scheme in ("relaxation", "no-caching"):
                cells = [
                    float(r["objective_J"]) for r in rows
                    if r["scheme"] == scheme and r["sweep_value"] == value
                    and r["seed"] not in ("mean",) and not r["error"]
                ]
                mean_row = [
                    r for r in rows
                    if r["scheme"] == scheme and r["sweep_value"] == value
                    and r["seed"] == "mean"
                ]
                assert len(mean_row) == 1
                assert float(mean_row[0]["objective_J"]) == pytest.approx(
                    np.mean(cells), rel=1e-12
                )

    def test_runtime_column_empty_unless_requested(self):
        rows = run_sweep(small_spec())
        assert all(r["runtime_s"] == "" for r in rows)
        rows = run_sweep(small_spec(measure_runtime=True, values=[1e4],
                                    seeds=[1]))
        cell_rows = [r for r in rows if r["seed"] == "1"]
        assert all(float(r["runtime_s"]) > 0 for r in cell_rows)

    def test_cell_errors_become_rows(self):
        # full-offloading with a zero-capacity cache is infeasible whenever
        # some WD sees a fresh task in the final slot
        base = profitable_gen(seed=0, K=4, L=6, N_p=2, N=5, dmax=0.0)
        spec = SweepSpec(base=base, var="dmax", values=[1e-3], seeds=[3],
                         schemes=[SchemeId.FULL_OFFLOADING])
        rows = run_sweep(spec)
        errors = [r for r in rows if r["error"]]
        assert errors, "expected at least one error row"
        assert errors[0]["objective_J"] == ""

    def test_bnb_cap_guard(self):
        with pytest.raises(BnbSizeCapError):
            run_sweep(small_spec(
                base=profitable_gen(seed=0, L=40),
                schemes=[SchemeId.BNB],
            ))
        # non-BnB schemes are fine at any L
        run_sweep(small_spec(
            base=profitable_gen(seed=0, K=2, L=17, N_p=2, N=4,),
            values=[1e4], seeds=[1], schemes=[SchemeId.POPULARITY],
        ))

    def test_sigma2_sweep(self):
        rows = run_sweep(small_spec(var="sigma2", values=[1e-8, 4e-8]))
        objs = {
            r["sweep_value"]: float(r["objective_J"])
            for r in rows if r["seed"] == "1" and r["scheme"] == "relaxation"
        }
        assert objs["1e-08"] < objs["4e-08"]  # more noise, more energy


class TestRunSingle:
    def test_summary_and_report(self):
        rep, text = run_single(profitable_gen(seed=1), SchemeId.RELAXATION)
        assert "objective" in text and "cache placement" in text
        assert rep.objective > 0

    def test_scenario_path_input(self, tmp_path):
        scen = gen_scenario(profitable_gen(seed=2))
        path = tmp_path / "s.json"
        save_scenario(scen, path)
        rep, _ = run_single(str(path), SchemeId.NO_CACHING)
        assert rep.placement.L1 == frozenset()

    def test_bnb_cap_refusal(self):
        with pytest.raises(BnbSizeCapError, match="refused"):
            run_single(GenConfig(seed=1, L=40, K=2, N_p=2, N=4),
                       SchemeId.BNB)

    def test_enumeration_checked_instance(self):
        from conftest import enumerate_optimum
        s = gen_scenario(profitable_gen(seed=5, L=4))
        best, _, _ = enumerate_optimum(s)
        rep, _ = run_single(s, SchemeId.BNB)
        assert rep.objective == pytest.approx(best, abs=1e-6)


class TestCli:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "cachemec", *args],
            capture_output=True, text=True,
        )

    def test_gen_validate_solve(self, tmp_path):
        path = tmp_path / "scen.json"
        r = self._run("gen", "--seed", "3", "--wds", "2", "--tasks", "3",
                      "--np-slots", "2", "--n-slots", "4",
                      "--dmax-kbits", "6", "-o", str(path))
        assert r.returncode == 0, r.stderr
        r = self._run("validate", str(path))
        assert r.returncode == 0 and "OK" in r.stdout
        r = self._run("solve", "--scenario", str(path), "--scheme", "bnb")
        assert r.returncode == 0, r.stderr
        assert "objective" in r.stdout

    def test_gen_requires_seed(self, tmp_path):
        r = self._run("gen", "-o", str(tmp_path / "x.json"))
        assert r.returncode != 0

    def test_validate_rejects_bad_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema": "scenario/v0"}))
        r = self._run("validate", str(path))
        assert r.returncode == 1
        assert "INVALID" in r.stdout

    def test_sweep_csv_and_config_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"K": 2, "L": 3, "N_p": 2, "N": 4,
                                   "dist_min": 30.0, "dist_max": 90.0}))
        out = tmp_path / "out.csv"
        r = self._run("sweep", "--seed", "5", "--config", str(cfg),
                      "--wds", "9",  # overridden by the config file
                      "--var", "dmax", "--values", "10,30",
                      "--num-seeds", "2", "--schemes", "no-caching",
                      "-o", str(out))
        assert r.returncode == 0, r.stderr
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        # 2 values x 2 seeds x 1 scheme + 2 mean rows
        assert len(lines) == 1 + 4 + 2
        assert all(row.split(",")[0] == "no-caching" for row in lines[1:])

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        r = self._run("sweep", "--seed", "5", "--config", str(cfg),
                      "--var", "dmax", "--values", "10")
        assert r.returncode != 0
        assert "bogus" in r.stderr or "bogus" in r.stdout
