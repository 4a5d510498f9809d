import csv
import dataclasses
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from advcomm import harness
from advcomm.cli import main
from advcomm.config import ConfigError, ExperimentConfig, parse_config
from advcomm.core_math import RngStream
from advcomm.ldpc import build_regular_ldpc, write_alist

TINY = """
[experiment]
system = both
attack = {attack}
snr_db = 8, 12
frames = 4
cache_dir = {cache}
out = {out}
[net]
epochs = 5
train_samples = 512
lipschitz_samples = 10
[gms]
timesteps = 200
[cw]
max_iters = 30
rounds = 2
[vs]
max_steps = 400
[ablation]
settings = qpsk:1/2:132@6, qpsk:5/6:108@8
"""


def tiny(tmp_path, attack="vs, pga", name="r.csv", **extra):
    text = TINY.format(attack=attack, cache=tmp_path / "cache", out=tmp_path / name)
    cfg = parse_config(text)
    return cfg.with_overrides(**extra) if extra else cfg


def test_defaults_round_trip_through_ini():
    cfg = ExperimentConfig()
    assert parse_config(cfg.to_ini()) == cfg


@pytest.mark.parametrize("text", ["[nope]\na = 1", "[experiment]\nframes = x", "[experiment]\nfoo = 1",
                                  "[experiment]\nattack = laser", "[experiment]\nframes = 0",
                                  "[ablation]\nsettings = qpsk-1/2"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nsystem = quantum\n")
    assert main(["sweep", "--config", str(bad)]) == 2
    assert main(["sweep", "--config", str(tmp_path / "missing.ini")]) == 2
    broken = tmp_path / "broken.ini"
    broken.write_text(f"[experiment]\nframes = 1\nout = {tmp_path / 'x.csv'}\n[code]\nn = 48\nrate = 1/2\n")
    assert main(["sweep", "--config", str(broken)]) == 1
    assert main(["sweep", "--print-config"]) == 0
    assert "[experiment]" in capsys.readouterr().out


def test_no_attack_baseline(tmp_path):
    out = harness.run_sweep(tiny(tmp_path, attack="none"))
    assert out.rows and all(r.rho_star == 0 for r in out.rows)
    assert {r.system for r in out.rows} == {"classical", "semantic"}
    assert all(r.clean_distortion == r.final_distortion for r in out.rows)


def test_sweep_csv_trace_and_summary(tmp_path):
    cfg = tiny(tmp_path, attack="vs, gms, pga, cw")
    trace = tmp_path / "t.jsonl"
    res = harness.run_sweep(cfg, tracing=True)
    harness.write_outputs(cfg, "sweep", res, trace)
    with open(cfg.experiment.out) as fh:
        header = next(csv.reader(fh))
    assert tuple(header) == harness.RESULT_FIELDS
    rows = harness.read_results(cfg.experiment.out)
    assert len(rows) == 2 * 4 * 4
    assert all(r.seed == 0 and (r.rho_star >= 0) for r in rows)
    assert all(r.bound_upper is not None for r in rows if r.system == "classical")
    assert all(r.bound_lower is not None for r in rows if r.system == "semantic")

    # rho* is recomputable from the per-frame perturbations in the trace
    finals = {}
    for line in trace.read_text().splitlines():
        rec = json.loads(line)
        if rec.get("event") == "result":
            finals[(rec["snr_db"], rec["system"], rec["attack"], rec["frame_id"])] = rec
    for r in rows[:10] + rows[-10:]:
        rec = finals[(r.snr_db, r.system, r.attack, r.frame_id)]
        if rec["perturbation"] is None:
            assert math.isinf(r.rho_star) and not r.success
        else:
            assert float(np.sum(np.square(rec["perturbation"]))) == pytest.approx(r.rho_star, rel=1e-9, abs=1e-12)

    summ = list(csv.DictReader(open(harness.sidecar(cfg.experiment.out, ".summary.csv"))))
    assert len(summ) == 2 * 4 and all(s["ratio_sem_sscc"] for s in summ)
    meta = json.loads(harness.sidecar(cfg.experiment.out, ".meta.json").read_text())
    assert meta["schema_version"] == harness.SCHEMA_VERSION and meta["rows"] == len(rows)


def test_models_are_cached(tmp_path):
    cfg = tiny(tmp_path, attack="pga", system="semantic")
    harness.run_sweep(cfg)
    cached = sorted(p.name for p in (tmp_path / "cache").iterdir())
    assert len(cached) == 2 and all(n.startswith("deepjscc-") for n in cached)
    again = harness.run_sweep(cfg)
    assert again.rows == harness.run_sweep(cfg.with_overrides(cache_dir="")).rows


def test_ablation_is_paired(tmp_path):
    res = harness.run_ablation(tiny(tmp_path))
    per_arm = {}
    for r in res.rows:
        per_arm.setdefault((r.system, r.attack), []).append(r.frame_id)
    assert all(ids == list(range(4)) for ids in per_arm.values())
    assert {a for _, a in per_arm} == {"vs(e=9)", "vs(e=0)"}
    for row in res.rows:
        twin = next(o for o in res.rows if o.system == row.system and o.frame_id == row.frame_id)
        assert row.clean_distortion == twin.clean_distortion


def test_ablation_with_zero_weight_gives_identical_arms(tmp_path):
    cfg = tiny(tmp_path)
    cfg = dataclasses.replace(cfg, vs=dataclasses.replace(cfg.vs, extra_weight_e=0.0))
    res = harness.run_ablation(cfg)
    arms = {}
    for r in res.rows:
        arms.setdefault(r.attack, []).append((r.rho_star, r.steps))
    assert len(arms) == 1 or len(set(map(tuple, arms.values()))) == 1


def test_bound_check_reports_regimes(tmp_path):
    res = harness.run_bound_check(tiny(tmp_path))
    assert res.extra["violations"] == 0
    assert {s[3] for s in res.summary} == {"II"}
    with pytest.raises(ConfigError):
        cfg = tiny(tmp_path)
        harness.run_bound_check(dataclasses.replace(cfg, source=dataclasses.replace(cfg.source, kind="patch", M=9)))


def test_jobs_do_not_change_output(tmp_path):
    cfg = tiny(tmp_path, attack="vs, pga")
    assert harness.run_sweep(cfg, jobs=2).rows == harness.run_sweep(cfg).rows


def test_analyze_code_cli(tmp_path, capsys):
    h = build_regular_ldpc(96, Fraction(1, 2), 3, RngStream(0))
    write_alist(h, tmp_path / "c.alist")
    assert main(["analyze-code", "--alist", str(tmp_path / "c.alist"), "--out", str(tmp_path / "rep.txt")]) == 0
    lines = (tmp_path / "rep.txt").read_text().splitlines()
    assert lines[0].startswith("# n=96") and len(lines) == 98
    assert main(["analyze-code", "--alist", str(tmp_path / "none.alist")]) == 2
