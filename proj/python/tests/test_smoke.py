# Copyright 2026 The gpcd Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import pytest

import gpcd

TINY = {
    "data.train_waypoints": "8",
    "data.test_waypoints": "3",
    "data.generalization_waypoints": "3",
    "data.calibration_folds": "2",
    "data.calibration_waypoints": "3",
    "data.validation_duration": "20",
    "train.subset_size": "300",
    "optimizer.iterations": "10",
    "optimizer.batch_size": "128",
}


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    exp = gpcd.Experiment(overrides={**TINY, "out": str(out), "seed": "3"})
    exp.simulate()
    exp.train()
    return exp, out


def test_unknown_key_is_rejected():
    with pytest.raises(gpcd.FormatError):
        gpcd.Experiment(overrides={"no.such.key": "1"})


def test_train_before_simulate_fails(tmp_path):
    exp = gpcd.Experiment(overrides={**TINY, "out": str(tmp_path)})
    with pytest.raises(gpcd.CoverageError):
        exp.train()


def test_trajectory_arrays(run):
    exp, out = run
    traj = gpcd.read_trajectory(out / "data", "collision")
    a = traj.arrays()
    assert a["q"].shape == (len(traj), 2)
    assert np.all(np.diff(a["t"]) > 0)
    assert len(traj.episodes) == 4
    assert {e.joint for e in traj.episodes} == {1}
    np.testing.assert_allclose(a["e_q"], a["q_ref"] - a["q"], atol=1e-12)


def test_estimator_predicts_held_out_current(run):
    exp, out = run
    test = gpcd.read_trajectory(out / "data", "d1_test")
    est = gpcd.Estimator.load(out / "models" / "SP_P_joint2.model")
    assert est.variant == "SP_P" and est.joint == 2
    mean, var = est.predict(test, with_variance=True)
    y = test.arrays()["i_meas"][:, 1]
    assert mean.shape == y.shape and np.all(var >= 0)
    assert gpcd.nmse(y, mean) < 0.1


def test_eval_detect_report(run):
    exp, out = run
    rows = exp.eval()
    assert {r["estimator"] for r in rows} == {"P_f", "SP_S", "SP_P"}
    events = exp.detect("collision")
    assert all(e["start"] <= e["end"] for e in events)
    exp.detect("validation")
    rep = exp.report()
    assert rep["collision_events"] == len(events)
    assert json.loads((out / "report.json").read_text())["format"] == "gpcd-report"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest


def test_model_version_mismatch(run, tmp_path):
    exp, out = run
    src = out / "models" / "P_f_joint1.model"
    raw = src.read_bytes()
    key = b"\x67version\x01"
    assert key in raw
    bad = tmp_path / "bad.model"
    bad.write_bytes(raw.replace(key, b"\x67version\x09"))
    with pytest.raises(gpcd.VersionMismatchError):
        gpcd.Estimator.load(bad)


def test_helpers(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(b"abc")
    assert gpcd.sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert gpcd.detect_exit_code(500) == 125
    assert gpcd.MODEL_FORMAT_VERSION == 1
