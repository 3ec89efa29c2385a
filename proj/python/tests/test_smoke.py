import json
import math

import numpy as np
import pytest

import odonav


def test_config_round_trip():
    cfg = json.loads(odonav.default_config())
    assert cfg["fusion"]["fir_order"] == 64
    assert json.loads(odonav.normalize_config("{}")) == cfg
    with pytest.raises(Exception):
        odonav.normalize_config('{"fusion": {"nope": 1}}')


def test_local_round_trip():
    lat0, lon0, h0 = math.radians(30.0), math.radians(114.0), 20.0
    lat, lon, h = odonav.local_to_geodetic(np.array([100.0, -50.0, 2.0]), lat0, lon0, h0)
    ned = odonav.geodetic_to_local(lat, lon, h, lat0, lon0, h0)
    assert np.allclose(ned, [100.0, -50.0, 2.0], atol=1e-6)


def test_rotation_is_orthonormal():
    c = odonav.euler_to_rotation(0.1, -0.2, 2.0)
    assert c.shape == (3, 3)
    assert np.allclose(c.T @ c, np.eye(3), atol=1e-14)


def test_fir():
    taps = np.array(odonav.fir_taps())
    assert len(taps) == 65
    assert abs(taps.sum() - 1.0) < 1e-9
    assert np.array_equal(taps, taps[::-1])
    y = odonav.fir_apply([2.0] * 300)
    assert np.allclose(y, 2.0, atol=1e-12)


def test_simulate_and_fuse(tmp_path):
    cfg = json.dumps({"simulation": {"duration": 150}})
    d = str(tmp_path / "s")
    odonav.simulate(d, seed=2, config=cfg)
    truth = odonav.truth(d)
    out = odonav.fuse(d, mode="wheel", config=cfg, outage=(60.0, 30.0, 180.0))
    assert out["pos"].shape[1] == 3
    assert len(out["outage_max_horizontal"]) == 1
    assert 0.0 <= out["outage_rms"] < 20.0
    # fused epochs are a suffix of the truth epochs
    assert np.allclose(truth["t"][-len(out["t"]):], out["t"])
    with pytest.raises(Exception):
        odonav.fuse(d, mode="pseudo", config=cfg)
