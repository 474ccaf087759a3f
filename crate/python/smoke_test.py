"""Smoke test for the satcm Python extension.

Build and install first:

    pip install maturin
    pip install --no-build-isolation ./crates/python

then run ``python python/smoke_test.py``.
"""

import json
import math
import tempfile
from pathlib import Path

import satcm


def check_stabbing():
    value, regions = satcm.sat_stab([(0.0, 2.0, 0), (1.0, 3.0, 1), (1.5, 4.0, 0)])
    assert value == 3.0, value
    assert regions == [(1.5, 2.0)], regions
    c = 1.0 / 0.015 * 0.9 / 0.1
    top = satcm.sigma(7, 7, "likelihood", q=0.9, epsilon=0.015)
    assert abs(top - math.log1p(c)) < 1e-12


def check_relocalization():
    scene_map, queries = satcm.synth_scene(seed=3, n_query_lines=10, n_map_lines=60)
    q = queries[0]
    res = satcm.relocalize(q["query"], scene_map)
    assert res["certified"], res
    err = satcm.rotation_error(res["rotation"], q["rotation"])
    dt = math.dist(res["translation"], q["translation"])
    assert err < 1.0 and dt < 0.05, (err, dt)

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "map.json"
        scene_map.save(str(p))
        again = satcm.LineMap.load(str(p))
        assert len(again) == len(scene_map)
        assert json.loads(again.to_json()) == json.loads(scene_map.to_json())

    cfg = satcm.Config()
    cfg.saturation = "identity"
    assert "identity" in cfg.to_toml()
    alphas, phis, values = satcm.landscape(q["query"], scene_map, "likelihood", 10.0, cfg)
    assert len(values) == len(alphas) == 18 and len(values[0]) == len(phis) == 36
    assert max(max(r) for r in values) == 1.0


def check_rotation():
    # three exact associations seen through a 40 degree rotation about z
    c, s = math.cos(math.radians(40)), math.sin(math.radians(40))
    w = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    dirs = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 1.0, 1.0)]
    assoc = []
    for k, v in enumerate(dirs):
        wv = [sum(w[i][j] * v[j] for j in range(3)) for i in range(3)]
        other = (0.3, -0.7, 0.2) if k % 2 else (-0.1, 0.4, 0.9)
        n = [wv[1] * other[2] - wv[2] * other[1], wv[2] * other[0] - wv[0] * other[2], wv[0] * other[1] - wv[1] * other[0]]
        assoc.append((k, n, v))
    sol = satcm.solve_rotation(assoc, "identity", epsilon=0.01)
    assert sol["certified"] and sol["value"] == 4.0, sol


if __name__ == "__main__":
    check_stabbing()
    check_rotation()
    check_relocalization()
    print("satcm python smoke test passed")
