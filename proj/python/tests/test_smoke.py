import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import nnmon

ROOT = Path(os.environ.get("NNMON_SOURCE_DIR", Path(__file__).resolve().parents[2]))
MODEL = str(ROOT / "tests" / "fixtures" / "mnist_mlp.json")
TINY = str(ROOT / "tests" / "fixtures" / "tiny_weights.json")
MNIST = (str(ROOT / "data/mnist/t10k-images-idx3-ubyte.gz"), str(ROOT / "data/mnist/t10k-labels-idx1-ubyte.gz"))


def test_tiny_network_forward():
    net = nnmon.load_weights(TINY)
    assert net.depth == 2
    y = net.forward(np.array([1.0, 2.0]))
    np.testing.assert_allclose(y, [-0.15, 1.775], atol=1e-12)
    np.testing.assert_allclose(net.features(np.array([1.0, 2.0]), 1, "pre"), [-1.0, 3.5, 0.25])


def test_scores():
    np.testing.assert_allclose(nnmon.softmax(np.array([math.log(2.0), 0.0])), [2 / 3, 1 / 3])
    assert nnmon.max_softmax_score(np.zeros(10)) == pytest.approx(0.9)
    assert nnmon.shannon_entropy(np.full(10, 0.1)) == pytest.approx(math.log(10))
    assert nnmon.generalized_entropy(np.array([0.9, 0.1]), 0.5) == pytest.approx(0.6)


def test_monitors_on_mnist(tmp_path):
    net = nnmon.load_weights(MODEL)
    x, labels = nnmon.load_idx(*MNIST)
    assert x.shape == (10000, 784)
    build = x[:300]
    box = nnmon.build_box(net, build, 2, delta=0.0)
    assert all(box.evaluate(net, row)["verdict"] == "in-dist" for row in build)
    bdd = nnmon.build_pattern(net, build, 2, kappa=1, backend="bdd")
    bits = nnmon.build_pattern(net, build, 2, kappa=1, backend="bitset")
    for row in x[300:400]:
        assert bdd.evaluate(net, row) == bits.evaluate(net, row)
    path = tmp_path / "box.json"
    box.save(str(path))
    again = nnmon.load_monitor(str(path))
    assert again.kind == "box" and again.serialize() == box.serialize()
    assert json.loads(box.serialize())["format"] == "nnmon-monitor"


def test_bdd_and_metrics():
    m = nnmon.BddManager(3)
    s = m.word("101")
    assert m.satcount(m.hamming_expand(s, 1)) == 4
    assert m.contains(m.hamming_expand(s, 1), "001")
    assert nnmon.auroc([0.1, 0.4, 0.35, 0.8, 0.2, 0.5], [0.8, 0.9, 0.3, 0.5, 0.95]) == pytest.approx(0.8)


def test_verification():
    net = nnmon.load_weights(TINY)
    lo, hi = nnmon.propagate_intervals(net, 1, np.zeros(3), np.ones(3))
    assert np.all(lo <= hi)
    assert nnmon.check_safety(net, 1, np.zeros(3), np.ones(3), [(np.array([1.0, 0.0]), 10.0)]) == "safe-verified"


def test_errors_and_cli():
    with pytest.raises(nnmon.DataError):
        nnmon.load_weights("/nonexistent/weights.json")
    with pytest.raises(nnmon.ConfigError):
        nnmon.softmax(np.array([1.0, 2.0]), -1.0)
    code, out, _ = nnmon.run_cli(["score", "--model", MODEL, "--images", MNIST[0], "--labels", MNIST[1],
                                  "--range", "0:5"])
    assert code == 0
    assert out.startswith("index,label,predicted,confidence,score,verdict")
    assert nnmon.run_cli(["score", "--bogus"])[0] == 2
