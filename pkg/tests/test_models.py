import numpy as np
import pytest

from goformer.models import (
    EfficientFormerConfig,
    ResidualConfig,
    build_network,
    forward,
    load_network,
    parameter_breakdown,
    parameter_count,
    parse_descriptor,
    predict,
)
from goformer.tensor import Tensor

# frozen after checking against the closed forms below
FROZEN_COUNTS = {
    "res:10x128": 3_023_618,
    "res:20x128": 5_977_858,
    "res:20x256": 23_751_682,
    "eff:l1": 702_540,
    "eff:l3": 1_328_068,
    "eff:l7": 3_772_406,
}


def residual_formula(blocks, planes):
    stem = 31 * planes * 9 + 2 * planes
    block = 2 * (planes * planes * 9 + 2 * planes)
    heads = (planes + 1) + (planes * 256 + 256) + 257
    return stem + blocks * block + heads


def efficient_formula(widths, depths, mb3d, heads):
    (w0, w1), (d0, d1) = widths, depths
    half = w0 // 2

    def meta4d(c):
        return 8 * c * c + 15 * c

    def meta3d(c):
        return 12 * c * c + 13 * c + heads * 361 * 361

    stem = 31 * half * 9 + 2 * half + half * w0 * 9 + 2 * w0
    body = d0 * meta4d(w0) + (w0 * w1 + w1) + (d1 - mb3d) * meta4d(w1) + mb3d * meta3d(w1)
    return stem + body + (w1 + 1) + (w1 * 256 + 256) + 257


def planes(batch, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.random((batch, 31, 19, 19)) < 0.3).astype(np.float32)


def test_parse_residual():
    assert parse_descriptor("res:10x128") == ResidualConfig(10, 128)
    assert parse_descriptor("res:10x128").display_name == "Residual(10,128)"


def test_parse_presets_and_options():
    cfg = parse_descriptor("eff:l7")
    assert cfg == EfficientFormerConfig((96, 192), (6, 8), 2, 2)
    assert parse_descriptor("eff:l1:mb3d=0").mb3d_count == 0
    assert parse_descriptor("eff:l3:heads=4").heads == 4
    full = parse_descriptor("eff:[8, 16]x[1,2]:mb3d=1:heads=2")
    assert full == EfficientFormerConfig((8, 16), (1, 2), 1, 2)


@pytest.mark.parametrize("text", ["res:0x8", "res:2", "eff:l2", "eff:[7,16]x[1,1]", "eff:l1:foo=1", "eff:[8,10]x[1,1]:heads=3", "cnn:1"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        parse_descriptor(text)


@pytest.mark.parametrize("text", ["res:3x16", "eff:l1", "eff:l9", "eff:[8,16]x[1,1]:mb3d=1:heads=2", "eff:l1:mb3d=2"])
def test_descriptor_round_trip(text):
    cfg = parse_descriptor(text)
    assert parse_descriptor(cfg.descriptor) == cfg


@pytest.mark.parametrize("name", FROZEN_COUNTS)
def test_parameter_counts_match_closed_form(name):
    cfg = parse_descriptor(name)
    if isinstance(cfg, ResidualConfig):
        expected = residual_formula(cfg.blocks, cfg.planes)
    else:
        expected = efficient_formula(cfg.widths, cfg.depths, cfg.mb3d_count, cfg.heads)
    net = build_network(cfg)
    assert parameter_count(net) == expected == FROZEN_COUNTS[name]
    assert sum(n for _, n in parameter_breakdown(net)) == expected


def test_breakdown_follows_construction_order():
    rows = [name for name, _ in parameter_breakdown(build_network("res:2x8"))]
    assert rows == ["stem", "stem_bn", "blocks.0", "blocks.1", "policy", "value"]


@pytest.mark.parametrize("arch", ["res:2x8", "eff:[8,16]x[1,2]:mb3d=1:heads=2", "eff:[8,16]x[1,1]:mb3d=0"])
def test_forward_shapes_and_trace(arch):
    net = build_network(arch)
    seen = []
    out = forward(net, Tensor(planes(3)), "eval", trace=lambda name, shape: seen.append((name, shape)))
    assert out.policy_logits.shape == (3, 361)
    assert out.value.shape == (3, 1)
    assert np.all((out.value.data > 0) & (out.value.data < 1))
    body = [s for name, s in seen if name not in ("policy", "value")]
    assert body and all(s[2:] == (19, 19) if len(s) == 4 else s[1] == 361 for s in body)


def test_shape_check_raises_on_lost_extent():
    net = build_network("res:1x4")
    with pytest.raises(AssertionError):
        net._check("probe", Tensor(np.zeros((1, 4, 18, 19))), None)
    with pytest.raises(AssertionError):
        net._check("probe", Tensor(np.zeros((1, 360, 4))), None)


def test_forward_rejects_bad_input():
    net = build_network("res:1x4")
    with pytest.raises(ValueError):
        forward(net, np.zeros((1, 30, 19, 19), np.float32))
    with pytest.raises(ValueError):
        forward(net, np.zeros((1, 31, 9, 9), np.float32))
    with pytest.raises(ValueError):
        forward(net, planes(1), mode="infer")


def test_predict_chunks_match_full_pass():
    net = build_network("eff:[8,16]x[1,1]:mb3d=1:heads=2", seed=3)
    x = planes(11, seed=1)
    logits, values = predict(net, x)
    out = forward(net, Tensor(x), "eval")
    np.testing.assert_allclose(logits, out.policy_logits.data, rtol=1e-4, atol=1e-5)
    np.testing.assert_allclose(values, out.value.data[:, 0], rtol=1e-4, atol=1e-6)


def test_train_mode_updates_running_stats_eval_does_not():
    net = build_network("res:1x4")
    before = {k: v.copy() for k, v in net.state_dict().items()}
    forward(net, planes(2), "eval")
    assert all(np.array_equal(before[k], v) for k, v in net.state_dict().items())
    forward(net, planes(2), "train")
    assert not np.array_equal(before["stem_bn.running_mean"], net.state_dict()["stem_bn.running_mean"])


def test_seeded_construction_is_deterministic():
    a = build_network("res:1x4", seed=7).state_dict()
    b = build_network("res:1x4", seed=7).state_dict()
    c = build_network("res:1x4", seed=8).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert not np.array_equal(a["stem.weight"], c["stem.weight"])


@pytest.mark.parametrize("arch", ["res:2x8", "eff:[8,16]x[1,1]:mb3d=1:heads=2"])
def test_checkpoint_round_trip_is_bit_exact(tmp_path, arch):
    net = build_network(arch, seed=2)
    forward(net, planes(4), "train")  # move the BN buffers off their defaults
    net.save(tmp_path / "net.gowt")
    back = load_network(tmp_path / "net.gowt")
    assert back.descriptor == net.descriptor
    a, b = net.state_dict(), back.state_dict()
    assert list(a) == list(b)
    assert all(a[k].tobytes() == b[k].tobytes() for k in a)
    x = planes(2, seed=9)
    for u, v in zip(predict(net, x), predict(back, x)):
        assert u.tobytes() == v.tobytes()


def test_load_state_dict_rejects_mismatch():
    net = build_network("res:1x4")
    sd = net.state_dict()
    sd.pop("stem.weight")
    with pytest.raises(ValueError):
        net.load_state_dict(sd)
    other = build_network("res:1x8").state_dict()
    with pytest.raises(ValueError):
        net.load_state_dict(other)
