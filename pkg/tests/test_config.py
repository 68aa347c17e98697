import pytest
from hypothesis import given, strategies as st

from sfd import config as cfgmod
from sfd.errors import ConfigError

_values = {
    int: st.integers(-10**9, 10**9),
    float: st.floats(allow_nan=False, allow_infinity=False),
    bool: st.booleans(),
    str: st.text(st.characters(min_codepoint=33, max_codepoint=126, blacklist_characters="#"), min_size=1, max_size=10),
}


@st.composite
def configs(draw):
    keys = draw(st.lists(st.sampled_from(sorted(cfgmod.SCHEMA)), unique=True, max_size=8))
    return cfgmod.Config({k: draw(_values[cfgmod.SCHEMA[k][0]]) for k in keys})


@given(configs())
def test_serialize_parse_round_trip(c):
    assert cfgmod.parse(cfgmod.serialize(c)) == c


def test_documented_defaults_parse_to_defaults():
    text = cfgmod.documented_defaults()
    assert cfgmod.parse(text) == cfgmod.Config()
    assert text.count("# ") == len(cfgmod.SCHEMA)
    cfgmod.Config().check()


def test_defaults_match_documented_values():
    c = cfgmod.Config()
    t = c.train()
    assert (t.delta_t, t.beta, t.lambda_repa, t.batch_size, t.iterations) == (0.3, 2.0, 1.0, 128, 5000)
    assert (c.semvae().c_in, c.semvae().c_s) == (64, 16)
    assert c.sampler().delta_t == 0.3
    assert c.deltas() == [0.0, 0.3, 1.0] and c.seeds() == [0, 1, 2]


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "seed = 1\nseed = 2",
    "seed = 1.5",
    "seed = x",
    "train.conditional = maybe",
    "just a line",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        cfgmod.parse(text)


@pytest.mark.parametrize("key,val", [("train.delta_t", 1.5), ("sample.method", "rk4"), ("semvae.compressor", "ica"),
                                     ("eval.seeds", "a,b"), ("train.batch_size", 0), ("data.n_test", -1)])
def test_invalid_values_fail_check(key, val):
    with pytest.raises(ConfigError):
        cfgmod.Config({key: val}).check()


def test_comments_and_blank_lines():
    c = cfgmod.parse("# header\n\nseed = 7   # trailing\n")
    assert c["seed"] == 7


def test_override_precedence(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("seed = 3\ntrain.iterations = 10\n")
    c = cfgmod.load(p).with_overrides({"seed": 9, "train.iterations": None})
    assert c["seed"] == 9 and c["train.iterations"] == 10
    assert cfgmod.load(None) == cfgmod.Config()
    with pytest.raises(ConfigError):
        cfgmod.load(tmp_path / "missing.cfg")


def test_sampler_offset_follows_training():
    c = cfgmod.Config({"train.delta_t": 0.5})
    assert c.sampler().delta_t == 0.5
    assert c.sampler(trained_delta_t=0.2).delta_t == 0.2
    assert cfgmod.Config({"sample.delta_t": 0.1}).sampler(0.2).delta_t == 0.1
