from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fptjump.config import parse_config, parse_jump
from fptjump.errors import ConfigSemanticError, ConfigSyntaxError

MINIMAL = """\
[model]
m = 0
lambda = 1
jump = exp rate=1
x = 1

[run]
seed = 42
"""


def with_model(**kw):
    base = {"m": "0", "lambda": "1", "jump": "exp rate=1", "x": "1"}
    base.update(kw)
    return "[model]\n" + "".join(f"{k} = {v}\n" for k, v in base.items())


def test_minimal():
    cfg = parse_config(MINIMAL)
    assert cfg.seed == 42
    assert cfg.model.lam == 1.0 and cfg.model.x == 1.0
    assert cfg.model.law.mean == pytest.approx(1.0)


def test_comments_and_lists():
    cfg = parse_config(MINIMAL + "# comment\nt = 0.5, 1, 2   # trailing\nn = 10\n")
    assert cfg.t == [0.5, 1.0, 2.0] and cfg.n == 10


@pytest.mark.parametrize(
    "text,mean",
    [
        ("exp rate=2", 0.5),
        ("gauss mu=0.3 sigma=1", 0.3),
        ("kou p=0.6 eta1=1 eta2=2", 0.4),
        ("mix 0.5*atom@1 + 0.5*exp rate=1", 1.0),
        ("mix 0.25*atom@1 + 0.25*atom@-2 + 0.5*gauss mu=0 sigma=1", -0.25),
    ],
)
def test_jump_grammar(text, mean):
    assert parse_jump(text).mean == pytest.approx(mean)


def test_mixture_weights_semantic():
    with pytest.raises(ConfigSemanticError) as exc:
        parse_config(with_model(jump="mix 0.6*atom@1 + 0.5*exp rate=1"))
    assert exc.value.field == "jump"


def test_negative_barrier_names_field():
    with pytest.raises(ConfigSemanticError) as exc:
        parse_config(with_model(x="-1"))
    assert exc.value.field == "x"


def test_unknown_key_reports_line():
    with pytest.raises(ConfigSyntaxError) as exc:
        parse_config(MINIMAL + "colour = red\n")
    assert exc.value.lineno == 9


@pytest.mark.parametrize(
    "text",
    [
        "[model]\nm 0\n",
        "m = 0\n",
        "[other]\n",
        with_model(jump="beta a=1"),
        with_model(jump="exp rate=1 shape=2"),
        with_model(m="zero"),
        MINIMAL + "seed = 1.5\n",
        MINIMAL.replace("seed = 42", "seed = 42\nseed = 43"),
    ],
)
def test_syntax_errors(text):
    with pytest.raises(ConfigSyntaxError):
        parse_config(text)


@pytest.mark.parametrize(
    "extra,field",
    [("t = 1, 0.5", "t"), ("n = 0", "n"), ("shards = 0", "shards"), ("phi = cosine", "phi"), ("h = 0", "h")],
)
def test_run_semantic_errors(extra, field):
    with pytest.raises(ConfigSemanticError) as exc:
        parse_config(MINIMAL + extra + "\n")
    assert exc.value.field == field


def test_missing_model_key():
    with pytest.raises(ConfigSemanticError):
        parse_config("[model]\nm = 0\n")


@given(st.integers(0, 2**64 - 1))
def test_seed_round_trip(seed):
    assert parse_config(MINIMAL.replace("42", str(seed))).seed == seed


@given(st.floats(0.01, 100, allow_nan=False))
def test_rate_round_trip(rate):
    assert parse_jump(f"exp rate={rate!r}").mean == pytest.approx(1 / rate)
