"""Line-based run configuration.

::

    [model]
    m = 0
    lambda = 1
    jump = mix 0.5*atom@1 + 0.5*exp rate=1
    x = 1

    [run]
    seed = 42
    n = 100000
    t = 0.5, 1, 2

Blank lines and ``#`` comments are ignored.  Unknown sections or keys are
errors.  Syntax problems raise :class:`ConfigSyntaxError` (with the line
number), bad values raise :class:`ConfigSemanticError` (with the field name).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigSemanticError, ConfigSyntaxError
from .jump_law import Exponential, Gaussian, JumpLaw, Kou
from .path_sim import DEFAULT_DEPTH, ModelParams

MODEL_KEYS = ("m", "lambda", "jump", "x")
RUN_KEYS = {
    "seed": "int",
    "n": "int",
    "shards": "int",
    "workers": "int",
    "t": "list",
    "l": "list",
    "horizon": "list",
    "depth": "int",
    "step": "float",
    "h": "float",
    "out": "str",
    "phi": "str",
    "psi": "str",
    "quick": "bool",
}

# named bounded test functions usable as phi (of the overshoot) and psi (of the undershoot)
TEST_FUNCTIONS = {
    "one": lambda v: np.ones_like(np.asarray(v, dtype=float)),
    "expneg": lambda v: np.exp(-np.asarray(v, dtype=float)),
    "inv1p": lambda v: 1.0 / (1.0 + np.asarray(v, dtype=float)),
}


@dataclass
class RunConfig:
    model: ModelParams
    seed: int = 0
    n: int = 100_000
    shards: int = 1
    workers: int = 1
    t: list = field(default_factory=lambda: [1.0])
    l: list = field(default_factory=lambda: [0.1, 0.5, 1.0])
    horizon: list = field(default_factory=lambda: [10.0])
    depth: int = DEFAULT_DEPTH
    step: float = 2.0**-12
    h: float = 0.05
    out: str | None = None
    phi: str = "one"
    psi: str = "one"
    quick: bool = False
    jump_text: str = ""

    @property
    def phi_fn(self):
        return TEST_FUNCTIONS[self.phi]

    @property
    def psi_fn(self):
        return TEST_FUNCTIONS[self.psi]


_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_SECTION = re.compile(r"^\[([A-Za-z_]+)\]$")
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _params(text: str, names, lineno: int, what: str) -> dict:
    out = {}
    for tok in text.split():
        m = re.fullmatch(rf"([a-z0-9]+)=({_NUM})", tok)
        if not m:
            raise ConfigSyntaxError(lineno, f"bad parameter {tok!r} in {what}")
        key = m.group(1)
        if key not in names:
            raise ConfigSyntaxError(lineno, f"unknown parameter {key!r} for {what}")
        out[key] = float(m.group(2))
    missing = [k for k in names if k not in out]
    if missing:
        raise ConfigSyntaxError(lineno, f"{what} needs {', '.join(missing)}")
    return out


def _family(text: str, lineno: int):
    head, _, rest = text.strip().partition(" ")
    try:
        if head == "exp":
            return Exponential(_params(rest, ("rate",), lineno, "exp")["rate"])
        if head == "gauss":
            p = _params(rest, ("mu", "sigma"), lineno, "gauss")
            return Gaussian(p["mu"], p["sigma"])
        if head == "kou":
            p = _params(rest, ("p", "eta1", "eta2"), lineno, "kou")
            return Kou(p["p"], p["eta1"], p["eta2"])
    except ValueError as exc:
        if isinstance(exc, ConfigSyntaxError):
            raise
        raise ConfigSemanticError("jump", str(exc)) from exc
    raise ConfigSyntaxError(lineno, f"unknown jump family {head!r}")


def parse_jump(text: str, lineno: int = 0) -> JumpLaw:
    """Parse ``exp rate=r`` | ``gauss mu=a sigma=b`` | ``kou p= eta1= eta2=`` | ``mix w1*atom@y1 + w2*exp rate=r``."""
    text = text.strip()
    if not text.startswith("mix"):
        fam = _family(text, lineno)
        return JumpLaw(continuous=fam, weight=1.0, name=text)
    body = text[3:].strip()
    if not body:
        raise ConfigSyntaxError(lineno, "empty mixture")
    atoms, parts = [], []
    for term in body.split("+"):
        m = re.fullmatch(rf"\s*({_NUM})\s*\*\s*(.+?)\s*", term)
        if not m:
            raise ConfigSyntaxError(lineno, f"bad mixture term {term.strip()!r}")
        w = float(m.group(1))
        what = m.group(2)
        if not w > 0:
            raise ConfigSemanticError("jump", f"mixture weight {w!r} must be positive")
        am = re.fullmatch(rf"atom@({_NUM})", what)
        if am:
            atoms.append((float(am.group(1)), w))
        else:
            parts.append((w, _family(what, lineno)))
    total = sum(w for _, w in atoms) + sum(w for w, _ in parts)
    if abs(total - 1.0) > 1e-12:
        raise ConfigSemanticError("jump", f"mixture weights sum to {total:g}, not 1")
    try:
        law = JumpLaw.mixture(atoms, parts)
    except ValueError as exc:
        raise ConfigSemanticError("jump", str(exc)) from exc
    return JumpLaw(law.atoms, law.continuous, law.weight, name=text)


def _number(key, raw, lineno, kind):
    try:
        if kind == "int":
            if not re.fullmatch(r"[-+]?\d+", raw):
                raise ValueError
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigSyntaxError(lineno, f"{key} expects a number, got {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    section = None
    model_raw: dict = {}
    run: dict = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sm = _SECTION.match(line)
        if sm:
            section = sm.group(1)
            if section not in ("model", "run"):
                raise ConfigSyntaxError(lineno, f"unknown section [{section}]")
            continue
        lm = _LINE.match(line)
        if not lm:
            raise ConfigSyntaxError(lineno, f"expected 'key = value', got {line!r}")
        key, raw = lm.group(1), lm.group(2)
        if section is None:
            raise ConfigSyntaxError(lineno, "key outside of a section")
        if (section, key) in seen:
            raise ConfigSyntaxError(lineno, f"duplicate key {key!r}")
        seen.add((section, key))
        if raw == "":
            raise ConfigSyntaxError(lineno, f"{key} has no value")
        if section == "model":
            if key not in MODEL_KEYS:
                raise ConfigSyntaxError(lineno, f"unknown key {key!r} in [model]")
            model_raw[key] = (raw, lineno)
            continue
        kind = RUN_KEYS.get(key)
        if kind is None:
            raise ConfigSyntaxError(lineno, f"unknown key {key!r} in [run]")
        if kind == "list":
            run[key] = [_number(key, v.strip(), lineno, "float") for v in raw.split(",")]
        elif kind == "str":
            run[key] = raw
        elif kind == "bool":
            if raw.lower() not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigSyntaxError(lineno, f"{key} expects true/false")
            run[key] = raw.lower() in ("true", "yes", "1")
        else:
            run[key] = _number(key, raw, lineno, kind)

    missing = [k for k in MODEL_KEYS if k not in model_raw]
    if missing:
        raise ConfigSemanticError(missing[0], "missing from [model]")
    m = _number("m", *model_raw["m"], "float")
    lam = _number("lambda", *model_raw["lambda"], "float")
    x = _number("x", *model_raw["x"], "float")
    law = parse_jump(*model_raw["jump"])
    if not np.isfinite(m):
        raise ConfigSemanticError("m", "must be finite")
    if not lam >= 0:
        raise ConfigSemanticError("lambda", f"must be nonnegative, got {lam:g}")
    if not x > 0:
        raise ConfigSemanticError("x", f"must be positive, got {x:g}")
    model = ModelParams(m, lam, law, x)
    _check_run(run)
    return RunConfig(model=model, jump_text=model_raw["jump"][0], **run)


def _check_run(run: dict) -> None:
    for key in ("n", "shards", "workers"):
        if key in run and run[key] < 1:
            raise ConfigSemanticError(key, "must be at least 1")
    if "depth" in run and run["depth"] < 0:
        raise ConfigSemanticError("depth", "must be nonnegative")
    for key in ("step", "h"):
        if key in run and not run[key] > 0:
            raise ConfigSemanticError(key, "must be positive")
    if "seed" in run and not 0 <= run["seed"] < 2**64:
        raise ConfigSemanticError("seed", "must be a 64-bit unsigned integer")
    for key in ("t", "horizon"):
        if key in run:
            vals = run[key]
            if any(not v > 0 for v in vals):
                raise ConfigSemanticError(key, "values must be positive")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigSemanticError(key, "values must be strictly increasing")
    if "l" in run and any(v < 0 for v in run["l"]):
        raise ConfigSemanticError("l", "values must be nonnegative")
    for key in ("phi", "psi"):
        if key in run and run[key] not in TEST_FUNCTIONS:
            raise ConfigSemanticError(key, f"must be one of {', '.join(TEST_FUNCTIONS)}")
