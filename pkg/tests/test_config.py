import json

import pytest

from fhd import config
from fhd.config import ConfigError, load, parse
from fhd.henon import SkewHenonSystem, fiber_apply
from fhd.pk import PkSkewSystem

DISC = {"space": {"kind": "disc", "radius": 0.25}, "map": {"kind": "contraction", "c": 0.5}}


def _doc(**kw):
    doc = {"version": 1, "system": {"builtin": "classical"}}
    doc.update(kw)
    return doc


def _pointer(doc):
    with pytest.raises(ConfigError) as exc:
        parse(doc)
    return exc.value.pointer


def test_builtin_systems_parse():
    for name in ("classical", "disc-contraction", "degree4"):
        assert isinstance(parse(_doc(system={"builtin": name})).system, SkewHenonSystem)
    for name in ("pk-squares", "pk-perturbed"):
        assert isinstance(parse(_doc(system={"builtin": name})).system, PkSkewSystem)


def test_custom_henon_matches_catalogue():
    doc = _doc(system={"kind": "henon", "base": DISC, "factors": [{"degree": 2, "lower": [[[1, 0, 1.0]]]}]},
               **{"lambda": [0.1, -0.05]})
    cfg = parse(doc)
    ref = config.catalogue.get("disc-contraction")
    assert cfg.lam == complex(0.1, -0.05)
    z = (0.3 + 0.1j, -0.7)
    assert fiber_apply(cfg.system, cfg.lam, z) == pytest.approx(fiber_apply(ref, cfg.lam, z))


def test_custom_pk_parses():
    doc = _doc(system={
        "kind": "pk", "base": DISC, "k": 1, "degree": 2,
        "components": [[{"exps": [2, 0], "coef": [[0, 0, 1.0]]}], [{"exps": [0, 2], "coef": [[0, 0, 1.0]]}]],
    })
    cfg = parse(doc)
    assert cfg.system.k == 1 and cfg.system.d == 2


@pytest.mark.parametrize(
    "patch, pointer",
    [
        ({"version": 2}, "/version"),
        ({"job": "render"}, "/job"),
        ({"seed": -1}, "/seed"),
        ({"params": {"res": 5000}}, "/params/res"),
        ({"params": {"tol": 0}}, "/params/tol"),
        ({"params": {"count": 10}}, "/params/count"),
        ({"lambda": [1, 2, 3]}, "/lambda"),
        ({"system": {"builtin": "nope"}}, "/system/builtin"),
        ({"system": {"kind": "henon", "base": DISC, "factors": [{"degree": 9}]}}, "/system/factors/0/degree"),
        ({"system": {"kind": "henon", "base": DISC, "factors": [{"degree": 2}] * 9}}, "/system/factors"),
        ({"system": {"kind": "henon", "base": {"space": {"kind": "disk"}, "map": {"kind": "identity"}},
                     "factors": [{"degree": 2}]}}, "/system/base/space/kind"),
        ({"system": {"kind": "henon", "base": DISC, "factors": [{"degree": 2, "a": [[0, 0, "1"]]}]}},
         "/system/factors/0/a/0/2"),
    ],
)
def test_schema_errors_carry_pointer(patch, pointer):
    assert _pointer(_doc(**patch)) == pointer


def test_missing_required_keys():
    with pytest.raises(ConfigError):
        parse({"version": 1})
    with pytest.raises(ConfigError):
        parse({"system": {"builtin": "classical"}})


def test_lambda_outside_base_space():
    doc = _doc(system={"builtin": "disc-contraction"}, **{"lambda": 0.5})
    assert _pointer(doc) == "/lambda"


def test_semantic_system_error_is_config_error():
    # the Jacobian coefficient must not vanish on the base
    doc = _doc(system={"kind": "henon", "base": DISC, "factors": [{"degree": 2, "a": [[0, 0, 0.0]]}]})
    assert _pointer(doc) == "/system"


def test_load_from_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(_doc(job="green-eval", seed=4)))
    cfg = load(p)
    assert cfg.job == "green-eval" and cfg.seed == 4
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load(p)
