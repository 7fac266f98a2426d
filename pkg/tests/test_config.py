import pathlib

import pytest

from fracdecay.config import ConfigError, build_problem, load_config, parse_config, with_overrides
from fracdecay.operators import FracMagnetic, Kirchhoff, Magnetic, PorousMedium, SchrodingerControl

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"

BASE = """
# comment
operator = frac_laplacian
lambda1 = 1      ; trailing comment
[time]
dt = 0.05
T = 10
"""


def diag_keys(text, **kw):
    with pytest.raises(ConfigError) as err:
        parse_config(text, **kw)
    return [(d.line, d.key) for d in err.value.diagnostics]


def test_minimal_config_and_defaults():
    cfg = parse_config(BASE)
    assert cfg.problem["operator"] == "frac_laplacian"
    assert cfg.problem["alpha"] == 0.5
    assert cfg.problem["s"] == (2.0,)
    assert cfg.grid["n"] == 63
    assert cfg.output["seed"] == 0 and cfg.output["svg"] is True
    p = build_problem(cfg)
    assert p.mixed.lambda2 == 0.0
    assert p.scheme == "SemiImplicitL1"
    assert p.n_steps == 200


def test_root_seed_alias_and_lists():
    cfg = parse_config("seed = 7\ns = 2, 3.5\n" + BASE)
    assert cfg.seed == 7
    assert cfg.problem["s"] == (2.0, 3.5)


def test_every_error_reported_with_lines():
    text = "operator = frac_laplacian\nlambda1 = 2\nalpha = 1.5\nbogus = 1\n[nowhere]\nx = 1\n[grid]\nn = 2.5\nno equals sign\n"
    keys = diag_keys(text)
    assert (2, "lambda1") in keys
    assert (3, "alpha") in keys
    assert (4, "bogus") in keys
    assert (5, "") in keys
    assert (8, "n") in keys
    assert (9, "") in keys
    assert (0, "[time] dt") in keys


def test_duplicate_key():
    keys = diag_keys("operator = laplacian\nlambda1 = 0\nlambda1 = 1\n[time]\ndt=1\nT=1\n")
    assert (3, "lambda1") in keys


@pytest.mark.parametrize(
    "problem_extra,tail,key",
    [
        ("lambda2 = 0.3\n", "", "lambda2"),
        ("gamma = 2\n", "", "gamma"),
        ("", "[grid]\na = 2\nb = 1\n", "b"),
        ("", "[analysis]\nwindow_lo = 5\nwindow_hi = 2\n", "window_hi"),
        ("", "scheme = CrankNicolson\n", "scheme"),
    ],
)
def test_cross_checks(problem_extra, tail, key):
    # BASE ends inside [time], so a bare tail lands there
    assert key in [k for _, k in diag_keys(problem_extra + BASE + tail)]


def test_porous_sigma_bound():
    text = "operator = porous\nsigma = 0.7\nlambda1 = 0\n[time]\ndt = 0.1\nT = 1\n"
    assert (2, "sigma") in diag_keys(text)


def test_explicit_cfl_reported_on_dt():
    text = "operator = laplacian\nlambda1 = 0\n[time]\ndt = 0.1\nT = 1\nscheme = ExplicitL1\n"
    assert (4, "dt") in diag_keys(text)


def test_verify_config_needs_no_problem():
    cfg = parse_config("[verify]\nsamples = 50\n", require_problem=False)
    assert cfg.verify["samples"] == 50
    assert diag_keys("[verify]\nsamples = 50\n")


def test_operator_builders():
    def build(extra):
        return build_problem(parse_config(extra + "\n[time]\ndt = 0.01\nT = 1\n"))

    assert isinstance(build("operator = porous\nsigma = 0.25\nlambda1 = 0").op, PorousMedium)
    k = build("operator = kirchhoff\nm0 = 0\nb = 2\nlambda1 = 0").op
    assert isinstance(k, Kirchhoff) and k.theorem_gamma == 3
    m = build("operator = magnetic\nfield = sine\nfield_strength = 3\nlambda1 = 1").op
    assert isinstance(m, Magnetic)
    assert max(abs(m.field.half_values)) == pytest.approx(3.0, rel=1e-2)
    assert isinstance(build("operator = frac_magnetic\nfield = linear\nlambda1 = 1").op, FracMagnetic)
    sch = build("operator = schrodinger\nlambda1 = 0\nphase = 2")
    assert isinstance(sch.op, SchrodingerControl) and sch.scheme == "CrankNicolson"
    assert not sch.u0.is_real


def test_with_overrides_leaves_original():
    cfg = parse_config(BASE)
    other = with_overrides(cfg, alpha=0.3)
    assert other.problem["alpha"] == 0.3 and cfg.problem["alpha"] == 0.5


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = load_config(path, require_problem=path.stem != "verify")
    assert cfg.output["dir"]
