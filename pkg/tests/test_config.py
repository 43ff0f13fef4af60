import pytest

from grfev.config import RunConfig, load_config


def test_defaults_and_presets():
    c = RunConfig(seed=1)
    assert (c.n_temps, c.iterations, c.n_aux_draws, c.r) == (10, 5000, 200, 100)
    assert c.prior(2).sd == (5.0, 5.0)
    p = RunConfig.study_ising(1)
    assert (p.rows, p.cols, p.n_temps + 1, p.iterations, p.aux_sweeps, p.n_aux_draws) == (10, 10, 5, 20000, 200, 200)
    assert p.abc_draws == 500_000
    e = RunConfig.study_ergm(1)
    assert (e.n_temps + 1, e.iterations, e.aux_sweeps, e.n_aux_draws) == (10, 10000, 1000, 200)
    assert e.spec.n_variables == 120


@pytest.mark.parametrize("bad", [
    dict(seed=-1), dict(seed=1, iterations=0), dict(seed=1, abc_quantiles=[0.0]),
    dict(seed=1, abc_quantiles=[1.0]), dict(seed=1, burn_in=1.0), dict(seed=1, sigma=[0.0]),
    dict(seed=1, model="ising3"), dict(seed=1, sigma_schedule="fast"),
    dict(seed=1, n_aux_draws=1, exclude_first_draw=True), dict(seed=1, prior_sd=0.0),
])
def test_invalid(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_hash_ignores_output_location():
    a = RunConfig(seed=3)
    assert a.config_hash() == a.replace(out="elsewhere", threads=4).config_hash()
    assert a.config_hash() != a.replace(seed=4).config_hash()
    assert a.config_hash() != a.replace(r=50).config_hash()


def test_load_toml(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text('seed = 5\nrows = 4\ncols = 4\n[popx-evidence]\niterations = 300\nsigma = [0.3]\n')
    c = load_config(f, "popx-evidence")
    assert (c.seed, c.rows, c.iterations, c.sigma) == (5, 4, 300, [0.3])
    assert load_config(f).iterations == 5000
    assert load_config(f, "popx-evidence", seed=9).seed == 9
    f.write_text("rows = 4\n")
    with pytest.raises(ValueError, match="seed"):
        load_config(f)
    f.write_text("seed = 1\nwibble = 4\n")
    with pytest.raises(ValueError, match="unknown"):
        load_config(f)
