from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from spincm.config import ConfigError, build_state, config_hash, load_config, parse_config
from spincm.openchain import OpenRadialState
from spincm.orbits import chain_moment_residual
from spincm.periodic import PeriodicRadialState

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _base(**over):
    raw = {"chain": {"kind": "periodic", "N": 3, "n": 2}, "orbits": {"1": {"kind": "rank1", "xi": 1.0}, "2": {"kind": "rank1", "xi": -0.5}}}
    raw.update(over)
    return raw


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_bundled_configs_load_and_build(path):
    cfg = load_config(path)
    s = build_state(cfg)
    assert s.N == cfg.N and s.n == cfg.n


def test_defaults():
    cfg = parse_config(_base())
    assert (cfg.site, cfg.degree, cfg.T, cfg.fmt, cfg.seed) == (2, 2, 1.0, "json", 0)
    assert cfg.integrator.scheme == "dop853"


@pytest.mark.parametrize(
    "raw,key",
    [
        (_base(chain={"kind": "ring", "N": 3, "n": 2}), "chain.kind"),
        (_base(chain={"kind": "periodic", "N": 1, "n": 2}), "chain.N"),
        (_base(orbits={"1": {"kind": "rank1", "xi": 1.0}}), "orbits"),
        (_base(orbits={"1": {"kind": "rank1", "xi": 0.0}, "2": {"kind": "rank1", "xi": 1.0}}), "orbits.1.xi"),
        (_base(hamiltonian={"site": 0}), "hamiltonian.site"),
        (_base(hamiltonian={"degree": 4}), "hamiltonian.degree"),
        (_base(time={"method": "euler"}), "time.method"),
        (_base(time={"dt": -1.0}), "time.dt"),
        (_base(output={"format": "xml"}), "output.format"),
        (_base(boundary={"left": {"kind": "k-orbit", "spectrum": [0.5]}}), "boundary"),
        (_base(initial={"p": [1.0, 0.0, 0.0]}), "initial.p"),
        (_base(initial={"free_flight": True}), "initial.free_flight"),
        (_base(seed=-3), "seed"),
        (_base(extra=1), "extra"),
        (_base(time={"T": 1.0, "stepsize": 2}), "time.stepsize"),
    ],
)
def test_invalid_configs_name_the_key(raw, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        parse_config(raw)


def test_open_boundary_validation():
    raw = _base(chain={"kind": "open", "N": 3, "n": 2}, boundary={"left": {"kind": "k-orbit", "spectrum": [0.5, 0.1]}})
    with pytest.raises(ConfigError, match=r"boundary\.left\.spectrum"):
        parse_config(raw)
    raw["boundary"] = {"right": {"kind": "k-orbit", "spectrum": [0.5]}}
    cfg = parse_config(raw)
    s = build_state(cfg)
    assert isinstance(s, OpenRadialState)
    assert np.allclose(s.mu_right.spectrum, [0.5]) and np.all(s.L == 0)


def test_toml_errors_report_position(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[chain\nkind = 1\n")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.toml")


def test_hash_ignores_seed_only():
    cfg = parse_config(_base())
    assert config_hash(cfg) == config_hash(replace(cfg, seed=99))
    assert config_hash(cfg) != config_hash(replace(cfg, T=2.0))
    assert len(config_hash(cfg)) == 16


def test_build_state_is_seeded_and_constrained():
    cfg = parse_config(_base(seed=4, initial={"q": [1.0, 0.0, -1.0], "p_scale": 0.5}))
    a, b = build_state(cfg), build_state(cfg)
    assert isinstance(a, PeriodicRadialState)
    assert np.array_equal(a.p, b.p) and np.array_equal(a.mus, b.mus)
    assert np.array_equal(a.q, [1.0, 0.0, -1.0])
    assert np.abs(chain_moment_residual(a.spins)).max() < 1e-12
    c = build_state(replace(cfg, seed=5))
    assert not np.array_equal(a.p, c.p)


def test_free_flight_state_has_no_couplings():
    raw = _base(chain={"kind": "open", "N": 3, "n": 2}, initial={"free_flight": True}, seed=1)
    s = build_state(parse_config(raw))
    assert np.all(s.L == 0) and np.all(s.R == 0)
    assert np.allclose(s.mus, np.transpose(s.mus, (0, 2, 1)))
    assert np.all(np.diff(s.p) < 0) and np.all(np.diff(s.q) < 0)
