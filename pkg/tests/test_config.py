import pytest
from hypothesis import given, settings, strategies as st

from relaybf.config import ConfigError, parse_config, serialize_config
from relaybf.sim import preset_fig2, preset_fig3

BASE = """\
# desk-scale example
network.num_relays = 2
network.num_ues = 2
network.n_bs = 4
network.n_rn = 4
network.n_ue = 2
network.cell_radius = 0.75 km
network.bs_rn_ratio = 0.5
network.num_subcarriers = 6
radio.bandwidth = 180 kHz
radio.n0 = -174 dBm/Hz   # thermal noise
radio.snr_gap = 0 dB
radio.p_max_bs = 20 dBm
radio.p_max_rn = 10 dBm
grouping.alpha = 0.1
sim.num_samples = 200
sim.seed = 7
"""


def with_line(text, key, value):
    lines = [l for l in text.splitlines() if not l.startswith(key + " ")]
    if value is not None:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def test_parse_units():
    cfg = parse_config(BASE)
    assert cfg.radio.noise_psd == pytest.approx(3.98e-21, rel=1e-3)
    assert cfg.network.cell_radius == 750.0
    assert cfg.radio.bandwidth_hz == 180e3
    assert cfg.radio.p_max_bs == pytest.approx(0.1)
    assert cfg.alpha_sweep == () and cfg.selection == "best"


def test_table1_expressible():
    text = BASE + "sweep.alpha = 0.1, 0.2, 0.3, 0.4, 0.5\nsim.algorithms = esga, ocga\n"
    text = with_line(text, "sim.num_samples", "10000")
    text = with_line(text, "sim.seed", "0")
    assert parse_config(text) == preset_fig2()


def test_missing_alpha_named():
    with pytest.raises(ConfigError, match="grouping.alpha"):
        parse_config(with_line(BASE, "grouping.alpha", None))


@pytest.mark.parametrize(
    "key,value,fragment",
    [
        ("radio.n0", "-174 dB", "bad unit"),
        ("radio.p_max_bs", "20", "unit"),
        ("network.cell_radius", "-1 m", "positive"),
        ("grouping.alpha", "1.5", "[0, 1]"),
        ("network.num_ues", "2.5", "integer"),
        ("sim.selection", "worst", "one of"),
        ("sweep.p_bs", "10 dBm,, 20 dBm", "list"),
        ("sim.algorithms", "ocga, ocga", "repeat"),
    ],
)
def test_bad_values_name_key_and_line(key, value, fragment):
    text = with_line(BASE, key, value)
    line = text.splitlines().index(f"{key} = {value}") + 1
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key and err.value.line == line
    assert fragment in str(err.value) and f"line {line}" in str(err.value)


def test_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(BASE + "radio.colour = blue\n")
    with pytest.raises(ConfigError, match="given twice"):
        parse_config(BASE + "sim.seed = 8\n")
    with pytest.raises(ConfigError, match="section.key"):
        parse_config(BASE + "just some words\n")


@pytest.mark.parametrize("cfg", [preset_fig2(), preset_fig3()])
def test_presets_round_trip(cfg):
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.floats(0, 1),
    radius=st.floats(1.0, 1e5),
    n0=st.floats(-200, -100),
    sweep=st.lists(st.floats(-50, 60), max_size=4),
    seed=st.integers(0, 2**63),
    samples=st.integers(1, 10**6),
    relays=st.integers(0, 5),
)
def test_round_trip_property(alpha, radius, n0, sweep, seed, samples, relays):
    text = with_line(BASE, "grouping.alpha", repr(alpha))
    text = with_line(text, "network.cell_radius", f"{radius!r} m")
    text = with_line(text, "radio.n0", f"{n0!r} dBm/Hz")
    text = with_line(text, "sim.seed", str(seed))
    text = with_line(text, "sim.num_samples", str(samples))
    text = with_line(text, "network.num_relays", str(relays))
    if sweep:
        text += "sweep.p_rn = " + ", ".join(f"{x!r} dBm" for x in sweep) + "\n"
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
