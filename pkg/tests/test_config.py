import json

import pytest

from fiberpair.config import ConfigError, load_config, parse_config


def test_reference_config_loads(ref_cfg):
    assert ref_cfg.eta_signal == pytest.approx(0.1317, abs=1e-4)
    assert ref_cfg.pair_detection_efficiency == pytest.approx(0.00567, abs=1e-5)
    assert ref_cfg.detector("idler_b") == ref_cfg.detector("idler")


@pytest.mark.parametrize(
    "mutate,path",
    [
        (lambda r: r["chain"]["signal"][2].update(efficiency=1.3), "chain.signal[2].efficiency"),
        (lambda r: r["detectors"]["idler"].update(efficiency=-0.1), "detectors.idler.efficiency"),
        (lambda r: r["source"].update(rep_rate=-5), "source.rep_rate"),
        (lambda r: r["source"].update(mean_pairs_per_pulse_at_1mW=-1), "source.mean_pairs_per_pulse_at_1mW"),
        (lambda r: r["chain"].pop("idler"), "chain.idler"),
        (lambda r: r["spectral"]["idler"].update(filter_fwhm=0), "spectral.idler.filter_fwhm"),
        (lambda r: r["source"].update(pair_number_model="binomial"), "source.pair_number_model"),
        (lambda r: r.pop("chain"), "chain"),
    ],
)
def test_errors_name_key_path(ref_raw, mutate, path):
    mutate(ref_raw)
    with pytest.raises(ConfigError) as err:
        parse_config(ref_raw)
    assert err.value.path == path


def test_sections_validated_lazily(ref_raw):
    ref_raw["hom"]["mode_overlap"] = 2.0
    ref_raw["tomography"]["pulses_per_setting"] = -1
    cfg = parse_config(ref_raw)
    with pytest.raises(ConfigError) as err:
        cfg.hom()
    assert err.value.path == "hom.mode_overlap"
    with pytest.raises(ConfigError) as err:
        cfg.tomography()
    assert err.value.path == "tomography.pulses_per_setting"


def test_missing_sections(ref_raw):
    del ref_raw["hom"], ref_raw["sagnac"]
    cfg = parse_config(ref_raw)
    with pytest.raises(ConfigError):
        cfg.hom()
    with pytest.raises(ConfigError):
        cfg.tomography()


def test_delay_grid_forms(ref_raw):
    ref_raw["hom"]["delays_fs"] = {"start": -100, "stop": 100, "step": 50}
    assert parse_config(ref_raw).hom().delays_fs == (-100, -50, 0, 50, 100)
    ref_raw["hom"]["delays_fs"] = [0, "x"]
    with pytest.raises(ConfigError) as err:
        parse_config(ref_raw).hom()
    assert err.value.path == "hom.delays_fs[1]"


def test_default_delay_grid_resolves_dip(ref_cfg):
    h = ref_cfg.hom()
    inside = [d for d in h.delays_fs if abs(d) <= h.coherence_fwhm_fs / 2]
    assert len(inside) >= 10


def test_hash_tracks_content(ref_raw, tmp_path):
    a = parse_config(ref_raw).config_hash()
    assert parse_config(json.loads(json.dumps(ref_raw))).config_hash() == a
    ref_raw["run"]["seed"] += 1
    assert parse_config(ref_raw).config_hash() != a
    p = tmp_path / "c.json"
    p.write_text(json.dumps(ref_raw, indent=4))
    assert load_config(p).config_hash() == parse_config(ref_raw).config_hash()
