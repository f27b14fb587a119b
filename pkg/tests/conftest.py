import json
from pathlib import Path

import pytest
from hypothesis import settings

from fiberpair.config import load_config, parse_config

ROOT = Path(__file__).resolve().parents[1]
REF_CONFIG = ROOT / "configs" / "reference.json"

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ref_cfg():
    return load_config(REF_CONFIG)


@pytest.fixture
def ref_raw():
    return json.loads(REF_CONFIG.read_text())


@pytest.fixture
def make_cfg(ref_raw):
    def build(**sections):
        raw = dict(ref_raw)
        raw.update(sections)
        return parse_config(raw)
    return build


def pytest_terminal_summary(terminalreporter):
    lines = []
    for reports in terminalreporter.stats.values():
        for rep in reports:
            for key, value in getattr(rep, "user_properties", ()):
                if key == "acceptance" and getattr(rep, "when", "call") == "call":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
