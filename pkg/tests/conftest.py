import pytest

from fairbandit.harness import config_from_dict


def make_config(**overrides):
    raw = {
        "horizon": 200,
        "replications": 4,
        "base_seed": 1234,
        "policy": {"kind": "strict_rate_ucb", "min_rate": "1/4"},
        "env": {"kind": "co_tetris", "teammates": [{"p0": 0.9}, {"p0": 0.3}]},
    }
    for key, value in overrides.items():
        if key in ("policy", "env"):
            raw[key] = {**raw[key], **value}
        else:
            raw[key] = value
    return config_from_dict(raw)


@pytest.fixture
def config_factory():
    return make_config


def pytest_terminal_summary(terminalreporter):
    """Print one line per acceptance criterion with its measured values."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py" not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1]
            measured = dict(rep.user_properties).get("measured", "")
            lines.append((name, "PASS" if rep.passed else "FAIL", measured))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status, measured in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}  {measured}")
