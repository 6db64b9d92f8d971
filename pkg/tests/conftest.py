import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from seqfmeca import parse
from seqfmeca.dsl import parse_file

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "seqfmeca" / "data"
FIXTURES = Path(__file__).parent / "fixtures"
TER = DATA / "ter.rau"
TER_ANNOTATIONS = DATA / "ter_annotations.json"
EXAMINATION = DATA / "examination.rau"
LINEAR3 = FIXTURES / "linear3.rau"


def load(path):
    result = parse_file(path)
    assert result.model is not None, [d.format() for d in result.diagnostics]
    return result.model


@pytest.fixture(scope="session")
def ter():
    return load(TER)


@pytest.fixture(scope="session")
def linear3():
    return load(LINEAR3)


@pytest.fixture
def src():
    def build(text):
        return parse(text)
    return build


@pytest.fixture(scope="session")
def ter_annotations():
    import json
    return json.loads(TER_ANNOTATIONS.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def ter_blank(ter):
    from seqfmeca import enumerate_candidates, init_worksheet
    return init_worksheet(ter, enumerate_candidates(ter))


@pytest.fixture(scope="session")
def ter_ws(ter_blank, ter_annotations):
    from seqfmeca import merge_annotations
    return merge_annotations(ter_blank, ter_annotations)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.lines():
            terminalreporter.write_line(line)
