import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from genostrat import featurize, genio, synthgen  # noqa: E402


def cohort_dataset(spec: synthgen.CohortSpec, level: str = "population"):
    vcf, panel = synthgen.generate(spec)
    samples, records = genio.parse_vcf(vcf)
    matrix = featurize.build_feature_matrix(records, samples, 12, "impute-zero")
    return featurize.attach_labels(matrix, genio.parse_panel(panel), level)


@pytest.fixture(scope="session")
def cohort():
    """3 populations x 100 samples x 3000 variants, divergence 0.1, seed 42."""
    return cohort_dataset(synthgen.CohortSpec(3, 100, 3000, 0.1, 42))


@pytest.fixture(scope="session")
def small_cohort():
    return cohort_dataset(synthgen.CohortSpec(3, 30, 400, 0.1, 7))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.line(line)
