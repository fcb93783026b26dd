from __future__ import annotations

import pytest

from fbwave import model, thresholds

# d = 8 example with hand-checked derived values
VALIDATED = dict(C_i=0.0, C_g=-6.0, D_i=8.0, D_g=1.0, lambda_i=1.0, lambda_g=1.0,
                 k_i=2.0, k_g=0.0)
# concave-flux existence example (E_g = 30)
CONCAVE = dict(C_i=0.0, C_g=-30.0, D_i=8.0, D_g=1.0, lambda_i=0.0, lambda_g=1.0,
               k_i=1.0, k_g=0.0)


@pytest.fixture(scope="session")
def validated_params() -> model.ModelParams:
    return model.ModelParams(**VALIDATED)


@pytest.fixture(scope="session")
def concave_params() -> model.ModelParams:
    return model.ModelParams(**CONCAVE)


@pytest.fixture(scope="session")
def concave_triple(concave_params):
    return model.coefficients(concave_params)


@pytest.fixture(scope="session")
def concave_report(concave_triple):
    return thresholds.numeric_thresholds(concave_triple, bisect_tol=1e-6)


# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
