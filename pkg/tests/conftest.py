"""Shared test configuration.

BLAS thread pools must be pinned before numpy first loads in this process:
the timing-ratio and bit-reproducibility checks assume single-threaded
kernels.
"""

import os

for _name in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ[_name] = "1"

# number -> (description, passed); passed stays None until evaluated
ACCEPTANCE_RESULTS = {}


def preregister_acceptance(number, description):
    ACCEPTANCE_RESULTS.setdefault(number, (description, None))


def record_acceptance(number, description, passed):
    ACCEPTANCE_RESULTS[number] = (description, bool(passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        description, passed = ACCEPTANCE_RESULTS[number]
        if passed is True:
            verdict = "PASS"
        elif passed is False:
            verdict = "FAIL"
        else:
            verdict = "FAIL (not evaluated)"
        terminalreporter.write_line(
            f"ACCEPTANCE {number}: {verdict} - {description}")
