import re


def pytest_runtest_logreport(report):
    # acceptance tests print their own PASS line; mirror a FAIL line so every
    # criterion always reports exactly one verdict line
    if report.when != "call" or not report.failed:
        return
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if match:
        print(f"\nCRITERION {match.group(1)}: FAIL ({report.duration:.2f}s)")
