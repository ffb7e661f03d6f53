import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and report.when == "call":
        case = getattr(item, "callspec", None)
        title = marker.args[1] + (f" [{case.id}]" if case else "")
        report.user_properties.append(("criterion", (marker.args[0], title)))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for reports in terminalreporter.stats.values():
        for rep in reports:
            for key, args in getattr(rep, "user_properties", ()):
                if key == "criterion":
                    ok = rep.passed and not hasattr(rep, "wasxfail")
                    lines.append((args[0], f"{'PASS' if ok else 'FAIL'} criterion {args[0]}: {args[1]}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
