"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.outcome != "passed"):
        return
    number, title = mark.args
    entry = _RESULTS.setdefault(number, {"title": title, "ok": True, "notes": []})
    passed = rep.passed and not hasattr(rep, "wasxfail")
    entry["ok"] &= passed
    notes = [str(v) for k, v in item.user_properties if k == "measured"]
    if not passed:
        notes.append(f"{item.name} failed" + (" (known, see ledger)" if hasattr(rep, "wasxfail") else ""))
    entry["notes"].extend(notes)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        e = _RESULTS[number]
        status = "PASS" if e["ok"] else "FAIL"
        detail = "; ".join(e["notes"])
        terminalreporter.write_line(f"criterion {number:2d} {status}  {e['title']}" + (f"  [{detail}]" if detail else ""))
