"""Collects per-criterion outcomes from tests marked ``criterion(id, title)``
and prints one PASS/FAIL line per criterion at the end of the run."""

import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion this test checks")
    config.stash[_KEY] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        cid, title = mark.args
        entry = item.config.stash[_KEY].setdefault(cid, {"title": title, "ok": True, "details": []})
        entry["ok"] = entry["ok"] and rep.passed
        detail = dict(item.user_properties).get("detail")
        name = item.name.removeprefix("test_")
        entry["details"].append(f"{name}: {'ok' if rep.passed else 'FAILED'}"
                                + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_KEY]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results, key=lambda c: (len(str(c)), str(c))):
        r = results[cid]
        terminalreporter.write_line(
            f"criterion {cid:>2} {'PASS' if r['ok'] else 'FAIL'}  {r['title']}  "
            + "; ".join(r["details"]))
