import os
from functools import lru_cache

import pytest

from trfca.context import build_reduced_context
from trfca.groups import parse_group_spec, subgroup_lattice
from trfca.lattice import parse_lattice_spec

LONG = os.environ.get("TRFCA_LONG") == "1"


# criterion number -> (text, list of outcomes)
_CRITERIA: dict[int, tuple[str, list[str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _CRITERIA.setdefault(number, (text, []))[1].append(status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, statuses = _CRITERIA[number]
        if "FAIL" in statuses:
            status = "FAIL"
        elif "PASS" in statuses:
            status = "PASS"
        else:
            status = "SKIP"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {text}")


def pytest_collection_modifyitems(config, items):
    if LONG:
        return
    skip = pytest.mark.skip(reason="long test; set TRFCA_LONG=1 to run")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@lru_cache(maxsize=None)
def group_lattice(spec):
    return subgroup_lattice(parse_group_spec(spec))


@lru_cache(maxsize=None)
def lattice(spec):
    return parse_lattice_spec(spec)


@lru_cache(maxsize=None)
def group_context(spec):
    return build_reduced_context(group_lattice(spec))


@lru_cache(maxsize=None)
def lattice_context(spec):
    return build_reduced_context(lattice(spec))


# small lattices where brute-force enumeration of transfer systems is cheap
SMALL_LATTICES = ["chain:1", "chain:2", "chain:3", "chain:4", "boolean:2", "boolean:3", "subspaces:2,2"]
SMALL_GROUPS = ["S:3", "D:4"]


def small_lattice(name):
    return group_lattice(name) if name in SMALL_GROUPS else lattice(name)
