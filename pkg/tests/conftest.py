"""Shared fixtures and the per-criterion summary of the acceptance suite."""
from __future__ import annotations

import functools
import re

import pytest

from quanto.copula import KernelCopula, calibrate_frank_alpha, generate_expert_matrix

EXPERT_N = 100_000


@functools.lru_cache(maxsize=None)
def frank_alpha(target: float) -> float:
    return calibrate_frank_alpha(target, seed=0)


@functools.lru_cache(maxsize=None)
def expert(family: str, param, n: int = EXPERT_N, seed: int = 1):
    return generate_expert_matrix(family, param, n, seed)


@functools.lru_cache(maxsize=None)
def kernel_copula(family: str, param, n: int = EXPERT_N, seed: int = 1, bandwidth: float | None = None):
    return KernelCopula(expert(family, param, n, seed), bandwidth)


@pytest.fixture(scope="session")
def frank_alpha_07():
    return frank_alpha(-0.7)


# --------------------------------------------------------------- acceptance summary

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_CRITERION_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or not (report.when == "call" or report.failed):
        return
    cid = int(m.group(1))
    detail = dict(report.user_properties).get("detail", "")
    ok, old = _CRITERION_RESULTS.get(cid, (True, ""))
    _CRITERION_RESULTS[cid] = (ok and report.passed, detail or old)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, (ok, detail) in sorted(_CRITERION_RESULTS.items()):
        terminalreporter.write_line(f"criterion {cid:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    passed = sum(ok for ok, _ in _CRITERION_RESULTS.values())
    terminalreporter.write_line(f"{passed}/{len(_CRITERION_RESULTS)} criteria passed")
