import numpy as np
import pytest

ALPHAS = [-2.0, -1.0, 0.0, 0.5, 1.0, 1.3, 1.7, 2.0, 2.5, 3.0]

_acceptance_lines = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_problem(rng, p=10, n=8, k=2, low=0.1, high=5.0):
    V = rng.uniform(low, high, size=(p, n))
    W = rng.uniform(0.2, 1.5, size=(p, k))
    H = rng.uniform(0.2, 1.5, size=(k, n))
    return W, H, V


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


@pytest.fixture(scope="session")
def acceptance_report():
    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {name}"
        if detail:
            line += f"  ({detail})"
        _acceptance_lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
