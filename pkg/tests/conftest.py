import pytest

# small configurations, one per command, that run in a second or two
SMALL_CONFIGS = {
    "solve": """
[profile]
coeffs = 0 1
[domain]
h = 0.25
g = x1^2 - x2*x3
""",
    "monotone": """
[profile]
coeffs = 0 0 0.5
[domain]
h = 0.25
g = x1^2
[monotone]
rhs = x1^2 - 2
init = random
""",
    "distance": """
[profile]
coeffs = 0 0 0.5
[distance]
deltas = 1e-3 1e-2 1e-1 3e-1
N = 12
restarts = 2
""",
    "twist-check": """
[twist-check]
samples = 50
""",
    "maxprin": """
[maxprin]
taus = 1e1 1e3 1e5
grid_n = 12
""",
    "imp": """
[profile]
coeffs = 0 0 0.5
[imp]
tau = 1e3 1e2 1e1
grid_n = 8
""",
    "compare": """
[profile]
coeffs = 0 0 0.5
[domain]
h = 0.25
[compare]
pairs = 2
""",
    "operators": """
[profile]
coeffs = 0 0 0.5
[operators]
u = x1^2 + x1*x3 - x2
points = 1 0 0, 0.5 -0.25 2, 0 0 0
""",
}


@pytest.fixture
def small_configs():
    return dict(SMALL_CONFIGS)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance lines, one per criterion, after the run."""
    import sys

    mod = sys.modules.get("test_acceptance")
    results = sorted(getattr(mod, "RESULTS", []))
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in results:
        terminalreporter.write_line(line)
