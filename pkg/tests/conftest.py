import os

import hypothesis
from gmpy2 import mpq
from hypothesis import strategies as st

hypothesis.settings.register_profile("default", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=25, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=2000, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines printed by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rationals(lo=-4, hi=4, max_den=16):
    return st.integers(1, max_den).flatmap(lambda d: st.integers(lo * d, hi * d).map(lambda n: mpq(n, d)))


def points(lo=-4, hi=4):
    from gpex.geometry import Point

    return st.builds(Point, rationals(lo, hi), rationals(lo, hi))
