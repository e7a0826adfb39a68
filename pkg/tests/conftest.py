import sys
from pathlib import Path

from hypothesis import settings

# first calls into numba-compiled code can exceed hypothesis' default deadline
settings.register_profile("default", deadline=None)
settings.load_profile("default")

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results):
        status, detail = results[cid]
        terminalreporter.write_line(f"{cid} {status}: {detail}")
