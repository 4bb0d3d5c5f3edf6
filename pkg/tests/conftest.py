import pytest

from sar_atr.synth import synth_corpus


@pytest.fixture(scope="session")
def small_tree(tmp_path_factory):
    """A reduced synthetic corpus: 5 to 8 images per class."""
    root = tmp_path_factory.mktemp("corpus")
    synth_corpus(root, seed=0, scale=0.03)
    return root


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
