"""Shared pytest wiring: a handle on the capture manager so the acceptance
tests can print their PASS/FAIL summary lines through fd-level capture."""

capture_manager = None


def pytest_configure(config):
    global capture_manager
    capture_manager = config.pluginmanager.getplugin("capturemanager")
