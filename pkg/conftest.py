pytest_plugins = ["pytest_thermometry.plugin"]
