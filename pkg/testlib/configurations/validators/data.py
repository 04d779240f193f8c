from pathlib import Path

from framework.configuration import CoreConfiguration


def check_all_core_config(data: dict, actual: CoreConfiguration) -> None:
    assert int(data["seed"]) == actual.seed
    assert Path(data["output_dir"]) == actual.output_dir
    assert int(data["jobs"]) == actual.jobs
    assert int(data["torch_threads"]) == actual.torch_threads
    assert data["log_level"] == str(actual.log_level)
