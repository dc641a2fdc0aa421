from .config import Config, derive_parameters, load_config, parameter_report
from .snapshot import read_snapshot, write_snapshot

__all__ = [
    "Config", "derive_parameters", "load_config", "parameter_report",
    "read_snapshot", "write_snapshot",
]
