from .data import check_all_core_config
