from gp_skrl.scenarios.loader import (
    get_all_collections,
    get_all_scenarios,
    get_collection,
    get_scenario,
    load_scenario_file,
)

__all__ = ["get_all_collections", "get_all_scenarios", "get_collection", "get_scenario", "load_scenario_file"]
