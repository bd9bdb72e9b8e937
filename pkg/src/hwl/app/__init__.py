from .weights import generate_weights
from .scenario import ScenarioConfig, AnalysisBundle, run_scenario, load_config
from .search import search_separation

__all__ = [
    "generate_weights",
    "ScenarioConfig",
    "AnalysisBundle",
    "run_scenario",
    "load_config",
    "search_separation",
]
