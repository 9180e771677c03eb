from tests.kato.utils.fixtures import (
    heat_decay,
    layered_heat_decay,
    resting,
    small_run_config,
    stretched_grid,
    uniform_grid,
    unit_domain,
)

# Re-export fixtures so pytest can discover them
__all__ = [
    "heat_decay",
    "layered_heat_decay",
    "resting",
    "small_run_config",
    "stretched_grid",
    "uniform_grid",
    "unit_domain",
]
