__all__ = ["oracle", "pressure", "snapshot", "solver", "state", "transport"]
