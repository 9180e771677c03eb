__all__ = ["config", "report", "sweep"]
