__all__ = ["fields", "geometry"]
