__all__ = ["exceptions", "fs", "log"]
