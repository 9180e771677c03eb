__all__ = ["corrector", "diagnostics", "euler", "inequalities", "rates"]
