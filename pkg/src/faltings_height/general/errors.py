class DomainError(ValueError):
    """Raised for input outside of the domain of an operation"""

    pass


class NonConvergence(RuntimeError):
    """Raised when an iteration exhausts its cap, carries the best residual"""

    def __init__(self, msg: str, best_residual: float = float("nan")):
        super().__init__(msg)
        self.best_residual = best_residual
