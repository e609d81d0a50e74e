class NumericalError(ArithmeticError):
    """A numerical routine failed (non-convergence, overflow, lost rank)."""
