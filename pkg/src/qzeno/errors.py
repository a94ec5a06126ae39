"""Exception types raised by qzeno."""


class QZenoError(Exception):
    """Base class for all package errors."""


class ConvergenceError(QZenoError):
    def __init__(self, index: int, iterations: int):
        self.index = index
        self.iterations = iterations
        super().__init__(
            f"eigenvalue {index} did not converge after {iterations} QL iterations"
        )


class PropagationError(QZenoError):
    def __init__(self, t: float, reason: str):
        self.t = t
        super().__init__(f"propagation failed at t={t:.6g}: {reason}")


class FitError(QZenoError):
    pass


class NoPlateauError(QZenoError):
    def __init__(self, value: float, spread: float, window):
        self.value = value
        self.spread = spread
        self.window = window
        super().__init__(
            f"no plateau in window {tuple(window)}: spread {spread:.3g} exceeds 10% of mean {value:.3g}"
        )


class WavefrontError(QZenoError):
    pass


class ConfigError(QZenoError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
