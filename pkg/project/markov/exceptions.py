class GenDiceError(Exception):
    """ Base class for every error raised by the gendice apps. """


class ShapeMismatchError(GenDiceError, ValueError):
    pass


class InvalidDistributionError(GenDiceError, ValueError):
    pass


class InvalidParameterError(GenDiceError, ValueError):
    pass


class StationaryConvergenceError(GenDiceError):
    """ Power iteration (and its Cesaro fallback) did not reach the tolerance. """

    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super(StationaryConvergenceError, self).__init__(
            'Stationary distribution did not converge after {} iterations, L1 residual {:.3e}.'.format(
                iterations, residual
            )
        )
