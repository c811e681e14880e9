from markov.exceptions import GenDiceError


class EmptyBatchError(GenDiceError, ValueError):
    pass


class NumericalDivergenceError(GenDiceError):
    """ Training produced a non-finite or exploding objective. """

    def __init__(self, step, value):
        self.step = step
        self.value = value
        super(NumericalDivergenceError, self).__init__(
            'Training diverged at step {}: objective {!r}.'.format(step, value)
        )


class UnsupportedStatesError(GenDiceError, ValueError):
    """ The target distribution puts mass where the data distribution has none. """

    def __init__(self, indices):
        self.indices = [int(index) for index in indices]
        super(UnsupportedStatesError, self).__init__(
            'Data distribution has no mass on reachable indices {}.'.format(self.indices)
        )
