from markov.exceptions import GenDiceError


class ConjugateDomainError(GenDiceError, ValueError):
    pass


class AbsoluteContinuityError(GenDiceError, ValueError):
    def __init__(self, indices):
        self.indices = list(indices)
        super(AbsoluteContinuityError, self).__init__(
            'q puts mass where p has none, at indices {}.'.format(self.indices)
        )
