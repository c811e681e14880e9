from markov.exceptions import GenDiceError


class ZeroBehaviorProbabilityError(GenDiceError, ValueError):
    def __init__(self, episode, step, state, action):
        self.episode = episode
        self.step = step
        self.state = state
        self.action = action
        super(ZeroBehaviorProbabilityError, self).__init__(
            'Behavior policy gives probability 0 to the logged action {} in state {} '
            '(episode {}, step {}).'.format(action, state, episode, step)
        )
