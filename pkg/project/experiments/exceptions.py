from markov.exceptions import GenDiceError


class ConfigurationError(GenDiceError, ValueError):
    def __init__(self, section, field, message):
        self.section = section
        self.field = field
        location = '[{}]'.format(section) if field is None else '[{}] {}'.format(section, field)
        super(ConfigurationError, self).__init__('{}: {}'.format(location, message))
