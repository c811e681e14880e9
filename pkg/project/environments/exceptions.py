from markov.exceptions import GenDiceError


class EdgeListFormatError(GenDiceError, ValueError):
    def __init__(self, path, line_number, message):
        self.path = path
        self.line_number = line_number
        super(EdgeListFormatError, self).__init__('{}:{}: {}'.format(path, line_number, message))
