"""
A taxi grid world with randomly appearing passengers.

A state combines the taxi cell, a 4-bit mask of waiting passengers (one bit per
corner) and the taxi status: 0 when empty, 1 + k when carrying the passenger picked
up at corner k. Passenger k rides to the opposite corner 3 - k, unless a fixed
destination cell is set for every passenger.

Movement actions move the taxi one cell, walls clamp. The fifth action picks up at an
occupied corner when empty and drops off at the destination when carrying; it does
nothing elsewhere. After the action, every corner without a waiting passenger gets
one with probability ``appear_probability``, independently. Only a successful drop
off pays ``dropoff_reward``.
"""
import itertools

import numpy as np
from django.conf import settings
from scipy import sparse

from markov.exceptions import InvalidParameterError
from markov.structures import Distribution, TabularMDP

N_CORNERS = 4
N_PASSENGER_MASKS = 2 ** N_CORNERS
N_TAXI_STATUSES = 1 + N_CORNERS

NORTH, SOUTH, EAST, WEST, PICKUP_DROPOFF = range(5)
MOVES = {NORTH: (-1, 0), SOUTH: (1, 0), EAST: (0, 1), WEST: (0, -1)}


def corner_cells(grid):
    last = grid - 1
    return (0, last, last * grid, last * grid + last)


def encode_state(cell, passengers, status):
    return (cell * N_PASSENGER_MASKS + passengers) * N_TAXI_STATUSES + status


def decode_state(state):
    rest, status = divmod(state, N_TAXI_STATUSES)
    cell, passengers = divmod(rest, N_PASSENGER_MASKS)
    return cell, passengers, status


def apply_action(cell, passengers, status, action, grid, corners, destination=None):
    """ Deterministic part of a step: returns (cell, passengers, status, dropped_off).

    ``destination`` is the drop off cell shared by all passengers; None sends passenger
    k to the opposite corner.
    """
    if action in MOVES:
        row, col = divmod(cell, grid)
        d_row, d_col = MOVES[action]
        row = min(max(row + d_row, 0), grid - 1)
        col = min(max(col + d_col, 0), grid - 1)
        return row * grid + col, passengers, status, False
    if status == 0:
        if cell in corners:
            corner = corners.index(cell)
            if passengers & (1 << corner):
                return cell, passengers & ~(1 << corner), 1 + corner, False
        return cell, passengers, status, False
    if destination is None:
        destination = corners[N_CORNERS - 1 - (status - 1)]
    if cell == destination:
        return cell, passengers, 0, True
    return cell, passengers, status, False


def appearance_outcomes(passengers, appear_probability):
    """ Yields (new_mask, probability) for passengers appearing at empty corners. """
    empty = [corner for corner in range(N_CORNERS) if not passengers & (1 << corner)]
    for appeared in itertools.product((False, True), repeat=len(empty)):
        mask = passengers
        probability = 1.0
        for corner, shows_up in zip(empty, appeared):
            if shows_up:
                mask |= 1 << corner
                probability *= appear_probability
            else:
                probability *= 1.0 - appear_probability
        if probability > 0:
            yield mask, probability


def taxi_mdp(grid=None, appear_probability=None, dropoff_reward=None, gamma=None, destination=None):
    """ Builds the taxi MDP; grid = 5 gives 25 * 16 * 5 = 2000 states and 5 actions.

    The initial distribution is uniform over cells with no waiting passengers and an
    empty taxi.
    A fixed destination cell replaces the opposite-corner rides.
    """
    defaults = settings.TAXI_DEFAULTS
    grid = defaults['grid'] if grid is None else grid
    appear_probability = defaults['appear_probability'] if appear_probability is None else appear_probability
    dropoff_reward = defaults['dropoff_reward'] if dropoff_reward is None else dropoff_reward
    gamma = defaults['gamma'] if gamma is None else gamma
    destination = defaults['destination'] if destination is None else destination
    if grid < 2:
        raise InvalidParameterError('grid must be at least 2, got {}.'.format(grid))
    if not 0.0 <= appear_probability <= 1.0:
        raise InvalidParameterError('appear_probability must lie in [0, 1], got {}.'.format(appear_probability))
    if destination is not None and not 0 <= destination < grid * grid:
        raise InvalidParameterError('destination must be a cell of the {0}x{0} grid, got {1}.'.format(
            grid, destination
        ))

    corners = corner_cells(grid)
    n_actions = len(MOVES) + 1
    n_states = grid * grid * N_PASSENGER_MASKS * N_TAXI_STATUSES
    rows, cols, probs = [], [], []
    reward = np.zeros((n_states, n_actions))

    for state in range(n_states):
        cell, passengers, status = decode_state(state)
        for action in range(n_actions):
            new_cell, new_passengers, new_status, dropped_off = apply_action(
                cell, passengers, status, action, grid, corners, destination
            )
            if dropped_off:
                reward[state, action] = dropoff_reward
            for mask, probability in appearance_outcomes(new_passengers, appear_probability):
                rows.append(state * n_actions + action)
                cols.append(encode_state(new_cell, mask, new_status))
                probs.append(probability)

    transition = sparse.csr_matrix((probs, (rows, cols)), shape=(n_states * n_actions, n_states))
    start = np.zeros(n_states)
    start[[encode_state(cell, 0, 0) for cell in range(grid * grid)]] = 1.0 / (grid * grid)
    return TabularMDP(
        n_states=n_states,
        n_actions=n_actions,
        transition=transition,
        reward=reward,
        mu0=Distribution(start),
        gamma=gamma,
    )
