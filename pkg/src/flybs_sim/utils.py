import re

import numpy as np


def dbm_to_watt(dbm: float) -> float:
    """Converts a power level in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def noise_power(density_dbm_hz: float, bandwidth: float) -> float:
    """Thermal noise power (W) over `bandwidth` Hz for a density given in dBm/Hz."""
    return dbm_to_watt(density_dbm_hz) * bandwidth


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """
    Splits a master seed into `count` independent, reproducible per-drop seeds.

    Args:
        master_seed (int): The seed of the whole experiment.
        count (int): Number of child seeds.

    Returns:
        list[int]: One 63-bit seed per drop, stable for a given (master_seed, index).
    """
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for child in children]


def camel_to_snake(name):
    """
    Converts a camel case string to a snake case string.

    Args:
        name (str): The input string in camel case.

    Returns:
        str: The converted string in snake case.
    """
    s1 = re.sub('(.)([A-Z][a-z]+)', r'\1_\2', name)
    return re.sub('([a-z0-9])([A-Z])', r'\1_\2', s1).lower()
