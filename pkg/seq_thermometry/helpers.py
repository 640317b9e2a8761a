"""Various helpers shared by the simulation pipelines
"""
import json
import logging
import math
import os
from typing import Iterator, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# records drawn from one random substream
RECORD_BLOCK = 1024

Seed = Union[int, Tuple[int, ...]]


def _entropy(seed: Seed):
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return int(seed)


def block_generator(seed: Seed, block: int) -> np.random.Generator:
    """ Independent generator for one block of records

    Substreams are keyed by (seed, block index) so a record depends only on
    the seed and its position, never on how many records were requested or
    in which order blocks are evaluated.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_entropy(seed), spawn_key=(block,))))


def record_blocks(seed: Seed, n_records: int) -> Iterator[Tuple[int, int, np.random.Generator]]:
    """ Yields (start, stop, generator) covering ``n_records`` records
    """
    for block in range(int(math.ceil(n_records / RECORD_BLOCK))):
        start = block * RECORD_BLOCK
        yield start, min(start + RECORD_BLOCK, n_records), block_generator(seed, block)


def format_float(value: float) -> str:
    """ 17 significant digits, enough to round-trip any double
    """
    return '{:.17g}'.format(value)


def jsonable(value):
    """ Converts numpy scalars and arrays into plain JSON types
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: str, document: dict):
    """ Writes a JSON document stamped with the schema version
    """
    body = {'schema_version': SCHEMA_VERSION}
    body.update(jsonable(document))
    with open(path, 'w') as f:
        json.dump(body, f, indent=2, sort_keys=True)
        f.write('\n')
    log.info('Wrote {}'.format(path))


def ensure_directory(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
