"""
Provides facilities for the CSV encoding of outcome records.
A batch of M records of N sequential measurements is stored
one record per row, preceded by a header naming the columns:

record_id,s_1,s_2,s_3
0,1,-1,1
1,-1,-1,1

Every outcome is written as the integer 1 or -1. The header
fixes N; a file with a valid header and no rows is an empty
batch. A JSON sidecar next to the CSV file carries the seed,
protocol, bath parameters and the covariance convention of the
sampler that produced it.
"""
import csv
import io
import logging
import os
from typing import Iterable, Iterator, List

import numpy as np

from seq_thermometry import helpers
from seq_thermometry.errors import ConfigError

log = logging.getLogger(__name__)


def header(n_measurements: int) -> List[str]:
    return ['record_id'] + ['s_{}'.format(j) for j in range(1, n_measurements + 1)]


class Encoder():
    """Encode a batch of outcome records into CSV lines.

       The encoder is bound to a fixed number of measurements per
       record. 'encode(records)' yields the header line followed by
       one line per record; record ids continue from the records
       already encoded, so a batch may be encoded in pieces.

       :param n_measurements: number of outcomes per record
       :type n_measurements: int
    """

    def __init__(self, n_measurements: int):
        self.n_measurements = n_measurements
        self.next_id = 0

    def encode(self, records) -> Iterator[str]:
        """Encode records into CSV lines.

        :param records: array of shape (M, N) holding +1 and -1
        :type records: numpy.ndarray
        :returns: CSV lines, header first on the first call
        :rtype: iterator of str
        """
        records = np.asarray(records).reshape(-1, self.n_measurements)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        if self.next_id == 0:
            writer.writerow(header(self.n_measurements))
        for row in records:
            writer.writerow([self.next_id] + [int(v) for v in row])
            self.next_id += 1
        yield from buffer.getvalue().splitlines(keepends=True)


class Decoder():
    """Decode CSV lines back into an outcome array.

       The first line must be the header; it fixes the number of
       outcomes per record. Every following line must carry the
       expected record id and exactly N outcomes of 1 or -1. Any
       violation raises a ConfigError naming the offending line,
       after which the decoder refuses further input.
    """

    HEADER = 0
    RECORD = 1
    FAILED = 2

    def __init__(self):
        self.state = self.HEADER
        self.n_measurements = None
        self.line_number = 0
        self.rows = []

    def _fail(self, message: str):
        self.state = self.FAILED
        raise ConfigError('Line {}: {}'.format(self.line_number, message))

    def decode(self, lines: Iterable[str]) -> np.ndarray:
        """Decode CSV lines into an (M, N) int8 array.

        :param lines: CSV text lines, header first
        :type lines: iterable of str
        :returns: the records decoded so far
        :rtype: numpy.ndarray
        """
        if self.state == self.FAILED:
            raise ConfigError('Decoder is in a FAILED state')

        for row in csv.reader(lines):
            self.line_number += 1
            if self.state == self.HEADER:
                if len(row) < 2 or row != header(len(row) - 1):
                    self._fail('expected header record_id,s_1,...,s_N, got {}'.format(','.join(row)))
                self.n_measurements = len(row) - 1
                self.state = self.RECORD
                continue
            if len(row) != self.n_measurements + 1:
                self._fail('expected {} fields, got {}'.format(self.n_measurements + 1, len(row)))
            try:
                record_id = int(row[0])
                outcomes = [int(v) for v in row[1:]]
            except ValueError:
                self._fail('non-integer field in {}'.format(','.join(row)))
            if record_id != len(self.rows):
                self._fail('expected record id {}, got {}'.format(len(self.rows), record_id))
            if any(v not in (1, -1) for v in outcomes):
                self._fail('outcomes must be 1 or -1')
            self.rows.append(outcomes)

        if self.state == self.HEADER:
            self._fail('missing header')
        return np.array(self.rows, dtype=np.int8).reshape(-1, self.n_measurements)


def write_records(path: str, records, n_measurements: int, metadata: dict=None):
    """ Writes records to ``path`` and, when given, the metadata sidecar
    """
    records = np.asarray(records).reshape(-1, n_measurements)
    n = n_measurements
    with open(path, 'w', newline='') as f:
        f.writelines(Encoder(n).encode(records))
    if metadata is not None:
        helpers.write_json(metadata_path(path), metadata)
    log.info('Wrote {} records to {}'.format(len(records), path))


def read_records(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise ConfigError('Records file {} does not exist'.format(path))
    with open(path, newline='') as f:
        return Decoder().decode(f)


def metadata_path(path: str) -> str:
    return os.path.splitext(path)[0] + '.json'
