""" Command line front end

Every command reads a run configuration (``--config``, defaulting to the
built-in reference bath), applies the flag overrides and writes its
artifacts below ``--out``:

  fisher    precision_report.json
  sweep     lag_ratio.csv, ncor.csv, enhancement.csv, sweep_summary.json
  simulate  records.csv, records.json
  estimate  estimate.json
  spectrum  lags.csv, spectrum.csv

CSV floats carry 17 significant digits so reruns compare byte for byte.
"""
import argparse
import csv
import logging
import os
import sys
from typing import Iterable, List, Sequence

import numpy as np

from seq_thermometry import (
    correlations,
    estimation,
    helpers,
    logger,
    records,
    sequential,
    spectroscopy,
)
from seq_thermometry.config import RunConfig
from seq_thermometry.errors import ConfigError, ThermometryError

log = logging.getLogger(__name__)

# N = 1..64 are always part of the N_cor sweep
SMALL_N = 64
SWEEP_POINTS = 200
NCOR_SLOPE_RANGE = (4, 50)
QSNR_SLOPE_SMALL = (16, 64)


def _write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (int, np.integer)) else helpers.format_float(v) for v in row])
    log.info('Wrote {}'.format(path))


def _out_dir(config: RunConfig) -> str:
    return helpers.ensure_directory(config.run.out)


def sweep_sizes(n_max: int) -> np.ndarray:
    """ Every N up to 64, then log-spaced sizes up to ``n_max``
    """
    small = np.arange(1, min(SMALL_N, n_max) + 1)
    if n_max <= SMALL_N:
        return small
    large = np.unique(np.round(np.geomspace(SMALL_N, n_max, SWEEP_POINTS)).astype(int))
    return np.union1d(small, large)


def _log_slope(ns: np.ndarray, values: np.ndarray) -> float:
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


def run_scaling_sweep(config: RunConfig, n_max: int=None) -> dict:
    """ Lag ratio, N_cor and enhancement curves of the configured bath

    :returns: the summary document also written to sweep_summary.json
    """
    n_max = n_max or config.run.n_max
    bath = config.bath.build()
    t, kernel = config.protocol.window, config.run.kernel
    out = _out_dir(config)

    horizon = correlations.decay_horizon(bath, t, kernel)
    d_lags = correlations.derivative_lags(bath, t, horizon, kernel)
    ratios = correlations.lag_ratios(d_lags)
    length = correlations.correlation_length(d_lags)
    n_s = correlations.n_saturation(d_lags)

    ns = sweep_sizes(n_max)
    curve = correlations.n_cor_curve(d_lags, ns)
    enhancement = estimation.enhancement_slope() * curve

    _write_csv(os.path.join(out, 'lag_ratio.csv'), ('n', 'ratio'),
               zip(range(min(len(ratios), n_max + 1)), ratios))
    _write_csv(os.path.join(out, 'ncor.csv'), ('N', 'n_cor'), zip(ns, curve))
    _write_csv(os.path.join(out, 'enhancement.csv'), ('N', 'R'), zip(ns, enhancement))

    small = np.arange(NCOR_SLOPE_RANGE[0], NCOR_SLOPE_RANGE[1] + 1)
    qsnr_small = np.arange(QSNR_SLOPE_SMALL[0], QSNR_SLOPE_SMALL[1] + 1)
    qsnr_large = np.unique(np.round(np.geomspace(10 * length.n_c, 100 * length.n_c, 64)).astype(int))
    summary = {
        'n_c': length.n_c,
        'n_c_floor': length.n_c_floor,
        'n_s': n_s,
        'n_max': n_max,
        'n_cor_at_n_max': float(curve[-1]),
        'enhancement_plateau': estimation.enhancement_slope() * n_s,
        'ncor_small_n_slope': float(np.polyfit(small, correlations.n_cor_curve(d_lags, small), 1)[0]),
        'qsnr_slope_small_n': _log_slope(qsnr_small, qsnr_small * correlations.n_cor_curve(d_lags, qsnr_small)),
        'qsnr_slope_large_n': _log_slope(qsnr_large, qsnr_large * correlations.n_cor_curve(d_lags, qsnr_large)),
        'regimes': {
            'heisenberg_below_n': estimation.HEISENBERG_FRACTION * length.n_c,
            'saturated_above_n': estimation.SATURATION_MULTIPLE * length.n_c},
        'lags_evaluated': len(d_lags),
        'config': config.to_dict()}
    helpers.write_json(os.path.join(out, 'sweep_summary.json'), summary)
    log.info('N_c = {:.4g}, N_s = {:.4g}'.format(length.n_c, n_s))
    return summary


def run_fisher(config: RunConfig) -> estimation.PrecisionReport:
    report = estimation.qsnr_bounds(config.bath.build(), config.protocol.build(), kernel=config.run.kernel)
    document = report.to_dict()
    document['config'] = config.to_dict()
    helpers.write_json(os.path.join(_out_dir(config), 'precision_report.json'), document)
    return report


def run_simulate(config: RunConfig) -> str:
    """ Samples ``trials`` records and writes them with a metadata sidecar

    :returns: path of the records file
    """
    bath, protocol = config.bath.build(), config.protocol.build()
    corr = correlations.compute_correlations(bath, protocol.grid, kernel=config.run.kernel,
                                             include_quantum=config.run.quantum_term)
    cov = sequential.build_aux_covariance(corr, protocol, include_quantum_term=config.run.quantum_term)
    batch = sequential.sample_records(cov, protocol, config.run.trials, config.run.seed)
    path = os.path.join(_out_dir(config), 'records.csv')
    metadata = {
        'seed': config.run.seed,
        'n_records': config.run.trials,
        'n_measurements': protocol.n_measurements,
        'covariance_convention': cov.convention,
        'covariance_clipped': cov.clipped,
        'config': config.to_dict()}
    records.write_records(path, batch, protocol.n_measurements, metadata)
    return path


def _beta_bounds(config: RunConfig):
    beta = config.bath.beta
    return (config.run.beta_lo or beta / 4.0, config.run.beta_hi or beta * 4.0)


def _protocol_for(config: RunConfig, batch: np.ndarray) -> sequential.MeasurementProtocol:
    protocol = config.protocol.build()
    if batch.shape[1] != protocol.n_measurements:
        log.info('Records carry {} measurements, config says {}; using the records'.format(
            batch.shape[1], protocol.n_measurements))
        protocol = protocol.with_n(batch.shape[1])
    return protocol


def run_estimate(records_path: str, config: RunConfig, beta_bounds=None) -> estimation.MleEstimate:
    batch = records.read_records(records_path)
    protocol = _protocol_for(config, batch)
    bounds = beta_bounds or _beta_bounds(config)
    estimate = estimation.mle_estimate(batch, protocol, config.bath.build(), bounds, kernel=config.run.kernel)
    document = estimate.to_dict()
    document.update({'records': records_path, 'beta_bounds': list(bounds), 'config': config.to_dict()})
    helpers.write_json(os.path.join(_out_dir(config), 'estimate.json'), document)
    return estimate


def run_spectrum(records_path: str, config: RunConfig) -> spectroscopy.Spectrum:
    batch = records.read_records(records_path)
    protocol = _protocol_for(config, batch)
    bath = config.bath.build()
    c0 = float(correlations.classical_lags(bath, protocol.window, 1, config.run.kernel)[0])
    pcm = spectroscopy.pair_correlation_matrix(batch)
    lag_sequence = spectroscopy.reconstruct_correlation(pcm, protocol, bath.t2, c0=c0)
    spectrum = spectroscopy.noise_spectrum(lag_sequence, protocol, window=config.run.spectrum_window)
    reference = spectroscopy.reference_spectrum(bath, protocol, spectrum.omega)
    out = _out_dir(config)
    _write_csv(os.path.join(out, 'lags.csv'), ('lag', 'c_hat', 'se'), zip(*lag_sequence))
    _write_csv(os.path.join(out, 'spectrum.csv'), ('omega', 'power', 'se', 'reference'),
               zip(spectrum.omega, spectrum.power, spectrum.se, reference))
    return spectrum


def _common_arguments() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config', help='INI run configuration (default: built-in reference bath)')
    parser.add_argument('--out', help='output directory')
    parser.add_argument('--seed', type=int, help='random seed')
    parser.add_argument('--trials', type=int, help='number of records M')
    parser.add_argument('--n-max', type=int, dest='n_max', help='largest N of the sweeps')
    parser.add_argument('--beta-lo', type=float, dest='beta_lo', help='lower bound of the beta search')
    parser.add_argument('--beta-hi', type=float, dest='beta_hi', help='upper bound of the beta search')
    parser.add_argument('--log-level', default=os.getenv('LOG_LEVEL', 'INFO'),
                        choices=sorted(logger.LOG_LEVELS), help='log level')
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_arguments()
    parser = argparse.ArgumentParser(
        prog='seq-thermometry', description='Sequential-measurement thermometry of a dephasing bath.')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True
    commands.add_parser('fisher', parents=[common], help='precision bounds of the configured protocol')
    commands.add_parser('sweep', parents=[common], help='correlation length, N_cor and enhancement sweeps')
    commands.add_parser('simulate', parents=[common], help='sample outcome records')
    for name, text in (('estimate', 'maximum-likelihood temperature from records'),
                       ('spectrum', 'noise spectrum reconstructed from records')):
        command = commands.add_parser(name, parents=[common], help=text)
        command.add_argument('records', help='records CSV written by simulate')
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig.default()
    try:
        return config.replace(out=args.out, seed=args.seed, trials=args.trials, n_max=args.n_max,
                              beta_lo=args.beta_lo, beta_hi=args.beta_hi)
    except ThermometryError as ex:
        raise ConfigError('Invalid command line override: {}'.format(ex)) from ex


def dispatch(args: argparse.Namespace):
    config = load_config(args)
    if args.command == 'fisher':
        run_fisher(config)
    elif args.command == 'sweep':
        run_scaling_sweep(config)
    elif args.command == 'simulate':
        run_simulate(config)
    elif args.command == 'estimate':
        run_estimate(args.records, config)
    elif args.command == 'spectrum':
        run_spectrum(args.records, config)


def main(argv: List[str]=None) -> int:
    args = build_parser().parse_args(argv)
    logger.setup(args.log_level)
    try:
        dispatch(args)
    except ThermometryError as ex:
        log.error('{}: {}'.format(type(ex).__name__, ex))
        return ex.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
