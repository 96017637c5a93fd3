"""Synthetic Gaussian AR(1) data for experiments and fixtures.

Run as a module to write a TSF file:

    python -m copulapaths.synthetic --out data.tsf --series 50 --length 120 \
        --horizon 14 --phi 0.8 --sigma 5 --mu 100 --seed 1
"""

import argparse

import numpy as np

from .data_io import Dataset, TimeSeries, write_tsf


def simulate_ar1(
    phi: float,
    sigma: float,
    mu: float,
    length: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate x_t - mu = phi (x_{t-1} - mu) + sigma e_t from a stationary start."""
    x = np.empty(length)
    if abs(phi) < 1.0:
        x[0] = mu + sigma / np.sqrt(1.0 - phi * phi) * rng.standard_normal()
    else:
        x[0] = mu + sigma * rng.standard_normal()
    noise = sigma * rng.standard_normal(length - 1)
    for t in range(1, length):
        x[t] = mu + phi * (x[t - 1] - mu) + noise[t - 1]
    return x


def ar1_dataset(
    n_series: int,
    length: int,
    horizon: int,
    phi,
    sigma: float,
    mu: float,
    seed: int,
    name: str = "synthetic_ar1",
    frequency: str = "daily",
) -> tuple[Dataset, dict]:
    """Build an unsplit dataset of AR(1) series.

    ``phi`` may be a scalar, a (lo, hi) range sampled uniformly per series,
    or a sequence cycled over the series.  Returns the dataset and the true
    phi per series id.
    """
    rng = np.random.default_rng(seed)
    if np.isscalar(phi):
        phis = np.full(n_series, float(phi))
    elif len(phi) == 2 and not isinstance(phi, np.ndarray):
        phis = rng.uniform(phi[0], phi[1], size=n_series)
    else:
        phis = np.asarray(phi, dtype=float)[np.arange(n_series) % len(phi)]
    series = []
    truth = {}
    for k in range(n_series):
        sid = f"S{k:04d}"
        series.append(
            TimeSeries(id=sid, values=simulate_ar1(phis[k], sigma, mu, length, rng))
        )
        truth[sid] = float(phis[k])
    dataset = Dataset(
        name=name,
        frequency=frequency,
        seasonality=1,
        horizon=horizon,
        series=tuple(series),
    )
    return dataset, truth


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic AR(1) TSF file.")
    parser.add_argument("--out", required=True)
    parser.add_argument("--series", type=int, default=50)
    parser.add_argument("--length", type=int, default=120)
    parser.add_argument("--horizon", type=int, default=14)
    parser.add_argument("--phi", type=float, default=0.8)
    parser.add_argument("--sigma", type=float, default=5.0)
    parser.add_argument("--mu", type=float, default=100.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    dataset, _ = ar1_dataset(
        args.series, args.length, args.horizon, args.phi, args.sigma, args.mu, args.seed
    )
    write_tsf(dataset, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
