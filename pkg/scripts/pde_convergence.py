"""Convergence of the Goursat PDE solver in the dyadic refinement level.

Prints, per refinement level, the mean error against a fine reference solve
and the ratio between successive levels (4 for a second-order rate), plus the
unit-increment self-kernel against its series value.
"""

import math
from dataclasses import dataclass

import numpy as np

from _config import describe, parse_config
from sigstream.sig_kernel import kernel_pde_value, kernel_truncated
from sigstream.streams import Stream


@dataclass
class Config:
    pairs: int = 10
    max_length: int = 20
    dim: int = 2
    max_level: int = 5
    reference_level: int = 7
    seed: int = 0


def unit_scale(rng, length, dim):
    x = np.cumsum(rng.normal(size=(length, dim)), axis=0)
    return x / np.linalg.norm(np.diff(x, axis=0), axis=1).sum()


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    errs = np.zeros((cfg.pairs, cfg.max_level + 1))
    trunc = np.zeros(cfg.pairs)
    for p in range(cfg.pairs):
        x = Stream(unit_scale(rng, int(rng.integers(2, cfg.max_length + 1)), cfg.dim))
        y = Stream(unit_scale(rng, int(rng.integers(2, cfg.max_length + 1)), cfg.dim))
        ref = kernel_pde_value(x, y, cfg.reference_level)
        errs[p] = [abs(kernel_pde_value(x, y, lam) - ref) for lam in range(cfg.max_level + 1)]
        trunc[p] = abs(kernel_truncated(x, y, 12) - ref)
    print(describe(cfg))
    print(f"{'level':>5} {'mean error':>12} {'max error':>12} {'ratio':>7}")
    mean = errs.mean(axis=0)
    for lam in range(cfg.max_level + 1):
        ratio = f"{mean[lam - 1] / mean[lam]:7.2f}" if lam else ""
        print(f"{lam:>5} {mean[lam]:12.3e} {errs[:, lam].max():12.3e} {ratio}")
    print(f"reference vs truncated N=12: max {trunc.max():.2e}")

    line = Stream([[0.0, 0.0], [1.0, 0.0]])
    exact = sum(1.0 / math.factorial(n) ** 2 for n in range(40))
    print(f"\nunit-increment self-kernel, series value {exact:.7f}")
    for lam in range(cfg.max_level + 1):
        v = kernel_pde_value(line, line, lam)
        print(f"{lam:>5} {v:.7f} {exact - v:.2e}")


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
