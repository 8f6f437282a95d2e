"""Self-convergence of the log-ODE method for a non-commuting linear CDE.

The driver is a finely sampled smooth curve; the exact terminal state comes
from products of matrix exponentials over its linear pieces. Errors are
reported for each truncation depth as the number of coarse intervals doubles.
"""

from dataclasses import dataclass

import numpy as np

from _config import describe, parse_config
from sigstream.log_ode import LinearField, exact_linear_solution, solve_cde
from sigstream.streams import Stream


@dataclass
class Config:
    samples: int = 257
    amplitude: float = 1.0
    max_depth: int = 4
    max_intervals_log2: int = 5
    substeps: int = 32
    seed: int = 0


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    t = np.linspace(0.0, 1.0, cfg.samples)
    c = rng.normal(size=(2, 2)) * cfg.amplitude
    X = Stream(np.stack([c[i, 0] * np.sin(np.pi * t) + c[i, 1] * t for i in range(2)], axis=1), t)
    B = LinearField([[[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]])
    z0 = np.array([1.0, 0.0])
    exact = exact_linear_solution(z0, B, X)
    ms = [2**j for j in range(cfg.max_intervals_log2 + 1)]
    print(describe(cfg))
    print("depth " + " ".join(f"{'m=' + str(m):>10}" for m in ms))
    for depth in range(1, cfg.max_depth + 1):
        errs = [np.linalg.norm(solve_cde(z0, B, X, m, depth, cfg.substeps).terminal - exact) for m in ms]
        print(f"{depth:>5} " + " ".join(f"{e:10.2e}" for e in errs))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
