"""Monte Carlo ground truth for the SIR of a scene.

Samples are generated in fixed-size blocks. Block ``b`` draws from its own
Philox stream keyed by ``(seed, b)``, so the output does not depend on how
many threads process the blocks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .numerics import cholesky
from .scenario import NetworkScene, build_sum_model, joint_covariance, path_loss

MODES = ("composite", "reduced")
BLOCK = 1 << 16


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    n_samples: int = 10 ** 6
    seed: int = 0
    mode: str = "reduced"
    threads: int = 1

    def __post_init__(self):
        if self.n_samples < 10 ** 3:
            raise ValueError("n_samples must be at least 1000")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass
class SampleSet:
    sir_db: np.ndarray
    meta: dict
    redraws: int = 0
    empty_first_draws: int = 0
    activity_counts: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fading_mean: float = float("nan")
    shadow_corr_estimate: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.sir_db.shape[0]


class EmpiricalCdf:
    """Sorted samples with step-CDF evaluation and interpolated quantiles."""

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __call__(self, x):
        out = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n
        return float(out) if np.ndim(out) == 0 else out

    def left(self, x):
        """P(X < x)."""
        out = np.searchsorted(self.values, np.asarray(x, dtype=float), side="left") / self.n
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, q):
        return np.quantile(self.values, q)

    def mean(self) -> float:
        return float(self.values.mean())


def empirical_cdf(samples) -> EmpiricalCdf:
    if isinstance(samples, SampleSet):
        samples = samples.sir_db
    return EmpiricalCdf(samples)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


@dataclass
class _Plan:
    mode: str
    mean: np.ndarray          # dB means, desired first
    sigma: np.ndarray         # composite: raw shadow sigma per link
    chol: np.ndarray          # composite: correlation factor; reduced: covariance factor
    m: np.ndarray
    p: np.ndarray


def _plan(scene: NetworkScene, mode: str) -> _Plan:
    p = np.array([l.activity_p for l in scene.interferers])
    if not np.any(p > 0):
        raise SimulationError("all interferers have zero activity; SIR is undefined")
    m = np.array([l.m for l in scene.links])
    if mode == "composite":
        mean = np.array([-path_loss(scene.pathloss, l.distance_m, l.is_los) for l in scene.links])
        sigma = np.array([l.shadow_sigma_db for l in scene.links])
        chol = cholesky(scene.correlation_matrix())
    else:
        desired, model, rho_pairs = build_sum_model(scene)
        mean, cov = joint_covariance(desired, model, rho_pairs)
        sigma = np.ones_like(mean)
        chol = cholesky(cov) if np.any(cov) else np.zeros_like(cov)
    return _Plan(mode, mean, sigma, chol, m, p)


def _run_block(plan: _Plan, seed: int, block: int, size: int):
    rng = _block_rng(seed, block)
    n_links = plan.mean.shape[0]
    z = rng.standard_normal((size, n_links)) @ plan.chol.T
    x = plan.mean + plan.sigma * z
    fade_sum, fade_n = 0.0, 0
    if plan.mode == "composite":
        for j in range(n_links):
            mj = plan.m[j]
            if math.isinf(mj):
                continue
            g = rng.standard_gamma(mj, size) / mj
            fade_sum += float(g.sum())
            fade_n += size
            x[:, j] += 10.0 * np.log10(g)
    nu = rng.random((size, n_links - 1)) < plan.p
    counts = nu.sum(axis=0)
    empty = ~nu.any(axis=1)
    n_empty = int(empty.sum())
    redraws = 0
    while empty.any():
        idx = np.flatnonzero(empty)
        nu[idx] = rng.random((idx.size, n_links - 1)) < plan.p
        redraws += idx.size
        empty[idx] = ~nu[idx].any(axis=1)
    xi = x[:, 1:]
    ref = xi.max(axis=1, keepdims=True)
    interf = np.sum(nu * 10.0 ** ((xi - ref) / 10.0), axis=1)
    sir = x[:, 0] - ref[:, 0] - 10.0 * np.log10(interf)
    return sir, (z.sum(axis=0), z.T @ z), counts, n_empty, redraws, fade_sum, fade_n


def simulate(scene: NetworkScene, cfg: SimConfig = SimConfig()) -> SampleSet:
    """Draw SIR samples for ``scene``.

    ``composite`` mode draws correlated shadowing, unit-mean Gamma fading and
    Bernoulli activity per link. ``reduced`` mode draws the fading-absorbed
    lognormal powers the analytical model works with. Activity vectors with
    no active interferer are redrawn.
    """
    plan = _plan(scene, cfg.mode)
    n_blocks = -(-cfg.n_samples // BLOCK)
    sizes = [min(BLOCK, cfg.n_samples - b * BLOCK) for b in range(n_blocks)]

    def work(b):
        return _run_block(plan, cfg.seed, b, sizes[b])

    if cfg.threads == 1:
        results = [work(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(work, range(n_blocks)))

    sir = np.concatenate([r[0] for r in results])
    if not np.all(np.isfinite(sir)):
        raise SimulationError("non-finite SIR samples")
    zsum = np.sum([r[1][0] for r in results], axis=0)
    zz = np.sum([r[1][1] for r in results], axis=0)
    zmean = zsum / cfg.n_samples
    zcov = zz / cfg.n_samples - np.outer(zmean, zmean)
    zstd = np.sqrt(np.diag(zcov))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr_est = zcov / np.outer(zstd, zstd)
    fade_n = sum(r[6] for r in results)
    return SampleSet(
        sir_db=sir,
        meta={**asdict(cfg), "scene": scene.digest()},
        redraws=sum(r[4] for r in results),
        empty_first_draws=sum(r[3] for r in results),
        activity_counts=np.sum([r[2] for r in results], axis=0),
        fading_mean=sum(r[5] for r in results) / fade_n if fade_n else float("nan"),
        shadow_corr_estimate=corr_est,
    )


def write_samples_csv(samples: SampleSet, path: str | Path) -> None:
    """Single-column CSV with a leading comment carrying scene digest and seed."""
    path = Path(path)
    meta = samples.meta
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# scene={meta.get('scene')} seed={meta.get('seed')} mode={meta.get('mode')} n={samples.n}\n")
        fh.write("sir_db\n")
        np.savetxt(fh, samples.sir_db, fmt="%.17g")


def read_samples_csv(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, comments="#", skiprows=2, ndmin=1)
