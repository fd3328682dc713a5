"""Link geometry, path loss and scene construction.

A :class:`NetworkScene` holds the desired link and the K interferer links of
one UE. :func:`build_sum_model` turns it into the dB-domain Gaussian inputs of
the analytical pipeline.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from .fading import GammaFading, LognormalParams, composite_to_lognormal
from .numerics import FactorizationError, cholesky


class SceneError(ValueError):
    """Invalid scene definition or layout file."""


@dataclass(frozen=True)
class PathLossModel:
    pl_ref_db: float
    n_los: float
    n_nlos: float
    d_ref_m: float = 1.0

    def __post_init__(self):
        if not (self.n_los > 0 and self.n_nlos > 0 and self.d_ref_m > 0):
            raise SceneError("path-loss exponents and reference distance must be positive")
        if self.n_nlos < self.n_los:
            warnings.warn(
                f"NLOS exponent {self.n_nlos} is below LOS exponent {self.n_los}",
                stacklevel=3,
            )


#: UMa defaults: NLOS-only exponent 3.9; the intercept cancels in the SIR.
UMA_PATHLOSS = PathLossModel(pl_ref_db=28.0, n_los=3.9, n_nlos=3.9, d_ref_m=1.0)


@dataclass(frozen=True)
class LinkModel:
    distance_m: float
    is_los: bool
    shadow_sigma_db: float
    m: float
    activity_p: float = 1.0

    def __post_init__(self):
        if not self.distance_m >= 0:
            raise SceneError(f"distance must be nonnegative, got {self.distance_m}")
        if not 0.0 <= self.activity_p <= 1.0:
            raise SceneError(f"activity probability must lie in [0, 1], got {self.activity_p}")
        if not self.shadow_sigma_db >= 0:
            raise SceneError("shadowing sigma must be nonnegative")
        if not self.m >= 0.5:
            raise SceneError(f"Gamma shape m must be >= 0.5, got {self.m}")


@dataclass(frozen=True)
class NetworkScene:
    """Desired link plus K interferers.

    ``shadow_corr`` is either one pairwise coefficient shared by all K+1
    links or a full (K+1)x(K+1) correlation matrix ordered desired-first.
    """

    desired: LinkModel
    interferers: tuple[LinkModel, ...]
    shadow_corr: float | tuple[tuple[float, ...], ...]
    pathloss: PathLossModel

    def __post_init__(self):
        object.__setattr__(self, "interferers", tuple(self.interferers))
        if not isinstance(self.shadow_corr, (int, float)):
            object.__setattr__(
                self, "shadow_corr", tuple(tuple(float(v) for v in row) for row in self.shadow_corr)
            )
        if not self.interferers:
            raise SceneError("a scene needs at least one interferer")
        corr = self.correlation_matrix()
        try:
            cholesky(corr)
        except FactorizationError as exc:
            raise SceneError(f"shadowing correlation matrix is not positive definite: {exc}") from exc

    @property
    def links(self) -> tuple[LinkModel, ...]:
        return (self.desired,) + self.interferers

    @property
    def n_interferers(self) -> int:
        return len(self.interferers)

    def correlation_matrix(self) -> np.ndarray:
        n = self.n_interferers + 1
        if isinstance(self.shadow_corr, (int, float)):
            rho = float(self.shadow_corr)
            if not -1.0 <= rho <= 1.0:
                raise SceneError(f"shadow correlation must lie in [-1, 1], got {rho}")
            corr = np.full((n, n), rho)
            np.fill_diagonal(corr, 1.0)
            return corr
        corr = np.array(self.shadow_corr, dtype=float)
        if corr.shape != (n, n):
            raise SceneError(f"correlation matrix must be {n}x{n}, got {corr.shape}")
        if not np.allclose(np.diag(corr), 1.0) or not np.allclose(corr, corr.T):
            raise SceneError("correlation matrix must be symmetric with unit diagonal")
        return corr

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CorrelatedSumModel:
    """Gaussian dB powers x ~ N(mu, cov) gated by Bernoulli(p) activities."""

    mu: np.ndarray
    cov: np.ndarray
    p: np.ndarray
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        k = mu.shape[0]
        if cov.shape != (k, k) or p.shape != (k,):
            raise ValueError(f"inconsistent shapes: mu {mu.shape}, cov {cov.shape}, p {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("activity probabilities must lie in [0, 1]")
        if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, float(np.max(np.abs(cov))))):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "p", p)

    @property
    def k(self) -> int:
        return self.mu.shape[0]

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def chol(self) -> np.ndarray:
        """Cholesky factor of ``cov``; cached."""
        if self._chol is None:
            object.__setattr__(self, "_chol", cholesky(self.cov))
        return self._chol

    def is_degenerate(self) -> bool:
        return not np.any(self.cov)

    def shifted(self, offset_db: float) -> "CorrelatedSumModel":
        return CorrelatedSumModel(self.mu + offset_db, self.cov, self.p, self._chol)

    def permuted(self, order: Sequence[int]) -> "CorrelatedSumModel":
        idx = np.asarray(order)
        return CorrelatedSumModel(self.mu[idx], self.cov[np.ix_(idx, idx)], self.p[idx])


def path_loss(model: PathLossModel, d: float, is_los: bool) -> float:
    """Mean path loss in dB at distance ``d`` meters."""
    if not d >= model.d_ref_m:
        raise SceneError(f"distance {d} m is below the reference distance {model.d_ref_m} m")
    n = model.n_los if is_los else model.n_nlos
    return model.pl_ref_db + 10.0 * n * math.log10(d / model.d_ref_m)


def _nearest_full(links: list[LinkModel]) -> list[LinkModel]:
    nearest = min(range(len(links)), key=lambda i: (links[i].distance_m, i))
    out = list(links)
    l = out[nearest]
    out[nearest] = LinkModel(l.distance_m, l.is_los, l.shadow_sigma_db, l.m, 1.0)
    return out


def hex_uma_scene(
    isd_m: float = 500.0,
    ue_polar: tuple[float, float] = (25.0, 0.0),
    p_default: float = 0.5,
    shadow_sigma_db: float = 6.0,
    shadow_corr: float = 0.5,
    pathloss: PathLossModel = UMA_PATHLOSS,
    m: float = 1.0,
) -> NetworkScene:
    """Central UE of a 7-cell hexagonal layout, serving AP at the origin.

    Interferer k sits at distance ``isd_m`` and angle k*60 degrees; all links
    are NLOS and the nearest interferer is always active.
    """
    r, theta = float(ue_polar[0]), float(ue_polar[1])
    if not 0.0 <= r < isd_m / math.sqrt(3.0):
        raise SceneError(f"UE radius {r} m lies outside the central cell (ISD {isd_m} m)")
    if not 0.0 <= p_default <= 1.0:
        raise SceneError(f"activity probability must lie in [0, 1], got {p_default}")
    desired = LinkModel(r, False, shadow_sigma_db, m, 1.0)
    links = []
    for k in range(6):
        d = math.sqrt(max(r * r + isd_m * isd_m - 2.0 * r * isd_m * math.cos(theta - k * math.pi / 3), 0.0))
        links.append(LinkModel(d, False, shadow_sigma_db, m, p_default))
    return NetworkScene(desired, tuple(_nearest_full(links)), shadow_corr, pathloss)


def hex_uma_layout(isd_m: float = 500.0, ue_polar: tuple[float, float] = (25.0, 0.0),
                   p_default: float = 0.5, shadow_sigma_db: float = 6.0,
                   shadow_corr: float = 0.5, pathloss: PathLossModel = UMA_PATHLOSS,
                   m: float = 1.0) -> dict[str, Any]:
    """The same 7-cell layout as :func:`hex_uma_scene`, as a layout mapping."""
    r, theta = ue_polar
    aps = [{"x_m": 0.0, "y_m": 0.0, "p": 1.0, "los_to_ue": False}]
    for k in range(6):
        aps.append({
            "x_m": isd_m * math.cos(k * math.pi / 3),
            "y_m": isd_m * math.sin(k * math.pi / 3),
            "p": p_default,
            "los_to_ue": False,
        })
    return {
        "aps": aps,
        "ue": {"x_m": r * math.cos(theta), "y_m": r * math.sin(theta)},
        "shadow": {"sigma_los_db": shadow_sigma_db, "sigma_nlos_db": shadow_sigma_db, "corr": shadow_corr},
        "pathloss": asdict(pathloss),
        "fading": {"m_los": m, "m_nlos": m},
    }


def _require(mapping: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(mapping, Mapping) or key not in mapping:
        raise SceneError(f"missing required field '{where}{key}'")
    return mapping[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneError(f"field '{where}' must be a number, got {value!r}")
    return float(value)


def scene_from_layout(layout: Mapping[str, Any]) -> NetworkScene:
    """Build a scene from a parsed layout mapping (see :func:`load_scene_file`)."""
    aps = _require(layout, "aps", "")
    if not isinstance(aps, list) or len(aps) < 2:
        raise SceneError("layout needs at least 2 APs")
    ue = _require(layout, "ue", "")
    ux = _number(_require(ue, "x_m", "ue."), "ue.x_m")
    uy = _number(_require(ue, "y_m", "ue."), "ue.y_m")
    shadow = _require(layout, "shadow", "")
    sig_los = _number(_require(shadow, "sigma_los_db", "shadow."), "shadow.sigma_los_db")
    sig_nlos = _number(_require(shadow, "sigma_nlos_db", "shadow."), "shadow.sigma_nlos_db")
    corr_raw = _require(shadow, "corr", "shadow.")
    pl = _require(layout, "pathloss", "")
    pathloss = PathLossModel(
        pl_ref_db=_number(_require(pl, "pl_ref_db", "pathloss."), "pathloss.pl_ref_db"),
        n_los=_number(_require(pl, "n_los", "pathloss."), "pathloss.n_los"),
        n_nlos=_number(_require(pl, "n_nlos", "pathloss."), "pathloss.n_nlos"),
        d_ref_m=_number(_require(pl, "d_ref_m", "pathloss."), "pathloss.d_ref_m"),
    )
    fad = _require(layout, "fading", "")
    m_los = _number(_require(fad, "m_los", "fading."), "fading.m_los")
    m_nlos = _number(_require(fad, "m_nlos", "fading."), "fading.m_nlos")
    force = layout.get("force_nearest_active", True)

    seen = set()
    links = []
    for i, ap in enumerate(aps):
        where = f"aps[{i}]."
        x = _number(_require(ap, "x_m", where), where + "x_m")
        y = _number(_require(ap, "y_m", where), where + "y_m")
        if (x, y) in seen:
            raise SceneError(f"duplicate AP coordinates ({x}, {y}) at aps[{i}]")
        seen.add((x, y))
        p = _number(ap.get("p", 1.0), where + "p")
        if not 0.0 <= p <= 1.0:
            raise SceneError(f"{where}p must lie in [0, 1], got {p}")
        los = ap.get("los_to_ue", False)
        if not isinstance(los, bool):
            raise SceneError(f"{where}los_to_ue must be a boolean")
        d = math.hypot(x - ux, y - uy)
        links.append(LinkModel(d, los, sig_los if los else sig_nlos, m_los if los else m_nlos, p))

    serving = min(range(len(links)), key=lambda i: (links[i].distance_m, i))
    d0 = links[serving]
    desired = LinkModel(d0.distance_m, d0.is_los, d0.shadow_sigma_db, d0.m, 1.0)
    order = [i for i in range(len(links)) if i != serving]
    interferers = [links[i] for i in order]
    if force:
        interferers = _nearest_full(interferers)

    if isinstance(corr_raw, list):
        full = np.array(corr_raw, dtype=float)
        idx = [serving] + order
        if full.shape != (len(links), len(links)):
            raise SceneError(f"shadow.corr matrix must be {len(links)}x{len(links)}")
        corr: Any = tuple(map(tuple, full[np.ix_(idx, idx)]))
    else:
        corr = _number(corr_raw, "shadow.corr")
    return NetworkScene(desired, tuple(interferers), corr, pathloss)


def load_layout(path: str | Path) -> dict[str, Any]:
    """Parse a YAML (or JSON) layout file, reporting the line of syntax errors."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else "?"
        raise SceneError(f"{path}: parse error at line {line}: {exc.problem}") from exc
    if not isinstance(data, dict):
        raise SceneError(f"{path}: layout must be a mapping at top level")
    return data


def load_scene_file(path: str | Path) -> NetworkScene:
    """Read a layout file and build the scene with nearest-AP association.

    Layout fields::

        aps: [{x_m, y_m, p, los_to_ue}]
        ue: {x_m, y_m}
        shadow: {sigma_los_db, sigma_nlos_db, corr}
        pathloss: {pl_ref_db, d_ref_m, n_los, n_nlos}
        fading: {m_los, m_nlos}
        force_nearest_active: true   # optional
    """
    return scene_from_layout(load_layout(path))


def build_sum_model(scene: NetworkScene) -> tuple[LognormalParams, CorrelatedSumModel, np.ndarray]:
    """dB-domain Gaussian description of the desired and interfering powers.

    Each link is reduced to a lognormal with the Gamma fading absorbed.
    Shadowing is correlated but the fading is independent per link, so the
    off-diagonal covariances are ``rho_jk * sigma_j * sigma_k`` using the raw
    shadowing deviations while the diagonal carries the fading-inflated
    variances. ``rho_pairs`` holds the resulting dB correlation between the
    desired power and each interferer.
    """
    reduced = []
    for link in scene.links:
        pl = path_loss(scene.pathloss, link.distance_m, link.is_los)
        reduced.append(composite_to_lognormal(LognormalParams(-pl, link.shadow_sigma_db), GammaFading(link.m)))
    corr = scene.correlation_matrix()
    raw_sigma = np.array([l.shadow_sigma_db for l in scene.links])
    mod_sigma = np.array([r.sigma_db for r in reduced])
    cov = corr * np.outer(raw_sigma, raw_sigma)
    np.fill_diagonal(cov, mod_sigma ** 2)

    desired = reduced[0]
    model = CorrelatedSumModel(
        mu=np.array([r.mu_db for r in reduced[1:]]),
        cov=cov[1:, 1:],
        p=np.array([l.activity_p for l in scene.interferers]),
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        rho_pairs = np.where(mod_sigma[1:] * mod_sigma[0] > 0,
                             cov[0, 1:] / (mod_sigma[0] * mod_sigma[1:]), 0.0)
    return desired, model, rho_pairs


def joint_covariance(desired: LognormalParams, model: CorrelatedSumModel,
                     rho_pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(K+1)-dim mean and covariance of (X0, X1..XK), desired first."""
    k = model.k
    mean = np.empty(k + 1)
    mean[0] = desired.mu_db
    mean[1:] = model.mu
    cov = np.empty((k + 1, k + 1))
    cov[1:, 1:] = model.cov
    cov[0, 0] = desired.sigma_db ** 2
    cov[0, 1:] = cov[1:, 0] = np.asarray(rho_pairs) * desired.sigma_db * model.sigma
    return mean, cov
