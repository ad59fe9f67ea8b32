"""Shared data types, run configuration, and validation.

Everything downstream (affinities, macro model, optimizer, CLI) speaks in
terms of these types. They are plain frozen dataclasses around float64
arrays; treat the arrays as read-only once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

GRADIENT_MODES = ("paper", "exact")


@dataclass(frozen=True)
class Dataset:
    """N points in R^D with optional integer class labels.

    x is coerced to a float64 matrix. Invariants: N >= 2, D >= 1, all
    entries finite, labels (when present) one per row.
    """

    x: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        if x.ndim != 2:
            raise ValueError(f"x must be 2-D, got ndim={x.ndim}")
        if x.shape[0] < 2:
            raise ValueError(f"need at least 2 points, got {x.shape[0]}")
        if x.shape[1] < 1:
            raise ValueError("need at least 1 input dimension")
        if not np.all(np.isfinite(x)):
            raise ValueError("x contains non-finite entries")
        object.__setattr__(self, "x", x)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (x.shape[0],):
                raise ValueError(
                    f"labels must have length {x.shape[0]}, got shape {labels.shape}"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class Embedding:
    """Low-dimensional map positions, one row per input point."""

    y: np.ndarray

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        if y.ndim != 2:
            raise ValueError(f"y must be 2-D, got ndim={y.ndim}")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite entries")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class EmbedConfig:
    """All knobs of one embedding run.

    pca_dims and n_neighbors may be left as None and are then filled in by
    resolve_config once the data shape is known (min(50, D) and
    3 * perplexity respectively).
    """

    perplexity: float = 30.0          # target effective neighbor count
    alpha: float = 1e-2               # weight of the centroid-affinity loss
    beta: float = 5e-2                # weight of the soft k-means loss
    n_clusters: int = 90              # macro centroid count K
    pca_dims: Optional[int] = None    # spectral pre-reduction width
    out_dims: int = 2                 # map dimensionality (2 or 3)
    n_neighbors: Optional[int] = None  # neighbor list length per point
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch_iter: int = 250
    n_iter: int = 1000
    bh_theta: float = 0.5             # tree-force accuracy, 0 means exact
    gradient_mode: str = "exact"      # "paper" or "exact" centroid term
    seed: int = 0
    perplexity_tol: float = 1e-5      # calibration tolerance on 2^H
    init_stddev: float = 1e-2         # spread of the random initial map
    early_exaggeration: float = 1.0   # multiplier on P, 1.0 disables
    early_exaggeration_iter: int = 250
    pca_center: bool = True           # subtract column means before PCA
    log_every: int = 50


# How each config field is parsed back from text. Kept explicit so the
# key = value file format stays stable even if annotations change.
_NONE_WORDS = {"none", "null", ""}


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_opt_int(s: str):
    return None if s.strip().lower() in _NONE_WORDS else int(s)


_FIELD_PARSERS = {
    "perplexity": float,
    "alpha": float,
    "beta": float,
    "n_clusters": int,
    "pca_dims": _parse_opt_int,
    "out_dims": int,
    "n_neighbors": _parse_opt_int,
    "learning_rate": float,
    "momentum_initial": float,
    "momentum_final": float,
    "momentum_switch_iter": int,
    "n_iter": int,
    "bh_theta": float,
    "gradient_mode": str,
    "seed": int,
    "perplexity_tol": float,
    "init_stddev": float,
    "early_exaggeration": float,
    "early_exaggeration_iter": int,
    "pca_center": _parse_bool,
    "log_every": int,
}


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_text(cfg: EmbedConfig) -> str:
    """Serialize a config as one 'key = value' line per field.

    Floats are written with repr so that serialize -> parse -> serialize
    is byte-identical.
    """
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"


def parse_config_items(text: str) -> dict:
    """Parse 'key = value' lines into a field dict.

    Blank lines and lines starting with '#' are skipped. Unknown keys and
    malformed lines raise ValueError with the offending line number.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        parser = _FIELD_PARSERS.get(key)
        if parser is None:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        try:
            out[key] = parser(value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return out


def parse_config_text(text: str) -> EmbedConfig:
    """Parse a full config file into an EmbedConfig."""
    return EmbedConfig(**parse_config_items(text))


class ConfigError(ValueError):
    """Raised when an EmbedConfig violates its constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config: " + "; ".join(self.violations))


def resolve_config(cfg: EmbedConfig, n: int, d_in: int) -> EmbedConfig:
    """Fill data-dependent defaults from the dataset shape.

    n_neighbors defaults to 3 * perplexity (capped at n - 1), pca_dims to
    min(50, d_in). Explicitly set fields are never touched; in particular
    an oversized n_clusters stays as given and is reported by
    validate_config rather than silently adjusted.
    """
    updates = {}
    if cfg.n_neighbors is None:
        updates["n_neighbors"] = max(1, min(int(round(3 * cfg.perplexity)), n - 1))
    if cfg.pca_dims is None:
        updates["pca_dims"] = max(1, min(50, d_in))
    return replace(cfg, **updates) if updates else cfg


def validate_config(cfg: EmbedConfig, n: int, d_in: int) -> list[str]:
    """Check every config constraint against a dataset shape.

    Returns the list of violated constraints (empty when the config is
    valid), each naming the field, its value, and the broken rule. None
    placeholders are resolved as in resolve_config before checking.
    """
    cfg = resolve_config(cfg, n, d_in)
    bad = []

    def want(ok: bool, msg: str):
        if not ok:
            bad.append(msg)

    want(cfg.perplexity > 0, f"perplexity={cfg.perplexity}: must be positive")
    want(cfg.alpha >= 0, f"alpha={cfg.alpha}: must be nonnegative")
    want(cfg.beta >= 0, f"beta={cfg.beta}: must be nonnegative")
    want(cfg.n_clusters >= 2, f"n_clusters={cfg.n_clusters}: need at least 2 centroids")
    want(cfg.n_clusters <= n, f"n_clusters={cfg.n_clusters}: must be <= n={n}")
    want(cfg.pca_dims >= 1, f"pca_dims={cfg.pca_dims}: must be positive")
    want(cfg.pca_dims <= d_in, f"pca_dims={cfg.pca_dims}: must be <= input dim {d_in}")
    want(
        cfg.out_dims in (2, 3),
        f"out_dims={cfg.out_dims}: map dimension must be 2 or 3 (tree forces)",
    )
    want(
        cfg.out_dims < cfg.pca_dims,
        f"out_dims={cfg.out_dims}: must be < pca_dims={cfg.pca_dims}",
    )
    want(cfg.n_neighbors >= 1, f"n_neighbors={cfg.n_neighbors}: must be positive")
    want(
        cfg.n_neighbors <= n - 1,
        f"n_neighbors={cfg.n_neighbors}: must be <= n - 1 = {n - 1}",
    )
    want(
        cfg.perplexity < cfg.n_neighbors,
        f"perplexity={cfg.perplexity}: must be < n_neighbors={cfg.n_neighbors}",
    )
    want(cfg.learning_rate > 0, f"learning_rate={cfg.learning_rate}: must be positive")
    want(
        0 <= cfg.momentum_initial < 1,
        f"momentum_initial={cfg.momentum_initial}: must lie in [0, 1)",
    )
    want(
        0 <= cfg.momentum_final < 1,
        f"momentum_final={cfg.momentum_final}: must lie in [0, 1)",
    )
    want(
        cfg.momentum_switch_iter >= 0,
        f"momentum_switch_iter={cfg.momentum_switch_iter}: must be nonnegative",
    )
    want(cfg.n_iter >= 1, f"n_iter={cfg.n_iter}: must be positive")
    want(cfg.bh_theta >= 0, f"bh_theta={cfg.bh_theta}: must be nonnegative")
    want(
        cfg.gradient_mode in GRADIENT_MODES,
        f"gradient_mode={cfg.gradient_mode!r}: must be one of {GRADIENT_MODES}",
    )
    want(
        cfg.perplexity_tol > 0,
        f"perplexity_tol={cfg.perplexity_tol}: must be positive",
    )
    want(cfg.init_stddev > 0, f"init_stddev={cfg.init_stddev}: must be positive")
    want(
        cfg.early_exaggeration > 0,
        f"early_exaggeration={cfg.early_exaggeration}: must be positive",
    )
    want(
        cfg.early_exaggeration_iter >= 0,
        f"early_exaggeration_iter={cfg.early_exaggeration_iter}: must be nonnegative",
    )
    want(cfg.log_every >= 1, f"log_every={cfg.log_every}: must be positive")
    return bad


def check_config(cfg: EmbedConfig, n: int, d_in: int) -> EmbedConfig:
    """Resolve defaults and raise ConfigError on any violation."""
    resolved = resolve_config(cfg, n, d_in)
    violations = validate_config(resolved, n, d_in)
    if violations:
        raise ConfigError(violations)
    return resolved


@dataclass
class LossRecord:
    """One logged optimizer step: loss split plus step diagnostics.

    total always equals micro + alpha * macro + beta * kmeans for the run's
    weights; z_estimator names which normalizer estimate (exact or
    barnes_hut) produced the micro term.
    """

    iteration: int
    total: float
    micro: float
    macro: float
    kmeans: float
    gamma: float
    z_estimator: str
    max_update: float


@dataclass
class RunReport:
    """Everything worth keeping about one run besides the map itself."""

    loss_trace: list
    wall_times: dict
    config: EmbedConfig
    seed: int
    degenerate_rows: list
    iterations_run: int
    stop_reason: str


def center_columns(x: np.ndarray):
    """Subtract column means. Returns (centered, means)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("x must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite entries")
    means = x.mean(axis=0)
    return x - means, means
