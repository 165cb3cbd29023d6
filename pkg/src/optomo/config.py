"""Experiment configuration: flat key-value text format with presets.

The file format is line-oriented ``key = value`` with a version header line
``optomo-config v1``; ``#`` starts a comment.  Writing a config produces a
canonical form that round-trips losslessly through the parser.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from optomo.errors import ConfigError

CONFIG_VERSION = 1
PRESETS = ("fig2_top", "fig2_bottom", "fig2_bottom_scaled")

_OPERATIONS = ("displacement", "identity", "kraus")
_ROUTES = ("auto", "gaussian", "fock", "finite")
_REFERENCES = "auto-or-pair"


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated simulation parameters; see ``parse_config`` for the file keys."""

    operation: str = "displacement"
    z: complex = 1.0 + 0.0j
    kraus_file: str = ""
    nbar: float = 5.0
    eta: float = 0.9
    dim_cut: int = 0          # 0 means auto: max(16, ceil(8 (nbar+1)))
    n_max: int = 7
    blocks: int = 150
    samples_per_block: int = 10_000
    master_seed: int = 20_260_809
    reference: str = "auto"   # "auto" or "i0,j0"
    route: str = "auto"
    grid_half_width: float = 0.0  # 0 means auto: 6 (1 + nbar)
    grid_spacing: float = 0.01
    ridge: float = 1e-10
    out_prefix: str = "run"
    dump_samples: bool = False

    def validate(self) -> None:
        if self.operation not in _OPERATIONS:
            raise ConfigError(
                f"unknown operation {self.operation!r}; pick one of {_OPERATIONS}"
            )
        if self.operation == "kraus" and not self.kraus_file:
            raise ConfigError("operation = kraus requires kraus_file")
        if not 0.5 < self.eta <= 1.0:
            raise ConfigError(
                f"eta = {self.eta} outside (0.5, 1]: noise deconvolution "
                "diverges at or below eta = 0.5"
            )
        if self.nbar < 0:
            raise ConfigError("nbar must be nonnegative")
        if self.blocks < 2:
            raise ConfigError("need at least 2 blocks for block statistics")
        if self.samples_per_block < 1 or self.n_max < 0:
            raise ConfigError("counts must be positive")
        if self.route not in _ROUTES:
            raise ConfigError(f"unknown route {self.route!r}; pick one of {_ROUTES}")
        if self.route == "gaussian" and self.operation == "kraus":
            raise ConfigError(
                "route = gaussian covers the Gaussian operations "
                "(displacement, identity); use fock or finite for kraus"
            )
        if self.reference != "auto":
            try:
                i0, j0 = (int(t) for t in self.reference.split(","))
            except ValueError as exc:
                raise ConfigError(
                    f"reference must be 'auto' or 'i0,j0', got {self.reference!r}"
                ) from exc
            if i0 < 0 or j0 < 0 or i0 > self.n_max or j0 > self.n_max:
                raise ConfigError("reference indices must lie inside the window")
        if self.grid_spacing <= 0:
            raise ConfigError("grid_spacing must be positive")
        dim = self.resolved_dim_cut()
        if dim <= self.n_max:
            raise ConfigError(
                f"dim_cut = {dim} must exceed the reconstruction window "
                f"n_max = {self.n_max}"
            )
        if self.nbar > 0 and self.resolved_route() != "finite":
            # the finite route renormalises the truncated entangler, so the
            # deficit gate applies to the radiation-mode routes only
            lam2 = self.nbar / (self.nbar + 1.0)
            deficit = lam2**dim
            if deficit > 1e-2:
                raise ConfigError(
                    f"twin-beam truncation deficit {deficit:.2e} at dim_cut = "
                    f"{dim} (nbar = {self.nbar}); the entangler is effectively "
                    f"non-invertible, raise dim_cut to >= "
                    f"{int(np.ceil(np.log(1e-2) / np.log(lam2)))}"
                )
        if self.nbar == 0 and self.operation != "identity":
            raise ConfigError(
                "nbar = 0 gives a rank-one (non-invertible) entangler; "
                "reconstruction needs nbar > 0"
            )

    def resolved_dim_cut(self) -> int:
        if self.dim_cut > 0:
            return self.dim_cut
        return max(16, int(np.ceil(8.0 * (self.nbar + 1.0))))

    def resolved_half_width(self) -> float:
        if self.grid_half_width > 0:
            return self.grid_half_width
        return 6.0 * (1.0 + self.nbar)

    def resolved_reference(self) -> tuple[int, int] | None:
        if self.reference == "auto":
            return None
        i0, j0 = (int(t) for t in self.reference.split(","))
        return i0, j0

    def resolved_route(self) -> str:
        if self.route != "auto":
            return self.route
        return "gaussian" if self.operation in ("displacement", "identity") else "fock"


_FIELD_PARSERS = {
    "operation": str,
    "z": complex,
    "kraus_file": str,
    "nbar": float,
    "eta": float,
    "dim_cut": int,
    "n_max": int,
    "blocks": int,
    "samples_per_block": int,
    "master_seed": int,
    "reference": str,
    "route": str,
    "grid_half_width": float,
    "grid_spacing": float,
    "ridge": float,
    "out_prefix": str,
    "dump_samples": lambda s: s.lower() in ("1", "true", "yes"),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key-value format; raises ConfigError on any problem."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("optomo-config"):
        raise ConfigError("missing 'optomo-config v<N>' header line")
    try:
        version = int(lines[0].split("v")[-1])
    except ValueError as exc:
        raise ConfigError(f"malformed version header {lines[0]!r}") from exc
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version}")
    kwargs = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise ConfigError(f"malformed line {ln!r}; expected 'key = value'")
        key, _, value = ln.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = _FIELD_PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return repr(v).strip("()")
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(write_config(cfg)) == cfg."""
    out = [f"optomo-config v{CONFIG_VERSION}"]
    for key in _FIELD_PARSERS:
        out.append(f"{key} = {_format_value(getattr(cfg, key))}")
    return "\n".join(out) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(write_config(cfg).encode()).hexdigest()[:16]


def load_preset(name: str) -> ExperimentConfig:
    """Bundled presets; the paper-scale bottom run is fig2_bottom, its
    desk-scale variant (samples / 10, errors inflated ~sqrt(10)) is
    fig2_bottom_scaled."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {PRESETS}")
    text = resources.files("optomo").joinpath(f"presets/{name}.cfg").read_text()
    cfg = parse_config(text)
    return replace(cfg, out_prefix=name) if cfg.out_prefix == "run" else cfg
