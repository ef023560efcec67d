"""Experiment configuration: flat ``section.key = value`` files with defaults per experiment."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .field import FieldModel, Kernel, constant_kernel, boundary_vanishing, gaussian_bump, modulated_kernel
from .flux import SurfaceWeight, TestFunction, affine, identity, kinetic
from .geometry import AffineSphere, AmbitSet
from .levy import LevyMeasureSpec, LevyTriplet, PointMasses, StableSpec

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULTS", "load_config", "parse_overrides"]

EXPERIMENTS = ("verify-identities", "flux-scan", "fv-limit", "limit-law", "y-selfsim")


class ConfigError(ValueError):
    pass


_COMMON = {
    "geometry.d": "2",
    "geometry.A": "ball",
    "geometry.radius": "1.0",
    "geometry.lo": "",
    "geometry.hi": "",
    "geometry.T": "",
    "geometry.p0": "",
    "kernel.name": "constant",
    "kernel.C": "",
    "kernel.kappa": "1.0",
    "kernel.omega": "",
    "basis.kind": "stable",
    "basis.alpha": "2.0",
    "basis.weight": "0.5",
    "basis.jump_size": "1.0",
    "basis.gamma": "",
    "flux.phi": "identity",
    "flux.f": "normal",
    "flux.quad_order": "128",
    "run.N": "1000",
    "run.seed": "20240601",
    "run.radii": "0.2,0.1,0.05,0.025",
    "run.times": "1.0",
    "run.chunk": "250",
    "limit.n_s": "200",
    "limit.n_c": "",
}

DEFAULTS = {
    "verify-identities": {
        "identity.ac_samples": "1000",
        "identity.section_samples": "100",
        "identity.section_order": "2048",
        "identity.phi_power": "",
        "identity.steiner_r": "0.01",
        "identity.exponent_r": "1e-4",
        "identity.exponent_alpha": "1.5",
    },
    "flux-scan": {
        "run.N": "10000",
        "basis.alpha": "2.0",
    },
    "fv-limit": {
        "basis.kind": "compound_poisson",
        "basis.weight": "0.025",
        "basis.gamma": "1.0,0.5",
        "kernel.name": "modulated",
        "kernel.kappa": "0.5",
        "kernel.omega": "0.8,-0.5",
        "flux.phi": "identity,kinetic",
        "run.N": "2000",
        "run.radii": "0.2,0.1,0.05",
        "fv.delta_factor": "0.1",
        "fv.pilot": "200",
        "fv.boundary_sign": "1.0",
    },
    "limit-law": {
        "run.N": "2000",
        "run.radii": "0.01",
        "basis.alpha": "2.0",
        "limit.variance_N": "10000",
        "limit.tail_N": "100000",
        "limit.ks_max": "0.08",
        "limit.selfsim_N": "5000",
    },
    "y-selfsim": {
        "run.N": "5000",
        "limit.alphas": "1.5,2.0",
        "limit.c": "2.0",
        "limit.t": "0.5",
        "path.cases": "1.5:2,2.0:3",
        "path.t0": "0.5",
        "path.steps": "0.04,0.02,0.01,0.005",
        "path.N": "400",
        "path.tol": "0.15",
    },
}


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.replace(";", ",").split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    """Validated configuration; ``values`` holds the raw ``section.key`` strings."""

    experiment: str
    values: dict = field(default_factory=dict)

    # ------------------------------------------------------------ raw access

    def get(self, key: str) -> str:
        try:
            return self.values[key]
        except KeyError:
            raise ConfigError(f"missing config key {key!r}") from None

    def f(self, key: str) -> float:
        return float(self.get(key))

    def i(self, key: str) -> int:
        return int(float(self.get(key)))

    def floats(self, key: str) -> list[float]:
        return _floats(self.get(key))

    @property
    def seed(self) -> int:
        return self.i("run.seed")

    @property
    def N(self) -> int:
        return self.i("run.N")

    @property
    def radii(self) -> list[float]:
        return self.floats("run.radii")

    @property
    def times(self) -> list[float]:
        return self.floats("run.times")

    @property
    def d(self) -> int:
        return self.i("geometry.d")

    def canonical(self) -> str:
        return json.dumps({"experiment": self.experiment, **dict(sorted(self.values.items()))}, sort_keys=True)

    def digest(self) -> str:
        """Provenance hash of the full (defaulted and overridden) configuration."""
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_values(self, **kv) -> "ExperimentConfig":
        vals = dict(self.values)
        vals.update({k.replace("__", "."): str(v) for k, v in kv.items()})
        cfg = ExperimentConfig(self.experiment, vals)
        cfg.validate()
        return cfg

    # ----------------------------------------------------------- builders

    def ambit_set(self) -> AmbitSet:
        d = self.d
        kind = self.get("geometry.A")
        if kind == "ball":
            return AmbitSet.ball(np.zeros(d), self.f("geometry.radius"))
        if kind == "box":
            lo, hi = self.floats("geometry.lo"), self.floats("geometry.hi")
            if len(lo) != d or len(hi) != d:
                raise ConfigError("geometry.lo / geometry.hi need d entries")
            return AmbitSet.box(lo, hi)
        raise ConfigError(f"unknown geometry.A {kind!r} (ball, box)")

    def sphere(self) -> AffineSphere:
        d = self.d
        T = self.floats("geometry.T")
        if not T:
            return AffineSphere.sphere(d)
        if len(T) != d * d:
            raise ConfigError("geometry.T needs d*d entries (row major)")
        return AffineSphere(np.array(T).reshape(d, d))

    @property
    def p0(self) -> np.ndarray:
        p = self.floats("geometry.p0")
        return np.zeros(self.d) if not p else np.array(p)

    def kernel(self, d: int | None = None) -> Kernel:
        d = self.d if d is None else d
        C = self.floats("kernel.C")
        C = np.eye(d) if not C else np.array(C).reshape(d, -1)
        name = self.get("kernel.name")
        if name == "constant":
            return constant_kernel(C)
        if name == "gaussian_bump":
            return gaussian_bump(C, self.f("kernel.kappa"))
        if name == "boundary_vanishing":
            return boundary_vanishing(C)
        if name == "modulated":
            om = self.floats("kernel.omega") or [0.0] * d
            return modulated_kernel(C, om, self.f("kernel.kappa"))
        raise ConfigError(f"unknown kernel.name {name!r}")

    def basis(self, alpha: float | None = None, m: int | None = None):
        m = self.d if m is None else m
        kind = self.get("basis.kind")
        w = self.f("basis.weight")
        if kind == "stable":
            a = self.f("basis.alpha") if alpha is None else alpha
            return StableSpec.symmetric(a, m, w)
        gamma = self.floats("basis.gamma") or [0.0] * m
        if len(gamma) != m:
            raise ConfigError("basis.gamma needs m entries")
        if kind == "compound_poisson":
            nu = LevyMeasureSpec.symmetric(m, PointMasses((self.f("basis.jump_size"),), (1.0,)), w)
            return LevyTriplet(np.array(gamma), np.zeros((m, m)), nu)
        if kind == "drift":
            return LevyTriplet.drift(np.array(gamma))
        raise ConfigError(f"unknown basis.kind {kind!r} (stable, compound_poisson, drift)")

    def model(self, alpha: float | None = None) -> FieldModel:
        return FieldModel(self.ambit_set(), self.kernel(), self.basis(alpha))

    def phis(self) -> list[TestFunction]:
        out = []
        for name in self.get("flux.phi").split(","):
            name = name.strip()
            if name == "identity":
                out.append(identity())
            elif name == "kinetic":
                out.append(kinetic())
            elif name.startswith("affine"):
                d = self.d
                out.append(affine(np.eye(d) * 2.0, np.ones(d)))
            else:
                raise ConfigError(f"unknown flux.phi {name!r} (identity, kinetic, affine)")
        return out

    def weight(self) -> SurfaceWeight:
        spec = self.get("flux.f").strip()
        d = self.d
        if spec == "normal":
            return SurfaceWeight.normal(d)
        if spec.startswith("constant:"):
            return SurfaceWeight.constant(_floats(spec.split(":", 1)[1]))
        if spec.startswith("tensor:"):
            i, j = (int(v) for v in spec.split(":", 1)[1].split(","))
            return SurfaceWeight.tensor_normal(d, i, j)
        raise ConfigError(f"unknown flux.f {spec!r} (normal, constant:<v>, tensor:i,j)")

    # --------------------------------------------------------- validation

    def validate(self) -> None:
        """Check every catalog name and combination before any computation."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        d = self.d
        if d not in (2, 3):
            raise ConfigError("geometry.d must be 2 or 3")
        radii = self.radii
        if not radii:
            raise ConfigError("run.radii must not be empty")
        if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("run.radii must be positive and strictly decreasing")
        if not self.times or any(t < 0 for t in self.times):
            raise ConfigError("run.times must be nonempty and nonnegative")
        if self.N < 1:
            raise ConfigError("run.N must be positive")
        if self.i("run.chunk") < 1:
            raise ConfigError("run.chunk must be positive")
        self.ambit_set()
        self.sphere()
        if self.p0.shape != (d,):
            raise ConfigError("geometry.p0 needs d entries")
        self.kernel()
        self.weight()
        phis = self.phis()
        kind = self.get("basis.kind")
        if kind == "stable":
            a = self.f("basis.alpha")
            if not 1 < a <= 2:
                raise ConfigError(f"basis.alpha={a} outside (1, 2]")
            if a < 2 and any(p.beta >= a for p in phis if not p.is_affine):
                raise ConfigError(
                    "moment guard: polynomial test functions of order beta >= alpha (e.g. kinetic) "
                    "need bases with finite beta-th moments; use identity/affine phi with alpha < 2")
        self.basis()
        if self.experiment == "fv-limit" and kind == "stable":
            raise ConfigError("fv-limit needs a finite-variation basis (compound_poisson or drift)")


def parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        k = k.strip()
        if "." not in k:
            raise ConfigError(f"override key {k!r} must be namespaced (section.key)")
        out[k] = v.strip()
    return out


def load_config(experiment: str, path: str | Path | None = None, overrides=None,
                seed: int | None = None) -> ExperimentConfig:
    """Defaults for ``experiment``, then the file at ``path``, then ``overrides``, then ``seed``."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    vals = dict(_COMMON)
    vals.update(DEFAULTS[experiment])
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        text = Path(path).read_text()
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        cp.read_string(text)
        for sec in cp.sections():
            for k, v in cp.items(sec):
                key = k if "." in k else f"{sec}.{k}"
                vals[key] = v
    vals.update(parse_overrides(overrides) if not isinstance(overrides, dict) else overrides)
    if seed is not None:
        vals["run.seed"] = str(int(seed))
    unknown = sorted(set(vals) - set(_COMMON) - set().union(*(set(v) for v in DEFAULTS.values())))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = ExperimentConfig(experiment, vals)
    cfg.validate()
    return cfg
