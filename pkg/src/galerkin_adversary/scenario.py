"""Scenario files and witness files.

A scenario is a JSON document naming the interval, grid, trial family,
operator, N, T multiplier, functional scheme, tolerances and seed. Unknown
keys are rejected at every level. Catalog names are 1-based.

Representer names (for ``custom`` schemes and ``solve --rhs``)::

    image:k      g_k = L psi_k
    trial:k      psi_k sampled on the grid (X = Y)
    trig:k       k-th trigonometric function (also legendre:k, monomial:k)
    bump:x       unit-mass bump centred at x
    random       seeded random smooth function (custom schemes only)
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .adversary import AdversaryWitness, MethodConfig, Tolerances, image_tests, trial_tests
from .errors import ConfigError
from .function_space import BasisFamily, FamilyKind, GridFunction, QuadratureGrid, make_grid
from .functionals import FunctionalSet, LinearFunctional, bump_functional, random_functionals
from .operators import Kernel, OperatorImages, OperatorKind, OperatorSpec, catalog_function, shift_operator

WITNESS_FORMAT = "galerkin-adversary/witness-v1"

DEFAULTS: dict[str, Any] = {
    "domain": {"lower": 0.0, "upper": 2.0 * math.pi},
    "grid": {"panels": 64, "nodes_per_panel": 8},
    "basis": {"family": "trigonometric"},
    "operator": {"kind": "identity"},
    "n": 4,
    "t_multiplier": 5.0,
    "functional_scheme": "bubnov",
    "tolerances": {"norm_tol": 1e-9, "orth_tol": 1e-8, "residual_tol": 1e-8},
    "seed": 0,
}

_OPERATOR_KEYS = {
    "identity": set(),
    "scaled_identity": {"alpha"},
    "fredholm": {"kernel"},
    "spectral_derivative": {"order"},
    "multiplication": {"weight"},
}
_KERNEL_KEYS = {"gaussian": {"sigma"}, "constant": {"value"}, "rank1": {"phi"}}
SCHEMES = ("bubnov", "galerkin_coupled", "custom")


def _keys(obj, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(extra)}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where} must be a finite number")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer")
    return value


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; ``raw`` is the normalized JSON-ready form."""

    raw: dict
    t_override: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        _keys(data, set(DEFAULTS), "config")
        cfg = copy.deepcopy(DEFAULTS)
        for key, value in data.items():
            if isinstance(cfg[key], dict) and key != "operator":
                _keys(value, set(DEFAULTS[key]), key)
                cfg[key] = {**cfg[key], **value}
            else:
                cfg[key] = copy.deepcopy(value)

        dom = cfg["domain"]
        dom["lower"] = _number(dom["lower"], "domain.lower")
        dom["upper"] = _number(dom["upper"], "domain.upper")
        if not dom["lower"] < dom["upper"]:
            raise ConfigError("domain needs lower < upper")
        grid = cfg["grid"]
        grid["panels"] = _integer(grid["panels"], "grid.panels")
        grid["nodes_per_panel"] = _integer(grid["nodes_per_panel"], "grid.nodes_per_panel")
        if grid["panels"] < 1 or not 2 <= grid["nodes_per_panel"] <= 16:
            raise ConfigError("grid needs panels >= 1 and nodes_per_panel in [2, 16]")
        fam = cfg["basis"]["family"]
        if fam not in {k.value for k in FamilyKind}:
            raise ConfigError(f"unknown basis family {fam!r}")
        cfg["n"] = _integer(cfg["n"], "n")
        if cfg["n"] < 2:
            raise ConfigError("n must be >= 2")
        cfg["t_multiplier"] = _number(cfg["t_multiplier"], "t_multiplier")
        if cfg["t_multiplier"] < 1:
            raise ConfigError("t_multiplier must be >= 1")
        for key in ("norm_tol", "orth_tol", "residual_tol"):
            cfg["tolerances"][key] = _number(cfg["tolerances"][key], f"tolerances.{key}")
        cfg["seed"] = _integer(cfg["seed"], "seed")
        cfg["operator"] = _normalize_operator(cfg["operator"])
        cfg["functional_scheme"] = _normalize_scheme(cfg["functional_scheme"])
        scenario = cls(cfg)
        scenario.operator()  # catalog names resolve now, not mid-run
        return scenario

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def with_n(self, n: int, t: int | None = None) -> "ScenarioConfig":
        raw = copy.deepcopy(self.raw)
        raw["n"] = n
        return replace(ScenarioConfig.from_dict(raw), t_override=t)

    # -- accessors ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.raw["n"]

    @property
    def t(self) -> int:
        if self.t_override is not None:
            return self.t_override
        return int(round(self.raw["t_multiplier"] * self.n))

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(**self.raw["tolerances"])

    @property
    def interval(self) -> tuple[float, float]:
        return self.raw["domain"]["lower"], self.raw["domain"]["upper"]

    def grid(self) -> QuadratureGrid:
        lo, hi = self.interval
        return make_grid(lo, hi, self.raw["grid"]["panels"], self.raw["grid"]["nodes_per_panel"])

    def family(self) -> BasisFamily:
        lo, hi = self.interval
        return BasisFamily(FamilyKind(self.raw["basis"]["family"]), lo, hi)

    def operator(self) -> OperatorSpec:
        lo, hi = self.interval
        spec = self.raw["operator"]
        kind = OperatorKind(spec["kind"])
        kwargs: dict[str, Any] = {}
        if kind is OperatorKind.SCALED_IDENTITY:
            kwargs["alpha"] = spec["alpha"]
        elif kind is OperatorKind.FREDHOLM:
            kspec = spec["kernel"]
            kwargs["kernel"] = Kernel(**kspec)
            if kspec["name"] == "rank1":
                catalog_function(kspec["phi"], lo, hi)
        elif kind is OperatorKind.SPECTRAL_DERIVATIVE:
            kwargs["order"] = spec["order"]
        elif kind is OperatorKind.MULTIPLICATION:
            kwargs["weight"] = spec["weight"]
        op = OperatorSpec(kind, lo, hi, **kwargs)
        if spec.get("shift", 0.0):
            op = shift_operator(op, spec["shift"])
        return op

    def method(self, label: str = "") -> MethodConfig:
        n = self.n
        scheme = self.raw["functional_scheme"]
        grid = self.grid()
        if scheme["kind"] == "bubnov":
            tests, coeffs = image_tests(n), None
        elif scheme["kind"] == "galerkin_coupled":
            tests, coeffs = trial_tests(n), None
        else:
            tests = _functional_builder(scheme["tests"], n, self.seed, 0, "l")
            coeffs = (
                None
                if scheme["coeffs"] == "galerkin"
                else _functional_builder(scheme["coeffs"], n, self.seed, 1, "c")
            )
        return MethodConfig(
            n=n,
            op=self.operator(),
            trial_family=self.family(),
            grid=grid,
            tests=tests,
            coeff_functionals=coeffs,
            t=self.t,
            label=label or f"N={n}",
        )


def _normalize_operator(spec) -> dict:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("operator must be an object with a 'kind'")
    kind = spec["kind"]
    if kind not in _OPERATOR_KEYS:
        raise ConfigError(f"unknown operator kind {kind!r}")
    _keys(spec, {"kind", "shift"} | _OPERATOR_KEYS[kind], "operator")
    out = {"kind": kind, "shift": _number(spec.get("shift", 0.0), "operator.shift")}
    if kind == "scaled_identity":
        out["alpha"] = _number(spec.get("alpha", 1.0), "operator.alpha")
    elif kind == "spectral_derivative":
        out["order"] = _integer(spec.get("order", 1), "operator.order")
        if out["order"] < 1:
            raise ConfigError("operator.order must be >= 1")
    elif kind == "multiplication":
        out["weight"] = spec.get("weight", "linear")
    elif kind == "fredholm":
        kspec = spec.get("kernel")
        if isinstance(kspec, str):
            kspec = {"name": kspec}
        if not isinstance(kspec, dict) or kspec.get("name") not in _KERNEL_KEYS:
            raise ConfigError(f"fredholm kernel must name one of {sorted(_KERNEL_KEYS)}")
        _keys(kspec, {"name"} | _KERNEL_KEYS[kspec["name"]], "operator.kernel")
        kout = {"name": kspec["name"]}
        if kspec["name"] == "gaussian":
            kout["sigma"] = _number(kspec.get("sigma", 0.5), "kernel.sigma")
        elif kspec["name"] == "constant":
            kout["value"] = _number(kspec.get("value", 1.0), "kernel.value")
        else:
            if not isinstance(kspec.get("phi"), str):
                raise ConfigError("rank1 kernel needs 'phi', e.g. 'trig:2'")
            kout["phi"] = kspec["phi"]
        out["kernel"] = kout
    return out


def _normalize_scheme(scheme) -> dict:
    if isinstance(scheme, str):
        scheme = {"kind": scheme}
    if not isinstance(scheme, dict) or scheme.get("kind") not in SCHEMES:
        raise ConfigError(f"functional_scheme must be one of {SCHEMES}")
    if scheme["kind"] != "custom":
        _keys(scheme, {"kind"}, "functional_scheme")
        return {"kind": scheme["kind"]}
    _keys(scheme, {"kind", "tests", "coeffs"}, "functional_scheme")
    out = {"kind": "custom", "tests": scheme.get("tests", "images"), "coeffs": scheme.get("coeffs", "random")}
    for role in ("tests", "coeffs"):
        value = out[role]
        keywords = {"images", "trial", "random"} | ({"galerkin"} if role == "coeffs" else set())
        if isinstance(value, str):
            if value not in keywords:
                raise ConfigError(f"functional_scheme.{role} keyword must be one of {sorted(keywords)}")
        elif not (isinstance(value, list) and all(isinstance(v, str) for v in value)):
            raise ConfigError(f"functional_scheme.{role} must be a keyword or a list of names")
    return out


def resolve_representer(name: str, images: OperatorImages, rng_key=None) -> GridFunction:
    """Look up one catalog representer on the images' Y grid."""
    grid = images.grid
    head, _, arg = name.partition(":")
    try:
        if head == "image":
            return images.g[_index(arg, len(images))]
        if head == "trial":
            if not images.x_grid.same_as(grid):
                raise ConfigError("trial representers need X = Y")
            return images.psi_samples[_index(arg, len(images))]
        if head == "bump":
            return bump_functional(grid, float(arg)).representer
        if head == "random" and not arg and rng_key is not None:
            return random_functionals(grid, 1, np.random.default_rng(rng_key)).members[0].representer
        return catalog_function(name, grid.lower, grid.upper).sample(grid)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot resolve representer {name!r}: {exc}") from None


def _index(arg: str, size: int) -> int:
    k = int(arg)
    if not 1 <= k <= size:
        raise ConfigError(f"index {k} outside 1..{size}")
    return k - 1


def _functional_builder(spec, n: int, seed: int, role: int, prefix: str):
    def build(images: OperatorImages) -> FunctionalSet:
        grid = images.grid
        if spec == "images":
            return image_tests(n)(images)
        if spec == "trial":
            return trial_tests(n)(images)
        if spec == "random":
            rng = np.random.default_rng([seed, role])
            return random_functionals(grid, n, rng, prefix=f"{prefix}[random]")
        members = [
            LinearFunctional(resolve_representer(name, images, [seed, role, i]), f"{prefix}_{i + 1}={name}")
            for i, name in enumerate(spec)
        ]
        return FunctionalSet(tuple(members), grid)

    return build


# --------------------------------------------------------------------------
# serialization


def num(x: float) -> float:
    """Round-trip a binary64 through 17 significant digits."""
    return float(f"{float(x):.17g}")


def nums(xs) -> list[float]:
    return [num(x) for x in np.asarray(xs, dtype=float).ravel()]


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def checksum(payload: dict) -> str:
    body = {k: v for k, v in payload.items() if k != "checksum"}
    return "sha256:" + hashlib.sha256(_canonical(body)).hexdigest()


def witness_document(
    scenario: ScenarioConfig,
    images: OperatorImages,
    witness: AdversaryWitness,
    checks: dict,
) -> dict:
    doc = {
        "format": WITNESS_FORMAT,
        "scenario": scenario.raw,
        "n": scenario.n,
        "t": len(images),
        "grid_size": images.grid.size,
        "trial_functions": [p.label for p in images.psi],
        "span_coeffs": nums(witness.span_coeffs),
        "samples": nums(witness.f_samples.values),
        "certificate": {
            "norm": num(witness.norm),
            "orthogonality_defect": num(witness.orthogonality_defect),
            "residual": num(witness.residual),
            "epsilon_floor": num(witness.epsilon_floor),
            "coeff_values": nums(witness.coeff_values),
            "null_dimension": witness.null_dimension,
            "checks": checks,
        },
    }
    doc["checksum"] = checksum(doc)
    return doc


def dump_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")


def load_witness(path) -> dict:
    """Read a witness file and verify its format and checksum."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read witness {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != WITNESS_FORMAT:
        raise ConfigError(f"{path} is not a {WITNESS_FORMAT} file")
    if doc.get("checksum") != checksum(doc):
        raise ConfigError(f"{path}: checksum mismatch, file is corrupted or edited")
    return doc
