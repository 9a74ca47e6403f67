"""Plain-text run configuration: a flat key-value format with two sections.

The format is deliberately tiny so reports can embed their full configuration
as commented header lines and re-parse them byte-for-byte:

    [model]
    d = 2
    kingman = 1.0
    beta = {alpha = 1.5, scale = 1.0}
    atoms = [[0.3, 0.2]]
    theta = 0.5
    nu = [0.3, 0.3]

    [run]
    kind = lookdown
    ...

Unknown sections or keys are hard errors; every float is written with repr
so that serialise -> parse is the identity.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field

from .measures import BetaComponent, LambdaSpec, ModelParams

__all__ = ["RunConfig", "parse_config", "parse_header", "KINDS"]

KINDS = ("lookdown", "explosion")

_BETA_RE = re.compile(
    r"^\{\s*alpha\s*=\s*([^,\s]+)\s*,\s*scale\s*=\s*([^}\s]+)\s*\}$"
)

_MODEL_KEYS = {"d", "kingman", "beta", "atoms", "theta", "nu"}
_RUN_KEYS = {
    "kind",
    "replicates",
    "seed",
    "N",
    "horizon",
    "output",
    "ics",
    "sample_times",
    "k",
    "M",
}


@dataclass(frozen=True)
class RunConfig:
    """One experiment: model parameters plus the run controls that the
    experiment kind consumes."""

    params: ModelParams
    kind: str
    replicates: int = 1000
    seed: int = 0
    N: int = 100
    horizon: float = 1.0
    output: str = "out.csv"
    ics: tuple[tuple[float, ...], ...] = ()
    sample_times: tuple[float, ...] = ()
    k: int = 1
    M: int = 2000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.kind == "lookdown" and not self.ics:
            raise ValueError("lookdown runs need at least one initial condition")
        object.__setattr__(
            self, "ics", tuple(tuple(float(v) for v in x) for x in self.ics)
        )
        object.__setattr__(
            self, "sample_times", tuple(float(t) for t in self.sample_times)
        )

    def to_text(self) -> str:
        spec = self.params.lam
        lines = ["[model]", f"d = {self.params.d}"]
        lines.append(f"kingman = {spec.kingman_mass!r}")
        if spec.beta is not None:
            lines.append(
                "beta = {alpha = "
                f"{spec.beta.alpha!r}, scale = {spec.beta.scale!r}}}"
            )
        if spec.atoms:
            lines.append("atoms = " + repr([[r, w] for r, w in spec.atoms]))
        lines.append(f"theta = {self.params.theta!r}")
        if self.params.nu:
            lines.append("nu = " + repr(list(self.params.nu)))
        lines.append("")
        lines.append("[run]")
        lines.append(f"kind = {self.kind}")
        lines.append(f"replicates = {self.replicates}")
        lines.append(f"seed = {self.seed}")
        lines.append(f"N = {self.N}")
        lines.append(f"horizon = {self.horizon!r}")
        lines.append(f"output = {self.output}")
        if self.ics:
            lines.append("ics = " + repr([list(x) for x in self.ics]))
        if self.sample_times:
            lines.append("sample_times = " + repr(list(self.sample_times)))
        lines.append(f"k = {self.k}")
        lines.append(f"M = {self.M}")
        return "\n".join(lines) + "\n"

    def header_lines(self) -> list[str]:
        """The config as CSV comment lines, re-parseable via parse_header."""
        return ["# " + line if line else "#" for line in self.to_text().split("\n")[:-1]]


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "beta":
        m = _BETA_RE.match(raw)
        if m is None:
            raise ValueError(f"bad beta block {raw!r}")
        return BetaComponent(alpha=float(m.group(1)), scale=float(m.group(2)))
    if key in ("atoms", "nu", "ics", "sample_times"):
        try:
            return ast.literal_eval(raw)
        except (ValueError, SyntaxError) as exc:
            raise ValueError(f"bad list value for {key}: {raw!r}") from exc
    if key in ("d", "replicates", "seed", "N", "k", "M"):
        return int(raw)
    if key in ("kingman", "theta", "horizon"):
        return float(raw)
    return raw  # kind, output: plain strings


def parse_config(text: str) -> RunConfig:
    """Parse the two-section key-value format; unknown keys are errors."""
    section = None
    model: dict = {}
    run: dict = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in ("model", "run"):
                raise ValueError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if section == "model":
            if key not in _MODEL_KEYS:
                raise ValueError(f"line {lineno}: unknown model key {key!r}")
            model[key] = _parse_value(key, raw)
        elif section == "run":
            if key not in _RUN_KEYS:
                raise ValueError(f"line {lineno}: unknown run key {key!r}")
            run[key] = _parse_value(key, raw)
        else:
            raise ValueError(f"line {lineno}: key outside any section")
    if "d" not in model:
        raise ValueError("model section must set d")
    if "kind" not in run:
        raise ValueError("run section must set kind")
    spec = LambdaSpec(
        kingman_mass=model.get("kingman", 0.0),
        beta=model.get("beta"),
        atoms=tuple((float(r), float(w)) for r, w in model.get("atoms", [])),
    )
    params = ModelParams(
        d=model["d"],
        lam=spec,
        theta=model.get("theta", 0.0),
        nu=tuple(float(v) for v in model.get("nu", [])),
    )
    return RunConfig(params=params, **run)


def parse_header(lines) -> RunConfig:
    """Recover a RunConfig from the commented header of a CSV report."""
    body = []
    for line in lines:
        if not line.startswith("#"):
            break
        body.append(line[2:] if line.startswith("# ") else line[1:])
    if not body:
        raise ValueError("no commented header lines found")
    return parse_config("\n".join(body))
