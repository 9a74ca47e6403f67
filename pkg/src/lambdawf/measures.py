"""Reproduction measures on [0,1] and the merger rates they induce.

A measure is the sum of up to three components: a point mass at 0 (binary
mergers / diffusion fluctuation), a scaled Beta(2-alpha, alpha) density with
alpha in (1, 2), and finitely many atoms on (0, 1].  Every rate used by the
simulators and the closed-form evaluators specialises to these components,
which keeps all rates exact (log-gamma arithmetic, no quadrature).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaln, gammaln

__all__ = [
    "BetaComponent",
    "LambdaSpec",
    "ModelParams",
    "validate_simplex",
    "full_frequencies",
    "lambda_rate",
    "fixation_jump_rate",
    "total_up_rate",
    "merger_integral",
    "comes_down_from_infinity",
    "beta_line_rate",
]


@dataclass(frozen=True)
class BetaComponent:
    """Scaled Beta(2-alpha, alpha) density component, alpha in (1, 2)."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie strictly in (1, 2), got {self.alpha}")
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class LambdaSpec:
    """Finite measure on [0,1]: Kingman atom + optional Beta part + finite atoms."""

    kingman_mass: float = 0.0
    beta: BetaComponent | None = None
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kingman_mass < 0.0:
            raise ValueError("kingman_mass must be nonnegative")
        atoms = tuple((float(r), float(w)) for r, w in self.atoms)
        for r, w in atoms:
            if not 0.0 < r <= 1.0:
                raise ValueError(f"atom location {r} outside (0, 1]")
            if w <= 0.0:
                raise ValueError(f"atom weight {w} must be positive")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total_mass(self) -> float:
        scale = self.beta.scale if self.beta is not None else 0.0
        return self.kingman_mass + scale + sum(w for _, w in self.atoms)

    @property
    def mass_on_unit_interval(self) -> float:
        """Mass of the (0, 1] part, i.e. excluding the Kingman atom."""
        scale = self.beta.scale if self.beta is not None else 0.0
        return scale + sum(w for _, w in self.atoms)

    def to_config_text(self) -> str:
        lines = [f"kingman = {self.kingman_mass!r}"]
        if self.beta is not None:
            lines.append(
                f"beta = {{alpha = {self.beta.alpha!r}, scale = {self.beta.scale!r}}}"
            )
        if self.atoms:
            inner = ", ".join(f"[{r!r}, {w!r}]" for r, w in self.atoms)
            lines.append(f"atoms = [{inner}]")
        return "\n".join(lines)

    @classmethod
    def from_config_text(cls, text: str) -> "LambdaSpec":
        """Parse the config block written by to_config_text.

        Recognised keys: `kingman = <float>`,
        `beta = {alpha = <float>, scale = <float>}`, `atoms = [[r, w], ...]`.
        """
        kingman = 0.0
        beta = None
        atoms: list[tuple[float, float]] = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed measure config line: {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "kingman":
                kingman = float(value)
            elif key == "beta":
                m = re.fullmatch(
                    r"\{\s*alpha\s*=\s*([^,}]+)\s*,\s*scale\s*=\s*([^,}]+)\s*\}",
                    value,
                )
                if m is None:
                    raise ValueError(f"malformed beta block: {value!r}")
                beta = BetaComponent(alpha=float(m.group(1)), scale=float(m.group(2)))
            elif key == "atoms":
                pairs = re.findall(r"\[\s*([^\[\],]+)\s*,\s*([^\[\],]+)\s*\]", value)
                if not value.startswith("[") or not value.endswith("]"):
                    raise ValueError(f"malformed atoms list: {value!r}")
                atoms = [(float(r), float(w)) for r, w in pairs]
            else:
                raise ValueError(f"unknown measure config key: {key!r}")
        return cls(kingman_mass=kingman, beta=beta, atoms=tuple(atoms))


def validate_simplex(x, d: int | None = None) -> np.ndarray:
    """Validate a point of the d-simplex given by its first d coordinates."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("simplex point must be a flat vector")
    if d is not None and x.shape[0] != d:
        raise ValueError(f"expected {d} coordinates, got {x.shape[0]}")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("simplex coordinates must lie in [0, 1]")
    if x.sum() > 1.0 + 1e-12:
        raise ValueError(f"simplex coordinates sum to {x.sum()} > 1")
    return x


def full_frequencies(x) -> np.ndarray:
    """Append the implied last coordinate 1 - sum(x)."""
    x = validate_simplex(x)
    return np.append(x, max(0.0, 1.0 - x.sum()))


@dataclass(frozen=True)
class ModelParams:
    """Full parametrisation: d tracked types, measure, mutation rate and target."""

    d: int
    lam: LambdaSpec
    theta: float = 0.0
    nu: tuple[float, ...] = ()
    allow_boundary_nu: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.theta < 0.0:
            raise ValueError("theta must be nonnegative")
        nu = tuple(float(v) for v in self.nu) if self.nu else (0.0,) * self.d
        if len(nu) != self.d:
            raise ValueError(f"nu must have {self.d} entries, got {len(nu)}")
        if any(v < 0.0 for v in nu) or sum(nu) > 1.0 + 1e-12:
            raise ValueError("nu must lie in the d-simplex")
        if self.theta > 0.0 and not self.allow_boundary_nu:
            if any(v <= 0.0 for v in nu) or sum(nu) >= 1.0:
                raise ValueError(
                    "with theta > 0, nu must lie in the interior of the simplex "
                    "(pass allow_boundary_nu=True to override)"
                )
        object.__setattr__(self, "nu", nu)

    @property
    def nu_full(self) -> np.ndarray:
        nu = np.asarray(self.nu, dtype=float)
        return np.append(nu, max(0.0, 1.0 - nu.sum()))


def _binom2(n: int) -> float:
    return 0.5 * n * (n - 1)


def lambda_rate(spec: LambdaSpec, n: int, k: int) -> float:
    """Merger rate of k fixed blocks among n: int r^(k-2) (1-r)^(n-k) over (0,1].

    The Kingman atom does not contribute (the integral excludes 0).
    """
    if k < 2 or k > n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    rate = 0.0
    if spec.beta is not None:
        a = spec.beta.alpha
        rate += spec.beta.scale * math.exp(
            betaln(k - a, n - k + a) - betaln(2.0 - a, a)
        )
    for r, w in spec.atoms:
        rate += w * r ** (k - 2) * (1.0 - r) ** (n - k)
    return rate


def merger_integral(spec: LambdaSpec, n: int, l: int) -> float:
    """int r^(l+1) (1-r)^n r^(-2) over (0,1]; equals lambda_rate at (n+l+1, l+1)."""
    if n < 0 or l < 1:
        raise ValueError(f"need n >= 0 and l >= 1, got n={n}, l={l}")
    val = 0.0
    if spec.beta is not None:
        a = spec.beta.alpha
        val += spec.beta.scale * math.exp(
            betaln(l + 1.0 - a, n + a) - betaln(2.0 - a, a)
        )
    for r, w in spec.atoms:
        val += w * r ** (l - 1) * (1.0 - r) ** n
    return val


def _log_binom(n: float, k: float) -> float:
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def fixation_jump_rate(params: ModelParams, n: int, l: int) -> float:
    """Rate at which a fixation line jumps from level n to n + l."""
    if n < 0 or l < 1:
        raise ValueError(f"need n >= 0 and l >= 1, got n={n}, l={l}")
    spec = params.lam
    rate = 0.0
    if l == 1:
        rate += spec.kingman_mass * _binom2(n + 1) + params.theta * (n + 1)
    if spec.beta is not None:
        a = spec.beta.alpha
        rate += spec.beta.scale * math.exp(
            _log_binom(n + l, l + 1)
            + betaln(l + 1.0 - a, n + a)
            - betaln(2.0 - a, a)
        )
    for r, w in spec.atoms:
        log_term = _log_binom(n + l, l + 1) + (l - 1) * math.log(r)
        if r < 1.0:
            log_term += n * math.log1p(-r)
        elif n > 0:
            continue
        rate += w * math.exp(log_term)
    return rate


def beta_line_rate(alpha: float, n) -> np.ndarray | float:
    """Total up-rate of the fixation line at level n for unit-mass Beta(2-a, a).

    Equals Gamma(n+alpha) / (alpha Gamma(alpha) Gamma(n)) for n >= 1.
    """
    n_arr = np.asarray(n, dtype=float)
    out = np.exp(gammaln(n_arr + alpha) - gammaln(n_arr) - gammaln(alpha + 1.0))
    out = np.where(n_arr >= 1, out, 0.0)
    if np.isscalar(n) or n_arr.ndim == 0:
        return float(out)
    return out


def _atom_up_rate(r: float, n: int) -> float:
    """(1 - (1-r)^(n+1) - (n+1) r (1-r)^n) / r^2, evaluated stably."""
    if n < 1:
        return 0.0
    # tail probability of Binomial(n+1, r) being >= 2, via the regularised
    # incomplete beta function
    return float(betainc(2.0, float(n), r)) / (r * r)


def total_up_rate(params: ModelParams, n: int) -> float:
    """Total rate out of level n for the fixation line (sum over jump sizes)."""
    if n < 0:
        raise ValueError(f"need n >= 0, got n={n}")
    spec = params.lam
    rate = spec.kingman_mass * _binom2(n + 1) + params.theta * (n + 1)
    if spec.beta is not None and n >= 1:
        rate += spec.beta.scale * beta_line_rate(spec.beta.alpha, n)
    for r, w in spec.atoms:
        rate += w * _atom_up_rate(r, n)
    return rate


def comes_down_from_infinity(spec: LambdaSpec) -> bool:
    """Whether the associated coalescent comes down from infinity.

    True for any Kingman component or Beta component with alpha in (1, 2).
    A purely atomic measure triggers finitely many reproduction events per
    unit time, each merging finitely many of the infinitely many blocks, so
    the block count stays infinite; such measures never come down.
    """
    return spec.kingman_mass > 0.0 or spec.beta is not None
