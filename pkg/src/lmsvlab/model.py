"""Assembly of the stochastic volatility path Y_i = sigma(X_i) * Z_i.

The alignment convention is the one that makes X_i and sigma_i measurable
with respect to the past: X_i is built from eta_{i-1}, eta_{i-2}, ..., while
the shock Z_i is coupled to the same-index innovation eta_i. For a fixed i
this makes Z_i independent of X_i, while X_{i+s} depends on Z_i's partner
eta_i, which is exactly the leverage structure.

Volatility families: ``exp`` (sigma = e^x), ``even_power`` (sigma = x^(2k)),
and ``sym_poly`` (even polynomials with nonnegative coefficients, which are
subadditive and satisfy the smoothness bound used by the truncation
arguments).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .gaussian import LongMemorySpec, simulate_exact, simulate_path
from .tails import LeverageCoupling, TailLaw, sample_pair

__all__ = [
    "VolatilityFn",
    "SvModel",
    "SvPath",
    "sigma_eval",
    "sigma_pow",
    "simulate_sv",
    "sample_marginal",
    "sample_product_pairs",
]


@dataclass(frozen=True)
class VolatilityFn:
    kind: str = "exp"
    power: int = 1
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("exp", "even_power", "sym_poly"):
            raise ValueError(f"unknown volatility kind: {self.kind!r}")
        if self.kind == "even_power" and self.power < 1:
            raise ValueError("even_power requires power >= 1")
        if self.kind == "sym_poly":
            if not self.coeffs:
                raise ValueError("sym_poly requires coefficients")
            cs = tuple(float(c) for c in self.coeffs)
            if any(c < 0 for c in cs):
                raise ValueError("sym_poly coefficients must be nonnegative")
            object.__setattr__(self, "coeffs", cs)

    @classmethod
    def exp(cls) -> "VolatilityFn":
        return cls(kind="exp")

    @classmethod
    def even_power(cls, k: int) -> "VolatilityFn":
        return cls(kind="even_power", power=k)

    @classmethod
    def poly(cls, *even_coeffs: float) -> "VolatilityFn":
        """sigma(x) = c0 + c1 x^2 + c2 x^4 + ... (even, nonnegative)."""
        return cls(kind="sym_poly", coeffs=tuple(even_coeffs))

    @classmethod
    def constant(cls, c: float = 1.0) -> "VolatilityFn":
        return cls(kind="sym_poly", coeffs=(c,))

    @property
    def is_constant(self) -> bool:
        return self.kind == "sym_poly" and all(c == 0 for c in self.coeffs[1:])

    def moment_condition(self) -> tuple[bool, str]:
        """sup_{0<=gamma<=1} E[sigma^q(gamma X)] < inf for every q > 0.

        Holds for exponentials and polynomials of a Gaussian, which covers
        every supported family; returned as (True, reason).
        """
        return True, f"{self.kind}: all Gaussian moments finite for every q"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "power": self.power, "coeffs": list(self.coeffs)}


def sigma_eval(fn: VolatilityFn, x):
    """sigma(x) >= 0, vectorized."""
    x = np.asarray(x, dtype=float)
    if fn.kind == "exp":
        out = np.exp(x)
    elif fn.kind == "even_power":
        out = x ** (2 * fn.power)
    else:
        out = np.polynomial.polynomial.polyval(x * x, fn.coeffs)
    return float(out) if out.ndim == 0 else out


def sigma_pow(fn: VolatilityFn, x, p: float):
    """sigma(x)**p; sigma is nonnegative so fractional p is well defined."""
    if fn.kind == "exp":
        x = np.asarray(x, dtype=float)
        out = np.exp(p * x)
        return float(out) if out.ndim == 0 else out
    s = sigma_eval(fn, x)
    if p == 1.0:
        return s
    return s**p


@dataclass(frozen=True)
class SvModel:
    """The four components that define one stochastic volatility law."""

    gaussian: LongMemorySpec
    tail: TailLaw
    coupling: LeverageCoupling = LeverageCoupling()
    volatility: VolatilityFn = VolatilityFn.exp()

    @property
    def is_lmsv(self) -> bool:
        return self.coupling.kind == "independent"

    def to_dict(self) -> dict:
        return {
            "gaussian": self.gaussian.to_dict(),
            "tail": self.tail.to_dict(),
            "coupling": self.coupling.to_dict(),
            "volatility": self.volatility.to_dict(),
        }

    def provenance_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class SvPath:
    x: np.ndarray
    sigma: np.ndarray
    z: np.ndarray
    y: np.ndarray
    model: SvModel
    seed: int
    innovations: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    def eta_aligned(self) -> np.ndarray:
        if self.innovations.size == 0:
            raise ValueError("path has no innovations (exact synthesis)")
        m = self.innovations.size - self.x.size
        return self.innovations[m:]

    def with_permuted_shocks(self, perm: np.ndarray) -> "SvPath":
        """Same volatility states with z permuted; under the independent
        coupling the result has the same law (exchangeability hook)."""
        z = self.z[perm]
        return SvPath(
            x=self.x,
            sigma=self.sigma,
            z=z,
            y=self.sigma * z,
            model=self.model,
            seed=self.seed,
            innovations=self.innovations,
        )

    def to_csv(self, path: str) -> None:
        n = len(self)
        out = np.column_stack([np.arange(1, n + 1), self.x, self.sigma, self.z, self.y])
        np.savetxt(path, out, delimiter=",", header="i,x,sigma,z,y", comments="")

    def to_binary(self, path: str) -> None:
        """Columnar cache: magic, header json, little-endian float64 columns."""
        header = {
            "n": len(self),
            "columns": ["x", "sigma", "z", "y"],
            "dtype": "<f8",
            "provenance": self.model.provenance_hash(),
            "seed": self.seed,
        }
        blob = json.dumps(header).encode()
        with open(path, "wb") as fh:
            fh.write(b"LMSV0001")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for col in (self.x, self.sigma, self.z, self.y):
                fh.write(np.asarray(col, dtype="<f8").tobytes())

    @staticmethod
    def read_binary(path: str) -> dict:
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != b"LMSV0001":
                raise ValueError("not a lmsvlab binary cache")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen))
            n = header["n"]
            cols = {}
            for name in header["columns"]:
                cols[name] = np.frombuffer(fh.read(8 * n), dtype="<f8")
        return {"header": header, **cols}


def simulate_sv(model: SvModel, n: int, seed, synthesis: str = "ma") -> SvPath:
    """Simulate one SV path of length n.

    ``synthesis="ma"`` uses the moving-average driver and retains the
    innovations (required by leverage couplings and the martingale
    decomposition). ``synthesis="exact"`` uses circulant embedding for the
    Gaussian states; it is only valid for the independent coupling, where
    shocks never see the innovations.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ss_gauss, ss_eta, ss_u = root.spawn(3)
    if synthesis == "exact":
        if model.coupling.kind != "independent":
            raise ValueError("exact synthesis has no innovations; leverage needs MA")
        gp = simulate_exact(model.gaussian, n, ss_gauss)
        eta_for_z = np.random.default_rng(ss_eta).standard_normal(n)
    elif synthesis == "ma":
        gp = simulate_path(model.gaussian, n, ss_gauss)
        eta_for_z = gp.eta_aligned()
    else:
        raise ValueError(f"unknown synthesis: {synthesis!r}")
    rng = np.random.default_rng(ss_u)
    z = sample_pair(model.tail, model.coupling, eta_for_z, rng.random(n))
    sig = sigma_eval(model.volatility, gp.values)
    sd = seed if isinstance(seed, (int, np.integer)) else -1
    return SvPath(
        x=gp.values,
        sigma=sig,
        z=z,
        y=sig * z,
        model=model,
        seed=int(sd),
        innovations=gp.innovations,
    )


def sample_marginal(model: SvModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """i.i.d. draws from the marginal law of Y_0.

    X_0 is independent of (Z_0, eta_0) for every coupling, so the marginal
    only needs a standard normal state and one coupled shock.
    """
    x = rng.standard_normal(size)
    eta = rng.standard_normal(size)
    z = sample_pair(model.tail, model.coupling, eta, rng.random(size))
    return sigma_eval(model.volatility, x) * z


def sample_product_pairs(
    model: SvModel, lag: int, rng: np.random.Generator, size: int
) -> np.ndarray:
    """i.i.d. draws from the law of Y_0 * Y_lag (exact finite-dim sampler).

    Decomposes X_lag = recent + c_lag*eta_0 + remote, where the remote part
    is jointly Gaussian with X_0 (correlation rho_lag / remote_std) and
    eta_0 is Z_0's partner. No path simulation is involved, so arbitrarily
    many independent pairs can be streamed.
    """
    from .kernels import lag_decomposition

    if lag < 1:
        raise ValueError("lag must be >= 1")
    c_lag, recent_std, remote_std, corr = lag_decomposition(model.gaussian, lag)
    x0 = rng.standard_normal(size)
    xi = rng.standard_normal(size)
    remote = corr * x0 + np.sqrt(max(0.0, 1.0 - corr * corr)) * xi
    zeta = rng.standard_normal(size)
    eta0 = rng.standard_normal(size)
    x_lag = recent_std * zeta + c_lag * eta0 + remote_std * remote
    z0 = sample_pair(model.tail, model.coupling, eta0, rng.random(size))
    eta_lag = rng.standard_normal(size)
    z_lag = sample_pair(model.tail, model.coupling, eta_lag, rng.random(size))
    y0 = sigma_eval(model.volatility, x0) * z0
    y_lag = sigma_eval(model.volatility, x_lag) * z_lag
    return y0 * y_lag
