"""Probability measures on R^d (d in {1, 2}) and the primitives built on them.

Three concrete representations are supported:

  * Empirical       -- weighted particles, the output of a particle simulator;
  * GridDensity     -- a nonnegative density on a uniform cell-centered grid
                       over a box [a, b]^d, the output of a PDE solver;
  * GaussianMixture -- isotropic Gaussian components, the analytic test case.

Every representation exposes integration mu(f), the characteristic function

    F(mu)(xi) = (2*pi)^(-d/2) * int exp(-i xi.x) mu(dx),

and the moment functional theta(mu) = mu(q) with q(x) = sqrt(1 + |x|^2).
All objects are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

MASS_TOL = 1e-12
BOUNDARY_DECAY = 1e-12
GH_ORDER_DEFAULT = 64

_gh_cache: dict = {}


def _gauss_hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes z and weights w with sum(w) = 1 for E[f(Z)], Z ~ N(0,1)."""
    key = order
    if key not in _gh_cache:
        x, w = np.polynomial.hermite.hermgauss(order)
        _gh_cache[key] = (np.sqrt(2.0) * x, w / np.sqrt(np.pi))
    return _gh_cache[key]


def as_points(x, d: int) -> np.ndarray:
    """Normalize input to an (N, d) float array."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        if d != 1:
            raise ValueError(f"scalar input for dimension d={d}")
        return a.reshape(1, 1)
    if a.ndim == 1:
        if d == 1:
            return a.reshape(-1, 1)
        if a.shape[0] == d:
            return a.reshape(1, d)
        raise ValueError(f"1-d input of length {a.shape[0]} for dimension d={d}")
    if a.ndim == 2 and a.shape[1] == d:
        return a
    raise ValueError(f"cannot interpret array of shape {a.shape} as points in R^{d}")


# ---------------------------------------------------------------------------
# smooth functions


@dataclass(frozen=True)
class SmoothFunction:
    """A C^2 function with vectorized value / gradient / Laplacian evaluators.

    ``value(X) -> (N,)``, ``grad(X) -> (N, d)``, ``lap(X) -> (N,)`` for
    ``X`` of shape (N, d).  ``growth`` is either "bounded" or "quadratic";
    a quadratic tag certifies |f(x)| <= growth_const * (1 + |x|^2).
    ``freq``, when present, evaluates the Fourier transform xi -> F(f)(xi)
    on (M, d) arrays; ``quad`` optionally records the frequency quadrature
    the function was synthesized on.
    """

    d: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    lap: Callable[[np.ndarray], np.ndarray]
    growth: str = "bounded"
    growth_const: Optional[float] = None
    freq: Optional[Callable[[np.ndarray], np.ndarray]] = None
    quad: Optional[object] = None
    name: str = ""

    def __post_init__(self):
        if self.growth not in ("bounded", "quadratic"):
            raise ValueError(f"unknown growth tag {self.growth!r}")

    def __call__(self, x) -> np.ndarray:
        return self.value(as_points(x, self.d))

    def check_derivatives(self, points: np.ndarray, rtol: float = 1e-5,
                          h: float = 1e-5) -> float:
        """Worst relative deviation of grad/lap from central differences."""
        X = as_points(points, self.d)
        g = self.grad(X)
        l = self.lap(X)
        g_fd = np.empty_like(g)
        lap_fd = np.zeros(X.shape[0])
        for k in range(self.d):
            e = np.zeros(self.d)
            e[k] = h
            fp = self.value(X + e)
            fm = self.value(X - e)
            f0 = self.value(X)
            g_fd[:, k] = (fp - fm) / (2 * h)
            lap_fd += (fp - 2 * f0 + fm) / h**2
        scale = 1.0 + np.max(np.abs(g)) + np.max(np.abs(l))
        worst = max(np.max(np.abs(g - g_fd)), np.max(np.abs(l - lap_fd))) / scale
        if worst > rtol:
            raise ValueError(f"derivative consistency failure: {worst:.3e} > {rtol}")
        return worst

    def check_growth(self, points: np.ndarray) -> None:
        X = as_points(points, self.d)
        v = np.abs(self.value(X))
        if self.growth_const is None:
            return
        if self.growth == "quadratic":
            bound = self.growth_const * (1.0 + np.sum(X**2, axis=1))
        else:
            bound = np.full(X.shape[0], self.growth_const)
        if np.any(v > bound * (1 + 1e-9) + 1e-12):
            raise ValueError("growth certificate violated at a sampled point")


def constant_function(d: int, c: float) -> SmoothFunction:
    return SmoothFunction(
        d=d,
        value=lambda X: np.full(X.shape[0], float(c)),
        grad=lambda X: np.zeros_like(X),
        lap=lambda X: np.zeros(X.shape[0]),
        growth="bounded",
        growth_const=abs(c),
        name=f"const({c})",
    )


def q_function(d: int) -> SmoothFunction:
    """q(x) = sqrt(1 + |x|^2): the moment weight behind theta."""

    def val(X):
        return np.sqrt(1.0 + np.sum(X**2, axis=1))

    def grad(X):
        return X / val(X)[:, None]

    def lap(X):
        r2 = np.sum(X**2, axis=1)
        return (d + (d - 1) * r2) / (1.0 + r2) ** 1.5

    return SmoothFunction(d=d, value=val, grad=grad, lap=lap,
                          growth="quadratic", growth_const=1.0, name="q")


def gaussian_bump(d: int) -> SmoothFunction:
    """f(x) = exp(-|x|^2 / 2); bounded, square integrable, self-dual FT shape."""

    def val(X):
        return np.exp(-0.5 * np.sum(X**2, axis=1))

    def grad(X):
        return -X * val(X)[:, None]

    def lap(X):
        r2 = np.sum(X**2, axis=1)
        return (r2 - d) * np.exp(-0.5 * r2)

    def freq(Xi):
        # F(f)(xi) = exp(-|xi|^2/2) for this normalization of the transform
        Xi = as_points(Xi, d)
        return np.exp(-0.5 * np.sum(Xi**2, axis=1))

    return SmoothFunction(d=d, value=val, grad=grad, lap=lap, growth="bounded",
                          growth_const=1.0, freq=freq, name="gaussian_bump")


def inv_quadratic(d: int) -> SmoothFunction:
    """f(x) = 1 / (1 + |x|^2); bounded with heavy polynomial tails."""

    def val(X):
        return 1.0 / (1.0 + np.sum(X**2, axis=1))

    def grad(X):
        return -2.0 * X / (1.0 + np.sum(X**2, axis=1))[:, None] ** 2

    def lap(X):
        r2 = np.sum(X**2, axis=1)
        return (8.0 * r2 - 2.0 * d * (1.0 + r2)) / (1.0 + r2) ** 3

    return SmoothFunction(d=d, value=val, grad=grad, lap=lap, growth="bounded",
                          growth_const=1.0, name="inv_quadratic")


def tanh_ramp(d: int) -> SmoothFunction:
    """f(x) = tanh(x_1); bounded but not square integrable."""

    def val(X):
        return np.tanh(X[:, 0])

    def grad(X):
        g = np.zeros_like(X)
        g[:, 0] = 1.0 / np.cosh(X[:, 0]) ** 2
        return g

    def lap(X):
        t = np.tanh(X[:, 0])
        return -2.0 * t * (1.0 - t**2)

    return SmoothFunction(d=d, value=val, grad=grad, lap=lap, growth="bounded",
                          growth_const=1.0, name="tanh_ramp")


INNER_REGISTRY = {
    "gaussian_bump": gaussian_bump,
    "inv_quadratic": inv_quadratic,
    "tanh_ramp": tanh_ramp,
}


def bounded_test_suite(d: int) -> list[SmoothFunction]:
    """Bounded smooth functions used for weak* gaps and consistency checks."""
    suite = [gaussian_bump(d), inv_quadratic(d), tanh_ramp(d)]

    def cos_val(X):
        return np.cos(np.sum(X, axis=1)) * np.exp(-0.25 * np.sum(X**2, axis=1))

    def cos_grad(X):
        s = np.sum(X, axis=1)
        r2 = np.sum(X**2, axis=1)
        e = np.exp(-0.25 * r2)
        return (-np.sin(s)[:, None] - 0.5 * np.cos(s)[:, None] * X) * e[:, None]

    def cos_lap(X):
        s = np.sum(X, axis=1)
        r2 = np.sum(X**2, axis=1)
        e = np.exp(-0.25 * r2)
        cos, sin = np.cos(s), np.sin(s)
        # componentwise second derivatives of cos(sum x) * exp(-r2/4), summed
        return e * (-d * cos + sin * np.sum(X, axis=1)
                    - 0.5 * d * cos + 0.25 * r2 * cos)

    suite.append(SmoothFunction(d=d, value=cos_val, grad=cos_grad, lap=cos_lap,
                                growth="bounded", growth_const=1.0,
                                name="cos_wave"))
    return suite


# ---------------------------------------------------------------------------
# measure representations


def _char_phase_sum(xi: np.ndarray, x: np.ndarray, w: np.ndarray,
                    chunk: int = 4096) -> np.ndarray:
    """sum_k w_k exp(-i xi.x_k) for xi (M, d), x (N, d); chunked over particles."""
    M = xi.shape[0]
    out = np.zeros(M, dtype=complex)
    for lo in range(0, x.shape[0], chunk):
        xs = x[lo:lo + chunk]
        ws = w[lo:lo + chunk]
        phase = xi @ xs.T  # (M, n_chunk)
        out += (np.cos(phase) - 1j * np.sin(phase)) @ ws
    return out


@dataclass(frozen=True)
class Empirical:
    """Weighted particle cloud: sum_k w_k delta_{x_k}."""

    d: int
    points: np.ndarray   # (N, d)
    weights: np.ndarray  # (N,)

    def __post_init__(self):
        pts = as_points(self.points, self.d)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points/weights length mismatch")
        if np.any(w < 0):
            raise ValueError("negative particle weight")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {w.sum()!r} differs from 1 beyond {MASS_TOL}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    kind = "empirical"

    def integrate(self, f) -> float:
        vals = f.value(self.points) if isinstance(f, SmoothFunction) else f(self.points)
        return float(self.weights @ vals)

    def char(self, xi: np.ndarray) -> np.ndarray:
        return (2 * np.pi) ** (-self.d / 2) * _char_phase_sum(xi, self.points, self.weights)

    def second_moment(self) -> float:
        return float(self.weights @ np.sum(self.points**2, axis=1))


@dataclass(frozen=True)
class GridDensity:
    """Nonnegative density on the cell-centered uniform grid over [a, b]^d."""

    d: int
    a: float
    b: float
    n: int
    density: np.ndarray  # shape (n,) * d, row-major

    kind = "grid"

    def __post_init__(self):
        rho = np.asarray(self.density, dtype=float)
        if rho.shape != (self.n,) * self.d:
            raise ValueError(f"density shape {rho.shape} != {(self.n,) * self.d}")
        if np.any(rho < 0):
            raise ValueError("negative density value")
        mass = rho.sum() * self.cell_volume
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {mass!r} differs from 1 beyond {MASS_TOL}")
        edge = np.max(self._outer_layers(rho))
        if edge > BOUNDARY_DECAY:
            raise ValueError(
                f"density {edge:.3e} on the outer two cell layers exceeds "
                f"{BOUNDARY_DECAY}; enlarge the box")
        object.__setattr__(self, "density", rho)

    def _outer_layers(self, rho: np.ndarray) -> np.ndarray:
        if self.d == 1:
            return np.concatenate([rho[:2], rho[-2:]])
        mask = np.zeros_like(rho, dtype=bool)
        mask[:2, :] = mask[-2:, :] = True
        mask[:, :2] = mask[:, -2:] = True
        return rho[mask]

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def axis(self) -> np.ndarray:
        return self.a + (np.arange(self.n) + 0.5) * self.h

    def grid_points(self) -> np.ndarray:
        if self.d == 1:
            return self.axis.reshape(-1, 1)
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def integrate(self, f) -> float:
        pts = self.grid_points()
        vals = f.value(pts) if isinstance(f, SmoothFunction) else f(pts)
        return float(np.sum(self.density.ravel() * vals) * self.cell_volume)

    def char(self, xi: np.ndarray) -> np.ndarray:
        pref = (2 * np.pi) ** (-self.d / 2) * self.cell_volume
        if self.d == 1:
            phase = xi[:, 0:1] * self.axis[None, :]
            return pref * ((np.cos(phase) - 1j * np.sin(phase)) @ self.density)
        # separable phases keep the d=2 transform at O(M n) per axis
        e1 = np.exp(-1j * xi[:, 0:1] * self.axis[None, :])  # (M, n)
        e2 = np.exp(-1j * xi[:, 1:2] * self.axis[None, :])
        return pref * np.einsum("mi,ij,mj->m", e1, self.density, e2)

    def second_moment(self) -> float:
        pts = self.grid_points()
        return float(np.sum(self.density.ravel() * np.sum(pts**2, axis=1))
                     * self.cell_volume)


@dataclass(frozen=True)
class GaussianMixture:
    """sum_k w_k N(mean_k, sigma_k^2 * Id)."""

    d: int
    comp_weights: np.ndarray  # (K,)
    means: np.ndarray         # (K, d)
    sigmas: np.ndarray        # (K,)
    gh_order: int = GH_ORDER_DEFAULT

    kind = "mixture"

    def __post_init__(self):
        w = np.asarray(self.comp_weights, dtype=float).reshape(-1)
        m = as_points(self.means, self.d)
        s = np.asarray(self.sigmas, dtype=float).reshape(-1)
        if not (w.shape[0] == m.shape[0] == s.shape[0]):
            raise ValueError("component count mismatch")
        if np.any(w < 0):
            raise ValueError("negative component weight")
        if np.any(s <= 0):
            raise ValueError("component sigma must be positive")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {w.sum()!r} differs from 1 beyond {MASS_TOL}")
        object.__setattr__(self, "comp_weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "sigmas", s)

    def integrate(self, f, gh_order: Optional[int] = None) -> float:
        order = gh_order or self.gh_order
        z, w = _gauss_hermite(order)
        fv = f.value if isinstance(f, SmoothFunction) else f
        total = 0.0
        if self.d == 1:
            for cw, m, s in zip(self.comp_weights, self.means, self.sigmas):
                total += cw * float(w @ fv((m[0] + s * z).reshape(-1, 1)))
        else:
            Z1, Z2 = np.meshgrid(z, z, indexing="ij")
            W = np.outer(w, w).ravel()
            Z = np.column_stack([Z1.ravel(), Z2.ravel()])
            for cw, m, s in zip(self.comp_weights, self.means, self.sigmas):
                total += cw * float(W @ fv(m[None, :] + s * Z))
        return total

    def char(self, xi: np.ndarray) -> np.ndarray:
        r2 = np.sum(xi**2, axis=1)
        out = np.zeros(xi.shape[0], dtype=complex)
        for cw, m, s in zip(self.comp_weights, self.means, self.sigmas):
            phase = xi @ m
            out += cw * np.exp(-0.5 * s**2 * r2) * (np.cos(phase) - 1j * np.sin(phase))
        return (2 * np.pi) ** (-self.d / 2) * out

    def second_moment(self) -> float:
        return float(np.sum(self.comp_weights
                            * (np.sum(self.means**2, axis=1) + self.d * self.sigmas**2)))

    def density_at(self, X: np.ndarray) -> np.ndarray:
        X = as_points(X, self.d)
        out = np.zeros(X.shape[0])
        for cw, m, s in zip(self.comp_weights, self.means, self.sigmas):
            r2 = np.sum((X - m[None, :]) ** 2, axis=1)
            out += cw * np.exp(-0.5 * r2 / s**2) / (2 * np.pi * s**2) ** (self.d / 2)
        return out


Measure = Union[Empirical, GridDensity, GaussianMixture]


def gaussian(d: int, mean, sigma: float) -> GaussianMixture:
    """Single isotropic Gaussian N(mean, sigma^2 Id)."""
    m = np.atleast_1d(np.asarray(mean, dtype=float))
    return GaussianMixture(d=d, comp_weights=np.array([1.0]),
                           means=m.reshape(1, d), sigmas=np.array([sigma]))


def dirac(d: int, location) -> Empirical:
    return Empirical(d=d, points=np.asarray(location, dtype=float).reshape(1, d),
                     weights=np.array([1.0]))


def cell_centers(a: float, b: float, n: int, d: int) -> np.ndarray:
    ax = a + (np.arange(n) + 0.5) * (b - a) / n
    if d == 1:
        return ax.reshape(-1, 1)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def to_grid(mu: Measure, a: float, b: float, n: int) -> GridDensity:
    """Discretize a mixture (or re-grid a GridDensity) onto [a, b]^d cells."""
    if isinstance(mu, GaussianMixture):
        pts = cell_centers(a, b, n, mu.d)
        rho = mu.density_at(pts).reshape((n,) * mu.d)
        vol = ((b - a) / n) ** mu.d
        rho = rho / (rho.sum() * vol)
        return GridDensity(d=mu.d, a=a, b=b, n=n, density=rho)
    if isinstance(mu, GridDensity):
        if (mu.a, mu.b, mu.n) == (a, b, n):
            return mu
        raise ValueError("re-gridding between mismatched grids is not supported")
    raise ValueError(f"cannot grid a measure of kind {mu.kind!r}")


def mix(mu: Measure, nu: Measure, tau: float) -> Measure:
    """Convex combination (1 - tau) mu + tau nu of same-kind measures."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    if mu.d != nu.d:
        raise ValueError("dimension mismatch")
    if tau == 0.0:
        return mu
    if tau == 1.0:
        return nu
    if isinstance(mu, Empirical) and isinstance(nu, Empirical):
        return Empirical(d=mu.d,
                         points=np.vstack([mu.points, nu.points]),
                         weights=np.concatenate([(1 - tau) * mu.weights,
                                                 tau * nu.weights]))
    if isinstance(mu, GaussianMixture) and isinstance(nu, GaussianMixture):
        return GaussianMixture(
            d=mu.d,
            comp_weights=np.concatenate([(1 - tau) * mu.comp_weights,
                                         tau * nu.comp_weights]),
            means=np.vstack([mu.means, nu.means]),
            sigmas=np.concatenate([mu.sigmas, nu.sigmas]))
    if isinstance(mu, GridDensity) and isinstance(nu, GridDensity):
        if (mu.a, mu.b, mu.n) != (nu.a, nu.b, nu.n):
            raise ValueError("grid mismatch")
        return GridDensity(d=mu.d, a=mu.a, b=mu.b, n=mu.n,
                           density=(1 - tau) * mu.density + tau * nu.density)
    raise ValueError(f"cannot mix representations {mu.kind!r} and {nu.kind!r}")


# ---------------------------------------------------------------------------
# the module operations


def integrate(mu: Measure, f) -> float:
    """mu(f); dispatches on the representation."""
    if isinstance(f, SmoothFunction) and f.d != mu.d:
        raise ValueError(f"dimension mismatch: measure d={mu.d}, function d={f.d}")
    return mu.integrate(f)


def char_fn(mu: Measure, xi) -> Union[complex, np.ndarray]:
    """F(mu)(xi) on a single frequency (d,) or a batch (M, d)."""
    arr = np.asarray(xi, dtype=float)
    single = arr.ndim <= 1
    out = mu.char(as_points(arr, mu.d))
    return complex(out[0]) if single and out.shape[0] == 1 else out


def theta(mu: Measure) -> float:
    """mu(q) >= 1, the coercive moment functional."""
    return integrate(mu, q_function(mu.d))


def first_abs_moment(mu: Measure) -> float:
    return mu.integrate(lambda X: np.sqrt(np.sum(X**2, axis=1)))


# ---------------------------------------------------------------------------
# CSV interchange


def save_empirical_csv(mu: Empirical, path) -> None:
    header = "w," + ",".join(f"x{k+1}" for k in range(mu.d))
    rows = [header]
    for w, x in zip(mu.weights, mu.points):
        rows.append(",".join(format(v, ".17g") for v in (w, *x)))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def load_empirical_csv(path) -> Empirical:
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = lines[0].split(",")
    if header[0] != "w" or not all(h.startswith("x") for h in header[1:]):
        raise ValueError(f"bad empirical CSV header: {lines[0]!r}")
    d = len(header) - 1
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return Empirical(d=d, points=data[:, 1:], weights=data[:, 0])


def save_grid_csv(mu: GridDensity, path) -> None:
    rows = ["a,b,n",
            ",".join([format(mu.a, ".17g"), format(mu.b, ".17g"), str(mu.n)])]
    rows.extend(format(v, ".17g") for v in mu.density.ravel())
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def load_grid_csv(path, d: int = 1) -> GridDensity:
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != "a,b,n":
        raise ValueError(f"bad grid CSV header: {lines[0]!r}")
    a_s, b_s, n_s = lines[1].split(",")
    a, b, n = float(a_s), float(b_s), int(n_s)
    vals = np.array([float(v) for v in lines[2:]])
    if vals.size == n**2 and d == 1:
        d = 2
    return GridDensity(d=d, a=a, b=b, n=n, density=vals.reshape((n,) * d))
