"""Train dynamics models through a Runge-Kutta step on Dahlquist data.

Complex states are carried as complex arrays. Gradients use the convention
``g = dL/dRe(u) + i dL/dIm(u)`` for a real loss ``L`` and complex ``u``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .butcher import ButcherTableau
from .errors import DatasetError, DivergenceError, UnsupportedTableauError
from .learnability import (
    LearnabilityResult,
    ProblemSpec,
    RootPolicy,
    coefficients,
    learnability_roots,
    safe_exp,
    solve,
)
from .stability import stability_function

__all__ = [
    "Dataset",
    "LinearModel",
    "MlpModel",
    "AdamConfig",
    "MlpConfig",
    "Adam",
    "TrainingReport",
    "AlphaEstimate",
    "ComparisonReport",
    "generate_dataset",
    "rk_step",
    "loss_and_grad",
    "fit_linear",
    "fit_mlp",
    "estimate_alpha",
    "compare_with_theory",
    "trajectory_csv",
]

MIN_ABS_X0 = 1e-6


@dataclass(frozen=True)
class Dataset:
    x0: np.ndarray
    x1: np.ndarray
    lam: complex
    h: float
    seed: int
    box: float

    @property
    def n(self) -> int:
        return self.x0.size


def generate_dataset(lam: complex, h: float = 1.0, n: int = 10000, box: float = 10.0,
                     seed: int = 0) -> Dataset:
    """Sample ``x0`` uniformly on ``[-box, box]^2`` and set ``x1 = exp(h lam) x0``."""
    if n < 1:
        raise DatasetError("need at least one sample")
    if not box > 0:
        raise DatasetError("sample box half-width must be positive")
    lam = complex(lam)
    growth = safe_exp(h * lam)
    rng = np.random.default_rng(seed)
    re = rng.uniform(-box, box, n)
    im = rng.uniform(-box, box, n)
    x0 = re + 1j * im
    return Dataset(x0, growth * x0, lam, float(h), int(seed), float(box))


# models ------------------------------------------------------------------

@dataclass
class LinearModel:
    """``f(x) = alpha x``."""

    alpha: complex

    def __call__(self, x):
        return self.alpha * x

    def forward(self, y):
        return self.alpha * y, y

    def backward(self, cache, g):
        y = cache
        return g * np.conj(self.alpha), {"alpha": np.sum(g * np.conj(y))}

    def get_params(self):
        return {"alpha": np.array([self.alpha.real, self.alpha.imag])}

    def set_params(self, params):
        a = params["alpha"]
        self.alpha = complex(a[0], a[1])

    def real_grads(self, grads):
        g = grads["alpha"]
        return {"alpha": np.array([g.real, g.imag])}


@dataclass
class MlpModel:
    """2 -> H -> 2 perceptron with tanh hidden layer acting on ``(Re x, Im x)``."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def init(cls, hidden: int, seed: int = 0) -> "MlpModel":
        rng = np.random.default_rng(seed)
        k1 = 1.0 / math.sqrt(2)
        k2 = 1.0 / math.sqrt(hidden)
        return cls(
            rng.uniform(-k1, k1, (2, hidden)),
            rng.uniform(-k1, k1, hidden),
            rng.uniform(-k2, k2, (hidden, 2)),
            rng.uniform(-k2, k2, 2),
        )

    @classmethod
    def zeros(cls, hidden: int) -> "MlpModel":
        return cls(np.zeros((2, hidden)), np.zeros(hidden), np.zeros((hidden, 2)), np.zeros(2))

    @property
    def hidden(self) -> int:
        return self.b1.size

    def __call__(self, x):
        return self.forward(np.asarray(x, dtype=complex))[0]

    def forward(self, y):
        X = np.stack([y.real, y.imag], axis=-1)
        T = np.tanh(X @ self.W1 + self.b1)
        out = T @ self.W2 + self.b2
        return out[..., 0] + 1j * out[..., 1], (X, T)

    def backward(self, cache, g):
        X, T = cache
        G = np.stack([g.real, g.imag], axis=-1)
        grads = {"W2": T.T @ G, "b2": G.sum(axis=0)}
        GA = (G @ self.W2.T) * (1.0 - T * T)
        grads["W1"] = X.T @ GA
        grads["b1"] = GA.sum(axis=0)
        GX = GA @ self.W1.T
        return GX[..., 0] + 1j * GX[..., 1], grads

    def get_params(self):
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def set_params(self, params):
        for k, v in params.items():
            setattr(self, k, v)

    def real_grads(self, grads):
        return grads


# integrator --------------------------------------------------------------

def _require_explicit(tableau: ButcherTableau):
    if not tableau.is_explicit:
        raise UnsupportedTableauError(
            f"{tableau.name!r} is implicit; training supports explicit tableaux only"
        )


def rk_step(tableau: ButcherTableau, model: Callable, x, h: float):
    """One explicit Runge-Kutta step of ``x' = model(x)``."""
    _require_explicit(tableau)
    A, b = tableau.A_array(), tableau.b_array()
    x = np.asarray(x, dtype=complex)
    k = []
    for i in range(tableau.p):
        y = x + h * sum((A[i, j] * k[j] for j in range(i) if A[i, j] != 0), np.zeros_like(x))
        k.append(np.asarray(model(y), dtype=complex))
    out = x + h * sum((b[i] * k[i] for i in range(tableau.p) if b[i] != 0), np.zeros_like(x))
    return out[()] if out.ndim == 0 else out


def loss_and_grad(tableau: ButcherTableau, model, x0, x1, h: float):
    """Mean squared one-step error and its gradient w.r.t. the model parameters.

    Gradients flow backward through the stage recursion: the cotangent of
    stage ``i`` collects ``h b_i`` from the output and ``h a_li`` from every
    later stage ``l`` that consumed it.
    """
    _require_explicit(tableau)
    A, b = tableau.A_array(), tableau.b_array()
    p = tableau.p
    m = x0.size
    ks, caches = [], []
    for i in range(p):
        y = x0.copy()
        for j in range(i):
            if A[i, j] != 0:
                y = y + h * A[i, j] * ks[j]
        k, cache = model.forward(y)
        ks.append(k)
        caches.append(cache)
    xhat = x0.copy()
    for i in range(p):
        if b[i] != 0:
            xhat = xhat + h * b[i] * ks[i]
    resid = xhat - x1
    loss = float(np.mean(resid.real ** 2 + resid.imag ** 2))
    g = (2.0 / m) * resid
    gy = [None] * p
    total = None
    for i in range(p - 1, -1, -1):
        gk = h * b[i] * g
        for l in range(i + 1, p):
            if A[l, i] != 0:
                gk = gk + h * A[l, i] * gy[l]
        gy[i], grads = model.backward(caches[i], gk)
        if total is None:
            total = grads
        else:
            total = {key: total[key] + grads[key] for key in total}
    return loss, model.real_grads(total)


# optimizer ---------------------------------------------------------------

@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iter: int = 3000
    grad_tol: float = 1e-12


class Adam:
    def __init__(self, params: dict, cfg: AdamConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v, dtype=float) for k, v in params.items()}
        self.v = {k: np.zeros_like(v, dtype=float) for k, v in params.items()}

    def step(self, params: dict, grads: dict) -> dict:
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        out = {}
        for k, p in params.items():
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            mhat = self.m[k] / bc1
            vhat = self.v[k] / bc2
            out[k] = p - c.lr * mhat / (np.sqrt(vhat) + c.eps)
        return out


def _grad_norm(grads: dict) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


# reports -----------------------------------------------------------------

def _c(z):
    return None if z is None else [float(z.real), float(z.imag)]


@dataclass
class TrainingReport:
    method: str
    model: str
    lam: complex
    h: float
    seed: int
    n: int
    final_loss: float
    relative_loss: float
    estimated_alpha: complex
    ratio_mean: complex
    ratio_dispersion: float
    nearest_root: complex
    nearest_root_index: int
    distance: float
    iterations: int
    optimizer: dict
    model_config: dict = field(default_factory=dict)
    loss_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("lam", "estimated_alpha", "ratio_mean", "nearest_root"):
            d[key] = _c(d[key])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingReport":
        d = dict(d)
        for key in ("lam", "estimated_alpha", "ratio_mean", "nearest_root"):
            d[key] = complex(*d[key])
        return cls(**d)


class AlphaEstimate(NamedTuple):
    alpha: complex
    ratio: complex
    dispersion: float


def estimate_alpha(tableau: ButcherTableau, model, dataset: Dataset,
                   reference: complex | None = None) -> AlphaEstimate:
    """Average one-step ratio ``x1_hat / x0`` mapped back through ``R(h alpha) = ratio``.

    Of the solutions, the one closest to ``reference`` (default: the true
    ``lambda``) is returned. Samples with ``|x0| < 1e-6`` are skipped.
    """
    keep = np.abs(dataset.x0) >= MIN_ABS_X0
    if not keep.any():
        raise DatasetError("every sample has |x0| below the exclusion threshold")
    x0 = dataset.x0[keep]
    ratios = rk_step(tableau, model, x0, dataset.h) / x0
    rbar = complex(np.mean(ratios))
    dispersion = float(np.max(np.abs(ratios - rbar)))
    ref = dataset.lam if reference is None else complex(reference)
    spec = ProblemSpec(ref, dataset.h)
    alpha = learnability_roots(stability_function(tableau), spec, target=rbar)[0]
    return AlphaEstimate(alpha, rbar, dispersion)


def _nearest(alpha: complex, roots) -> tuple[int, complex, float]:
    d = [abs(alpha - r) for r in roots]
    i = int(np.argmin(d))
    return i, roots[i], float(d[i])


def _report(tableau, model, dataset, kind, loss, history, iterations, cfg, model_cfg,
            reference=None):
    est = estimate_alpha(tableau, model, dataset, reference)
    roots = learnability_roots(stability_function(tableau), ProblemSpec(dataset.lam, dataset.h))
    idx, root, dist = _nearest(est.alpha, roots)
    scale = float(np.mean(np.abs(dataset.x1) ** 2))
    return TrainingReport(
        method=tableau.name, model=kind, lam=dataset.lam, h=dataset.h, seed=dataset.seed,
        n=dataset.n, final_loss=loss, relative_loss=loss / scale if scale > 0 else loss,
        estimated_alpha=est.alpha, ratio_mean=est.ratio, ratio_dispersion=est.dispersion,
        nearest_root=root, nearest_root_index=idx, distance=dist, iterations=iterations,
        optimizer=asdict(cfg), model_config=model_cfg, loss_history=history,
    )


def fit_linear(tableau: ButcherTableau, dataset: Dataset, init_alpha: complex,
               cfg: AdamConfig = AdamConfig(lr=1e-2, max_iter=20000)) -> TrainingReport:
    """Full-batch Adam on the two real parameters of ``alpha``."""
    _require_explicit(tableau)
    model = LinearModel(complex(init_alpha))
    opt = Adam(model.get_params(), cfg)
    history = []
    loss = math.nan
    it = 0
    for it in range(1, cfg.max_iter + 1):
        loss, grads = loss_and_grad(tableau, model, dataset.x0, dataset.x1, dataset.h)
        history.append(loss)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise DivergenceError(f"loss became non-finite after {it} iterations", len(history))
        if _grad_norm(grads) < cfg.grad_tol:
            break
        model.set_params(opt.step(model.get_params(), grads))
    loss, _ = loss_and_grad(tableau, model, dataset.x0, dataset.x1, dataset.h)
    # invert on the trained parameter's own branch
    return _report(tableau, model, dataset, "linear", loss, history, it, cfg,
                   {"init_alpha": _c(complex(init_alpha))}, reference=model.alpha)


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 200
    epochs: int = 3000
    batch_size: int | None = None
    seed: int = 0


def fit_mlp(tableau: ButcherTableau, dataset: Dataset, mlp_cfg: MlpConfig = MlpConfig(),
            cfg: AdamConfig = AdamConfig()) -> tuple[TrainingReport, MlpModel]:
    """Train the perceptron with hand-written backprop through the RK stages.

    ``batch_size=None`` means full batch. Returns the report and the model.
    """
    _require_explicit(tableau)
    model = MlpModel.init(mlp_cfg.hidden, mlp_cfg.seed)
    opt = Adam(model.get_params(), cfg)
    rng = np.random.default_rng(mlp_cfg.seed + 1)
    history = []
    n = dataset.n
    bs = n if mlp_cfg.batch_size is None else min(n, mlp_cfg.batch_size)
    for epoch in range(mlp_cfg.epochs):
        order = np.arange(n) if bs == n else rng.permutation(n)
        for start in range(0, n, bs):
            sel = order[start:start + bs]
            loss, grads = loss_and_grad(tableau, model, dataset.x0[sel], dataset.x1[sel],
                                        dataset.h)
            if not math.isfinite(loss):
                raise DivergenceError(f"loss became non-finite in epoch {epoch}", len(history))
            model.set_params(opt.step(model.get_params(), grads))
        if bs == n:
            history.append(loss)
        else:
            history.append(loss_and_grad(tableau, model, dataset.x0, dataset.x1, dataset.h)[0])
    loss, _ = loss_and_grad(tableau, model, dataset.x0, dataset.x1, dataset.h)
    report = _report(tableau, model, dataset, "mlp", loss, history, mlp_cfg.epochs, cfg,
                     asdict(mlp_cfg))
    return report, model


# comparison --------------------------------------------------------------

@dataclass
class ComparisonReport:
    estimated_alpha: complex
    roots: list
    distances: list
    matched_index: int
    matched_root: complex
    matched_distance: float
    theory: dict
    empirical: dict
    growing: bool
    t: np.ndarray
    re_true: np.ndarray
    re_learned: np.ndarray

    def to_dict(self) -> dict:
        return {
            "estimated_alpha": _c(self.estimated_alpha),
            "roots": [_c(r) for r in self.roots],
            "distances": self.distances,
            "matched_index": self.matched_index,
            "matched_root": _c(self.matched_root),
            "matched_distance": self.matched_distance,
            "theory": self.theory,
            "empirical": self.empirical,
            "growing": self.growing,
        }


def _coef_dict(alpha, spec):
    c = coefficients(alpha, spec)
    return {"l_alpha": c.l_alpha, "l_real": c.l_real, "l_imag": c.l_imag, "mu": _c(c.mu)}


def compare_with_theory(report: TrainingReport, result: LearnabilityResult | None = None,
                        t_max: float = 20.0, n_t: int = 201, x0: complex = 1.0,
                        tableau: ButcherTableau | None = None) -> ComparisonReport:
    """Match the trained ``alpha`` against the analytic roots and sample trajectories."""
    spec = ProblemSpec(report.lam, report.h)
    if result is None:
        if tableau is None:
            from .butcher import builtin
            tableau = builtin(report.method)
        result = solve(tableau, spec, RootPolicy.all())
    roots = [r.alpha for r in result.roots]
    alpha = report.estimated_alpha
    dists = [float(abs(alpha - r)) for r in roots]
    idx = int(np.argmin(dists))
    t = np.linspace(0.0, t_max, n_t)
    x0 = complex(x0)
    return ComparisonReport(
        estimated_alpha=alpha, roots=roots, distances=dists, matched_index=idx,
        matched_root=roots[idx], matched_distance=dists[idx],
        theory=_coef_dict(roots[idx], spec), empirical=_coef_dict(alpha, spec),
        growing=alpha.real > 0, t=t,
        re_true=(x0 * np.exp(spec.lam * t)).real,
        re_learned=(x0 * np.exp(alpha * t)).real,
    )


def trajectory_csv(comparison: ComparisonReport) -> bytes:
    lines = ["t,re_true,re_learned"]
    for t, a, b in zip(comparison.t, comparison.re_true, comparison.re_learned):
        lines.append(f"{t:.17g},{a:.17g},{b:.17g}")
    return ("\n".join(lines) + "\n").encode("ascii")
