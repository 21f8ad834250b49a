"""Gaussian process surrogate: ARD squared-exponential kernel, exact inference,
MLE hyperparameter fitting, multitask (intrinsic coregionalization) covariance,
and random-walk Metropolis sampling of the hyperparameter posterior."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.stats import qmc


class GpError(Exception):
    pass


class SingularKernel(GpError):
    pass


class DegenerateData(GpError):
    pass


class InvalidChainSpec(GpError):
    pass


class TaskIndexOutOfRange(GpError):
    pass


LENGTHSCALE_BOUNDS = (1e-3, 1e3)
OUTPUTSCALE_BOUNDS = (1e-4, 1e4)
NOISE_BOUNDS = (1e-8, 1e2)


@dataclass(frozen=True)
class TaskCovariance:
    """Rank-1 plus diagonal inter-task covariance B = w w^T + diag(v)."""

    w: tuple[float, ...]
    v: tuple[float, ...]

    @property
    def num_tasks(self) -> int:
        return len(self.w)

    @property
    def matrix(self) -> np.ndarray:
        w = np.asarray(self.w)
        return np.outer(w, w) + np.diag(np.maximum(self.v, 1e-6))

    @staticmethod
    def identity(num_tasks: int) -> "TaskCovariance":
        return TaskCovariance(w=(0.0,) * num_tasks, v=(1.0,) * num_tasks)


@dataclass(frozen=True)
class KernelConfig:
    lengthscales: tuple[float, ...]
    outputscale: float = 1.0
    noise: float = 1e-4
    task: TaskCovariance | None = None

    def validate(self) -> None:
        if any(l <= 0 for l in self.lengthscales) or self.outputscale <= 0 or self.noise < 0:
            raise GpError(f"invalid kernel config: {self}")


def default_config(dim: int, num_tasks: int | None = None) -> KernelConfig:
    ls = 0.5 * np.sqrt(dim) if dim else 0.5
    return KernelConfig(
        lengthscales=(float(ls),) * max(dim, 1),
        outputscale=1.0,
        noise=1e-4,
        task=TaskCovariance.identity(num_tasks) if num_tasks else None,
    )


def _sq_dists(A: np.ndarray, B: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    As = A / lengthscales
    Bs = B / lengthscales
    d2 = (
        np.sum(As**2, axis=1)[:, None]
        + np.sum(Bs**2, axis=1)[None, :]
        - 2.0 * As @ Bs.T
    )
    return np.maximum(d2, 0.0)


def kernel_matrix(
    config: KernelConfig,
    A: np.ndarray,
    B: np.ndarray,
    tasks_a: np.ndarray | None = None,
    tasks_b: np.ndarray | None = None,
) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    ls = np.asarray(config.lengthscales, dtype=float)
    K = config.outputscale * np.exp(-0.5 * _sq_dists(A, B, ls))
    if config.task is not None and tasks_a is not None and tasks_b is not None:
        Bmat = config.task.matrix
        nt = config.task.num_tasks
        ta = np.asarray(tasks_a, dtype=int)
        tb = np.asarray(tasks_b, dtype=int)
        if ta.size and (ta.min() < 0 or ta.max() >= nt):
            raise TaskIndexOutOfRange(f"task index out of range 0..{nt - 1}")
        if tb.size and (tb.min() < 0 or tb.max() >= nt):
            raise TaskIndexOutOfRange(f"task index out of range 0..{nt - 1}")
        K = K * Bmat[np.ix_(ta, tb)]
    return K


def multitask_kernel(
    config: KernelConfig, x: np.ndarray, t: int, x2: np.ndarray, t2: int
) -> float:
    """Intrinsic coregionalization: B[t, t'] * k_base(x, x')."""
    if config.task is None:
        raise GpError("config has no task covariance")
    return float(
        kernel_matrix(config, [x], [x2], np.array([t]), np.array([t2]))[0, 0]
    )


def _chol_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with escalating jitter (1e-9 .. 1e-5 of mean diag)."""
    scale = float(np.mean(np.diag(K))) or 1.0
    jitter = 1e-9 * scale
    last_err: Exception | None = None
    for _ in range(5):
        try:
            L = cholesky(K + jitter * np.eye(K.shape[0]), lower=True)
            return L, jitter
        except np.linalg.LinAlgError as err:  # pragma: no cover - scipy raises its own
            last_err = err
            jitter *= 10.0
        except Exception as err:
            last_err = err
            jitter *= 10.0
    raise SingularKernel(f"Cholesky failed at max jitter: {last_err}")


def standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    y = np.asarray(y, dtype=float)
    mu = float(np.mean(y))
    sd = float(np.std(y))
    if sd == 0.0 or y.size == 1:
        sd = 1.0
    return (y - mu) / sd, mu, sd


def log_marginal_likelihood(
    X: np.ndarray,
    y: np.ndarray,
    config: KernelConfig,
    tasks: np.ndarray | None = None,
) -> float:
    """-1/2 y^T (K+s^2 I)^-1 y - 1/2 log|K+s^2 I| - n/2 log 2pi on standardized y."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ys, _, _ = standardize(y)
    n = ys.size
    K = kernel_matrix(config, X, X, tasks, tasks) + config.noise * np.eye(n)
    L, _ = _chol_with_jitter(K)
    alpha = cho_solve((L, True), ys)
    return float(
        -0.5 * ys @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
    )


def lml_and_grad(
    X: np.ndarray, y: np.ndarray, config: KernelConfig
) -> tuple[float, np.ndarray]:
    """LML and its gradient wrt (log lengthscales..., log outputscale, log noise).

    Single-task only; the multitask path uses numerical gradients.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ys, _, _ = standardize(y)
    n = ys.size
    ls = np.asarray(config.lengthscales, dtype=float)
    Kbase = kernel_matrix(replace(config, task=None), X, X)
    K = Kbase + config.noise * np.eye(n)
    L, _ = _chol_with_jitter(K)
    alpha = cho_solve((L, True), ys)
    lml = float(
        -0.5 * ys @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
    )
    Kinv = cho_solve((L, True), np.eye(n))
    W = np.outer(alpha, alpha) - Kinv  # dLML/dK = W/2

    grads = []
    for d in range(ls.size):
        diff2 = (X[:, d][:, None] - X[:, d][None, :]) ** 2
        dK = Kbase * diff2 / ls[d] ** 2  # wrt log lengthscale
        grads.append(0.5 * np.sum(W * dK))
    grads.append(0.5 * np.sum(W * Kbase))  # wrt log outputscale
    grads.append(0.5 * np.trace(W) * config.noise)  # wrt log noise
    return lml, np.asarray(grads)


def _config_from_theta(theta: np.ndarray, dim: int, num_tasks: int | None) -> KernelConfig:
    ls = tuple(np.exp(theta[:dim]))
    os_ = float(np.exp(theta[dim]))
    noise = float(np.exp(theta[dim + 1]))
    task = None
    if num_tasks:
        w = tuple(theta[dim + 2 : dim + 2 + num_tasks])
        v = tuple(np.exp(theta[dim + 2 + num_tasks : dim + 2 + 2 * num_tasks]))
        task = TaskCovariance(w=w, v=v)
    return KernelConfig(lengthscales=ls, outputscale=os_, noise=noise, task=task)


def fit_mle(
    X: np.ndarray,
    y: np.ndarray,
    tasks: np.ndarray | None = None,
    num_tasks: int | None = None,
) -> KernelConfig:
    """Multi-start (1 default + 7 quasi-random) L-BFGS ascent of the LML in
    log-parameter space; returns a config at least as good as the default start."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise DegenerateData("need at least 2 observations to fit hyperparameters")
    dim = X.shape[1]

    lo = np.log([LENGTHSCALE_BOUNDS[0]] * dim + [OUTPUTSCALE_BOUNDS[0], NOISE_BOUNDS[0]])
    hi = np.log([LENGTHSCALE_BOUNDS[1]] * dim + [OUTPUTSCALE_BOUNDS[1], NOISE_BOUNDS[1]])
    if num_tasks:
        lo = np.concatenate([lo, [-3.0] * num_tasks, np.log([1e-6] * num_tasks)])
        hi = np.concatenate([hi, [3.0] * num_tasks, np.log([1e2] * num_tasks)])

    d0 = default_config(dim)
    theta0 = np.concatenate(
        [np.log(d0.lengthscales), [np.log(d0.outputscale), np.log(d0.noise)]]
    )
    if num_tasks:
        theta0 = np.concatenate([theta0, [1.0] * num_tasks, np.log([0.5] * num_tasks)])

    sob = qmc.Sobol(d=theta0.size, scramble=False)
    sob.fast_forward(1)
    starts = [theta0] + [lo + u * (hi - lo) for u in sob.random(7)]

    def neg(theta: np.ndarray) -> float:
        cfg = _config_from_theta(theta, dim, num_tasks)
        try:
            return -log_marginal_likelihood(X, y, cfg, tasks)
        except SingularKernel:
            return 1e12

    def neg_with_grad(theta: np.ndarray) -> tuple[float, np.ndarray]:
        cfg = _config_from_theta(theta, dim, None)
        try:
            lml, g = lml_and_grad(X, y, cfg)
        except SingularKernel:
            return 1e12, np.zeros_like(theta)
        return -lml, -g

    best_theta, best_val = None, np.inf
    bounds = list(zip(lo, hi))
    for start in starts:
        start = np.clip(start, lo, hi)
        if num_tasks:
            res = minimize(neg, start, method="L-BFGS-B", bounds=bounds)
        else:
            res = minimize(neg_with_grad, start, jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val, best_theta = res.fun, res.x

    default_val = neg(np.clip(theta0, lo, hi))
    if best_theta is None or best_val > default_val:
        best_theta = np.clip(theta0, lo, hi)
    return _config_from_theta(best_theta, dim, num_tasks)


def posterior(
    X: np.ndarray,
    y: np.ndarray,
    config: KernelConfig,
    queries: np.ndarray,
    tasks: np.ndarray | None = None,
    query_tasks: np.ndarray | None = None,
    full_cov: bool = False,
) -> tuple[np.ndarray, np.ndarray] | tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact GP conditionals on standardized targets, destandardized on return.

    Zero training data falls back to the prior (mean 0, variance outputscale).
    """
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    m = Q.shape[0]
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        mean = np.zeros(m)
        var = np.full(m, config.outputscale)
        if full_cov:
            return mean, var, np.diag(var)
        return mean, var
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ys, mu, sd = standardize(y)
    n = ys.size
    K = kernel_matrix(config, X, X, tasks, tasks) + config.noise * np.eye(n)
    L, _ = _chol_with_jitter(K)
    Ks = kernel_matrix(config, X, Q, tasks, query_tasks)
    alpha = cho_solve((L, True), ys)
    mean_s = Ks.T @ alpha
    V = solve_triangular(L, Ks, lower=True)
    if config.task is not None and query_tasks is not None:
        Bmat = config.task.matrix
        kss = config.outputscale * Bmat[np.asarray(query_tasks, int), np.asarray(query_tasks, int)]
    else:
        kss = np.full(m, config.outputscale)
    var_s = np.maximum(kss - np.sum(V**2, axis=0), 0.0)
    mean = mean_s * sd + mu
    var = var_s * sd**2
    if full_cov:
        Kqq = kernel_matrix(config, Q, Q, query_tasks, query_tasks)
        cov_s = Kqq - V.T @ V
        return mean, var, cov_s * sd**2
    return mean, var


class GpState:
    """Trained surrogate state: standardized targets, kernel config, and the
    lower-triangular factor of the regularized training covariance."""

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        config: KernelConfig,
        tasks: np.ndarray | None = None,
    ):
        self.config = config
        self.tasks = tasks
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        self.n = y.size
        if self.n == 0:
            return
        ys, self.mu, self.sd = standardize(y)
        K = kernel_matrix(config, self.X, self.X, tasks, tasks) + config.noise * np.eye(self.n)
        self.L, self.jitter = _chol_with_jitter(K)
        self.alpha = cho_solve((self.L, True), ys)

    def predict(
        self, queries: np.ndarray, query_tasks: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        Q = np.atleast_2d(np.asarray(queries, dtype=float))
        m = Q.shape[0]
        if self.n == 0:
            return np.zeros(m), np.full(m, self.config.outputscale)
        Ks = kernel_matrix(self.config, self.X, Q, self.tasks, query_tasks)
        mean_s = Ks.T @ self.alpha
        V = solve_triangular(self.L, Ks, lower=True)
        if self.config.task is not None and query_tasks is not None:
            Bmat = self.config.task.matrix
            qt = np.asarray(query_tasks, int)
            kss = self.config.outputscale * Bmat[qt, qt]
        else:
            kss = np.full(m, self.config.outputscale)
        var_s = np.maximum(kss - np.sum(V**2, axis=0), 0.0)
        return mean_s * self.sd + self.mu, var_s * self.sd**2


def mixture_posterior(
    X: np.ndarray,
    y: np.ndarray,
    configs: list[KernelConfig],
    queries: np.ndarray,
    tasks: np.ndarray | None = None,
    query_tasks: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mixture over hyperparameter samples: mean = average of the
    per-sample means; variance by the law of total variance."""
    means, varsum, sqsum = [], 0.0, 0.0
    for cfg in configs:
        m, v = posterior(X, y, cfg, queries, tasks, query_tasks)
        means.append(m)
        varsum = varsum + v
        sqsum = sqsum + m**2
    M = np.mean(means, axis=0)
    k = len(configs)
    var = varsum / k + sqsum / k - M**2
    return M, np.maximum(var, 0.0)


@dataclass(frozen=True)
class ChainSpec:
    burn_in: int = 64
    thin: int = 4
    draws: int = 16


def sample_hyperposterior(
    X: np.ndarray,
    y: np.ndarray,
    chain: ChainSpec = ChainSpec(),
    seed: int = 0,
) -> list[KernelConfig]:
    """Random-walk Metropolis over log-parameters (step 0.1).

    Target: LML plus independent normal priors on log-params
    (log-lengthscale ~ N(0,1), log-outputscale ~ N(0,1), log-noise ~ N(-4,1)).
    With zero data the likelihood term is flat and the chain samples the prior.
    """
    if chain.draws < 1:
        raise InvalidChainSpec("draws must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=float)) if np.size(X) else np.zeros((0, 1))
    y = np.asarray(y, dtype=float)
    dim = X.shape[1] if X.size else 1
    prior_mean = np.concatenate([np.zeros(dim), [0.0], [-4.0]])

    def log_target(theta: np.ndarray) -> float:
        lp = -0.5 * float(np.sum((theta - prior_mean) ** 2))
        if y.size == 0:
            return lp
        cfg = _config_from_theta(theta, dim, None)
        try:
            return lp + log_marginal_likelihood(X, y, cfg)
        except SingularKernel:
            return -np.inf

    rng = np.random.default_rng(seed)
    theta = prior_mean.copy()
    lt = log_target(theta)
    samples: list[KernelConfig] = []
    total = chain.burn_in + chain.thin * chain.draws
    for step in range(total):
        prop = theta + 0.1 * rng.standard_normal(theta.size)
        lt_prop = log_target(prop)
        if np.log(rng.uniform()) < lt_prop - lt:
            theta, lt = prop, lt_prop
        if step >= chain.burn_in and (step - chain.burn_in + 1) % chain.thin == 0:
            samples.append(_config_from_theta(theta, dim, None))
    return samples[: chain.draws]
