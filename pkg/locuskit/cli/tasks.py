""" tasks v0.3
Experiment drivers behind every subcommand.  Each driver returns the rows of
results.csv, the metrics of metrics.json and an optional plot.
"""

# Imports
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import spearmanr, wasserstein_distance
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score, r2_score

from locuskit.adaptive import fit_qkv, loo_kde_nll, tune_bandwidth
from locuskit.cli import config
from locuskit.cli.datasets import (
    bundled,
    clean_target,
    generate,
    legacy_seed,
    mixture_1d,
)
from locuskit.cli.io import csv_columns, ingest_csv, read_pgm
from locuskit.density import DiffusionSchedule, diffusion_generate, kde_values
from locuskit.embedding import (
    amds_factorize,
    cooccurrence_embed,
    lle_embed,
    lle_objective,
    lle_weights,
    pca_embed,
    read_corpus,
    trimap_embed,
)
from locuskit.errors import ConfigValidationError, EmptyNeighborhood
from locuskit.estimators import (
    lazy_transform,
    local_centerless_classify,
    local_linear_transform,
    local_mode_predict,
    loo_error,
)
from locuskit.kernel_core import Gaussian, gaussian, gram, make_kernel
from locuskit.mylog import get_logger
from locuskit.sequence import (
    Sequence,
    autoregressive_complete,
    causal_transformer,
    gaussian_moving_average,
    init_layers,
    nlm_denoise,
    nlm_denoise_image,
    transformer_encode,
)
from locuskit.shifts import mean_shift, medoid_shift, relaxation_label

logger = get_logger(__name__)

HIST_BINS = 40


@dataclass(frozen=True, eq=False)
class Outcome(object):
    header: List[str]
    rows: np.ndarray
    metrics: dict
    plot: Optional[Tuple[str, dict]] = None
    images: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Context(object):
    cfg: config.RunConfig
    params: object
    seed: Optional[int]

    def kernel(self, default):
        spec = self.cfg.kernel if self.cfg.kernel is not None else default
        return make_kernel(spec)

    @property
    def generated(self):
        return "data" not in self.cfg.inputs


@dataclass(frozen=True, eq=False)
class Task(object):
    name: str
    params: type
    run: Callable
    stochastic: bool = False


# Helper functions
def _columns(prefix, n):
    return [f"{prefix}{j + 1}" for j in range(n)]


def _plane(X):
    """First two coordinates for plotting; 1-D data gets a zero ordinate"""
    X = np.asarray(X, dtype=float).reshape(X.shape[0], -1)
    if X.shape[1] >= 2:
        return X[:, :2]
    return np.column_stack([X[:, 0], np.zeros(X.shape[0])])


def _load(ctx, schema):
    path = ctx.cfg.inputs.get("data")
    if path is not None:
        return ingest_csv(path, schema)
    p = ctx.params
    return generate(p.dataset, p.n, p.noise, ctx.seed)


def _load_points(ctx):
    """Features, keeping a trailing ``label`` column as ground truth"""
    path = ctx.cfg.inputs.get("data")
    if path is not None and csv_columns(path)[-1].lower() == "label":
        return ingest_csv(path, "features+label")
    return _load(ctx, "features-only")


def _clean(ctx, data):
    if not ctx.generated:
        return None
    return clean_target(ctx.params.dataset, data)


def _ari(data, labels):
    if data.labels is None:
        return None
    return float(adjusted_rand_score(data.labels, labels))


def _histogram(values, edges):
    counts, _ = np.histogram(values, bins=edges, density=True)
    return np.column_stack([0.5 * (edges[:-1] + edges[1:]), counts])


# Regression and classification
def _regress(ctx, data, predict):
    Y = data.target_matrix
    F = np.asarray(predict(data.X), dtype=float).reshape(data.N, -1)
    metrics = {"n": data.N, "p": data.p, "r2": float(r2_score(Y, F))}
    clean = _clean(ctx, data)
    if clean is not None:
        metrics["r2_clean"] = float(r2_score(clean, F[:, 0]))
    rows = np.column_stack([data.X, Y, F])
    header = _columns("x", data.p) + _columns("y", Y.shape[1])
    header += _columns("prediction", F.shape[1])

    if data.p == 1:
        x = data.X[:, 0]
        grid = np.linspace(x.min(), x.max(), ctx.params.n_grid)
        G = np.asarray(predict(grid), dtype=float).reshape(grid.size, -1)
        order = np.argsort(x, kind="stable")
        series = [np.column_stack([x[order], Y[order, 0]]), np.column_stack([grid, G])]
        plot = ("line", {"series": series})
    else:
        plot = ("scatter", {"points": np.column_stack([Y[:, 0], F[:, 0]])})
    return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)


def regress_local_mean(ctx):
    k = ctx.kernel({"kind": "gaussian", "h": 0.3})
    data = _load(ctx, "features+target")

    def predict(Q):
        return lazy_transform(k, data, Q, fallback="nearest")

    out = _regress(ctx, data, predict)
    try:
        out.metrics["loo_mse"] = loo_error(k, data) / data.N
    except EmptyNeighborhood as e:
        logger.warning(f"leave-one-out error undefined: {e}")
        out.metrics["loo_mse"] = None
    return out


def regress_local_linear(ctx):
    k = ctx.kernel({"kind": "gaussian", "h": 0.5})
    data = _load(ctx, "features+target")

    def predict(Q):
        return local_linear_transform(k, data, Q, ctx.params.lam)[0]

    return _regress(ctx, data, predict)


def classify_local(ctx):
    """Leave-one-out classification of every sample"""
    data = _load(ctx, "features+label")
    k = ctx.kernel({"kind": "gaussian", "h": 1.0})
    method = ctx.params.method
    predicted = np.empty(data.N, dtype=int)
    for i in range(data.N):
        rest = data.without(i)
        if method == "mode":
            predicted[i], _ = local_mode_predict(k, rest, data.X[i])
        else:
            predicted[i], _ = local_centerless_classify(
                k, ctx.params.distance, rest, data.X[i]
            )
    metrics = {
        "n": data.N,
        "method": method,
        "loo_accuracy": float(np.mean(predicted == data.labels)),
        "ari": _ari(data, predicted),
    }
    rows = np.column_stack([data.X, data.labels, predicted])
    header = _columns("x", data.p) + ["label", "predicted"]
    plot = ("scatter", {"points": _plane(data.X), "labels": predicted})
    return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)


# Shift iterations
def cluster_meanshift(ctx):
    data = _load_points(ctx)
    k = ctx.kernel({"kind": "gaussian", "h": 1.0})
    p = ctx.params
    res = mean_shift(
        k, data.X, alpha=p.alpha, max_iter=p.max_iter, merge_radius=p.merge_radius
    )
    metrics = {
        "n_clusters": res.n_clusters,
        "ari": _ari(data, res.labels),
        "max_iterations": int(res.iterations.max()),
        "converged": bool(res.converged.all()),
        "frozen": int(res.frozen.sum()),
    }
    rows = np.column_stack([data.X, res.points, res.labels])
    header = _columns("x", data.p) + _columns("mode", data.p) + ["cluster"]
    paths = [_plane(t) for t in res.trajectories]
    plot = ("trajectories", {"trajectories": paths, "points": _plane(data.X)})
    return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)


def cluster_medoidshift(ctx):
    data = _load_points(ctx)
    k = ctx.kernel({"kind": "gaussian", "h": 1.0})
    res = medoid_shift(
        k, data.X, d=ctx.params.distance, merge_radius=ctx.params.merge_radius
    )
    metrics = {
        "n_clusters": res.n_clusters,
        "ari": _ari(data, res.labels),
        "medoids": [int(m) for m in res.medoids],
    }
    rows = np.column_stack([data.X, res.representatives, res.labels])
    header = _columns("x", data.p) + ["medoid", "cluster"]
    plot = ("scatter", {"points": _plane(data.X), "labels": res.labels})
    return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)


def cluster_relax(ctx):
    data = _load_points(ctx)
    k = ctx.kernel({"kind": "gaussian", "h": 1.0})
    p = ctx.params
    init = KMeans(
        n_clusters=p.n_classes, n_init=10, random_state=legacy_seed(ctx.seed)
    ).fit_predict(data.X)
    res = relaxation_label(k, data.X, init, mode=p.mode, max_iter=p.max_iter)
    metrics = {
        "n_clusters": int(np.unique(res.labels).size),
        "ari": _ari(data, res.labels),
        "ari_init": _ari(data, init),
        "iterations": res.iterations,
        "converged": res.converged,
    }
    rows = np.column_stack([data.X, init, res.labels])
    header = _columns("x", data.p) + ["initial", "cluster"]
    plot = ("scatter", {"points": _plane(data.X), "labels": res.labels})
    return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)


# Embeddings
def embed_lle(ctx):
    data = _load(ctx, "features-only")
    p = ctx.params
    Kt = lle_weights(data.X, p.k_nn)
    res = lle_embed(Kt, p.r)
    baseline = pca_embed(data.X, min(p.r, data.p))
    metrics = {
        "objective_lle": lle_objective(Kt, res.Z),
        "objective_pca": lle_objective(Kt, baseline.Z),
    }
    labels = None
    if data.y is not None:
        metrics["spearman_first"] = float(abs(spearmanr(res.Z[:, 0], data.y)[0]))
        edges = np.quantile(data.y, np.linspace(0, 1, 9)[1:-1])
        labels = np.digitize(data.y, edges)
    header = _columns("z", p.r)
    plot = ("scatter", {"points": _plane(res.Z), "labels": labels})
    return Outcome(header=header, rows=res.Z, metrics=metrics, plot=plot)


def embed_amds(ctx):
    data = _load_points(ctx)
    p = ctx.params
    K = gram(ctx.kernel({"kind": "gaussian", "h": 1.0}), data.X)
    fac = amds_factorize(K, p.q, method=p.method, iters=p.iters, seed=ctx.seed)
    metrics = {
        "strain": fac.strain,
        "relative_strain": fac.strain / float((K.values**2).sum()),
        "method": p.method,
    }
    rows = np.column_stack([fac.phi, fac.psi])
    header = _columns("phi", p.q) + _columns("psi", p.q)
    plot = ("scatter", {"points": _plane(fac.phi), "labels": data.labels})
    return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)


def embed_trimap(ctx):
    data = _load_points(ctx)
    p = ctx.params
    s = None if ctx.cfg.kernel is None else make_kernel(ctx.cfg.kernel)
    res = trimap_embed(
        data.X,
        s=s,
        q=p.q,
        h=p.h,
        steps=p.steps,
        lr=p.lr,
        seed=ctx.seed,
        budget=p.budget,
    )
    metrics = {
        "objective": res.objective,
        "initial_objective": res.meta["trace"][0],
        "n_triplets": res.meta["n_triplets"],
    }
    plot = ("scatter", {"points": _plane(res.Z), "labels": data.labels})
    return Outcome(header=_columns("z", p.q), rows=res.Z, metrics=metrics, plot=plot)


def embed_words(ctx):
    path = ctx.cfg.inputs.get("corpus", bundled("corpus"))
    windows = read_corpus(path, ctx.params.window)
    wv = cooccurrence_embed(windows, ctx.params.d)
    d = ctx.params.d
    rows = np.empty((len(wv.vocabulary), 1 + 2 * d), dtype=object)
    rows[:, 0] = wv.vocabulary
    rows[:, 1:] = np.column_stack([wv.inputs, wv.outputs])
    metrics = {"vocabulary": len(wv.vocabulary), "windows": len(windows)}
    header = ["word"] + _columns("u", d) + _columns("v", d)
    plot = ("scatter", {"points": _plane(wv.inputs)})
    return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)


# Density and generation
def density_kde(ctx):
    data = _load(ctx, "features-only")
    k = ctx.kernel({"kind": "gaussian", "h": 0.3})
    X = data.X
    at_samples = kde_values(k, X, X)
    metrics = {"mean_log_density": float(np.mean(np.log(at_samples)))}
    if isinstance(k, Gaussian):
        metrics["loo_nll"] = loo_kde_nll(k.h, X)
    if data.p > 1:
        rows = np.column_stack([X, at_samples])
        plot = ("scatter", {"points": _plane(X)})
        header = _columns("x", data.p) + ["density"]
        return Outcome(header=header, rows=rows, metrics=metrics, plot=plot)

    x = X[:, 0]
    pad = 0.25 * (x.max() - x.min()) + 1.0
    grid = np.linspace(x.min() - pad, x.max() + pad, ctx.params.n_grid)
    density = kde_values(k, X, grid)
    metrics["integral"] = float(trapezoid(density, grid))
    rows = np.column_stack([grid, density])
    plot = ("line", {"series": [rows]})
    return Outcome(header=["x", "density"], rows=rows, metrics=metrics, plot=plot)


def generate_diffusion(ctx):
    data = _load(ctx, "features-only")
    p = ctx.params
    schedule = DiffusionSchedule.linear(p.T, lo=p.lo, hi=p.hi)
    samples = diffusion_generate(data.X, schedule, p.n_samples, ctx.seed, p.alpha)
    metrics = {"n_samples": int(samples.shape[0]), "T": schedule.T}
    plot = None
    if data.p == 1:
        if ctx.generated and p.dataset == "mixture-1d":
            fresh_seed = config.derive_seed(ctx.seed, "generate-diffusion/reference")
            reference = mixture_1d(p.n_samples, p.noise, fresh_seed).X[:, 0]
            metrics["mass_negative"] = float(np.mean(samples[:, 0] < 0))
            metrics["mass_positive"] = float(np.mean(samples[:, 0] > 0))
        else:
            reference = data.X[:, 0]
        metrics["w1"] = float(wasserstein_distance(samples[:, 0], reference))
        both = np.concatenate([samples[:, 0], data.X[:, 0]])
        edges = np.linspace(both.min(), both.max(), HIST_BINS + 1)
        series = [_histogram(data.X[:, 0], edges), _histogram(samples[:, 0], edges)]
        plot = ("line", {"series": series})
    else:
        plot = ("scatter", {"points": _plane(samples)})
    return Outcome(
        header=_columns("x", data.p), rows=samples, metrics=metrics, plot=plot
    )


# Sequences
def denoise_nlm(ctx):
    p = ctx.params
    image = ctx.cfg.inputs.get("image")
    if image is not None:
        img = read_pgm(image)
        out = nlm_denoise_image(img, p.rho, p.h, p.search)
        r, c = np.indices(img.shape)
        rows = np.column_stack([r.ravel(), c.ravel(), img.ravel(), out.ravel()])
        metrics = {"height": img.shape[0], "width": img.shape[1]}
        metrics["mean_abs_change"] = float(np.mean(np.abs(out - img)))
        return Outcome(
            header=["row", "col", "noisy", "denoised"],
            rows=rows,
            metrics=metrics,
            images={"denoised.pgm": out},
        )

    if ctx.generated:
        data = generate(p.dataset, p.n, p.noise, ctx.seed)
        t, Y, clean = data.X[:, 0], data.target_matrix, _clean(ctx, data)
    else:
        seq = ingest_csv(ctx.cfg.inputs["data"], "sequence")
        t, Y, clean = seq.times, seq.tokens, None
    nlm = nlm_denoise(Y, p.rho, p.h, p.search)
    avg = gaussian_moving_average(Y, p.search)
    metrics = {"T": int(Y.shape[0])}
    if clean is not None:
        metrics["mse_noisy"] = float(np.mean((Y[:, 0] - clean) ** 2))
        metrics["mse_nlm"] = float(np.mean((nlm[:, 0] - clean) ** 2))
        metrics["mse_moving_average"] = float(np.mean((avg[:, 0] - clean) ** 2))
    q = Y.shape[1]
    header = ["t"] + _columns("noisy", q) + _columns("nlm", q)
    header += _columns("moving_average", q)
    rows = np.column_stack([t, Y, nlm, avg])
    series = [np.column_stack([t, S[:, 0]]) for S in (Y, nlm, avg)]
    return Outcome(
        header=header, rows=rows, metrics=metrics, plot=("line", {"series": series})
    )


# Adaptive kernels
def tune_bandwidth_task(ctx):
    p = ctx.params
    schema = "features-only" if p.predictor == "kde-loo" else "features+target"
    data = _load(ctx, schema)
    grid = None
    if p.bracket is None:
        grid = p.grid
        if grid is None:
            grid = np.logspace(np.log10(p.grid_lo), np.log10(p.grid_hi), p.grid_n)
    res = tune_bandwidth(p.predictor, data, grid=grid, bracket=p.bracket)
    interior = bool(res.grid[0] < res.h < res.grid[-1])
    metrics = {"h_star": res.h, "loss": res.loss, "argmin_interior": interior}

    clean = _clean(ctx, data) if p.predictor != "kde-loo" else None
    if clean is not None:
        k = gaussian(res.h)
        if p.predictor == "local-mean":
            fitted = lazy_transform(k, data, data.X, fallback="nearest")
        else:
            fitted = local_linear_transform(k, data, data.X)[0]
        metrics["r2_clean"] = float(r2_score(clean, np.asarray(fitted).reshape(-1)))
    rows = np.column_stack([res.grid, res.losses])
    plot = ("curve+argmin", {"x": res.grid, "y": res.losses})
    return Outcome(header=["h", "loss"], rows=rows, metrics=metrics, plot=plot)


def fit_qkv_task(ctx):
    path = ctx.cfg.inputs.get("data", bundled("toy-tokens"))
    V = ingest_csv(path, "sequence").tokens
    p = ctx.params
    fit = fit_qkv(
        V,
        p.d,
        form=p.form,
        lr=p.lr,
        steps=p.steps,
        seed=ctx.seed,
        hollow=p.hollow,
        heads=p.heads,
        init=p.init,
    )
    trace = np.asarray(fit.trace)
    metrics = {
        "initial_loss": float(trace[0]),
        "final_loss": float(trace[-1]),
        "loss_ratio": float(trace[-1] / trace[0]) if trace[0] > 0 else None,
    }
    rows = np.column_stack([np.arange(trace.size), trace])
    plot = ("line", {"series": [rows]})
    return Outcome(header=["step", "loss"], rows=rows, metrics=metrics, plot=plot)


def transformer_demo(ctx):
    """Autoregressive continuation of a prefix by a random causal stack"""
    p = ctx.params
    if ctx.generated:
        rng = np.random.default_rng(ctx.seed)
        prefix = Sequence(rng.standard_normal((p.T, p.p)))
    else:
        prefix = ingest_csv(ctx.cfg.inputs["data"], "sequence")
    layers = init_layers(prefix.p, p.d, p.H, p.L, seed=ctx.seed)
    full = autoregressive_complete(
        prefix, causal_transformer(layers, p.residual), p.steps
    )

    encoded = transformer_encode(prefix, layers, causal=True, residual=p.residual)
    nudged = prefix.tokens.copy()
    nudged[-1] += 1.0
    moved = transformer_encode(
        prefix.with_tokens(nudged), layers, causal=True, residual=p.residual
    )
    leak = np.abs(moved.tokens[:-1] - encoded.tokens[:-1]).max(initial=0.0)
    metrics = {"T": prefix.T, "generated": p.steps, "causal_leak": float(leak)}

    flag = (np.arange(full.T) >= prefix.T).astype(int)
    rows = np.column_stack([full.times, full.tokens, flag])
    header = ["t"] + _columns("x", full.p) + ["generated"]
    series = [np.column_stack([full.times, full.tokens[:, j]]) for j in range(full.p)]
    return Outcome(
        header=header, rows=rows, metrics=metrics, plot=("line", {"series": series})
    )


TASKS = {
    t.name: t
    for t in (
        Task("regress-local-linear", config.RegressParams, regress_local_linear),
        Task("regress-local-mean", config.RegressParams, regress_local_mean),
        Task("classify-local", config.ClassifyParams, classify_local),
        Task("cluster-meanshift", config.MeanShiftParams, cluster_meanshift),
        Task("cluster-medoidshift", config.MedoidShiftParams, cluster_medoidshift),
        Task("cluster-relax", config.RelaxParams, cluster_relax, stochastic=True),
        Task("embed-lle", config.LleParams, embed_lle),
        Task("embed-amds", config.AmdsParams, embed_amds),
        Task("embed-trimap", config.TrimapParams, embed_trimap, stochastic=True),
        Task("embed-words", config.WordsParams, embed_words),
        Task("density-kde", config.KdeParams, density_kde),
        Task(
            "generate-diffusion",
            config.DiffusionParams,
            generate_diffusion,
            stochastic=True,
        ),
        Task("denoise-nlm", config.NlmParams, denoise_nlm),
        Task("tune-bandwidth", config.TuneParams, tune_bandwidth_task),
        Task("fit-qkv", config.QkvParamsModel, fit_qkv_task, stochastic=True),
        Task(
            "transformer-demo",
            config.TransformerParams,
            transformer_demo,
            stochastic=True,
        ),
    )
}


def needs_seed(task, cfg, params):
    """Stochastic drivers and any run on a generated dataset need a seed"""
    if task.stochastic:
        return True
    if task.name == "embed-amds" and params.method == "nmf":
        return True
    dataset = getattr(params, "dataset", None)
    synthetic = dataset is not None and dataset != "two-blobs"
    if task.name == "denoise-nlm" and "image" in cfg.inputs:
        return False
    return synthetic and "data" not in cfg.inputs


def run_task(cfg):
    """(RunConfig) -> Outcome"""
    if cfg.task not in TASKS:
        raise ConfigValidationError(f"unknown task {cfg.task!r}")
    task = TASKS[cfg.task]
    params = config.parse_params(task.params, cfg.params)
    if needs_seed(task, cfg, params) and cfg.seed is None:
        raise ConfigValidationError(f"task {task.name} needs a seed")
    seed = None if cfg.seed is None else config.derive_seed(cfg.seed, task.name)
    logger.info(f"running {task.name} with seed {cfg.seed}")
    return task.run(Context(cfg=cfg, params=params, seed=seed))
