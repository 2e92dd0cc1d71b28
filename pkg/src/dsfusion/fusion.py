"""Distance-based evidence construction and ensemble fusion.

Each ensemble member i turns a score row y into a mass function through
three learned quantities: a per-class weighting w_i, a reference vector
r_i, and an ignorance level eps_i.  The proximity

    d[s, k] = exp(-(r_i[k] - w_i[k] * y[s, k])^2)

measures how closely the weighted score matches the reference for class
k, and the masses are

    m_i(k)  = d[s, k] / (sum_k d[s, k] + eps_i)
    m_i(TH) = eps_i   / (sum_k d[s, k] + eps_i).

Member evidences are fused per sample with Dempster's rule.  References
and ignorance levels are fitted by derivative-free minimization of the
Frobenius distance between the fused singleton masses and the one-hot
training targets.

An alternative proximity treats r_i as one full reference row per class
(``prototype`` mode, K x K parameters per member) and compares whole
weighted score rows against it; the default ``elementwise`` mode follows
the per-class reading above.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    MemberMissingError,
    TotalConflictError,
)
from .evidence import BBA, CONFLICT_EPS, Frame
from .weights import WeightScheme, WeightVector, build_weight

PROXIMITY_MODES = ("elementwise", "prototype")
OPTIMIZE_MODES = ("joint", "per_member")


@dataclass(frozen=True)
class FusionConfig:
    """Knobs for evidence construction and reference fitting."""

    proximity_mode: str = "elementwise"
    optimize_mode: str = "joint"
    restarts: int = 3
    max_evals_per_dim: int = 400
    xatol: float = 1e-6
    fatol: float = 1e-9
    init_epsilon: float = 0.1
    jitter: float = 0.2
    coordinate_passes: int = 2

    def __post_init__(self):
        if self.proximity_mode not in PROXIMITY_MODES:
            raise ValueError(f"proximity_mode must be one of {PROXIMITY_MODES}")
        if self.optimize_mode not in OPTIMIZE_MODES:
            raise ValueError(f"optimize_mode must be one of {OPTIMIZE_MODES}")


@dataclass(frozen=True, eq=False)
class FusionParams:
    """Learned quantities of one ensemble member."""

    reference: np.ndarray
    epsilon: float
    weight: WeightVector

    def __post_init__(self):
        arr = np.array(self.reference, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "reference", arr)
        object.__setattr__(self, "epsilon", float(self.epsilon))


@dataclass(frozen=True)
class FusionModel:
    """A trained ensemble: member identities plus their fusion parameters."""

    frame: Frame
    member_ids: tuple[int, ...]
    scheme: WeightScheme
    params: tuple[FusionParams, ...]
    proximity_mode: str = "elementwise"

    def __post_init__(self):
        if len(self.member_ids) == 0:
            raise ValueError("ensemble must have at least one member")
        if len(self.member_ids) != len(self.params):
            raise DimensionMismatchError("one parameter set per member required")
        object.__setattr__(self, "member_ids", tuple(int(i) for i in self.member_ids))
        object.__setattr__(self, "params", tuple(self.params))


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def _score_values(scores) -> np.ndarray:
    values = getattr(scores, "values", scores)
    return np.asarray(values, dtype=np.float64)


def proximity(reference, weight_values, scores, mode: str = "elementwise") -> np.ndarray:
    """Per-sample, per-class proximity of weighted scores to the reference.

    ``elementwise``: reference has K entries and class k only sees score
    column k.  ``prototype``: reference has one K-vector per class and the
    whole weighted row is compared against it.
    """
    scores = _score_values(scores)
    reference = np.asarray(reference, dtype=np.float64)
    weight_values = np.asarray(weight_values, dtype=np.float64)
    if scores.ndim != 2 or weight_values.shape != (scores.shape[1],):
        raise DimensionMismatchError(
            f"scores {scores.shape} and weights {weight_values.shape} disagree"
        )
    weighted = weight_values * scores
    k = scores.shape[1]
    if mode == "elementwise":
        if reference.shape != (k,):
            raise DimensionMismatchError(f"reference shape {reference.shape}, expected ({k},)")
        return np.exp(-((reference - weighted) ** 2))
    if mode == "prototype":
        if reference.shape != (k, k):
            raise DimensionMismatchError(f"reference shape {reference.shape}, expected ({k}, {k})")
        sq = ((weighted[:, None, :] - reference[None, :, :]) ** 2).sum(axis=2)
        return np.exp(-sq)
    raise ValueError(f"unknown proximity mode {mode!r}")


def bba_from_row(d_row, epsilon: float) -> BBA:
    """Mass function from one proximity row: distances share belief, the
    ignorance parameter keeps the remainder on the full frame."""
    d_row = np.asarray(d_row, dtype=np.float64)
    denom = d_row.sum() + epsilon
    return BBA(d_row / denom, epsilon / denom)


def _member_mass_stack(references, epsilons, weighted_stack, mode):
    """Masses and ignorance for every member and sample at once.

    ``weighted_stack`` holds w_i * scores_i with shape (N, n, K);
    ``references`` is (N, K) or (N, K, K) depending on mode.
    """
    if mode == "elementwise":
        d = np.exp(-((references[:, None, :] - weighted_stack) ** 2))
    else:
        diff = weighted_stack[:, :, None, :] - references[:, None, :, :]
        d = np.exp(-(diff**2).sum(axis=3))
    denom = d.sum(axis=2) + epsilons[:, None]
    mass = d / denom[:, :, None]
    ignorance = epsilons[:, None] / denom
    return mass, ignorance


def _fuse_fold(mass, ignorance):
    """Left fold of the pairwise combination, vectorized across samples.

    Mirrors the scalar pairwise rule exactly: every step renormalizes and
    a step whose surviving mass drops to the conflict threshold raises,
    with the offending sample row attached.
    """
    acc_m, acc_t = mass[0], ignorance[0]
    for i in range(1, mass.shape[0]):
        m2, t2 = mass[i], ignorance[i]
        num = acc_m * m2 + acc_m * t2[:, None] + acc_t[:, None] * m2
        theta = acc_t * t2
        total = num.sum(axis=1) + theta
        bad = ~(total > CONFLICT_EPS)
        if np.any(bad):
            raise TotalConflictError(
                "no surviving mass after combination", index=int(np.argmax(bad))
            )
        acc_m = num / total[:, None]
        acc_t = theta / total
    return acc_m, acc_t


def _fuse_product(mass, ignorance):
    """Single-shot product form of the fold, for the optimizer's hot path.

    The unnormalized fused mass on class k is prod_i (m_i(k) + t_i) minus
    prod_i t_i and the fused ignorance is prod_i t_i; rows are rescaled by
    their largest term first so long products cannot underflow.  The
    conflict guard here is stricter than the fold's per-step rule (the
    end-to-end surviving mass must clear the threshold), which only makes
    the optimizer skip trial points the evaluation path would tolerate.
    """
    if mass.shape[0] == 1:
        return mass[0], ignorance[0]
    q = mass + ignorance[:, :, None]
    peak = q.max(axis=2)
    with np.errstate(invalid="ignore", divide="ignore", under="ignore"):
        q_scaled = q / peak[:, :, None]
        t_scaled = ignorance / peak
        fused_q = q_scaled.prod(axis=0)
        fused_t = t_scaled.prod(axis=0)
        num = np.maximum(fused_q - fused_t[:, None], 0.0)
        total = num.sum(axis=1) + fused_t
        surviving = total * peak.prod(axis=0)
        bad = ~(surviving > CONFLICT_EPS)
        if np.any(bad):
            raise TotalConflictError(
                "no surviving mass after combination", index=int(np.argmax(bad))
            )
        return num / total[:, None], fused_t / total


def _stack_inputs(params, score_matrices, mode):
    n_members = len(score_matrices)
    if n_members == 0:
        raise ValueError("need at least one ensemble member")
    if len(params) != n_members:
        raise DimensionMismatchError(
            f"{len(params)} parameter sets for {n_members} score matrices"
        )
    values = [_score_values(s) for s in score_matrices]
    shape = values[0].shape
    for v in values[1:]:
        if v.shape != shape:
            raise DimensionMismatchError(f"score shapes differ: {v.shape} vs {shape}")
    weighted = np.stack([p.weight.values * v for p, v in zip(params, values)])
    references = np.stack([p.reference for p in params])
    epsilons = np.array([p.epsilon for p in params])
    return references, epsilons, weighted


def fused_scores(params, score_matrices, mode: str = "elementwise"):
    """Fused singleton masses (n, K) and ignorance (n,) for an ensemble.

    Each member's mass function is built from its proximity rows and
    ignorance level, then all members are combined per sample.
    """
    references, epsilons, weighted = _stack_inputs(params, score_matrices, mode)
    mass, ignorance = _member_mass_stack(references, epsilons, weighted, mode)
    return _fuse_fold(mass, ignorance)


def objective(params, score_matrices, targets, mode: str = "elementwise") -> float:
    """Frobenius distance between fused singleton masses and one-hot targets."""
    targets = np.asarray(targets, dtype=np.float64)
    mass, _ = fused_scores(params, score_matrices, mode)
    if mass.shape != targets.shape:
        raise DimensionMismatchError(
            f"fused masses {mass.shape} vs targets {targets.shape}"
        )
    return float(np.linalg.norm(mass - targets))


# --- reference fitting -------------------------------------------------------

_KERNEL = None
_KERNEL_LOADED = False


def _load_kernel():
    """Compile the scalar objective kernel on first use, if numba exists.

    The kernel mirrors :func:`_numpy_objective` exactly; the compiled form
    exists because the simplex search evaluates the objective tens of
    thousands of times per fit and the arrays are too small for vectorized
    dispatch to pay off.
    """
    global _KERNEL, _KERNEL_LOADED
    if _KERNEL_LOADED:
        return _KERNEL
    _KERNEL_LOADED = True
    try:
        import math

        from numba import njit
    except ImportError:
        return None

    @njit(cache=True)
    def kernel(x, weighted, targets, conflict_eps):
        n_members, n_samples, n_classes = weighted.shape
        block = n_classes + 1
        fused = np.empty(n_classes)
        q_row = np.empty(n_classes)
        eps = np.empty(n_members)
        for i in range(n_members):
            u = x[i * block + n_classes]
            if u > 700.0:
                u = 700.0
            elif u < -745.0:
                u = -745.0
            eps[i] = math.exp(u)
        acc = 0.0
        for s in range(n_samples):
            for k in range(n_classes):
                fused[k] = 1.0
            fused_t = 1.0
            scale = 1.0
            for i in range(n_members):
                e = eps[i]
                denom = e
                peak = 0.0
                for k in range(n_classes):
                    diff = x[i * block + k] - weighted[i, s, k]
                    d = math.exp(-diff * diff)
                    q = d + e
                    q_row[k] = q
                    denom += d
                    if q > peak:
                        peak = q
                if not (peak > 0.0):
                    return np.inf
                inv = 1.0 / peak
                for k in range(n_classes):
                    fused[k] *= q_row[k] * inv
                fused_t *= e * inv
                scale *= peak / denom
            total = fused_t
            for k in range(n_classes):
                v = fused[k] - fused_t
                if v < 0.0:
                    v = 0.0
                fused[k] = v
                total += v
            if not (total * scale > conflict_eps):
                return np.inf
            inv_total = 1.0 / total
            for k in range(n_classes):
                r = fused[k] * inv_total - targets[s, k]
                acc += r * r
        if not (acc < np.inf):
            return np.inf
        return math.sqrt(acc)

    _KERNEL = kernel
    return kernel


def _make_fast_objective(weighted, targets):
    kernel = _load_kernel()
    if kernel is None:
        return _numpy_objective(weighted, targets)
    weighted = np.ascontiguousarray(weighted)
    targets = np.ascontiguousarray(targets)

    def evaluate(x):
        return float(
            kernel(np.ascontiguousarray(x, dtype=np.float64), weighted, targets, CONFLICT_EPS)
        )

    return evaluate


def _numpy_objective(weighted, targets):
    """Buffered objective for the default per-class proximity.

    Algebraically identical to building member masses and folding them,
    but works on the unnormalized commonalities q = d + eps (the member
    normalizers cancel after the final renormalization) and reuses
    preallocated arrays, since the simplex search calls this tens of
    thousands of times on small matrices.
    """
    n_members, n_samples, n_classes = weighted.shape
    cube = np.empty_like(weighted)            # holds diff -> d -> q -> q/peak
    denom = np.empty((n_members, n_samples))  # sum_k d + eps, true normalizer
    peak = np.empty((n_members, n_samples))
    tq = np.empty((n_members, n_samples))     # eps / peak
    fused_q = np.empty((n_samples, n_classes))
    fused_t = np.empty(n_samples)
    total = np.empty(n_samples)
    scale = np.empty(n_samples)
    block = n_classes + 1

    def evaluate(x):
        params = x.reshape(n_members, block)
        references = params[:, :-1]
        eps = np.exp(np.clip(params[:, -1], -745.0, 700.0))
        eps_col = eps[:, None]
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            np.subtract(references[:, None, :], weighted, out=cube)
            np.multiply(cube, cube, out=cube)
            np.negative(cube, out=cube)
            np.exp(cube, out=cube)                       # d
            np.sum(cube, axis=2, out=denom)
            np.add(denom, eps_col, out=denom)
            np.add(cube, eps_col[:, :, None], out=cube)  # q = d + eps
            np.max(cube, axis=2, out=peak)
            np.divide(cube, peak[:, :, None], out=cube)
            np.divide(eps_col, peak, out=tq)
            np.prod(cube, axis=0, out=fused_q)
            np.prod(tq, axis=0, out=fused_t)
            np.subtract(fused_q, fused_t[:, None], out=fused_q)
            np.maximum(fused_q, 0.0, out=fused_q)
            np.sum(fused_q, axis=1, out=total)
            np.add(total, fused_t, out=total)
            np.divide(peak, denom, out=peak)             # per-member mass scale
            np.prod(peak, axis=0, out=scale)
            np.multiply(scale, total, out=scale)         # true surviving mass
            if not np.all(scale > CONFLICT_EPS):         # False for nan too
                return np.inf
            np.divide(fused_q, total[:, None], out=fused_q)
            np.subtract(fused_q, targets, out=fused_q)
            np.multiply(fused_q, fused_q, out=fused_q)
            value = float(np.sqrt(fused_q.sum()))
        return value if np.isfinite(value) else np.inf

    return evaluate


def _block_size(n_classes: int, mode: str) -> int:
    return (n_classes * n_classes if mode == "prototype" else n_classes) + 1


def _unpack(x, n_members, n_classes, mode):
    bs = _block_size(n_classes, mode)
    blocks = x.reshape(n_members, bs)
    if mode == "prototype":
        references = blocks[:, :-1].reshape(n_members, n_classes, n_classes)
    else:
        references = blocks[:, :-1]
    # clip the log-ignorance so exp stays finite; 700 is already vacuous
    epsilons = np.exp(np.clip(blocks[:, -1], -745.0, 700.0))
    return references, epsilons


def _initial_point(weighted_stack, targets, mode, init_epsilon):
    """Start each reference at the class-conditional mean of the weighted
    scores; ignorance starts at a common small level."""
    n_members, _, n_classes = weighted_stack.shape
    class_masks = [targets[:, k] > 0.5 for k in range(n_classes)]
    blocks = []
    for i in range(n_members):
        ws = weighted_stack[i]
        if mode == "prototype":
            ref = np.vstack([
                ws[mask].mean(axis=0) if mask.any() else ws.mean(axis=0)
                for mask in class_masks
            ]).ravel()
        else:
            ref = np.array([
                ws[mask, k].mean() if mask.any() else ws[:, k].mean()
                for k, mask in enumerate(class_masks)
            ])
        blocks.append(np.concatenate([ref, [np.log(init_epsilon)]]))
    return np.concatenate(blocks)


def _nelder_mead(fun, x0, maxfev, xatol, fatol):
    """Simplex minimization with reflect/expand/contract/shrink moves.

    Stops when the simplex diameter drops below ``xatol`` or the objective
    spread across vertices below ``fatol``, or on the evaluation budget.
    The initial simplex contains x0 itself and the best vertex is never
    discarded, so the returned value cannot exceed fun(x0).
    """
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for k in range(n):
        if simplex[k + 1, k] != 0.0:
            simplex[k + 1, k] *= 1.05
        else:
            simplex[k + 1, k] = 0.00025
    values = np.array([fun(v) for v in simplex])
    nfev = n + 1
    order = np.argsort(values, kind="stable")
    simplex, values = simplex[order], values[order]

    reflect, expand, contract, shrink = 1.0, 2.0, 0.5, 0.5
    while nfev < maxfev:
        if np.max(np.abs(simplex[1:] - simplex[0])) < xatol:
            break
        if values[-1] - values[0] < fatol:  # False for inf/nan spreads
            break
        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + reflect * (centroid - simplex[-1])
        fr = fun(xr)
        nfev += 1
        do_shrink = False
        if fr < values[0]:
            xe = centroid + reflect * expand * (centroid - simplex[-1])
            fe = fun(xe)
            nfev += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        elif fr < values[-1]:
            xc = centroid + contract * reflect * (centroid - simplex[-1])
            fc = fun(xc)
            nfev += 1
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
            else:
                do_shrink = True
        else:
            xc = centroid - contract * (centroid - simplex[-1])
            fc = fun(xc)
            nfev += 1
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
            else:
                do_shrink = True
        if do_shrink:
            simplex[1:] = simplex[0] + shrink * (simplex[1:] - simplex[0])
            values[1:] = [fun(v) for v in simplex[1:]]
            nfev += n
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
    return simplex[0], float(values[0])


def _nelder_mead_restarts(fun, x0, rng, config):
    """Best of ``restarts`` simplex runs; the first starts exactly at x0."""
    dim = x0.size
    best_x, best_f = x0, np.inf
    for attempt in range(config.restarts):
        if attempt == 0:
            start = x0
        else:
            start = x0 * rng.uniform(1.0 - config.jitter, 1.0 + config.jitter, dim)
        x, f = _nelder_mead(
            fun, start, config.max_evals_per_dim * dim, config.xatol, config.fatol
        )
        if f < best_f:
            best_x, best_f = x, f
    return best_x, best_f


def optimize_references(
    score_matrices,
    targets,
    member_weights,
    seed: int = 0,
    config: FusionConfig = FusionConfig(),
) -> tuple[list[FusionParams], float]:
    """Fit references and ignorance levels by simplex search.

    Ignorance is searched as log(epsilon) so it stays non-negative.  Trial
    points that drive the combination into total conflict or overflow are
    scored +inf and skipped over.  Returns the fitted parameters together
    with the achieved objective, which never exceeds the value at the
    initialization point.
    """
    targets = np.asarray(targets, dtype=np.float64)
    n_classes = targets.shape[1]
    values = [_score_values(s) for s in score_matrices]
    n_members = len(values)
    if len(member_weights) != n_members:
        raise DimensionMismatchError(
            f"{len(member_weights)} weight vectors for {n_members} members"
        )
    weighted = np.stack([w.values * v for w, v in zip(member_weights, values)])
    mode = config.proximity_mode

    if mode == "elementwise":
        evaluate = _make_fast_objective(weighted, targets)
    else:
        def evaluate(x):
            references, epsilons = _unpack(x, n_members, n_classes, mode)
            with np.errstate(over="ignore", under="ignore", invalid="ignore"):
                mass, ignorance = _member_mass_stack(references, epsilons, weighted, mode)
                try:
                    fused, _ = _fuse_product(mass, ignorance)
                except TotalConflictError:
                    return np.inf
                value = float(np.linalg.norm(fused - targets))
            return value if np.isfinite(value) else np.inf

    rng = np.random.default_rng(seed)
    x0 = _initial_point(weighted, targets, mode, config.init_epsilon)
    if config.optimize_mode == "joint":
        best_x, best_f = _nelder_mead_restarts(evaluate, x0, rng, config)
    else:
        bs = _block_size(n_classes, mode)
        current = x0.copy()
        best_f = evaluate(current)
        for _ in range(config.coordinate_passes):
            for i in range(n_members):
                block = slice(i * bs, (i + 1) * bs)

                def block_fun(xb, block=block):
                    trial = current.copy()
                    trial[block] = xb
                    return evaluate(trial)

                xb, fb = _nelder_mead_restarts(block_fun, current[block], rng, config)
                if fb <= best_f:
                    current[block] = xb
                    best_f = fb
        best_x = current

    references, epsilons = _unpack(best_x, n_members, n_classes, mode)
    params = [
        FusionParams(reference=references[i], epsilon=epsilons[i], weight=member_weights[i])
        for i in range(n_members)
    ]
    return params, float(best_f)


# --- training ----------------------------------------------------------------

SCHEME_ORDER = list(WeightScheme)


@dataclass(frozen=True)
class SchemeRecord:
    """Outcome of fitting one weighting scheme on the ensemble."""

    scheme: WeightScheme
    params: tuple[FusionParams, ...]
    train_objective: float
    valid_correct: int
    valid_total: int

    @property
    def valid_accuracy(self) -> float:
        return self.valid_correct / self.valid_total


@dataclass(frozen=True)
class TrainFusionResult:
    model: FusionModel
    records: tuple[SchemeRecord, ...]


def pick_best_scheme(records):
    """Record with the highest validation accuracy; ties go to the scheme
    earliest in the canonical w0..w5 order."""
    best = records[0]
    for record in records[1:]:
        better = record.valid_accuracy > best.valid_accuracy
        tie = record.valid_accuracy == best.valid_accuracy
        earlier = SCHEME_ORDER.index(record.scheme) < SCHEME_ORDER.index(best.scheme)
        if better or (tie and earlier):
            best = record
    return best


def fused_labels_lenient(params, score_matrices, mode: str = "elementwise"):
    """Fused argmax labels with per-sample conflict tolerance.

    Samples whose evidence leaves no surviving mass cannot be classified;
    they come back labeled -1 instead of aborting the whole evaluation.
    Returns the labels and the count of such samples.
    """
    references, epsilons, weighted = _stack_inputs(params, score_matrices, mode)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        mass, ignorance = _member_mass_stack(references, epsilons, weighted, mode)
        conflicted = np.zeros(mass.shape[1], dtype=bool)
        acc_m, acc_t = mass[0], ignorance[0]
        for i in range(1, mass.shape[0]):
            m2, t2 = mass[i], ignorance[i]
            num = acc_m * m2 + acc_m * t2[:, None] + acc_t[:, None] * m2
            theta = acc_t * t2
            total = num.sum(axis=1) + theta
            bad = ~(total > CONFLICT_EPS)
            conflicted |= bad
            safe = np.where(bad, 1.0, total)
            acc_m = np.where(bad[:, None], acc_m, num / safe[:, None])
            acc_t = np.where(bad, acc_t, theta / safe)
    labels = np.argmax(acc_m, axis=1)
    labels[conflicted] = -1
    return labels, int(conflicted.sum())


def _fused_correct(params, score_matrices, labels, mode) -> int:
    predicted, _ = fused_labels_lenient(params, score_matrices, mode)
    return int(np.sum(predicted == np.asarray(labels)))


def train_fusion(
    train_scores,
    valid_scores,
    train_labels,
    valid_labels,
    schemes,
    cv_confusions,
    member_ids=None,
    seed: int = 0,
    config: FusionConfig = FusionConfig(),
) -> TrainFusionResult:
    """Fit the ensemble under each weighting scheme and keep the winner.

    Per scheme: member weights come from the cross-validated confusion
    matrices, references are optimized on the training split, and the
    scheme's fused validation accuracy decides.  Ties go to the earlier
    scheme in the canonical w0..w5 order, so the unweighted form wins a
    dead heat.
    """
    train_labels = np.asarray(train_labels, dtype=np.int64)
    valid_labels = np.asarray(valid_labels, dtype=np.int64)
    schemes = list(schemes)
    if not schemes:
        raise ValueError("need at least one weighting scheme")
    n_members = len(train_scores)
    if member_ids is None:
        member_ids = tuple(range(n_members))
    if len(cv_confusions) != n_members:
        raise DimensionMismatchError(
            f"{len(cv_confusions)} confusion matrices for {n_members} members"
        )
    n_classes = _score_values(train_scores[0]).shape[1]
    targets = one_hot(train_labels, n_classes)
    seeds = np.random.SeedSequence(seed).generate_state(len(schemes))

    records = []
    for scheme, scheme_seed in zip(schemes, seeds):
        member_weights = [build_weight(cm, scheme) for cm in cv_confusions]
        params, achieved = optimize_references(
            train_scores, targets, member_weights, seed=int(scheme_seed), config=config
        )
        correct = _fused_correct(params, valid_scores, valid_labels, config.proximity_mode)
        records.append(
            SchemeRecord(
                scheme=scheme,
                params=tuple(params),
                train_objective=achieved,
                valid_correct=correct,
                valid_total=int(valid_labels.size),
            )
        )

    best = pick_best_scheme(records)
    model = FusionModel(
        frame=Frame(n_classes),
        member_ids=tuple(member_ids),
        scheme=best.scheme,
        params=best.params,
        proximity_mode=config.proximity_mode,
    )
    return TrainFusionResult(model=model, records=tuple(records))


# --- ensemble selection ------------------------------------------------------

@dataclass(frozen=True)
class SizeRecord:
    """Accuracy of the candidate ensemble built from the top ``size`` ranks."""

    size: int
    member_ids: tuple[int, ...]
    train_correct: int
    train_total: int
    valid_correct: int
    valid_total: int

    @property
    def train_accuracy(self) -> float:
        return self.train_correct / self.train_total

    @property
    def valid_accuracy(self) -> float:
        return self.valid_correct / self.valid_total

    @property
    def mean_accuracy(self) -> float:
        return (self.train_accuracy + self.valid_accuracy) / 2.0


@dataclass(frozen=True)
class SelectionResult:
    member_ids: tuple[int, ...]
    chosen_size: int
    records: tuple[SizeRecord, ...]


PREFERRED_SIZES = (4, 5, 6)


def choose_ensemble_size(records) -> int:
    """Tie-break cascade over candidate sizes.

    Highest validation accuracy first; then highest mean of training and
    validation accuracy; then the preferred sizes 4, 5, 6 in that order;
    finally the smallest size.
    """
    best_valid = max(r.valid_correct / r.valid_total for r in records)
    tied = [r for r in records if r.valid_correct / r.valid_total == best_valid]
    if len(tied) > 1:
        best_mean = max(r.mean_accuracy for r in tied)
        tied = [r for r in tied if r.mean_accuracy == best_mean]
    sizes = {r.size for r in tied}
    if len(sizes) > 1:
        for preferred in PREFERRED_SIZES:
            if preferred in sizes:
                return preferred
    return min(sizes)


def select_ensemble(
    train_scores_pool,
    valid_scores_pool,
    train_labels,
    valid_labels,
    ranks,
    seed: int = 0,
    config: FusionConfig = FusionConfig(),
) -> SelectionResult:
    """Grow candidate ensembles in rank order and keep the best size.

    Candidates of size 1..pool are fitted unweighted; weighting-scheme
    comparison happens afterwards in :func:`train_fusion` on the winner.
    """
    ranks = np.asarray(ranks)
    order = np.argsort(ranks, kind="stable")
    train_labels = np.asarray(train_labels, dtype=np.int64)
    valid_labels = np.asarray(valid_labels, dtype=np.int64)
    n_classes = _score_values(train_scores_pool[0]).shape[1]
    targets = one_hot(train_labels, n_classes)
    seeds = np.random.SeedSequence(seed).generate_state(order.size)

    records = []
    for size in range(1, order.size + 1):
        members = order[:size]
        scores_train = [train_scores_pool[i] for i in members]
        scores_valid = [valid_scores_pool[i] for i in members]
        weights = [WeightVector(np.ones(n_classes), WeightScheme.W0) for _ in members]
        params, _ = optimize_references(
            scores_train, targets, weights, seed=int(seeds[size - 1]), config=config
        )
        records.append(
            SizeRecord(
                size=size,
                member_ids=tuple(int(i) for i in members),
                train_correct=_fused_correct(params, scores_train, train_labels, config.proximity_mode),
                train_total=int(train_labels.size),
                valid_correct=_fused_correct(params, scores_valid, valid_labels, config.proximity_mode),
                valid_total=int(valid_labels.size),
            )
        )
    chosen = choose_ensemble_size(records)
    return SelectionResult(
        member_ids=tuple(int(i) for i in order[:chosen]),
        chosen_size=chosen,
        records=tuple(records),
    )


# --- prediction and serialization ---------------------------------------------

def predict_from_scores(model: FusionModel, score_matrices):
    """Fuse precomputed member scores; labels break exact ties toward class 0."""
    mass, ignorance = fused_scores(model.params, score_matrices, model.proximity_mode)
    labels = np.argmax(mass, axis=1)
    return labels, mass, ignorance


def predict(model: FusionModel, pool, features, split: str | None = None):
    """Score new samples with the ensemble members and fuse their evidence.

    ``pool`` is the full classifier list the model's member ids index into;
    ``split`` is forwarded to external-score members.
    """
    for member in model.member_ids:
        if member < 0 or member >= len(pool):
            raise MemberMissingError(f"member {member} not in pool of {len(pool)}")
    score_matrices = [
        pool[member].predict_scores(features, split=split) for member in model.member_ids
    ]
    return predict_from_scores(model, score_matrices)


def model_to_dict(model: FusionModel) -> dict:
    return {
        "frame": model.frame.class_count,
        "member_ids": list(model.member_ids),
        "scheme": model.scheme.value,
        "proximity": model.proximity_mode,
        "members": [
            {
                "r": p.reference.tolist(),
                "epsilon": p.epsilon,
                "w": p.weight.values.tolist(),
            }
            for p in model.params
        ],
    }


def model_from_dict(payload: dict) -> FusionModel:
    params = tuple(
        FusionParams(
            reference=np.array(member["r"], dtype=np.float64),
            epsilon=member["epsilon"],
            weight=WeightVector(member["w"], WeightScheme(payload["scheme"])),
        )
        for member in payload["members"]
    )
    return FusionModel(
        frame=Frame(payload["frame"]),
        member_ids=tuple(payload["member_ids"]),
        scheme=WeightScheme(payload["scheme"]),
        params=params,
        proximity_mode=payload.get("proximity", "elementwise"),
    )


def save_model(model: FusionModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> FusionModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
