"""Layer-wise pruning pipeline: analyze, select, cut, fine-tune, report.

Layers are processed front to back over the prunable layers of the model
(everything parametric but the output layer), and every layer after the
first sees the network as already pruned and fine-tuned up to that point.
A layer that hits a degenerate condition (too few samples per class, too
few components to sweep) keeps all its components and records a warning
instead of failing the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import cluster, knee, sepspace, toynet
from .errors import AcspError, BadParams, NotPrunableLayer, TooFewPoints
from .rng import derive_seed
from .tensio import SELECTION_MODES, PlanEntry, PruningPlan

DEFAULT_FT_LR_SCALE = 0.1  # fine-tune lr defaults to a tenth of the training lr


@dataclass
class PruneConfig:
    knee_degree: int = 2
    selection: str = "weighted"      # "weighted" or "regular"
    stride: int = 1
    ft_fraction: float = 0.25
    ft_epochs: int = 2
    ft_lr: float | None = None       # None: DEFAULT_FT_LR_SCALE * model training lr
    seed: int = 0
    pre_activation: bool = False
    freeze_upstream: bool = False
    batch_size: int = 64
    workers: int | None = None

    def __post_init__(self):
        if self.selection not in SELECTION_MODES:
            raise BadParams(f"selection must be one of {SELECTION_MODES}")


@dataclass
class LayerReport:
    layer_id: int
    n_components: int
    k_selected: int
    kept_indices: list[int]
    selection_mode: str
    knee_degree: int
    mss_curve: cluster.MssCurve | None
    knee: knee.KneeResult | None
    flops_before: int  # whole-model totals around this layer's step
    flops_after: int
    warning: str | None = None


def component_norms(model: toynet.ToyModel, layer_id: int) -> np.ndarray:
    """L2 norm of each component's incoming weights (bias excluded)."""
    layer = model.layers[layer_id]
    if not layer.parametric:
        raise NotPrunableLayer(f"layer {layer_id} ({layer.kind}) has no weights")
    w = layer.w
    return np.sqrt((w.reshape(w.shape[0], -1) ** 2).sum(axis=1))


def component_norm(model: toynet.ToyModel, layer_id: int, j: int) -> float:
    return float(component_norms(model, layer_id)[j])


def compose(result: cluster.ClusterResult, mode: str, norms: np.ndarray) -> list[int]:
    """Pick one component per cluster.

    "regular" keeps the medoids themselves; "weighted" keeps, per cluster,
    the member with the largest incoming-weight norm. Ties go to the lowest
    index, and the result is sorted, so both modes are deterministic.
    """
    if mode == "regular":
        return sorted(int(m) for m in result.medoid_indices)
    if mode != "weighted":
        raise BadParams(f"unknown selection mode {mode!r}")
    kept = []
    for m in result.medoid_indices:
        members = np.flatnonzero(result.assignment == m)
        best = members[int(np.argmax(norms[members]))]  # argmax: first max wins
        kept.append(int(best))
    return sorted(kept)


def _resolve_ft_lr(config: PruneConfig, model: toynet.ToyModel) -> PruneConfig:
    if config.ft_lr is not None:
        return config
    lr = DEFAULT_FT_LR_SCALE * model.train_lr
    if lr <= 0.0:
        lr = 0.01  # untrained input model; any small positive step works
    return replace(config, ft_lr=lr)


def prune_layer(model: toynet.ToyModel, ds, layer_id: int,
                config: PruneConfig | None = None):
    """Prune one layer and fine-tune the result.

    Returns (model, LayerReport). The incoming model is never mutated.
    When the layer keeps all components (no knee, or a degenerate abort)
    the model passes through unchanged and no fine-tuning runs: there is
    nothing for the rest of the network to adjust to.
    """
    config = _resolve_ft_lr(config or PruneConfig(), model)
    if layer_id not in model.prunable_ids():
        raise NotPrunableLayer(
            f"layer {layer_id} is not prunable; prunable ids: {model.prunable_ids()}")
    flops_before = toynet.count_flops(model).total
    n_comp = model.n_components(layer_id)
    curve = None
    knee_result = None
    warning = None
    kept = list(range(n_comp))
    k_selected = n_comp
    try:
        acts = toynet.capture_activations(model, ds, layer_id,
                                          pre_activation=config.pre_activation)
        space = sepspace.build_space(acts)
        curve, results = cluster.sweep_detailed(space, stride=config.stride,
                                                seed=derive_seed(config.seed, f"cluster{layer_id}"),
                                                workers=config.workers)
        try:
            knee_result = knee.find_knee(curve, config.knee_degree)
            k_selected = (knee_result.k_prime if knee_result.k_prime is not None
                          else int(curve.ks()[-1]))
        except TooFewPoints:
            knee_result = None
            k_selected = int(curve.ks()[-1])  # keep-all fallback
        if k_selected < n_comp:
            kept = compose(results[k_selected], config.selection,
                           component_norms(model, layer_id))
    except AcspError as exc:
        warning = f"{type(exc).__name__}: {exc}"
        kept = list(range(n_comp))
        k_selected = n_comp
    if len(kept) < n_comp:
        entry = PlanEntry(layer_id, n_comp, kept, len(kept),
                          config.selection, config.knee_degree)
        pruned = toynet.apply_prune(model, PruningPlan([entry]))
        trainable = None
        if config.freeze_upstream:
            trainable = {i for i in range(layer_id, len(model.layers))}
        out = toynet.finetune(pruned, ds, config.ft_fraction, config.ft_epochs,
                              config.ft_lr, derive_seed(config.seed, f"finetune{layer_id}"),
                              batch_size=config.batch_size, trainable=trainable)
    else:
        out = model.copy()
    report = LayerReport(
        layer_id=layer_id,
        n_components=n_comp,
        k_selected=len(kept),
        kept_indices=[int(i) for i in kept],
        selection_mode=config.selection,
        knee_degree=config.knee_degree,
        mss_curve=curve,
        knee=knee_result,
        flops_before=flops_before,
        flops_after=toynet.count_flops(out).total,
        warning=warning,
    )
    return out, report


def prune_model(model: toynet.ToyModel, ds, config: PruneConfig | None = None):
    """Run the layer loop over every prunable layer, front to back.

    Returns (model, [LayerReport]). A model with no prunable layer is
    passed through unchanged with an empty report list.
    """
    config = _resolve_ft_lr(config or PruneConfig(), model)
    reports: list[LayerReport] = []
    current = model.copy()
    for layer_id in model.prunable_ids():
        current, report = prune_layer(current, ds, layer_id, config)
        reports.append(report)
    return current, reports


def build_plan(reports: list[LayerReport], curve_ref=None) -> PruningPlan:
    """Plan entries for every layer that completed analysis.

    Aborted layers (those carrying a warning) are omitted: with no curve
    and no selection there is no decision to replay. Keep-all layers that
    simply found no knee stay in the plan as explicit no-ops.
    """
    if curve_ref is None:
        curve_ref = lambda lid: f"mss_layer{lid}.csv"
    entries = []
    for r in reports:
        if r.warning is not None:
            continue
        entries.append(PlanEntry(
            layer_id=r.layer_id,
            n_components=r.n_components,
            kept_indices=list(r.kept_indices),
            k_selected=r.k_selected,
            selection_mode=r.selection_mode,
            knee_degree=r.knee_degree,
            mss_curve_ref=curve_ref(r.layer_id) if r.mss_curve is not None else None,
            knee=r.knee.to_dict() if r.knee is not None else None,
        ))
    return PruningPlan(entries)


def speedup(reports: list[LayerReport]) -> float:
    """Whole-run FLOPs ratio; 1.0 when nothing was pruned."""
    if not reports:
        return 1.0
    return reports[0].flops_before / reports[-1].flops_after
