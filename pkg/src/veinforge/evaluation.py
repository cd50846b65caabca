"""Verification trials and the threshold-sweep metrics calculus.

A trial is one claim against the model: a probe vector, a claimed class, and
the match score the forest assigns that claim. Genuine means the claim equals
the probe's true class. A threshold turns trials into accept/reject decisions
(accept when score >= threshold, so ties accept), and from the confusion
counts follow TPR/FPR, FMR/FNMR, ROC, AUC, and EER.

Two float identities are guaranteed, not approximated:
  fnmr is computed as 1.0 - tpr, so fnmr + tpr == 1.0 exactly, and
  fmr is the very same float as fpr.

The threshold sweep domain everywhere is the union of the distinct observed
scores and the 101-point grid {0.00, 0.01, ..., 1.00}; ties between sweep
candidates resolve toward the smaller threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    DegenerateTrialSetError,
    EmptyInputError,
    EmptyTestSetError,
    InvalidParamError,
    UnachievableError,
    UndefinedRateError,
    UnknownLabelError,
    UnsortedCurveError,
)
from .features import FeatureVector
from .forest import Forest, Prediction
from .forest import vote_counts as _vote_counts
from .rng import SplitMix64

SWEEP_GRID = tuple(i / 100.0 for i in range(101))


@dataclass(frozen=True)
class Trial:
    probe_key: str
    claimed_label: str
    is_genuine: bool
    score: float


@dataclass
class TrialSet:
    trials: list[Trial] = field(default_factory=list)

    @property
    def n_genuine(self) -> int:
        return sum(1 for t in self.trials if t.is_genuine)

    @property
    def n_imposter(self) -> int:
        return sum(1 for t in self.trials if not t.is_genuine)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class Rates:
    tpr: float
    fpr: float
    fmr: float
    fnmr: float


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float
    fmr: float
    fnmr: float


@dataclass
class ImposterPolicy:
    """How many wrong-class claims each probe makes.

    mode "all" claims every other enrolled class; mode "sampled" claims k
    classes drawn without replacement from a stream seeded with
    seed XOR probe_index, so the trial set is reproducible.
    """

    mode: str = "all"
    k: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("all", "sampled"):
            raise InvalidParamError(f"unknown imposter policy {self.mode!r}")
        if self.mode == "sampled" and self.k < 1:
            raise InvalidParamError("sampled policy needs k >= 1")


# ---------------------------------------------------------------------------
# trial construction


def build_trials(
    forest: Forest,
    probes: list[FeatureVector],
    policy: ImposterPolicy | None = None,
) -> TrialSet:
    """One genuine claim plus imposter claims per probe.

    The forest votes once per probe; every claim's score is read off that
    single tally as the claimed class's vote fraction.
    """
    if not probes:
        raise EmptyTestSetError("no probe vectors to evaluate")
    if policy is None:
        policy = ImposterPolicy()

    n_trees = forest.params.n_trees
    index = {label: i for i, label in enumerate(forest.class_labels)}
    trials: list[Trial] = []
    for probe_index, probe in enumerate(probes):
        if probe.label not in index:
            raise UnknownLabelError(
                f"probe class {probe.label!r} is not enrolled in the model"
            )
        counts = _vote_counts(forest, probe.values)
        key = probe.source_tag or f"probe-{probe_index}"

        def claim(label: str) -> Trial:
            return Trial(
                probe_key=key,
                claimed_label=label,
                is_genuine=label == probe.label,
                score=float(counts[index[label]]) / n_trees,
            )

        trials.append(claim(probe.label))
        others = [lab for lab in forest.class_labels if lab != probe.label]
        if policy.mode == "all" or policy.k >= len(others):
            chosen = others
        else:
            rng = SplitMix64(policy.seed ^ probe_index)
            chosen = [others[i] for i in rng.sample_indices(len(others), policy.k)]
        trials.extend(claim(lab) for lab in chosen)
    return TrialSet(trials=trials)


# ---------------------------------------------------------------------------
# confusion and rates


def confusion_at_threshold(ts: TrialSet, threshold: float) -> ConfusionCounts:
    """Accept iff score >= threshold. Intended domain is 0 <= threshold <= 1,
    but any real works (the ROC sentinel sits just above the maximum score)."""
    tp = fp = tn = fn = 0
    for t in ts.trials:
        accept = t.score >= threshold
        if t.is_genuine:
            tp += accept
            fn += not accept
        else:
            fp += accept
            tn += not accept
    return ConfusionCounts(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def rates(c: ConfusionCounts) -> Rates:
    """tpr = TP/(TP+FN), fpr = FP/(FP+TN); fmr aliases fpr and fnmr is
    computed as 1 - tpr so the complement identity holds exactly."""
    if c.tp + c.fn == 0:
        raise UndefinedRateError("no genuine trials: tpr undefined")
    if c.fp + c.tn == 0:
        raise UndefinedRateError("no imposter trials: fpr undefined")
    tpr = c.tp / (c.tp + c.fn)
    fpr = c.fp / (c.fp + c.tn)
    return Rates(tpr=tpr, fpr=fpr, fmr=fpr, fnmr=1.0 - tpr)


def _require_both_kinds(ts: TrialSet) -> tuple[int, int]:
    ng = ts.n_genuine
    ni = ts.n_imposter
    if ng < 1 or ni < 1:
        raise DegenerateTrialSetError(
            f"metrics need both trial kinds, got {ng} genuine / {ni} imposter"
        )
    return ng, ni


# ---------------------------------------------------------------------------
# threshold sweep


def sweep_thresholds(ts: TrialSet) -> list[float]:
    """Distinct observed scores united with the 0.01 grid, ascending."""
    domain = set(SWEEP_GRID)
    domain.update(t.score for t in ts.trials)
    return sorted(domain)


def _rates_at(ts: TrialSet, threshold: float) -> Rates:
    return rates(confusion_at_threshold(ts, threshold))


def roc_curve(ts: TrialSet) -> list[RocPoint]:
    """Points at every distinct score, threshold descending.

    A sentinel 0.01 above the maximum score opens the curve at (0, 0); a
    threshold-0.0 anchor closes it at (1, 1) unless 0.0 is itself an
    observed score.
    """
    ng, ni = _require_both_kinds(ts)
    scores = sorted({t.score for t in ts.trials}, reverse=True)

    def point(threshold: float) -> RocPoint:
        r = _rates_at(ts, threshold)
        return RocPoint(
            threshold=threshold, tpr=r.tpr, fpr=r.fpr, fmr=r.fmr, fnmr=r.fnmr
        )

    points = [point(scores[0] + 0.01)]
    points.extend(point(s) for s in scores)
    if scores[-1] != 0.0:
        points.append(point(0.0))
    return points


def auc_trapezoid(roc: list[RocPoint]) -> float:
    """Trapezoidal area under (fpr, tpr); needs fpr non-decreasing."""
    if len(roc) < 2:
        raise UnsortedCurveError("a curve needs at least two points")
    area = 0.0
    for prev, cur in zip(roc, roc[1:]):
        if cur.fpr < prev.fpr:
            raise UnsortedCurveError(
                f"fpr decreases from {prev.fpr} to {cur.fpr} along the curve"
            )
        area += (cur.tpr + prev.tpr) * (cur.fpr - prev.fpr) / 2.0
    return area


def eer(ts: TrialSet) -> tuple[float, float]:
    """Threshold where FMR and FNMR come closest, and their average there.

    Scans the sweep domain ascending; ties keep the smaller threshold.
    Returns (eer_value, eer_threshold).
    """
    _require_both_kinds(ts)
    best_gap = None
    best_t = None
    best_value = None
    for t in sweep_thresholds(ts):
        r = _rates_at(ts, t)
        gap = abs(r.fmr - r.fnmr)
        if best_gap is None or gap < best_gap:
            best_gap = gap
            best_t = t
            best_value = (r.fmr + r.fnmr) / 2.0
    return best_value, best_t


def operating_threshold(ts: TrialSet, target_fmr: float) -> tuple[float, float, float]:
    """Smallest sweep threshold whose FMR meets the target.

    Returns (threshold, fmr, fnmr) at that point.
    """
    if not 0.0 <= target_fmr <= 1.0:
        raise InvalidParamError("target_fmr must lie in [0, 1]")
    _require_both_kinds(ts)
    for t in sweep_thresholds(ts):
        r = _rates_at(ts, t)
        if r.fmr <= target_fmr:
            return t, r.fmr, r.fnmr
    raise UnachievableError(
        f"no sweep threshold reaches fmr <= {target_fmr} (imposters score 1.0)"
    )


def mean_confidence(predictions: list[Prediction]) -> float:
    """Arithmetic mean of the predicted-class vote fractions."""
    if not predictions:
        raise EmptyInputError("no predictions to average")
    return sum(p.confidence for p in predictions) / len(predictions)


def per_class_auc(ts: TrialSet) -> dict[str, float]:
    """Pooled-trial AUC restricted to the trials claiming each class.

    Classes whose claim subset lacks a genuine or an imposter trial are
    omitted rather than reported as NaN.
    """
    out: dict[str, float] = {}
    for label in sorted({t.claimed_label for t in ts.trials}):
        subset = TrialSet(trials=[t for t in ts.trials if t.claimed_label == label])
        if subset.n_genuine < 1 or subset.n_imposter < 1:
            continue
        out[label] = auc_trapezoid(roc_curve(subset))
    return out
