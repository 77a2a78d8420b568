"""Evaluation metrics for edge classification and origin regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import EDGE_CLASSES

__all__ = [
    "confusion_matrix",
    "precision_recall",
    "roc_auc_ovr",
    "evaluate_edges",
    "match_concepts",
    "evaluate_origins",
    "EdgeMetrics",
    "OriginMetrics",
]


def confusion_matrix(y_true, y_pred, n_classes=len(EDGE_CLASSES)) -> np.ndarray:
    """Counts with true class on rows, predicted class on columns."""
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have the same length")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def precision_recall(y_true, y_pred, positive_classes=(1, 2)):
    """Macro precision/recall over the positive (non-``none``) classes.

    Classes absent from both truth and prediction are skipped; a class
    with no predicted (resp. true) samples contributes precision
    (resp. recall) of 0.
    """
    cm = confusion_matrix(y_true, y_pred)
    precisions, recalls = [], []
    for c in positive_classes:
        pred_c = cm[:, c].sum()
        true_c = cm[c, :].sum()
        if pred_c == 0 and true_c == 0:
            continue
        tp = cm[c, c]
        precisions.append(tp / pred_c if pred_c else 0.0)
        recalls.append(tp / true_c if true_c else 0.0)
    if not precisions:
        raise ValueError("no positive-class samples to evaluate")
    return float(np.mean(precisions)), float(np.mean(recalls))


def _binary_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Area under the ROC curve, with tied scores grouped."""
    order = np.argsort(-scores, kind="stable")
    y = y_true[order]
    s = scores[order]
    pos = y.sum()
    neg = len(y) - pos
    if pos == 0 or neg == 0:
        raise ValueError("AUC needs both positive and negative samples")
    # Thresholds at the end of each tie group.
    boundary = np.nonzero(np.diff(s))[0]
    idx = np.concatenate([boundary, [len(s) - 1]])
    tp = np.cumsum(y)[idx]
    fp = np.cumsum(1 - y)[idx]
    tpr = np.concatenate([[0.0], tp / pos])
    fpr = np.concatenate([[0.0], fp / neg])
    return float(np.trapezoid(tpr, fpr))


def roc_auc_ovr(y_true, proba) -> float:
    """Macro one-vs-rest ROC AUC over the positive edge classes."""
    y_true = np.asarray(y_true, dtype=np.intp)
    proba = np.asarray(proba, dtype=np.float64)
    aucs = []
    for c in (1, 2):
        mask = (y_true == c).astype(np.float64)
        if mask.sum() == 0 or mask.sum() == len(mask):
            continue
        aucs.append(_binary_auc(mask, proba[:, c]))
    if not aucs:
        raise ValueError("no positive-class samples to evaluate")
    return float(np.mean(aucs))


@dataclass
class EdgeMetrics:
    precision: float
    recall: float
    auc: float
    confusion: np.ndarray


def evaluate_edges(y_true, y_pred, proba) -> EdgeMetrics:
    p, r = precision_recall(y_true, y_pred)
    auc = roc_auc_ovr(y_true, proba)
    return EdgeMetrics(precision=p, recall=r, auc=auc,
                       confusion=confusion_matrix(y_true, y_pred))


def match_concepts(pred_members, gt_members):
    """Match predicted concepts to ground-truth concepts by plane overlap.

    A prediction matches a ground-truth concept when it covers at least
    half of the truth's member planes; among candidates the one with
    the highest Jaccard index wins (ties to the lowest ground-truth
    index).  Each side is used at most once.

    Parameters
    ----------
    pred_members, gt_members : sequence of set-like
        Member plane ids per concept.

    Returns
    -------
    list of (int, int)
        Pairs of (prediction index, ground-truth index).
    """
    pred_members = [frozenset(m) for m in pred_members]
    gt_members = [frozenset(m) for m in gt_members]
    candidates = []
    for i, pm in enumerate(pred_members):
        for j, gm in enumerate(gt_members):
            inter = len(pm & gm)
            if inter / len(gm) < 0.5:
                continue
            jac = inter / len(pm | gm)
            candidates.append((-jac, i, j))
    candidates.sort()
    used_p, used_g, pairs = set(), set(), []
    for _, i, j in candidates:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        pairs.append((i, j))
    pairs.sort()
    return pairs


@dataclass
class OriginMetrics:
    rmse_m: float
    mse_m2: float
    n_matched: int
    n_gt: int


def evaluate_origins(pred_members, pred_origins, gt_members, gt_origins) -> OriginMetrics:
    """Origin error over matched concepts.

    ``mse_m2`` is the mean squared Euclidean distance in m^2;
    ``rmse_m`` is its square root.
    """
    pairs = match_concepts(pred_members, gt_members)
    if not pairs:
        raise ValueError("no predicted concept matched the ground truth")
    sq = [float(np.sum((np.asarray(pred_origins[i]) - np.asarray(gt_origins[j])) ** 2))
          for i, j in pairs]
    mse = float(np.mean(sq))
    return OriginMetrics(rmse_m=float(np.sqrt(mse)), mse_m2=mse,
                         n_matched=len(pairs), n_gt=len(gt_members))
