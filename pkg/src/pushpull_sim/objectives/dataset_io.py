"""Save and replay objective ensembles.

Files are numpy ``.npz`` archives with the keys

    family      "ridge" or "logistic"
    shape       [M, d, n_local] (d is the feature dimension)
    reg         (M,) regularizers
    features    (M, n_local, d)
    labels      (M, n_local) for ridge, (M, n_local, C) one-hot for logistic
"""
from pathlib import Path

import numpy as np

from pushpull_sim.objectives.base import Objective
from pushpull_sim.objectives.logistic import LogisticEnsemble
from pushpull_sim.objectives.ridge import RidgeEnsemble


def save_ensemble(ensemble: Objective, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    M, n, d = ensemble.features.shape
    with open(path, "wb") as f:
        np.savez(
            f,
            family=np.array(ensemble.family),
            shape=np.array([M, d, n]),
            reg=ensemble.reg,
            features=ensemble.features,
            labels=ensemble.labels,
        )
    return path


def load_ensemble(path: str | Path) -> Objective:
    with np.load(Path(path), allow_pickle=False) as data:
        family = str(data["family"])
        M, d, n = (int(v) for v in data["shape"])
        features, labels, reg = data["features"], data["labels"], data["reg"]
    if features.shape != (M, n, d):
        raise ValueError(f"{path}: features shape {features.shape} disagrees with header {(M, n, d)}")
    if family == "ridge":
        return RidgeEnsemble(features, labels, reg)
    if family == "logistic":
        return LogisticEnsemble(features, labels, reg)
    raise ValueError(f"{path}: unknown ensemble family '{family}'")
