"""The five conventional learners plus the shared predict/serialize layer."""

from uttlabel.learners.base import (
    MODEL_REGISTRY,
    as_csr,
    load_model,
    predict,
    save_model,
)
from uttlabel.learners.boosting import BoostEnsemble, train_adaboost_nb
from uttlabel.learners.forest import Forest, Tree, train_random_forest
from uttlabel.learners.linear import (
    KIND_HINGE,
    KIND_LOGISTIC,
    LinearModel,
    train_logreg,
    train_sgd_svm,
)
from uttlabel.learners.naive_bayes import NBModel, train_naive_bayes


def train_learner(spec: dict, X, y, classes, seed: int):
    """Train one learner from a spec dict: {"model": id, **hyperparameters}.

    Hyperparameter keys: alpha (nb, adaboost_nb), n_estimators and
    learning_rate (adaboost_nb), n_trees (rf), epochs and lambda (gd_svm),
    lambda, max_iter and tol (logreg).  Unknown model ids raise ValueError.
    """
    kind = spec.get("model")
    if kind == "nb":
        return train_naive_bayes(X, y, alpha=spec.get("alpha", 1.0), classes=classes)
    if kind == "adaboost_nb":
        return train_adaboost_nb(
            X,
            y,
            n_estimators=spec.get("n_estimators", 50),
            learning_rate=spec.get("learning_rate", 0.1),
            alpha=spec.get("alpha", 1.0),
            classes=classes,
        )
    if kind == "rf":
        return train_random_forest(
            X, y, n_trees=spec.get("n_trees", 100), seed=seed, classes=classes
        )
    if kind == "gd_svm":
        return train_sgd_svm(
            X,
            y,
            epochs=spec.get("epochs", 1000),
            lam=spec.get("lambda", 1e-4),
            seed=seed,
            classes=classes,
        )
    if kind == "logreg":
        return train_logreg(
            X,
            y,
            lam=spec.get("lambda", 1e-4),
            max_iter=spec.get("max_iter", 100),
            tol=spec.get("tol", 1e-4),
            classes=classes,
        )
    raise ValueError(f"unknown base learner {kind!r}")


__all__ = [
    "MODEL_REGISTRY",
    "as_csr",
    "load_model",
    "predict",
    "save_model",
    "BoostEnsemble",
    "train_adaboost_nb",
    "Forest",
    "Tree",
    "train_random_forest",
    "KIND_HINGE",
    "KIND_LOGISTIC",
    "LinearModel",
    "train_logreg",
    "train_sgd_svm",
    "NBModel",
    "train_naive_bayes",
    "train_learner",
]
