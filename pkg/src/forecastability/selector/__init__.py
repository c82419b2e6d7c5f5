"""Best-forecaster labels and the random forest meta-classifier."""
from .forest import (FOREST_VERSION, RandomForestClassifier, fit_forest, predict_forest,
                     top_k_importances, tree_rng)
from .labels import LABEL_COLUMN, LabeledMatrix, best_kind, make_labels
from .model_selection import (DEFAULT_GRID, GridSearchResult, expand_grid, grid_search_cv,
                              split_75_25, split_indices, stratified_folds)
from .tree import ClassificationTree, fit_tree, resolve_features_per_split

__all__ = [
    "FOREST_VERSION", "RandomForestClassifier", "fit_forest", "predict_forest", "top_k_importances",
    "tree_rng", "LABEL_COLUMN", "LabeledMatrix", "best_kind", "make_labels", "DEFAULT_GRID",
    "GridSearchResult", "expand_grid", "grid_search_cv", "split_75_25", "split_indices",
    "stratified_folds", "ClassificationTree", "fit_tree", "resolve_features_per_split",
]
