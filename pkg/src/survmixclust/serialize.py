"""Model files: a model's JSON document plus the preprocessing it was trained with."""

from __future__ import annotations

import json
from pathlib import Path

from .baselines import KMeansSurvivalModel
from .data import PreprocessRecipe
from .mixture import SurvMixModel


def model_to_dict(model, recipe: PreprocessRecipe | None = None, training: dict | None = None) -> dict:
    doc = model.to_dict()
    if recipe is not None:
        doc["preprocess"] = recipe.to_dict()
    if training:
        doc["training"] = dict(training)
    return doc


def save_model(path, model, recipe=None, training=None):
    text = json.dumps(model_to_dict(model, recipe, training), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def model_from_dict(doc: dict):
    kind = doc.get("model_type")
    if kind == "survmixclust":
        return SurvMixModel.from_dict(doc)
    if kind == "kmeans_survival":
        return KMeansSurvivalModel.from_dict(doc)
    raise ValueError(f"unknown model_type {kind!r}")


def load_model(path):
    """Return ``(model, recipe or None, training metadata dict)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    recipe = PreprocessRecipe.from_dict(doc["preprocess"]) if "preprocess" in doc else None
    return model_from_dict(doc), recipe, doc.get("training", {})
