"""The five concrete model families behind one duck-typed interface."""

from .base import BoundarySystem, LinearizedSystem, Model, polar_decompose
from .patchy import Patchy
from .rma import Rma
from .seir import Seir
from .sirs import Sirs
from .sis import Sis

MODEL_CLASSES = {
    "sirs": Sirs,
    "rma": Rma,
    "patchy": Patchy,
    "sis": Sis,
    "seir": Seir,
}


def build_model(model_id: str, params: dict) -> Model:
    try:
        cls = MODEL_CLASSES[model_id]
    except KeyError:
        raise ValueError(f"unknown model id {model_id!r}; choose from {sorted(MODEL_CLASSES)}")
    return cls(**params)


__all__ = [
    "BoundarySystem",
    "LinearizedSystem",
    "Model",
    "MODEL_CLASSES",
    "Patchy",
    "Rma",
    "Seir",
    "Sirs",
    "Sis",
    "build_model",
    "polar_decompose",
]
