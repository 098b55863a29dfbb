from .logistic import MultinomialLogit, train_multinomial_lr
from .forest import RandomForest, train_random_forest, gini_importance
from .neural import (
    NeuralNetClassifier,
    TunedNeuralNet,
    train_neural_net,
    tune_neural_net,
)
from .persistence import save_model, load_model

__all__ = [
    "MultinomialLogit",
    "train_multinomial_lr",
    "RandomForest",
    "train_random_forest",
    "gini_importance",
    "NeuralNetClassifier",
    "TunedNeuralNet",
    "train_neural_net",
    "tune_neural_net",
    "save_model",
    "load_model",
]
