"""Neural-operator trainer driven by exported Feynman-Kac propagation operators."""

from .formats import Operator, read_fields, read_operator
from .model import ModelConfig, OperatorModel
from .training import TrainConfig, evaluate, train_mcnp, trajectory_errors

__version__ = "0.1.0"
