"""Command handlers."""

from src.cli.handlers.ablate import AblateHandler
from src.cli.handlers.evaluate import EvaluateHandler
from src.cli.handlers.generate import GenerateHandler
from src.cli.handlers.inspector import InspectHandler
from src.cli.handlers.runs import RunsHandler
from src.cli.handlers.synthesize import SynthesizeHandler
from src.cli.handlers.train import TrainHandler

__all__ = [
    "AblateHandler",
    "EvaluateHandler",
    "GenerateHandler",
    "InspectHandler",
    "RunsHandler",
    "SynthesizeHandler",
    "TrainHandler",
]
