"""Zero-shot recognition by preserving semantic relations between classes.

Class embeddings are mapped into visual-feature space by an encoder-decoder
MLP trained so that identical, similar and dissimilar classes keep their
relation in the embedding space.
"""
__version__ = "0.1.0"

from .data import Dataset, SynthConfig, generate_synthetic, load_dataset, save_dataset
from .evaluator import EvalReport, evaluate, predict
from .inference import semantic_report
from .model import Checkpoint, Network, build_network, load_checkpoint, save_checkpoint
from .objectives import BaselineMode, LossWeights
from .trainer import TrainConfig, grid_search, train

__all__ = [
    "BaselineMode", "Checkpoint", "Dataset", "EvalReport", "LossWeights", "Network",
    "SynthConfig", "TrainConfig", "build_network", "evaluate", "generate_synthetic",
    "grid_search", "load_checkpoint", "load_dataset", "predict", "save_checkpoint",
    "save_dataset", "semantic_report", "train",
]
