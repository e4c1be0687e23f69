"""errgen: learn artificial writing errors from annotated corpora, inject
them into clean text, and train/evaluate a token-level error detector.

Subpackages cover the full pipeline: corpus IO, Levenshtein alignment and
labeling, transformation-pattern extraction and injection, a phrase-based
translation route (phrase table + Kneser-Ney LM + beam decoder), a
recurrent token classifier, and evaluation with significance testing.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
