"""trollscope: troll-tweet corpus analysis.

Preprocessing, vocabulary encoding, skip-gram embeddings, neural
classification, stylometric feature extraction, staged logistic
regression, and topic/coherence/dispersion anomaly analysis, with a
batch CLI on top.
"""

__version__ = "0.1.0"
