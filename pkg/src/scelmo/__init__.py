"""Name-based bug detection over JavaScript token corpora.

Pipeline stages: ingest an exported token/AST corpus, extract call and
binary-expression instances, synthesize buggy counterparts by mutation, train
static or language-model token embeddings, and train/evaluate per-pattern
binary classifiers.
"""

__version__ = "0.1.0"
