"""Corpus-to-verdict toolkit for the English double-object construction.

Extracts candidate instances from POS-tagged corpora with a tag-pattern
query language, manages human annotation, builds fine-tuning datasets and
batched classification prompts, retrieves theory excerpts through a
keyword inverted index, and evaluates competing classifiers with paired
significance tests.
"""

__version__ = "0.1.0"
