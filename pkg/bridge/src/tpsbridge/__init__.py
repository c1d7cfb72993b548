"""tpsbridge: thin adapter around a causal protein language model.

Fine-tunes on a curated FASTA split and samples new sequences, emitting
the line-delimited generation-records interchange format (id, sequence,
per-token natural-log probabilities) that the curation pipeline consumes.
The bridge never filters: it emits everything and leaves every threshold
decision to the consumer.
"""

__version__ = "0.1.0"
