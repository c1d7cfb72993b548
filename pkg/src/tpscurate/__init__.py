"""tpscurate: deterministic curation and validation of enzyme sequence candidates.

The package covers the in-silico side of a family-specific enzyme design
run: curate a family dataset (length window, catalytic motifs, profile-hit
screen, identity blocklist), produce a homology-aware train/validation
split, and triage generated candidates through sequence, function, and
structure filters into a final scorecard table with full provenance.
"""

__version__ = "0.1.0"
