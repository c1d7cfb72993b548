"""Run configuration: YAML over defaults, plus a canonical digest.

The digest hashes the fully merged configuration as canonical JSON
(sorted keys, compact separators) so manifests can prove which settings
produced a report regardless of YAML formatting.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any

import yaml

from .align import AlignParams
from .errors import ConfigInvalidError
from .motif import EnzymeClass, MotifRule, compile_motif

DEFAULTS: dict[str, Any] = {
    "tool_versions": {},
    "hooks": {},
    "align": {
        "match": 1,
        "mismatch": -1,
        "gap": -1,
        "prefilter": False,
        "kmer_k": 5,
        "min_shared_kmers": 1,
        "band": None,
        "identity_denominator": "columns",
    },
    "curation": {
        "min_length": 300,
        "max_length": 1100,
        "motifs": [
            {"name": "DDXXD", "pattern": "DDXXD", "class": "class1"},
            {"name": "NSE/DTE", "pattern": "[ND]DXX[ST]XXXE", "class": "class1"},
            {"name": "DXDD", "pattern": "DXDD", "class": "class2"},
        ],
        "profile_hits": None,
        "tps_accessions": [],
        "blocklist": None,
        "blocklist_max_identity": 0.8,
    },
    "split": {
        "threshold": 0.3,
        "partitions": 6,
        "train_partitions": "auto",
        "target_ratio": 0.8,
    },
    "filters": {
        "stages": ["perplexity", "maxid", "detector", "ec", "domain", "plddt", "tm"],
        "perplexity_top_fraction": 0.10,
        "maxid_max_percent": 60,
        "maxid_round_percent": True,
        "detector_min": 0.7,
        "plddt_min": 70.0,
        "tm_min": 0.6,
        "tm_max": 0.9,
        "ec_allowlist": [
            "4.2.3.75",
            "2.5.1.21",
            "5.4.99.33",
            "5.4.99.39",
            "5.4.99.8",
            "4.2.3.-",
        ],
        "domain_allowlist": [],
    },
    "io": {
        "hits_columns": ["query", "target", "tm"],
        "tm_column": "tm",
        "domain_accession_column": 12,
        "domain_description_column": 13,
        "plddt_rescale": False,
    },
}


_FREE_FORM_SECTIONS = ("tool_versions", "hooks")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigInvalidError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and key not in _FREE_FORM_SECTIONS:
            if not isinstance(value, dict):
                raise ConfigInvalidError(f"config section {path + key!r} must be a mapping")
            merged[key] = _merge(base[key], value, path=f"{path}{key}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class Config:
    def __init__(self, data: dict[str, Any]):
        self.data = data

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        raw = Path(path).read_text(encoding="utf-8")
        return cls.loads(raw)

    @classmethod
    def loads(cls, raw: str) -> "Config":
        try:
            override = yaml.safe_load(raw) or {}
        except yaml.YAMLError as exc:
            raise ConfigInvalidError(f"config is not valid YAML: {exc}") from None
        if not isinstance(override, dict):
            raise ConfigInvalidError("config root must be a mapping")
        return cls(_merge(DEFAULTS, override))

    @classmethod
    def default(cls) -> "Config":
        return cls(copy.deepcopy(DEFAULTS))

    @property
    def digest(self) -> str:
        canonical = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def align_params(self) -> AlignParams:
        section = self.data["align"]
        return AlignParams(
            match=int(section["match"]),
            mismatch=int(section["mismatch"]),
            gap=int(section["gap"]),
            prefilter=bool(section["prefilter"]),
            kmer_k=int(section["kmer_k"]),
            min_shared_kmers=int(section["min_shared_kmers"]),
            band=None if section["band"] is None else int(section["band"]),
            identity_denominator=section["identity_denominator"],
        )

    def motif_rules(self) -> list[MotifRule]:
        rules = []
        for spec in self.data["curation"]["motifs"]:
            try:
                enzyme_class = EnzymeClass(spec["class"])
            except (KeyError, ValueError):
                raise ConfigInvalidError(
                    f"motif rule {spec.get('name', '?')!r} needs class "
                    "'class1' or 'class2'"
                ) from None
            rules.append(
                compile_motif(spec["pattern"], enzyme_class, name=spec.get("name"))
            )
        return rules
