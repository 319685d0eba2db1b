"""Offline [CLS]-embedding exporter for the cardiotriage pipeline.

Runs a frozen pretrained clinical transformer over a JSONL corpus and
writes float32 vectors in the CVDE binary store format, plus a manifest.
The triage pipeline itself never imports model code; the store file is
the only coupling.
"""

from .exporter import DEFAULT_MODEL, ExportJob, export

__version__ = "0.1.0"
