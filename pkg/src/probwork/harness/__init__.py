"""Reproducible streams, experiment execution and output emission.

The runner and CLI live in :mod:`probwork.harness.runner` and
:mod:`probwork.harness.cli`; they are not imported here so that the
numerical modules can depend on :mod:`probwork.harness.streams` without
import cycles.
"""

from .streams import derive_stream, spawn_streams

__all__ = ["derive_stream", "spawn_streams"]
