# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The ccu Authors
"""Python bindings for the cognitive control unit."""

from ._ccu import CcuError, Planner, parse_triplet, run_cli

__all__ = ["CcuError", "Planner", "parse_triplet", "run_cli"]
