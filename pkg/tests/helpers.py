# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Model documents shared by the tests.
"""

import json
from typing import Any, Dict, List

from perisolve.sysutils import fixtures_dir


def fixture_document(name: str) -> Dict[str, Any]:
    """
    Reads a model document from the fixtures directory.
    """
    with open(fixtures_dir() / f"{name}.json", encoding="utf-8") as stream:
        return json.load(stream)


def scalar_document(
    d: Any = 1.0, terms: List[Dict[str, Any]] | None = None, omega: Any = 1.0
) -> Dict[str, Any]:
    """
    A one-patch model document with the given death rate and terms.
    """
    return {"n": 1, "omega": omega, "equations": [{"d": d, "terms": terms or []}]}


def ricker_term(beta: Any = 1.0, tau: Any = 1.0, c: Any = 1.0) -> Dict[str, Any]:
    return {
        "beta": beta,
        "kernel": {"type": "discrete", "tau": tau},
        "nonlinearity": {"type": "ricker", "c": c},
    }


def cyclic_document(rate: float = 100.0) -> Dict[str, Any]:
    """
    Three patches with death rate `rate` and cyclic migration at the same rate. The linear part
    has complex eigenvalues that coarse steps cannot follow.
    """
    equations = [{"d": rate, "a": {str((i + 1) % 3 + 1): rate}} for i in range(3)]
    return {"name": "cyclic", "n": 3, "omega": 1.0, "equations": equations}
