# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

__version__ = "0.1.0"
