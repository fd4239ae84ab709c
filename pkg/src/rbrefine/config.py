"""Run configuration shared by the encoder, the solver driver and the CLI."""

from __future__ import annotations

import os
import shutil
from dataclasses import dataclass
from typing import Optional

DEFAULT_SOLVER = "z3"
SOLVER_ENV = "RBREFINE_SOLVER"


@dataclass(frozen=True)
class Config:
    int_mode: str = "int"  # "int" or "bv"
    bv_width: int = 8
    array_bound: int = 10
    depth_limit: int = 16
    solver_path: Optional[str] = None
    timeout: float = 60.0
    parallelism: int = 1
    dump_ir: bool = False
    dump_smt: Optional[str] = None
    label: Optional[str] = None
    show_all_bindings: bool = False

    def __post_init__(self):
        if self.int_mode not in ("int", "bv"):
            raise ValueError(f"unknown integer mode {self.int_mode!r}")
        if not 2 <= self.bv_width <= 64:
            raise ValueError("bitvector width must be between 2 and 64")
        if self.array_bound < 1:
            raise ValueError("array bound must be at least 1")

    @property
    def bitvector(self) -> bool:
        return self.int_mode == "bv"

    def solver(self) -> str:
        path = self.solver_path or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER
        return shutil.which(path) or path


def parse_int_mode(text: str) -> tuple[str, int]:
    """``int`` or ``bv:W``."""
    if text == "int":
        return "int", 8
    if text.startswith("bv"):
        rest = text[2:].lstrip(":")
        width = int(rest) if rest else 8
        return "bv", width
    raise ValueError(f"expected 'int' or 'bv:W', got {text!r}")
