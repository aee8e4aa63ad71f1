"""Hybrid pipelined conjugate gradient on emulated host/accelerator pairs."""

from ._core import (
    BreakdownError,
    CapacityError,
    ContractViolation,
    CsrMatrix,
    ParseError,
    SetupError,
    poisson125,
    poisson125_size,
    read_matrix_market,
    run,
    run_cli,
    solve,
    spmv,
    strategies,
)

__all__ = [
    "BreakdownError",
    "CapacityError",
    "ContractViolation",
    "CsrMatrix",
    "ParseError",
    "SetupError",
    "poisson125",
    "poisson125_size",
    "read_matrix_market",
    "run",
    "run_cli",
    "solve",
    "spmv",
    "strategies",
]
