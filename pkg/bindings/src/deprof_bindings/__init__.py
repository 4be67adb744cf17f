"""Notebook-style bindings for the deprof engine.

The workflow mirrors how analysts script profiling runs: create an
algorithm handle, configure its options, load a table (a pandas DataFrame
or a CSV path), call ``execute``, then pull results back as plain lists
and tuples ready for comprehension-style post-processing.

Options freeze at execute time; a handle runs once. Long executions spend
their time in the engine's numpy kernels, which release the interpreter
lock, so notebook UIs stay responsive.
"""

from .handles import (
    ALGORITHM_KINDS,
    AlgorithmHandle,
    BindingError,
    ConversionError,
    StateError,
    create,
    execute,
    get_results,
    load_data,
)

__all__ = [
    "ALGORITHM_KINDS",
    "AlgorithmHandle",
    "BindingError",
    "ConversionError",
    "StateError",
    "create",
    "execute",
    "get_results",
    "load_data",
]

__version__ = "0.1.0"
