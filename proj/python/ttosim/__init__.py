"""Tree tensor operator simulation of boundary-driven XXZ chains.

The heavy lifting lives in the compiled ``_core`` module; this package adds a
few conveniences on top (records as numpy arrays, config helpers).
"""

import numpy as np

from ._core import (  # noqa: F401
    CheckpointError,
    ConfigError,
    OracleError,
    Simulator,
    StepDiagnostics,
    TTOState,
    XXZParams,
    __version__,
    config_to_ini,
    dense_observables,
    entanglement_of_formation,
    entropies,
    exact_evolve,
    hamiltonian_matrix,
    local_expectation,
    log_negativity,
    lowering,
    measure,
    pauli_z,
    product_density,
    raising,
    read_records,
    resume,
    run,
    spin_current,
    stationary_state,
    sweep,
)


def load_records(path):
    """Records CSV as a dict of column name -> numpy array."""
    columns, rows = read_records(str(path))
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(columns))
    return {name: data[:, i] for i, name in enumerate(columns)}


def make_config(**sections):
    """INI text from nested dicts, e.g. make_config(model={"sites": 4})."""
    lines = []
    for section, body in sections.items():
        lines.append(f"[{section}]")
        for key, value in body.items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, (list, tuple, set)):
                value = ", ".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
