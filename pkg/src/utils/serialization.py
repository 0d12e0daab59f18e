import csv
import io
import os
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel

from ..services.statevec import PureState, SubsystemLayout, make_state


def complex_pairs(values: Iterable[complex]) -> List[List[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def state_to_json(state: PureState) -> Dict[str, Any]:
    return {
        "layout": [[label, dim] for label, dim in state.layout.subsystems],
        "amplitudes": complex_pairs(state.amplitudes),
    }


def state_from_json(data: Dict[str, Any]) -> PureState:
    layout = SubsystemLayout(tuple((label, int(dim)) for label, dim in data["layout"]))
    amps = [complex(re, im) for re, im in data["amplitudes"]]
    return make_state(layout, amps)


def matrix_to_json(matrix: np.ndarray) -> List[List[List[float]]]:
    return [complex_pairs(row) for row in np.asarray(matrix)]


def format_cell(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def render_json(report: BaseModel) -> str:
    return report.model_dump_json() + "\n"


def write_text(path: str, text: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
