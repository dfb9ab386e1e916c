import numpy as np
import pytest

from sparsenb.dataio import CATEGORICAL, CONTINUOUS, Dataset, FeatureColumn


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def make_dataset(columns, labels, class_names=None):
    """Build a Dataset from (name, kind, values) triples and string labels."""
    label_list = [str(v) for v in labels]
    names = tuple(sorted(set(label_list))) if class_names is None else tuple(class_names)
    index = {name: k for k, name in enumerate(names)}
    cols = []
    for name, kind, values in columns:
        if kind == CONTINUOUS:
            arr = np.asarray(values, dtype=np.float64)
        else:
            arr = np.asarray([str(v) for v in values], dtype=object)
        cols.append(FeatureColumn(name, kind, arr))
    return Dataset(tuple(cols),
                   np.array([index[v] for v in label_list], dtype=np.int64),
                   names)


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
