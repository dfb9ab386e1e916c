import numpy as np
import pytest

from sparsenb.dataio import (
    CATEGORICAL,
    CONTINUOUS,
    load_csv,
    make_split_plan,
    parse_schema_file,
    write_dataset_csv,
)
from sparsenb.errors import ParseError, SchemaError, ValidationError

from conftest import make_dataset, write_csv


# ---------------------------------------------------------------- loading

def test_minimal_file(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["x", "class"], [[1.5, 1], [2.5, 1], [9.0, 2]])
    ds = load_csv(path, label_column="class")
    assert ds.p == 1 and ds.n == 3
    assert ds.class_names == ("1", "2")
    assert ds.features[0].kind == CONTINUOUS
    assert list(ds.labels) == [0, 0, 1]


def test_single_class_rejected(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["x", "class"], [[1, "a"], [2, "a"]])
    with pytest.raises(ValidationError, match="single distinct value"):
        load_csv(path, label_column="class")


def test_kind_inference_and_declared_schema(tmp_path):
    rows = [[1.0, "red", 3, "y"], [2.0, "blue", 4, "n"], ["?", "red", 5, "y"]]
    path = write_csv(tmp_path / "t.csv", ["a", "b", "c", "class"], rows)
    ds = load_csv(path, label_column="class", schema={"c": CATEGORICAL})
    kinds = {col.name: col.kind for col in ds.features}
    assert kinds == {"a": CONTINUOUS, "b": CATEGORICAL, "c": CATEGORICAL}
    assert np.isnan(ds.features[0].values[2])  # missing marker -> NaN
    assert ds.features[2].values[0] == "3"  # declared categorical keeps tokens


def test_missing_categorical_becomes_token(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["b", "class"], [["red", 1], ["?", 1], ["blue", 2]])
    ds = load_csv(path, label_column="class")
    assert ds.features[0].values[1] == "?"


def test_missing_label_rows_dropped(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["x", "class"], [[1, 1], [2, "?"], [3, 2]])
    sink = []
    ds = load_csv(path, label_column="class", warnings=sink)
    assert ds.n == 2
    assert sink and "missing label" in sink[0]


def test_parse_error_position(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("x,class\n1,1\n2,1,EXTRA\n3,2\n", encoding="utf-8")
    with pytest.raises(ParseError, match="row 3"):
        load_csv(path, label_column="class")


def test_non_numeric_in_declared_continuous(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["x", "class"], [[1, 1], ["abc", 2]])
    with pytest.raises(ParseError, match="not a number"):
        load_csv(path, label_column="class", schema={"x": CONTINUOUS})


def test_label_column_absent(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["x", "y"], [[1, 2], [3, 4]])
    with pytest.raises(SchemaError, match="label column"):
        load_csv(path, label_column="class")


def test_schema_declares_unknown_column(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["x", "class"], [[1, 1], [2, 2]])
    with pytest.raises(SchemaError, match="unknown column"):
        load_csv(path, label_column="class", schema={"nope": CONTINUOUS})


def test_schema_file_roundtrip(tmp_path):
    sf = tmp_path / "schema.txt"
    sf.write_text("a,continuous\n# comment\nb , categorical\n", encoding="utf-8")
    assert parse_schema_file(sf) == {"a": CONTINUOUS, "b": CATEGORICAL}
    sf.write_text("a;continuous\n", encoding="utf-8")
    with pytest.raises(ParseError):
        parse_schema_file(sf)


def test_csv_roundtrip(tmp_path):
    ds = make_dataset(
        [("a", CONTINUOUS, [1.25, float("nan"), -3.5]),
         ("b", CATEGORICAL, ["u", "v", "u"])],
        ["x", "y", "x"],
    )
    path = tmp_path / "out.csv"
    write_dataset_csv(ds, path)
    back = load_csv(path, label_column="class", schema={"b": CATEGORICAL})
    assert back.class_names == ds.class_names
    assert np.isnan(back.features[0].values[1])
    assert back.features[0].values[0] == 1.25
    assert list(back.features[1].values) == ["u", "v", "u"]


# ---------------------------------------------------------------- splitting

def _australian_sized_dataset(rng):
    n = 690
    labels = np.array([0] * 383 + [1] * 307)
    rng.shuffle(labels)
    return make_dataset([("x", CONTINUOUS, rng.normal(size=n))],
                        ["neg" if v == 0 else "pos" for v in labels])


def test_split_sizes_match_protocol(rng):
    # 1/10 test; the remaining 9/10 split 2:1 into train and validation
    ds = _australian_sized_dataset(rng)
    plan = make_split_plan(ds, runs=1, folds=10, seed=5)
    for train, val, test in plan.indices[0]:
        assert abs(len(test) - 69) <= 1
        assert abs(len(train) - 414) <= 2
        assert abs(len(val) - 207) <= 2
        assert len(train) + len(val) + len(test) == 690


def test_split_partitions_and_disjointness(rng):
    ds = _australian_sized_dataset(rng)
    plan = make_split_plan(ds, runs=2, folds=10, seed=5)
    everything = set(range(ds.n))
    for run in range(2):
        test_union = set()
        for train, val, test in plan.indices[run]:
            tr, va, te = set(train.tolist()), set(val.tolist()), set(test.tolist())
            assert tr | va | te == everything
            assert not (tr & va) and not (tr & te) and not (va & te)
            assert not (test_union & te)
            test_union |= te
        assert test_union == everything  # folds of one run tile the dataset


def test_split_stratification_within_two_samples(rng):
    ds = _australian_sized_dataset(rng)
    plan = make_split_plan(ds, runs=1, folds=10, seed=1)
    global_prop = ds.class_counts() / ds.n
    for part in plan.indices[0][3]:
        counts = np.bincount(ds.labels[part], minlength=2)
        expected = global_prop * len(part)
        assert np.all(np.abs(counts - expected) <= 2)


def test_split_determinism(rng):
    ds = _australian_sized_dataset(rng)
    a = make_split_plan(ds, runs=2, folds=5, seed=42)
    b = make_split_plan(ds, runs=2, folds=5, seed=42)
    for run in range(2):
        for fa, fb in zip(a.indices[run], b.indices[run]):
            for xa, xb in zip(fa, fb):
                assert np.array_equal(xa, xb)
    c = make_split_plan(ds, runs=2, folds=5, seed=43)
    assert any(
        not np.array_equal(a.indices[r][f][2], c.indices[r][f][2])
        for r in range(2) for f in range(5)
    )


def test_leave_one_out_limit():
    ds = make_dataset([("x", CONTINUOUS, range(10))], ["a"] * 5 + ["b"] * 5)
    plan = make_split_plan(ds, runs=1, folds=10, seed=0)
    sizes = sorted(len(test) for _, _, test in plan.indices[0])
    assert sizes == [1] * 10


def test_small_class_warning():
    ds = make_dataset([("x", CONTINUOUS, range(12))], ["a"] * 10 + ["b"] * 2)
    sink = []
    make_split_plan(ds, runs=1, folds=4, seed=0, warnings=sink)
    assert sink and "fewer members than folds" in sink[0]


def test_too_few_rows_or_folds():
    ds = make_dataset([("x", CONTINUOUS, range(4))], ["a", "a", "b", "b"])
    with pytest.raises(ValidationError):
        make_split_plan(ds, runs=1, folds=1, seed=0)
    with pytest.raises(ValidationError):
        make_split_plan(ds, runs=1, folds=5, seed=0)


def test_unstratified_splits_still_partition(rng):
    ds = _australian_sized_dataset(rng)
    plan = make_split_plan(ds, runs=1, folds=10, seed=9, stratify=False)
    everything = set(range(ds.n))
    for train, val, test in plan.indices[0]:
        assert set(train.tolist()) | set(val.tolist()) | set(test.tolist()) == everything
