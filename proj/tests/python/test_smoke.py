import math

import pytest

joinids = pytest.importorskip("joinids")


@pytest.fixture(scope="module")
def workload():
    return joinids.generate("correlated", d=4, repo_size=1500, stream_length=300, seeds=300, seed=3)


def test_workload_shapes(workload):
    assert workload.attributes == ["A", "B", "C", "D"]
    assert len(workload.stream1) == len(workload.stream2) == 300
    assert len(workload.repository) == 1500
    assert all(sum(v is None for v in row) == 1 for row in workload.stream1)
    assert workload.rules == ["A:0.02,B:0.02 -> D:0.05"]


def test_run_join_matches_groundtruth(workload):
    out = joinids.run_join(workload.stream1, workload.stream2, workload.repository,
                           workload.rules, epsilon=0.3, window=50)
    ever = {(x, y) for _, added, _ in out["deltas"] for x, y, _ in added}
    m = joinids.metrics(sorted(ever), workload.groundtruth(0.3, 50))
    assert m["f1"] >= 0.9
    assert all(p >= 0.5 for _, _, p in out["final"])
    assert 0.0 <= out["stats"]["pruning_power"] <= 1.0


def test_algorithms_agree(workload):
    runs = [joinids.run_join(workload.stream1, workload.stream2, workload.repository,
                             workload.rules, epsilon=0.2, window=40, algorithm=a)["final"]
            for a in ("joinids", "dd-grid", "dd-asp")]
    assert runs[0] == runs[1] == runs[2]


def test_join_probability_example():
    x = [([0.1, 0.1], 1.0)]
    y = [([0.2, 0.1], 0.5), ([0.9, 0.9], 0.5)]
    assert joinids.join_probability(x, y, 0.3) == pytest.approx(0.5)


def test_metrics_examples():
    assert math.isclose(joinids.f1_score(0.9, 0.95), 2 * 0.855 / 1.85)
    m = joinids.metrics([], [(1, 1)])
    assert m["recall"] == 0.0 and m["f1"] == 0.0


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        joinids.generate("nope")
    with pytest.raises(joinids.JoinIdsError):
        joinids.run_join([[0.1, None]], [[0.1, 0.2]], [[0.1, 0.2]], ["A:0.1 -> B:0.1"],
                         algorithm="bogus")
