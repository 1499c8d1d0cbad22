import numpy as np
import pytest
from hypothesis import given, strategies as st

from subsfm.oracle import (ContractViolation, CountingOracle, CutFunction, DomainError, InstanceFormatError,
                           LowerBoundFunction, ModularFunction, ScaledFunction, TableFunction, load_instance,
                           lower_bound_instance, random_cut_instance, random_table_instance)
from subsfm.verify import check_submodular, value_table


def test_empty_prefix_is_zero(path_cut, two_element_table):
    for f in (path_cut, two_element_table):
        assert f.evaluate_prefix(list(range(f.n)), 0) == 0


def test_cut_prefix_value(path_cut):
    # leaving {s, a}: a->t (3) + s->t (1); leaving {s}: s->a (2) + s->t (1)
    assert path_cut.evaluate_prefix([0], 1) == 1


def test_table_prefix_lookup(two_element_table):
    assert two_element_table.evaluate_prefix([0, 1], 1) == -1


def test_prefix_out_of_range(two_element_table):
    with pytest.raises(DomainError):
        two_element_table.evaluate_prefix([0, 1], 3)
    with pytest.raises(DomainError):
        CountingOracle(two_element_table).evaluate_prefix([0, 1], -1)


def test_random_cut_is_submodular_and_deterministic():
    f = random_cut_instance(4, 1.0, 3, 7)
    assert check_submodular(f).passed
    assert random_cut_instance(4, 1.0, 3, 7).edges == f.edges
    assert f.bound == f.total_weight


def test_single_element_cut():
    f = random_cut_instance(1, 1.0, 1, 0)
    assert f.n == 1
    assert f.value(frozenset()) == 0
    assert check_submodular(f).passed


def test_random_cut_rejects_bad_density():
    with pytest.raises(DomainError):
        random_cut_instance(3, 0.0, 1, 0)


def test_lower_bound_values():
    f = lower_bound_instance({0, 2}, 3)
    assert f({0, 2}) == -1
    assert f({0}) == 0
    assert f({1}) == 1
    assert f({0, 1, 2}) == 0
    assert not f.unnormalized


def test_lower_bound_empty_hidden_set_is_flagged():
    f = LowerBoundFunction(set(), 3)
    assert f.unnormalized
    assert f(set()) == -1
    assert f({1}) == 0


@given(st.integers(1, 8), st.integers(0, 10_000))
def test_generated_instances_respect_bound(n, seed):
    for f in (random_cut_instance(n, 0.4, 3, seed), random_table_instance(n, seed)):
        table = value_table(f)
        assert table[0] == 0
        assert np.abs(table).max() <= f.bound
        assert check_submodular(f).passed


@given(st.integers(1, 7), st.integers(0, 10_000))
def test_table_variants(n, seed):
    nonpos = random_table_instance(n, seed, nonpositive=True)
    assert nonpos.table().max() <= 0
    unit = random_table_instance(n, seed, unit=True, integer=False)
    assert np.abs(unit.table()).max() <= 1 + 1e-12
    assert check_submodular(unit).passed


@given(st.lists(st.tuples(st.integers(0, 3), st.permutations(range(4))), max_size=30))
def test_counting_oracle_counts_every_prefix(calls):
    f = random_table_instance(4, 3)
    oracle = CountingOracle(f)
    for k, perm in calls:
        assert oracle.evaluate_prefix(perm, k) == f.evaluate_prefix(perm, k)
    assert oracle.eval_calls == len(calls)
    assert oracle.setup_calls == (1 if calls else 0)


def test_counting_oracle_contracts():
    real = TableFunction([0.0, 0.5, -0.5, 0.25])
    with pytest.raises(ContractViolation):
        CountingOracle(real, require_integer=True).value({0})
    with pytest.raises(ContractViolation):
        CountingOracle(real, require_nonpositive=True).value({0})


def test_modular_and_scaled():
    f = ModularFunction([1, -2, 3])
    assert f({0, 1}) == -1
    assert f.bound == 4
    g = ScaledFunction(f, 4)
    assert g({2}) == 0.75
    assert g.bound == 1


def test_table_size_checks():
    with pytest.raises(DomainError):
        TableFunction([0, 1, 2])


def test_load_formats(tmp_path):
    cut = tmp_path / "cut.txt"
    cut.write_text("# path graph\ncut 3 0 2\n0 1 2\n1 2 3\n0 2 1\n")
    f = load_instance(cut)
    assert isinstance(f, CutFunction) and f({0}) == 1
    table = tmp_path / "table.txt"
    table.write_text("table 2\n0 0\n1 -1\n2 1\n3 0\n")
    g = load_instance(table)
    assert [g(s) for s in ([], [0], [1], [0, 1])] == [0, -1, 1, 0]
    lb = tmp_path / "lb.txt"
    lb.write_text("lb 3\n0 2\n")
    h = load_instance(lb)
    assert h.hidden == frozenset({0, 2})


@pytest.mark.parametrize("text, line", [
    ("cut 3 0 2\n0 1 2\n1 2 -3\n", 3),
    ("cut 3 0 2\n0 1\n", 2),
    ("cut 3 0 2\n0 9 1\n", 2),
    ("table 1\n0 0\n1 abc\n", 3),
    ("table 1\n0 0\n0 1\n", 3),
    ("table 2\n0 0\n1 1\n", 3),
    ("lb 3\n0 5\n", 2),
    ("matrix 3\n", 1),
])
def test_load_errors_name_the_line(tmp_path, text, line):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(InstanceFormatError) as info:
        load_instance(path)
    assert info.value.lineno == line
    assert f"bad.txt:{line}:" in str(info.value)


def test_unreadable_file(tmp_path):
    with pytest.raises(InstanceFormatError):
        load_instance(tmp_path / "missing.txt")


def test_cut_table_matches_enumeration():
    f = random_cut_instance(5, 0.5, 4, 11)
    table = f.table()
    for mask in range(1 << 5):
        members = {i for i in range(5) if mask >> i & 1}
        assert table[mask] == f(members)
