import json
import math

import jsonschema
import pytest
from hypothesis import given, strategies as st

from treedom.cli import _schema
from treedom.errors import ContractError, InsufficientDataError
from treedom.growth import GrowthFunction, Tail, parse_growth


def test_closed_forms():
    assert parse_growth("poly:1").values(5) == [1, 2, 3, 4, 5]
    assert parse_growth("poly:2").values(4) == [1, 4, 9, 16]
    assert parse_growth("exp:2").values(4) == [2, 4, 8, 16]
    assert parse_growth("const:3").values(3) == [3, 3, 3]
    f = parse_growth("poly:1,1,2")
    assert [f(n) for n in (1, 5)] == [math.ceil(math.log(2) ** 2),
                                      math.ceil(5 * math.log(6) ** 2)]


def test_exponential_exact_for_large_n():
    assert parse_growth("exp:3")(200) == 3**200


def test_alternating():
    f = parse_growth("alt:1,2^n")
    assert f.values(8) == [1, 2, 1, 4, 1, 8, 1, 16]
    assert not f.is_nondecreasing(8)
    assert parse_growth("alt:n,7").values(4) == [1, 7, 2, 7]


def test_table_bounds():
    f = parse_growth("table:4,1,1")
    assert f.table_only and f.known_length == 3
    with pytest.raises(InsufficientDataError):
        f(4)
    with pytest.raises(ContractError):
        f(0)


@pytest.mark.parametrize("bad", ["poly:x", "nope:1", "table:1,0", "alt:1", "exp:1/2",
                                 "const:0", "alt:1,table"])
def test_bad_specs(bad):
    with pytest.raises(ContractError):
        parse_growth(bad)


@given(st.sampled_from(["poly:1", "poly:3/2,2", "exp:2", "const:5", "alt:1,2^n",
                        "table:3,1,4,1,5", "poly:1,1,2", "alt:n^2,3"]),
       st.integers(1, 40))
def test_json_roundtrip(spec, n):
    f = parse_growth(spec)
    obj = json.loads(json.dumps(f.to_json()))
    jsonschema.validate(obj, _schema("growth"))
    g = GrowthFunction.from_json(obj)
    m = min(n, f.known_length or n)
    assert g.values(m) == f.values(m)


def test_generation_sizes():
    assert GrowthFunction.table([2, 3, 5]).generation_sizes(3) == [2, 6, 30]


def test_tail_validation():
    with pytest.raises(ContractError):
        Tail("polynomial", degree=-1)
    with pytest.raises(ContractError):
        Tail("interleave", odd=Tail("constant", value=1))


def test_numpy_index_does_not_overflow():
    import numpy as np
    assert parse_growth("exp:2")(np.int64(70)) == 2**70
