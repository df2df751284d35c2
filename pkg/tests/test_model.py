import json

import numpy as np
import pytest

from ljsaa.errors import DimensionError, FormatError, InfeasibleError, UnboundableError
from ljsaa.model import (
    DistributionSpec,
    FirstStage,
    RelaxationConfig,
    ScenarioTemplate,
    build_problem,
    builtin,
    builtin_newsvendor,
    builtin_synthetic,
    enumerate_scenarios,
    sample_iid,
    scenario_polyhedron,
)
from ljsaa.problemio import dumps_problem, loads_problem


def test_example1_data(ex1):
    program, dist, _ = ex1
    assert list(program.first.c) == [2.0, 3.0]
    assert list(program.template.q0) == [7.0, 12.0]
    assert list(dist.marginals[1][0]) == list(range(292, 302))
    assert list(dist.marginals[0][0]) == list(range(310, 320))


def test_zero_row_removed():
    f = FirstStage(c=[1.0, 1.0], A=[[0.0, 0.0], [1.0, 1.0]], b=[0.0, 5.0])
    assert f.A.shape == (1, 2)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        FirstStage(c=[1.0, 2.0, 3.0], A=[[1.0, 1.0]], b=[1.0])


def test_non_finite_rejected():
    with pytest.raises(DimensionError):
        FirstStage(c=[1.0, np.nan], A=[[1.0, 1.0]], b=[1.0])


def test_empty_first_stage():
    first = FirstStage(c=[1.0], A=[[1.0]], b=[-1.0])
    template = ScenarioTemplate(W=[[1.0]], senses=(">=",), q0=[1.0], T0=[[1.0]], h0=[0.0],
                                h_coef=[[1.0]])
    with pytest.raises(InfeasibleError):
        build_problem(first, template, DistributionSpec.uniform([1.0]))


def test_template_column_mismatch():
    first = FirstStage(c=[1.0, 1.0], A=[[1.0, 1.0]], b=[1.0])
    template = ScenarioTemplate(W=[[1.0]], senses=(">=",), q0=[1.0], T0=[[1.0, 1.0, 1.0]],
                                h0=[0.0])
    with pytest.raises(DimensionError):
        build_problem(first, template)


def test_enumeration(ex1):
    program, dist, scenarios = ex1
    assert len(scenarios) == 100
    assert all(s.prob == pytest.approx(0.01, abs=1e-15) for s in scenarios)
    assert sum(s.prob for s in scenarios) == pytest.approx(1.0, abs=1e-12)
    # lexicographic over marginal indices
    assert scenarios[0].xi == (310.0, 292.0)
    assert scenarios[1].xi == (310.0, 293.0)
    assert scenarios[-1].xi == (319.0, 301.0)


def test_enumeration_small():
    t = ScenarioTemplate(W=[[1.0]], senses=(">=",), q0=[1.0], T0=[[1.0]], h0=[0.0], h_coef=[[1.0]])
    one = enumerate_scenarios(DistributionSpec.uniform([5.0]), t)
    assert len(one) == 1 and one[0].prob == 1.0
    t2 = ScenarioTemplate(W=[[1.0, 0.0]], senses=(">=",), q0=[1.0, 1.0], T0=[[1.0]], h0=[0.0],
                          h_coef=[[1.0, 1.0]])
    sc = enumerate_scenarios(DistributionSpec.uniform([1.0, 2.0, 3.0], [1.0, 2.0, 3.0, 4.0]), t2)
    assert len(sc) == 12
    assert sum(s.prob for s in sc) == pytest.approx(1.0, abs=1e-12)


def test_enumeration_cap(ex1):
    program, dist, _ = ex1
    with pytest.raises(ValueError):
        enumerate_scenarios(dist, program.template, cap=99)


def test_sample_determinism(ex1):
    program, dist, _ = ex1
    a = sample_iid(dist, program.template, 100, seed=7)
    b = sample_iid(dist, program.template, 100, seed=7)
    assert [s.key() for s in a] == [s.key() for s in b]
    one = sample_iid(dist, program.template, 1, seed=7)
    assert len(one) == 1 and one[0].prob == 1.0
    with pytest.raises(ValueError):
        sample_iid(dist, program.template, 0)


def test_sample_frequencies(ex1):
    program, dist, _ = ex1
    K = 20000
    draws = np.array([s.xi for s in sample_iid(dist, program.template, K, seed=3)])
    se = np.sqrt(0.1 * 0.9 / K)
    for col, support in ((0, range(310, 320)), (1, range(292, 302))):
        for v in support:
            assert abs(np.mean(draws[:, col] == v) - 0.1) <= 3 * se


def test_example1_polyhedron_rows(ex1):
    program, _, scenarios = ex1
    s = scenarios[-1]
    assert s.xi == (319.0, 301.0)
    P = scenario_polyhedron(program, s)
    assert P.dim == 4
    rows = {(tuple(r), v) for r, v in zip(P.G, P.g)}
    assert ((1.0, 1.0, 0.0, 0.0), 100.0) in rows
    assert ((-2.0, -6.0, -1.0, 0.0), -319.0) in rows
    assert ((-3.0, -3.0, 0.0, -1.0), -301.0) in rows
    lb, ub = P.variable_bounds()
    assert list(lb) == [0, 0, 0, 0]
    assert list(ub) == [100, 100, 319, 301]
    assert P.contains([0, 0, 319, 301])


def test_equality_split():
    program, dist = builtin_newsvendor()
    s = enumerate_scenarios(dist, program.template)[0]
    P = scenario_polyhedron(program, s, RelaxationConfig(epsilon=0.01))
    rows = {(tuple(r), v) for r, v in zip(P.G, P.g)}
    d = s.h[0]
    assert ((1.0, -1.0, 1.0), d + 0.01) in rows
    assert ((-1.0, 1.0, -1.0), -d + 0.01) in rows


def test_infeasible_scenario():
    first = FirstStage(c=[1.0], A=np.zeros((0, 1)), b=[], ub=[1.0])
    template = ScenarioTemplate(W=[[1.0]], senses=("<=",), q0=[1.0], T0=[[1.0]], h0=[0.0],
                                h_coef=[[1.0]], ub=[1.0])
    program = build_problem(first, template, DistributionSpec.uniform([-5.0]))
    s = enumerate_scenarios(DistributionSpec.uniform([-5.0]), template)[0]
    with pytest.raises(InfeasibleError):
        scenario_polyhedron(program, s)


def test_unboundable_variable():
    first = FirstStage(c=[1.0], A=np.zeros((0, 1)), b=[], ub=[1.0])
    # negative recourse price: the shortage rule does not apply and y is unbounded above
    template = ScenarioTemplate(W=[[-1.0]], senses=("<=",), q0=[-1.0], T0=[[1.0]], h0=[0.0],
                                h_coef=[[1.0]])
    dist = DistributionSpec.uniform([1.0])
    program = build_problem(first, template, dist)
    s = enumerate_scenarios(dist, template)[0]
    with pytest.raises(UnboundableError):
        scenario_polyhedron(program, s)
    P = scenario_polyhedron(program, s, RelaxationConfig(y_ub=[10.0]))
    assert P.variable_bounds()[1][1] == 10.0


def test_integer_points_inside_relaxation(ex1):
    program, _, scenarios = ex1
    P = scenario_polyhedron(program, scenarios[37])
    xi = scenarios[37].xi
    for x1 in range(0, 101, 10):
        for x2 in range(0, 101 - x1, 10):
            y = (max(0, xi[0] - 2 * x1 - 6 * x2), max(0, xi[1] - 3 * x1 - 3 * x2))
            assert P.contains([x1, x2, *y])


@pytest.mark.parametrize("name", ["example1", "newsvendor", "synthetic"])
def test_problem_json_roundtrip(name):
    program, dist = builtin(name)
    scenarios = enumerate_scenarios(dist, program.template)
    text = dumps_problem(program, dist, scenarios)
    inst = loads_problem(text)
    assert dumps_problem(inst.program, inst.dist, inst.scenarios) == text
    assert np.array_equal(inst.program.y_hi, program.y_hi, equal_nan=True)


def test_problem_json_syntax_error_offset():
    with pytest.raises(FormatError, match="byte offset 15"):
        loads_problem('{"first_stage" {}}')


def test_synthetic_scale():
    program, dist = builtin_synthetic()
    assert dist.size == 750
    assert program.template.senses[-1] == "="
    json.dumps(program.first.c.tolist())
