import math

import numpy as np
import pytest

from wittenlab.errors import CriticalWindowError, EmptyLandscapeError, InputError, NonFiniteFieldError
from wittenlab.field import (GridTopology, LevelWindow, SampledField, brute_force_extrema, critical_levels,
                             field_from_csv, field_from_json, field_to_csv, field_to_json, sample)
from wittenlab.persistence import Bar, BarCode


def test_topology_constructors():
    c = GridTopology.circle(8)
    assert c.dim == 1 and c.n_nodes == 8 and c.periodic
    assert c.extent[0] == pytest.approx(2 * math.pi)
    t = GridTopology.torus(4, 6)
    assert t.n_nodes == 24 and t.dim == 2
    i = GridTopology.interval(5, 0.0, 2.0)
    assert i.spacing == (0.5,) and not i.periodic


@pytest.mark.parametrize("bad", [dict(kind="sphere", shape=(4,), spacing=1.0),
                                 dict(kind="circle", shape=(1,), spacing=1.0),
                                 dict(kind="torus", shape=(4,), spacing=1.0),
                                 dict(kind="circle", shape=(4,), spacing=-1.0)])
def test_topology_rejects(bad):
    with pytest.raises(InputError):
        GridTopology(**bad)


def test_sample_expression_and_callable_agree():
    topo = GridTopology.circle(16)
    a = sample("cos(x) + 0.5 * sin(2 * x)", topo)
    b = sample(lambda t: np.cos(t) + 0.5 * np.sin(2 * t), topo)
    assert np.allclose(a.values, b.values)


def test_sample_rejects_non_finite():
    with pytest.raises(NonFiniteFieldError):
        sample(lambda t: 1 / (t - t[3]), GridTopology.circle(8))


def test_values_are_read_only():
    f = sample("cos(x)", GridTopology.circle(8))
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_csv_and_json_round_trip(rng):
    topo = GridTopology.torus(3, 5, (0.25, 0.5), (1.0, -2.0))
    f = SampledField(topo, rng.standard_normal(15))
    for back in (field_from_csv(field_to_csv(f)), field_from_json(field_to_json(f))):
        assert back.topology == f.topology
        assert np.array_equal(back.values, f.values)


def test_torus_grid_layout():
    topo = GridTopology.torus(3, 2, 1.0)
    x, y = topo.node_coords()
    f = SampledField(topo, 10 * x + y)
    g = f.as_grid()
    assert g.shape == (3, 2)
    assert g[2, 1] == 21.0


def test_window_parse_and_contains():
    w = LevelWindow.parse("-1, 2.5")
    assert (w.a, w.b) == (-1.0, 2.5)
    assert w.contains(0) and not w.contains(2.5)
    assert LevelWindow.full().is_full
    with pytest.raises(InputError):
        LevelWindow(1, 1)
    with pytest.raises(CriticalWindowError):
        w.require_noncritical([2.5])


def test_critical_levels_gap_and_merging():
    bc = BarCode((Bar(0, 0.0, 1.0), Bar(0, -1.0, math.inf), Bar(1, 1.0 + 1e-16, math.inf)))
    cl = critical_levels(bc)
    assert cl.levels == (-1.0, 0.0, 1.0)
    assert cl.eta_f == pytest.approx(0.25)
    single = critical_levels(BarCode((Bar(0, 0.0, math.inf),)))
    assert single.single_level and math.isnan(single.eta_f)
    with pytest.raises(EmptyLandscapeError):
        critical_levels(BarCode(()))


def test_brute_force_extrema_cosine():
    f = sample("cos(x)", GridTopology.circle(32))
    assert brute_force_extrema(f) == (-1.0, 1.0)
