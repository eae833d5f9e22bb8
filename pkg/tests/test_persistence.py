import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wittenlab import _fallback, kernels
from wittenlab.field import GridTopology, LevelWindow, SampledField, sample
from wittenlab.persistence import (Bar, BarCode, build_filtration, compute_barcode, gf2_columns,
                                   relative_betti)


def test_cosine_circle_barcode():
    bc = compute_barcode(sample("cos(x)", GridTopology.circle(64)))
    assert bc.multiset() == [(0, -1.0, math.inf), (1, 1.0, math.inf)]


def test_double_well_circle_barcode():
    vals = [0.0, 2.0, -1.0, 3.0]          # two minima, two maxima on a 4-cycle
    bc = compute_barcode(SampledField(GridTopology.circle(4), vals))
    assert bc.multiset() == [(0, -1.0, math.inf), (0, 0.0, 2.0), (1, 3.0, math.inf)]


def test_flat_torus_betti():
    bc = compute_barcode(SampledField(GridTopology.torus(4, 4), np.zeros(16)))
    # zero-length pairs are dropped; the torus keeps 1, 2, 1 infinite bars
    assert bc.infinite_counts(2) == [1, 2, 1]
    assert not bc.finite_bars()


def test_interval_has_one_component():
    bc = compute_barcode(sample("sin(3 * x)", GridTopology.interval(50, 0, 3)))
    assert bc.infinite_counts(1) == [1, 0]


def test_chain_property_over_gf2_and_q():
    filt = build_filtration(sample(lambda x, y: np.cos(x) + np.sin(2 * y), GridTopology.torus(5, 4)))
    assert filt.check_chain_property("GF(2)")
    assert filt.check_chain_property("Q")


def test_shift_moves_every_endpoint(rng):
    f = SampledField(GridTopology.torus(5, 5), rng.standard_normal(25))
    a = compute_barcode(f)
    b = compute_barcode(f.shifted(1.5))
    assert [(d, x + 1.5, y + 1.5) for d, x, y in a.multiset()] == pytest.approx(b.multiset())


def test_gf2_and_rational_agree_on_torus(rng):
    # the torus has no torsion, so every field gives the same bar code
    f = SampledField(GridTopology.torus(6, 5), rng.standard_normal(30))
    assert compute_barcode(f, "GF(2)").multiset() == compute_barcode(f, "Q").multiset()
    assert compute_barcode(f, "GF(3)").multiset() == compute_barcode(f, "Q").multiset()


def test_json_round_trip(rng):
    bc = compute_barcode(SampledField(GridTopology.circle(30), rng.standard_normal(30)))
    assert BarCode.from_json(bc.to_json()).multiset() == bc.multiset()


def test_simplified_drops_short_bars_and_snaps():
    bc = BarCode((Bar(0, 0.0, 1e-3), Bar(0, 0.0005, 1.0), Bar(0, -1.0, math.inf), Bar(1, 1.0002, math.inf)))
    s = bc.simplified(1e-2)
    assert s.multiset() == [(0, -1.0, math.inf), (0, 0.0005, 1.0), (1, 1.0, math.inf)]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_lonely_count_equals_relative_betti(seed):
    rng = np.random.default_rng(seed)
    topo = GridTopology.torus(4, 5) if seed % 2 else GridTopology.circle(12)
    f = SampledField(topo, rng.integers(-6, 7, size=topo.n_nodes) + 0.25 * rng.random(topo.n_nodes))
    filt = build_filtration(f)
    bc = compute_barcode(f)
    a, b = sorted(rng.uniform(-7, 8, size=2))
    w = LevelWindow(a, b)
    for p in range(topo.dim + 1):
        assert bc.count_lonely(w, p) == relative_betti(filt, w, p, "GF(2)")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_compiled_and_python_reduction_agree(seed):
    rng = np.random.default_rng(seed)
    f = SampledField(GridTopology.torus(5, 6), rng.standard_normal(30))
    cols = gf2_columns(build_filtration(f))
    assert np.array_equal(np.asarray(kernels.reduce_gf2(*cols)), _fallback.reduce_gf2(*cols))
