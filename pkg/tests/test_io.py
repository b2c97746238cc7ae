import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsattractor.diagnostics import EnergySample, energy_samples
from nlsattractor.integrator import SolverParams, evolve
from nlsattractor.io import HEADER, read_summary, read_timeseries, write_summary, write_timeseries
from nlsattractor.nonlinearity import QuarticPotential
from nlsattractor.pumping import zero_pump
from nlsattractor.spectral import SpectralField

HEADER_BYTES = b"t,l2,e_norm,kinetic,u,h,phi,psi,balance_residual,phi_residual\n"


def test_header_byte_exact(tmp_path):
    path = write_timeseries([], tmp_path / "a.csv")
    assert path.read_bytes() == HEADER_BYTES
    assert HEADER + "\n" == HEADER_BYTES.decode()


def test_single_zero_row(tmp_path, small_square):
    traj = evolve(SpectralField.zeros(small_square), 0.0, 0.1,
                  SolverParams(0.5, QuarticPotential(1.0), zero_pump(small_square), 0.1), 1)
    rows = energy_samples(traj)[:1]
    data = write_timeseries(rows, tmp_path / "z.csv").read_bytes()
    assert data == HEADER_BYTES + b"0,0,0,0,0,0,0,0,0,0\n"
    assert b"\r" not in data


def test_round_trip_driven(tmp_path, mid_square, rng):
    from conftest import standard_pump
    from nlsattractor.spectral import random_field

    traj = evolve(random_field(mid_square, rng, 3.0), 0.0, 0.5,
                  SolverParams(0.5, QuarticPotential(1.0), standard_pump(mid_square), 0.01), 5)
    rows = energy_samples(traj)
    back = read_timeseries(write_timeseries(rows, tmp_path / "d.csv"))
    assert back == rows


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(*[finite] * 9), min_size=1, max_size=5))
def test_seventeen_digit_round_trip(tmp_path_factory, rows):
    samples = [EnergySample(float(n), *r) for n, r in enumerate(rows)]
    path = write_timeseries(samples, tmp_path_factory.mktemp("rt") / "r.csv")
    back = read_timeseries(path)
    for a, b in zip(samples, back):
        for x, y in zip(a.__dict__.values(), b.__dict__.values()):
            assert x == y and math.copysign(1, x) == math.copysign(1, y)


def test_rows_must_be_time_ordered(tmp_path):
    z = [0.0] * 9
    with pytest.raises(ValueError):
        write_timeseries([EnergySample(1.0, *z), EnergySample(0.5, *z), EnergySample(2.0, *z)], tmp_path / "x.csv")
    # backward runs are written in decreasing time
    write_timeseries([EnergySample(0.0, *z), EnergySample(-0.5, *z)], tmp_path / "b.csv")


def test_read_rejects_wrong_header(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("t,l2\n0,0\n")
    with pytest.raises(ValueError):
        read_timeseries(p)


def test_summary_json(tmp_path):
    s = {"b": np.float64(1.5), "a": [np.int64(3), float("inf"), float("nan")], "c": (1, 2)}
    path = write_summary(s, tmp_path / "s.json")
    assert read_summary(path) == {"a": [3, "inf", None], "b": 1.5, "c": [1, 2]}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')
