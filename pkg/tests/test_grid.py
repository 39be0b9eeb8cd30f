import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speclab.errors import InvalidRangeError, ShapeMismatchError
from speclab.grid import (
    Grid,
    PotentialSpec,
    assemble_hamiltonian,
    build_grid,
    decompose,
    dirichlet_dispersion,
    eigendecompose,
    load_descriptor,
    read_potential_csv,
    sample_potential,
    save_descriptor,
    scaled_grid,
)


def test_build_grid_examples():
    g = build_grid(-20, 20, 401)
    assert g.h == pytest.approx(0.1, abs=1e-15)
    assert g.nodes[200] == pytest.approx(0.0, abs=1e-12)
    assert build_grid(0, math.pi, 17).h == pytest.approx(math.pi / 16, rel=1e-15)


@pytest.mark.parametrize("args", [(-20, 20, 10), (1, 1, 64), (2, -2, 64)])
def test_build_grid_rejects_bad_ranges(args):
    with pytest.raises(InvalidRangeError):
        build_grid(*args)


@given(
    st.floats(-100, 100),
    st.floats(0.1, 100),
    st.integers(16, 4000),
    st.sampled_from(["dirichlet", "periodic"]),
)
def test_nodes_are_exact_and_deterministic(x0, width, n, bc):
    g = build_grid(x0, x0 + width, n, bc)
    i = np.arange(n)
    assert np.array_equal(g.nodes, x0 + i * g.h)
    assert np.array_equal(g.nodes, build_grid(x0, x0 + width, n, bc).nodes)
    assert Grid.from_dict(g.to_dict()) == g


def test_scaled_grid_is_symmetric():
    g = scaled_grid(0.25, 10, 101)
    assert (g.x_min, g.x_max) == (-40.0, 40.0)


def test_sample_potential_values():
    g = build_grid(-20, 20, 401)
    assert sample_potential(PotentialSpec.poschl_teller(1), g)[200] == pytest.approx(-2.0)
    assert sample_potential(PotentialSpec.poschl_teller(2), g)[200] == pytest.approx(-6.0)
    assert not np.any(sample_potential(PotentialSpec.free(), g))
    v = sample_potential(PotentialSpec.poschl_teller(3), g)
    assert np.allclose(v, v[::-1], atol=1e-15)


def test_table_potential_shape(tmp_path):
    g = build_grid(-1, 1, 32)
    ok = PotentialSpec.from_table(g.nodes, g.nodes**2)
    assert np.allclose(sample_potential(ok, g), g.nodes**2)
    with pytest.raises(ShapeMismatchError):
        sample_potential(PotentialSpec.from_table([0, 1], [0, 1]), g)
    path = tmp_path / "v.csv"
    path.write_text("x,V\n" + "".join(f"{x!r},{-x!r}\n" for x in g.nodes.tolist()))
    spec = read_potential_csv(path)
    assert np.allclose(sample_potential(spec, g), -g.nodes)


def test_assembled_matrix_structure():
    g = build_grid(-5, 5, 64)
    v = np.cos(g.nodes)
    M = assemble_hamiltonian(g, v).values
    h = g.h
    assert np.max(np.abs(M - M.T)) == 0
    assert np.allclose(np.diag(M), 2 / h**2 + v[1:-1])
    assert np.allclose(np.diag(M, 1), -1 / h**2)
    assert np.count_nonzero(np.triu(M, 2)) == 0
    P = assemble_hamiltonian(build_grid(-5, 5, 64, "periodic"), PotentialSpec.free()).values
    assert P[0, -1] == P[-1, 0] == pytest.approx(-1 / build_grid(-5, 5, 64).h ** 2)
    with pytest.raises(ShapeMismatchError):
        assemble_hamiltonian(g, np.zeros(10))


def test_free_dirichlet_ground_state_tends_to_one():
    errs = [abs(decompose(build_grid(0, math.pi, n), PotentialSpec.free()).eigenvalues[0] - 1) for n in (65, 129)]
    assert errs[1] < errs[0] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)


def test_dispersion_is_exact():
    g = build_grid(-3, 7, 300)
    d = decompose(g, PotentialSpec.free())
    exact = dirichlet_dispersion(g)
    assert np.all(d.eigenvalues >= 0)
    assert np.max(np.abs(d.eigenvalues - exact)) <= 1e-10 * max(1.0, exact.max())


@given(st.floats(-10, 10))
def test_constant_shift(c):
    g = build_grid(-5, 5, 64)
    free = decompose(g, PotentialSpec.free()).eigenvalues
    shifted = decompose(g, PotentialSpec.constant(c)).eigenvalues
    assert np.allclose(shifted - free, c, atol=1e-9 * (1 + free.max()))


def test_decomposition_invariants(pt1_small):
    d = pt1_small
    U = d.eigenvectors[1:-1]
    gram = d.h * U.T @ U
    assert np.max(np.abs(gram - np.eye(len(gram)))) < 1e-10
    op = assemble_hamiltonian(d.grid, PotentialSpec.poschl_teller(1))
    resid = op.matvec(U) - U * d.eigenvalues
    norms = np.sqrt(d.h * np.sum(resid**2, axis=0))
    assert np.all(norms <= 1e-8 * (1 + np.abs(d.eigenvalues)))
    recon = d.h * d.kernel_values(d.eigenvalues)[1:-1, 1:-1]
    assert np.max(np.abs(recon - op.values)) <= 1e-8 * np.max(np.abs(op.values))


def test_periodic_decomposition():
    g = build_grid(0, 2 * math.pi, 128, "periodic")
    d = decompose(g, PotentialSpec.free())
    period = g.n_points * g.h
    k = 2 * math.pi * np.fft.fftfreq(g.n_points, 1 / g.n_points) / period
    exact = np.sort((2 / g.h**2) * (1 - np.cos(k * g.h)))
    assert np.allclose(d.eigenvalues, exact, atol=1e-9)


def test_pt_bound_states_on_grid(pt1_fine):
    assert pt1_fine.eigenvalues[0] == pytest.approx(-1, abs=1e-3)
    d2 = decompose(build_grid(-20, 20, 2048), PotentialSpec.poschl_teller(2))
    bound = d2.bound_state_energies()
    assert len(bound) == 2
    assert np.allclose(bound, [-4, -1], atol=1e-3)


def test_second_order_convergence():
    errs = [
        abs(decompose(build_grid(-20, 20, n), PotentialSpec.poschl_teller(1)).eigenvalues[0] + 1)
        for n in (257, 513, 1025)
    ]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_descriptor_round_trip(tmp_path):
    g = build_grid(-20, 20, 256, "periodic")
    spec = PotentialSpec.poschl_teller(2)
    save_descriptor(tmp_path / "op.json", g, spec)
    assert load_descriptor(tmp_path / "op.json") == (g, spec)


def test_eigendecompose_keeps_potential():
    g = build_grid(-1, 1, 32)
    op = assemble_hamiltonian(g, PotentialSpec.constant(2.0))
    assert eigendecompose(op).potential == PotentialSpec.constant(2.0)
