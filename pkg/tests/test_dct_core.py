import numpy as np
import pytest

from dctapprox.dct_core import deviation_from_orthogonality, exact_dct, orthogonalize, sdct, signed_dct
from dctapprox.linalg import DyadicMatrix


@pytest.mark.parametrize("n", [2, 3, 4, 7, 8, 16])
def test_exact_dct_is_orthogonal(n):
    c = exact_dct(n).matrix
    assert np.max(np.abs(c @ c.T - np.eye(n))) < 1e-12


def test_exact_dct_closed_form_small():
    c = exact_dct(2).matrix
    s = 1 / np.sqrt(2)
    assert np.allclose(c, [[s, s], [s, -s]])


def test_exact_dct_rejects_tiny_and_is_read_only():
    with pytest.raises(ValueError):
        exact_dct(1)
    with pytest.raises(ValueError):
        exact_dct(8).matrix[0, 0] = 1.0


def test_orthogonalize_unit_rows():
    t = DyadicMatrix([[1, 1], [1, -1]])
    a = orthogonalize(t)
    assert np.allclose(a.C_hat, exact_dct(2).matrix)
    assert np.allclose(np.diag(a.S), [1 / np.sqrt(2)] * 2)


def test_orthogonalize_zero_row():
    with pytest.raises(ValueError):
        orthogonalize(DyadicMatrix([[1, 0], [0, 0]]))


def test_orthogonalize_is_scale_free():
    t = DyadicMatrix([[1, 2, 0], [0, 1, 1], [1, 0, -1]])
    assert np.allclose(orthogonalize(t).C_hat, orthogonalize(t.scale("1/2^3")).C_hat)


def test_deviation_from_orthogonality():
    assert deviation_from_orthogonality(np.eye(4)) == 0.0
    # Gram matrix [[1, 1], [1, 1]]: half of the squared mass is off-diagonal
    assert deviation_from_orthogonality(np.ones((2, 2))) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        deviation_from_orthogonality(np.zeros((2, 2)))


def test_signed_dct_has_no_zeros():
    s = signed_dct(16).mantissas
    assert set(np.unique(s)) == {-1, 1}
    assert sdct(16).label == "SDCT16"
