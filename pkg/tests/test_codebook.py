import numpy as np
import pytest
from scipy import stats

from seafdm.codebook import (
    build_codebook,
    index_from_chips,
    next_c2_indices,
    next_c2_vector,
    write_c2_csv,
)
from seafdm.errors import ConfigurationError
from seafdm.lppn import LppnGenerator


def test_two_entry_codebook():
    cb = build_codebook(1.0, 2)
    np.testing.assert_array_equal(cb.values, [-1.0, 1.0])
    assert cb.interval == 2.0


def test_three_entry_codebook():
    np.testing.assert_allclose(build_codebook(1.0, 3).values, [-1.0, 0.0, 1.0], atol=0)


def test_table_one_interval():
    cb = build_codebook(4.88e-6, 1024)
    assert cb.interval == pytest.approx(9.5406e-9, rel=1e-4)
    assert cb.values[0] == -4.88e-6 and cb.values[-1] == 4.88e-6
    assert np.all(np.diff(cb.values) > 0)


def test_single_entry_codebook():
    cb = build_codebook(0.3, 1)
    np.testing.assert_array_equal(cb.values, [-0.3])


@pytest.mark.parametrize("c2max,M", [(0.0, 4), (-1.0, 4), (1.0, 0)])
def test_codebook_rejects(c2max, M):
    with pytest.raises(ConfigurationError):
        build_codebook(c2max, M)


def test_codebook_symmetry():
    v = build_codebook(3.3e-5, 64).values
    np.testing.assert_allclose(v + v[::-1], 0.0, atol=1e-20)


def test_index_from_chips():
    assert index_from_chips([1, 0]) == 2
    assert index_from_chips([1, 1, 1]) == 7
    assert index_from_chips(np.zeros(10)) == 0


def test_first_window_uses_fill_ones():
    g = LppnGenerator()
    idx = next_c2_indices(g, build_codebook(1.0, 4), 3)
    L = LppnGenerator().next_chips(3)
    assert idx[0] == 2 * 1 + L[0]
    assert idx[1] == 2 * L[0] + L[1]
    assert idx[2] == 2 * L[1] + L[2]


def test_sliding_windows_across_symbols():
    cb = build_codebook(1.0, 16)
    g = LppnGenerator(chip_index=5000)
    a = next_c2_indices(g, cb, 64)
    b = next_c2_indices(g, cb, 64)
    chips = LppnGenerator().chips_at(5000 - 3, 3 + 128)
    L = chips[0] ^ chips[1]
    ref = [index_from_chips(L[m:m + 4]) for m in range(128)]
    np.testing.assert_array_equal(np.concatenate([a, b]), ref)
    assert g.chip_index == 5000 + 128


def test_m2_follows_chips():
    cb = build_codebook(2e-6, 2)
    g = LppnGenerator(chip_index=77)
    c2 = next_c2_vector(g, cb, 500)
    L = LppnGenerator(chip_index=77).next_chips(500)
    np.testing.assert_array_equal(c2, np.where(L == 1, 2e-6, -2e-6))


def test_m1_consumes_chips():
    g = LppnGenerator()
    c2 = next_c2_vector(g, build_codebook(1e-6, 1), 128)
    assert g.chip_index == 128
    assert (c2 == -1e-6).all()


def test_non_power_of_two_rejected_for_waveform():
    with pytest.raises(ConfigurationError):
        next_c2_vector(LppnGenerator(), build_codebook(1.0, 10), 4)


def test_synchronized_receivers_agree():
    cb = build_codebook(4.88e-6, 1024)
    a, b = LppnGenerator(chip_index=12345), LppnGenerator(chip_index=12345)
    for _ in range(5):
        np.testing.assert_array_equal(next_c2_vector(a, cb, 1024), next_c2_vector(b, cb, 1024))


@pytest.mark.parametrize("M", [2, 4, 8, 16])
def test_index_marginal_is_uniform(M):
    g = LppnGenerator(chip_index=1_000_003)
    idx = next_c2_indices(g, build_codebook(1.0, M), 400_000)
    # windows overlap, so thin to disjoint windows before the chi-square test
    b = int(np.log2(M))
    counts = np.bincount(idx[::b], minlength=M)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_csv_export(tmp_path):
    p = tmp_path / "c2.csv"
    write_c2_csv(p, [np.array([0.1, -0.1])])
    rows = p.read_text().splitlines()
    assert rows[0] == "symbol,subcarrier,c2"
    assert len(rows) == 3
