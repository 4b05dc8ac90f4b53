import pytest

from faltings_height.general.constants import H_F_ZERO, MU_LOWER, MU_UPPER
from faltings_height.general.errors import DomainError
from faltings_height.heights.height import faltings_height
from faltings_height.heights.polynomials import IntegerPolynomial
from faltings_height.spectrum.scan import (
    SearchSpaceOverflow,
    SpectrumEntry,
    coefficient_boxes,
    dedupe,
    scan_cyclotomics,
    scan_polynomials,
    spectrum_report,
)


@pytest.fixture(scope="module")
def cyclotomic_entries():
    return scan_cyclotomics(30)


@pytest.fixture(scope="module")
def zero_entry():
    poly = IntegerPolynomial((0, 1))
    return SpectrumEntry(poly, faltings_height(poly), "j=0")


def test_cyclotomic_scan_order(cyclotomic_entries):
    labels = [e.label for e in cyclotomic_entries]
    assert labels[:3] == ["cyclotomic:1", "cyclotomic:6", "cyclotomic:10"]
    heights = [e.height.total for e in cyclotomic_entries]
    assert heights == sorted(heights)
    by_label = {e.label: e.height.total for e in cyclotomic_entries}
    assert by_label["cyclotomic:2"] > by_label["cyclotomic:1"]
    assert by_label["cyclotomic:10"] < by_label["cyclotomic:22"] < MU_UPPER


def test_cyclotomic_scan_domain():
    with pytest.raises(DomainError):
        scan_cyclotomics(0)


def test_boxes_are_empty_below_height_at_one():
    assert coefficient_boxes(8, 2, -0.7487) == []
    boxes = coefficient_boxes(8, 2, -0.748623)
    assert [b.degree for b in boxes] == list(range(1, 9))
    # only units survive the integrality pruning
    assert all(b.leads == [1] and b.consts == [-1, 1] for b in boxes)


def test_scan_below_height_at_one_finds_only_zero():
    entries = scan_polynomials(max_degree=8, max_coeff=2, threshold=-0.7487)
    assert [e.label for e in entries] == ["j=0"]
    assert entries[0].height.total == pytest.approx(H_F_ZERO, abs=1e-12)


def test_scan_below_the_minimum_is_empty():
    assert scan_polynomials(max_degree=8, max_coeff=2, threshold=-0.749) == []


def test_scan_guards():
    with pytest.raises(DomainError):
        scan_polynomials(max_degree=13)
    with pytest.raises(DomainError):
        scan_polynomials(max_degree=2, max_coeff=0)
    with pytest.raises(SearchSpaceOverflow):
        scan_polynomials(max_degree=4, max_coeff=2, threshold=-0.748623, max_candidates=10)


def test_small_box_with_checkpoint(tmp_path):
    ckpt = tmp_path / "scan.json"
    kwargs = {"max_degree": 2, "max_coeff": 1, "threshold": -0.748623, "chunk_size": 3}
    entries = scan_polynomials(checkpoint=ckpt, **kwargs)
    labels = [e.label for e in entries]
    assert labels[:3] == ["j=0", "-1,1", "1,-1,1"]
    assert all(e.height.total <= -0.748623 for e in entries)
    assert ckpt.exists()

    # a finished checkpoint resumes to the same result
    again = scan_polynomials(checkpoint=ckpt, **kwargs)
    assert [e.label for e in again] == labels


def test_degree_eight_polynomial_is_found():
    entries = scan_polynomials(max_degree=8, max_coeff=2, threshold=-0.748623)
    coefs = [e.poly.coefficients for e in entries]
    assert (1, -1, 1, -1, 1, -1, 2, -2, 1) in coefs or (1, -2, 2, -1, 1, -1, 1, -1, 1) in coefs
    assert all(e.is_unit or e.label == "j=0" for e in entries)


def test_dedupe_by_root_set(zero_entry):
    assert dedupe([zero_entry, zero_entry]) == [zero_entry]


def test_spectrum_report_four_isolated_values(cyclotomic_entries, zero_entry):
    report = spectrum_report(MU_UPPER, MU_LOWER, entries=cyclotomic_entries + [zero_entry])
    assert [e.label for e in report.isolated] == [
        "j=0",
        "cyclotomic:1",
        "cyclotomic:6",
        "cyclotomic:10",
    ]
    expected = [-0.74875248, -0.74862817, -0.74862517, -0.74862366]
    for e, value in zip(report.isolated, expected):
        assert e.height.total == pytest.approx(value, abs=1e-7)
    pending = {e.label for e in report.pending}
    assert {"cyclotomic:14", "cyclotomic:15", "cyclotomic:22"} <= pending
    assert report.density_interval_start == MU_UPPER
    assert report.to_dict()["isolated"][0]["label"] == "j=0"


def test_spectrum_report_below_the_minimum(cyclotomic_entries, zero_entry):
    report = spectrum_report(H_F_ZERO, MU_LOWER, entries=cyclotomic_entries + [zero_entry])
    assert report.isolated == []
    assert report.pending == []


def test_dedupe_prefers_the_cyclotomic_label():
    poly = IntegerPolynomial((1, -1, 1))
    res = faltings_height(poly)
    found = SpectrumEntry(poly, res, "1,-1,1")
    named = SpectrumEntry(poly, res, "cyclotomic:6")
    zero = SpectrumEntry(IntegerPolynomial((0, 1)), res, "j=0")

    assert [e.label for e in dedupe([zero, found, named])] == ["j=0", "cyclotomic:6"]
    assert [e.label for e in dedupe([named, found])] == ["cyclotomic:6"]


def test_spectrum_report_replays_the_families(cyclotomic_entries, zero_entry):
    report = spectrum_report(MU_UPPER, entries=cyclotomic_entries + [zero_entry])
    assert report.lower_bound == pytest.approx(MU_LOWER, abs=1e-7)
    assert report.lower_bound <= MU_UPPER
    assert [e.label for e in report.isolated] == [
        "j=0",
        "cyclotomic:1",
        "cyclotomic:6",
        "cyclotomic:10",
    ]
