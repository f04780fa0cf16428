import json

import numpy as np
import pytest

from partialmat import catalog, kernels
from partialmat.block import BlockMat, partial_det, realign
from partialmat.catalog import (
    check_choi,
    check_fiedler_markham,
    check_fischer,
    check_mean_bounds,
    check_partial_det_three,
    check_partial_det_three_common,
    check_proof_chain,
    check_superadd_partial_det,
    check_tensor_three,
    check_tensor_two_common,
    check_thompson,
    digest,
    run_suite,
    run_trial,
)
from partialmat.errors import CapExceeded, DimMismatch, NotPSD
from partialmat.psd import GenSpec, generate, generate_many
from partialmat.report import strip_volatile, validate_report
from partialmat.tolerance import DEFAULT_TOL, Tolerance

from conftest import random_block, random_psd

ATOL = 1e-12


# H = M ⊗ I_2 with M = [[2,1],[1,2]]: det H = 9, H_ii = 2 I, H_ij = I (i != j).
@pytest.mark.parametrize("fn,kwargs,expected", [
    (check_fischer, {"realigned": False}, 7.0),
    (check_fischer, {"realigned": True}, 0.0),
    (check_thompson, {"side": 2}, 6.0),
    (check_thompson, {"side": 1}, 0.0),
    (check_fiedler_markham, {"side": 2}, 0.0),
    (check_fiedler_markham, {"side": 1}, 7.0),
    (check_choi, {"side": 1}, 0.0),
    (check_choi, {"side": 2}, 7.0),
    (check_mean_bounds, {"which": "fan_ky"}, 0.0),
    (check_mean_bounds, {"which": "am_gm"}, 0.0),
])
def test_hand_example(kron_m_i2, fn, kwargs, expected):
    res = fn(kron_m_i2, **kwargs)
    assert res.margin == pytest.approx(expected, abs=ATOL)
    assert res.passed
    if fn is not check_mean_bounds:
        assert res.scalar_rhs == pytest.approx(9.0)


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (1, 3), (3, 1)])
def test_identity_margins_zero(n, k):
    h = BlockMat.identity(n, k)
    results = [check_fischer(h), check_fischer(h, True)]
    for side in (1, 2):
        results += [check_thompson(h, side), check_fiedler_markham(h, side), check_choi(h, side)]
    results += [check_mean_bounds(h, w) for w in catalog.MEAN_KINDS]
    results += list(check_proof_chain(h, "fiedler_markham")) + list(check_proof_chain(h, "choi"))
    for res in results:
        assert abs(res.margin) <= ATOL, res.label
        assert res.passed


def test_superadd_identity():
    i4 = BlockMat.identity(2, 2)
    res = check_superadd_partial_det(i4, i4, side=2)
    # det_2(2I) = 4 I_2 versus 2 I_2
    assert res.margin == pytest.approx(2.0)
    assert res.matrix_margin == res.margin


def test_det_three_n1_side1_value():
    # with n = 1, det_1 H = H, so the three-term check is linear and cancels
    i = BlockMat.identity(1, 3)
    assert check_partial_det_three(i, i, i, side=1).margin == pytest.approx(0.0, abs=ATOL)


def test_det_three_common_scalars():
    a, b, c = (BlockMat(1, 1, [[x]]) for x in (1.5, 0.25, 2.0))
    for side in (1, 2):
        assert check_partial_det_three_common(a, b, c, side).margin == pytest.approx(0, abs=ATOL)


def test_c_zero_reductions(rng):
    a, b = random_block(rng, 2, 2), random_block(rng, 2, 2)
    z = BlockMat.zeros(2, 2)
    for side in (1, 2):
        sup = check_superadd_partial_det(a, b, side).margin
        # the three-term form cancels completely, the common form is superadditivity
        assert abs(check_partial_det_three(a, b, z, side).margin) <= ATOL
        assert check_partial_det_three_common(a, b, z, side).margin == pytest.approx(sup, abs=1e-10)
    zm = np.zeros((4, 4))
    for r in (1, 2):
        assert abs(check_tensor_three(a.mat, b.mat, zm, r=r).margin) <= ATOL
        sup = np.linalg.eigvalsh(np.kron(a.mat + b.mat, a.mat + b.mat) - np.kron(a.mat, a.mat)
                                 - np.kron(b.mat, b.mat)).min()
        assert check_tensor_two_common(a.mat, b.mat, zm, r=2).margin == pytest.approx(sup, abs=1e-10)


def test_tensor_scalar_cases():
    a, b, c = (np.array([[x]]) for x in (1.5, 0.25, 2.0))
    assert abs(check_tensor_three(a, b, c, r=2).margin) <= ATOL
    # (a+b+c)^2 + c^2 - (a+c)^2 - (b+c)^2 = 2ab
    assert check_tensor_two_common(a, b, c, r=2).margin == pytest.approx(0.75, abs=ATOL)


def test_tensor_r1_is_zero(rng):
    a, b, c = (random_psd(rng, 4) for _ in range(3))
    assert abs(check_tensor_three(a, b, c, r=1).margin) <= ATOL
    assert abs(check_tensor_two_common(a, b, c, r=1).margin) <= ATOL


def test_tensor_random_holds(rng):
    for _ in range(10):
        a, b, c = (random_psd(rng, 3) for _ in range(3))
        for r in (2, 3):
            assert check_tensor_three(a, b, c, r=r).passed
            assert check_tensor_two_common(a, b, c, r=r).passed


def test_tensor_cap():
    e = np.eye(4)
    with pytest.raises(CapExceeded):
        check_tensor_three(e, e, e, r=3, cap=63)
    assert check_tensor_three(e, e, e, r=3, cap=64).passed


def test_not_psd_errors():
    bad = BlockMat(2, 2, np.diag([1.0, -1.0, 1.0, 1.0]))
    ok = BlockMat.identity(2, 2)
    with pytest.raises(NotPSD):
        check_fischer(bad)
    with pytest.raises(NotPSD):
        check_thompson(BlockMat(2, 2, np.triu(np.ones((4, 4)))))
    with pytest.raises(NotPSD):
        check_superadd_partial_det(ok, bad)
    with pytest.raises(NotPSD):
        check_tensor_three(bad.mat, ok.mat, ok.mat)


def test_dim_mismatch_errors():
    with pytest.raises(DimMismatch):
        check_superadd_partial_det(BlockMat.identity(2, 2), BlockMat.identity(1, 4))
    with pytest.raises(DimMismatch):
        check_tensor_three(np.eye(2), np.eye(3), np.eye(2))


def test_bad_side_and_kind():
    h = BlockMat.identity(2, 2)
    with pytest.raises(ValueError):
        check_thompson(h, side=3)
    with pytest.raises(ValueError):
        check_mean_bounds(h, "harmonic")
    with pytest.raises(ValueError):
        check_proof_chain(h, "nope")


def test_singular_input_falls_back_to_linear():
    h = BlockMat(2, 2, np.diag([1.0, 0.0, 2.0, 3.0]).astype(complex))
    for side in (1, 2):
        res = check_fiedler_markham(h, side)
        assert res.passed and res.scalar_rhs == 0.0


def test_pairing_on_random_inputs(rng):
    for n, k in [(2, 2), (2, 3), (3, 2)]:
        for _ in range(10):
            h = random_block(rng, n, k)
            g = realign(h)
            for fn in (check_fiedler_markham, check_choi):
                m1, m2 = fn(h, 1).margin, fn(g, 2).margin
                assert abs(m1 - m2) <= 1e-10 * max(1.0, abs(m1), abs(m2))


def test_proof_chain_values(kron_m_i2):
    upper, lower = check_proof_chain(kron_m_i2, "fiedler_markham")
    assert (upper.label, lower.label) == ("fm-chain/upper", "fm-chain/lower")
    # tr_2 H = 2M, det = 12, /4 = 3, squared = 9 = prod det G_ll = det H
    assert upper.margin == pytest.approx(0, abs=ATOL) and lower.margin == pytest.approx(0, abs=ATOL)
    upper, lower = check_proof_chain(kron_m_i2, "choi")
    assert upper.label == "choi-chain/upper"
    assert upper.passed and lower.passed


def test_chain_random(rng):
    for _ in range(20):
        h = random_block(rng, 2, 3)
        for thm in ("fiedler_markham", "choi"):
            assert all(r.passed for r in check_proof_chain(h, thm))


def test_record_fields(kron_m_i2):
    rec = check_thompson(kron_m_i2, 2).to_record()
    assert rec["pass"] is True and "passed" not in rec
    assert rec["input_digest"] == digest(kron_m_i2) and len(rec["input_digest"]) == 16
    assert rec["tol_used"] == pytest.approx(1e-12 + 1e-9 * 15)
    json.dumps(rec)


def test_tolerance_scales_with_inputs():
    h = BlockMat(2, 2, 10 * np.eye(4))
    res = check_fischer(h, tol=Tolerance(abs=0.5, rel=1e-3))
    assert res.tol_used == pytest.approx(0.5 + 1e-3 * 1e4)
    with pytest.raises(ValueError):
        Tolerance(abs=-1e-3)


def test_digest_distinguishes_order(rng):
    a, b = random_block(rng, 2, 2), random_block(rng, 2, 2)
    assert digest(a, b) != digest(b, a)
    assert digest(a) == digest(BlockMat(2, 2, a.mat.copy()))


def test_run_trial_all_ones_diag():
    spec = GenSpec("diag_random", 2, 2, seed=0)
    ones = np.eye(4, dtype=complex)[None]
    bt = kernels.Batch(2, 2, a=ones, b=ones, c=ones)
    results = []
    for check in catalog.suite_plan(4):
        for out in check.kernel(bt, DEFAULT_TOL):
            results.append(catalog._result(out, 0, check.name, check.side, None, ""))
    assert all(r.passed and r.margin >= -ATOL for r in results)
    assert {r.check_name for r in results} == set(catalog.CHECK_NAMES) | set(catalog.CHAIN_NAMES)
    assert all(r.passed for r in run_trial(spec, 0))


def test_run_trial_errors_become_entries(monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("kaput")

    monkeypatch.setattr(kernels, "choi", boom)
    results = run_trial(GenSpec("ginibre", 2, 2, seed=1), 0)
    bad = [r for r in results if r.error]
    assert len(bad) == 2 and all(r.check_name == "choi" and not r.passed for r in bad)
    assert sum(r.passed for r in results) == len(results) - 2


def test_run_trial_generator_failure(monkeypatch):
    monkeypatch.setattr(catalog, "generate_many",
                        lambda *a, **kw: (_ for _ in ()).throw(ValueError("no")))
    (res,) = run_trial(GenSpec("ginibre", 2, 2, seed=1), 0)
    assert res.check_name == "generate" and not res.passed and "no" in res.error


def test_run_suite_deterministic_and_valid():
    specs = [GenSpec(e, 2, 2, seed=3) for e in ("ginibre", "equality_case")]
    r1, r2 = run_suite(specs, 3), run_suite(specs, 3)
    assert r1.passed
    d1, d2 = strip_volatile(r1.to_dict("all")), strip_volatile(r2.to_dict("all"))
    assert json.dumps(d1) == json.dumps(d2)
    validate_report(d1)
    keys = [(r.ensemble, r.trial) for r in r1.records]
    assert keys == sorted(keys, key=lambda x: (x[0] != "ginibre", x[1]))
    counts = {row["check"]: row["count"] for row in d1["summary"]}
    assert counts["fischer"] == 6 and counts["tensor-three/r=3"] == 6


def test_failing_trial_isolated_in_batch(monkeypatch):
    real = kernels.fischer

    def picky(bt, realigned, tol):
        if bt.size > 1:
            raise RuntimeError("batch")
        if bt.stack("a")[0, 0, 0].real > 1.0:
            raise RuntimeError("large")
        return real(bt, realigned, tol)

    monkeypatch.setattr(kernels, "fischer", picky)
    spec = GenSpec("ginibre", 2, 2, seed=5)
    batched = catalog.run_trials(spec, range(6))
    for t, results in enumerate(batched):
        solo = run_trial(spec, t)
        assert repr([r.to_record() for r in results]) == repr([r.to_record() for r in solo])
    errors = [r for results in batched for r in results if r.error]
    assert errors and all(r.check_name == "fischer" for r in errors)


def test_suite_chunking_is_invisible():
    specs = [GenSpec(e, n, k, seed=7) for e in ("ginibre", "wishart_rank_r") for n, k in ((2, 2), (2, 3))]
    whole, pieces = run_suite(specs, 5), run_suite(specs, 5, chunk=2)
    assert [(r.trial, r.result.to_record()) for r in whole.records] == \
        [(r.trial, r.result.to_record()) for r in pieces.records]
    assert whole.records_sha256 == pieces.records_sha256


def test_suite_records_match_single_checks():
    spec = GenSpec("ginibre", 2, 3, seed=11)
    trial = 3
    results = {r.label: r for r in catalog.run_trials(spec, range(5))[trial]}
    a, b, c = (BlockMat(2, 3, generate_many("ginibre", 2, 3, [s])[0])
               for s in catalog.trial_seeds(spec, trial))
    singles = [
        check_fischer(a), check_fischer(a, realigned=True),
        check_thompson(a, 1), check_choi(a, 2), check_mean_bounds(a, "am_gm"),
        *check_proof_chain(a, "choi"),
        check_superadd_partial_det(a, b, 1), check_tensor_three(a, b, c, r=2),
        check_tensor_two_common(a, b, c, r=1), check_partial_det_three_common(a, b, c, 2),
    ]
    for res in singles:
        assert res.to_record() == results[res.label].to_record(), res.label


def test_run_suite_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_suite([GenSpec("ginibre", 2, 2, seed=0)], 0)


def test_partial_det_side1_of_realign_consistency(rng):
    h = random_block(rng, 2, 3)
    assert np.array_equal(partial_det(h, 1), partial_det(realign(h), 2))


@pytest.mark.parametrize("ensemble", ["ginibre", "wishart_rank_r", "kron_structured",
                                      "equality_case", "diag_random"])
def test_equality_and_random_ensembles_pass(ensemble):
    for seed in range(5):
        h = generate(GenSpec(ensemble, 2, 3, seed=seed))
        for side in (1, 2):
            assert check_fiedler_markham(h, side).passed
            assert check_choi(h, side).passed
