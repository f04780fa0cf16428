"""Named inequality checks over PSD block matrices.

Every check returns a :class:`CheckResult` whose ``margin`` is a signed slack:
non-negative when the inequality holds, negative by the amount it fails.
Scalar checks report ``lhs - rhs``; Loewner-order checks report
λ_min(lhs - rhs).  ``passed`` is ``margin >= -tol_used`` where ``tol_used``
follows :class:`~partialmat.tolerance.Tolerance` with the compared quantities
setting the scale.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .block import DIM_CAP, BlockMat
from .dense import as_complex_mat
from .errors import CapExceeded, DimMismatch, NotHermitian, NotPSD
from .psd import ENSEMBLES, GenSpec, derive_seed, generate_many, is_psd
from .tolerance import DEFAULT_TOL, Tolerance

CHECK_NAMES = (
    "fischer",
    "thompson",
    "fiedler-markham",
    "choi",
    "mean-bounds",
    "superadd",
    "tensor-three",
    "tensor-two-common",
    "det-three",
    "det-three-common",
)
CHAIN_THEOREMS = {"fiedler_markham": "fm-chain", "choi": "choi-chain"}
CHAIN_NAMES = tuple(CHAIN_THEOREMS.values())
MEAN_KINDS = ("fan_ky", "am_gm")
SUITE_TENSOR_CAP = 64
# trials evaluated together as one stack
SUITE_CHUNK = 125


@dataclass
class CheckResult:
    check_name: str
    margin: float
    passed: bool
    tol_used: float
    input_digest: str
    side: Optional[int] = None
    variant: Optional[str] = None
    scalar_lhs: Optional[float] = None
    scalar_rhs: Optional[float] = None
    matrix_margin: Optional[float] = None
    error: Optional[str] = None

    @property
    def label(self) -> str:
        parts = [self.check_name]
        if self.variant:
            parts.append(self.variant)
        if self.side is not None:
            parts.append(f"side{self.side}")
        return "/".join(parts)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["pass"] = rec.pop("passed")
        return rec


def _digest_one(m) -> str:
    if isinstance(m, BlockMat):
        cached = m.__dict__.get("_digest")
        if cached is None:
            cached = m.__dict__["_digest"] = _digest_one(m.mat)
        return cached
    arr = np.ascontiguousarray(m, dtype=np.complex128)
    sha = hashlib.sha256(str(arr.shape).encode())
    sha.update(arr.tobytes())
    return sha.hexdigest()[:16]


def digest(*mats) -> str:
    """Short SHA-256 fingerprint of the input matrices (arrays or BlockMats)."""
    if len(mats) == 1:
        return _digest_one(mats[0])
    return hashlib.sha256("".join(_digest_one(m) for m in mats).encode()).hexdigest()[:16]


def _require_psd(mat: np.ndarray, tol: Tolerance, what: str = "input") -> None:
    try:
        ok, margin = is_psd(mat, tol)
    except NotHermitian as exc:
        raise NotPSD(f"{what} is not Hermitian: {exc}") from exc
    if not ok:
        raise NotPSD(f"{what} is not PSD (λ_min = {margin:.3e})")


def _check_inputs(mats: Sequence[np.ndarray], tol: Tolerance, validate: bool) -> None:
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise DimMismatch(f"inputs have differing shapes {sorted(shapes)}")
    if validate:
        for pos, m in enumerate(mats):
            _require_psd(m, tol, f"input {pos + 1}")


def _same_blocks(*hs: BlockMat) -> None:
    if len({(h.n, h.k) for h in hs}) != 1:
        raise DimMismatch("block matrices have differing (n, k)")


def _side(side: int) -> int:
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side!r}")
    return side


def _single(*hs: BlockMat) -> kernels.Batch:
    return kernels.Batch(hs[0].n, hs[0].k, **{name: h.mat[None] for name, h in zip("abc", hs)})


def _result(out: kernels.Outcome, i: int, name: str, side, variant, dig: str) -> CheckResult:
    margin, bound = float(out.margin[i]), float(out.bound[i])
    return CheckResult(
        check_name=name,
        margin=margin,
        passed=bool(margin >= -bound),
        tol_used=bound,
        input_digest=dig,
        side=side,
        variant=variant,
        scalar_lhs=None if out.lhs is None else float(out.lhs[i]),
        scalar_rhs=None if out.rhs is None else float(out.rhs[i]),
        matrix_margin=margin if out.matrix else None,
    )


# ---------------------------------------------------------------- single input


def check_fischer(h: BlockMat, realigned: bool = False, tol: Tolerance = DEFAULT_TOL,
                  validate: bool = True) -> CheckResult:
    """prod_i det H_ii >= det H, or prod_l det G_ll >= det H on the realigned matrix."""
    if validate:
        _require_psd(h.mat, tol)
    out = kernels.fischer(_single(h), realigned, tol)
    return _result(out, 0, "fischer", None, "realigned" if realigned else None, digest(h))


def check_thompson(h: BlockMat, side: int = 2, tol: Tolerance = DEFAULT_TOL,
                   validate: bool = True) -> CheckResult:
    """det(partial_det(h, side)) >= det h."""
    side = _side(side)
    if validate:
        _require_psd(h.mat, tol)
    return _result(kernels.thompson(_single(h), side, tol), 0, "thompson", side, None, digest(h))


def check_fiedler_markham(h: BlockMat, side: int = 2, tol: Tolerance = DEFAULT_TOL,
                          validate: bool = True) -> CheckResult:
    """side 2: (det tr_2 H / k^n)^k >= det H.  side 1: (det tr_1 H / n^k)^n >= det H."""
    side = _side(side)
    if validate:
        _require_psd(h.mat, tol)
    out = kernels.fiedler_markham(_single(h), side, tol)
    return _result(out, 0, "fiedler-markham", side, None, digest(h))


def check_choi(h: BlockMat, side: int = 1, tol: Tolerance = DEFAULT_TOL,
               validate: bool = True) -> CheckResult:
    """side 1: (tr det_1 H / k)^k >= det H.  side 2: (tr det_2 H / n)^n >= det H."""
    side = _side(side)
    if validate:
        _require_psd(h.mat, tol)
    return _result(kernels.choi(_single(h), side, tol), 0, "choi", side, None, digest(h))


def check_mean_bounds(h: BlockMat, which: str = "fan_ky", tol: Tolerance = DEFAULT_TOL,
                      validate: bool = True) -> CheckResult:
    """The two mean inequalities over the realigned diagonal blocks G_ll.

    ``fan_ky``: det(sum G_ll) >= k^n (prod det G_ll)^(1/k).
    ``am_gm``:  mean(det G_ll) >= (prod det G_ll)^(1/k).
    Determinants that round below zero count as zero in the geometric mean.
    """
    if which not in MEAN_KINDS:
        raise ValueError(f"which must be one of {MEAN_KINDS}, got {which!r}")
    if validate:
        _require_psd(h.mat, tol)
    out = kernels.mean_bounds(_single(h), which, tol)
    return _result(out, 0, "mean-bounds", None, which, digest(h))


def check_proof_chain(h: BlockMat, theorem: str = "fiedler_markham",
                      tol: Tolerance = DEFAULT_TOL, validate: bool = True
                      ) -> tuple[CheckResult, CheckResult]:
    """Both links of the chain  bound >= prod_l det G_ll >= det H.

    ``theorem="fiedler_markham"`` uses bound = (det tr_2 H / k^n)^k,
    ``theorem="choi"`` uses bound = (tr det_1 H / k)^k.
    """
    if theorem not in CHAIN_THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}")
    if validate:
        _require_psd(h.mat, tol)
    name, dig = CHAIN_THEOREMS[theorem], digest(h)
    upper, lower = kernels.proof_chain(_single(h), theorem, tol)
    return _result(upper, 0, name, None, "upper", dig), _result(lower, 0, name, None, "lower", dig)


# ---------------------------------------------------------- several inputs


def check_superadd_partial_det(a: BlockMat, b: BlockMat, side: int = 2,
                               tol: Tolerance = DEFAULT_TOL, validate: bool = True) -> CheckResult:
    """det_s(a + b) >= det_s(a) + det_s(b) in Loewner order."""
    side = _side(side)
    _same_blocks(a, b)
    _check_inputs([a.mat, b.mat], tol, validate)
    out = kernels.superadd(_single(a, b), side, tol)
    return _result(out, 0, "superadd", side, None, digest(a, b))


def _tensor_inputs(a, b, c, r: int, cap: int, tol: Tolerance, validate: bool) -> list[BlockMat]:
    hs = [x if isinstance(x, BlockMat) else BlockMat(1, as_complex_mat(x).shape[0], x)
          for x in (a, b, c)]
    _check_inputs([h.mat for h in hs], tol, validate)
    if r < 1:
        raise ValueError(f"tensor order must be >= 1, got {r}")
    size = hs[0].dim ** r
    if size > cap:
        raise CapExceeded(f"dim^r = {size} exceeds cap {cap}")
    return hs


def check_tensor_three(a, b, c, r: int = 2, tol: Tolerance = DEFAULT_TOL, cap: int = DIM_CAP,
                       validate: bool = True) -> CheckResult:
    """⊗^r(a+b+c) + ⊗^r a + ⊗^r b + ⊗^r c >= ⊗^r(a+b) + ⊗^r(a+c) + ⊗^r(b+c).

    Operands may be BlockMats or plain square arrays of one size.
    """
    hs = _tensor_inputs(a, b, c, r, cap, tol, validate)
    out = kernels.tensor_three(_single(*hs), r, tol)
    return _result(out, 0, "tensor-three", None, f"r={r}", digest(*hs))


def check_tensor_two_common(a, b, c, r: int = 2, tol: Tolerance = DEFAULT_TOL,
                            cap: int = DIM_CAP, validate: bool = True) -> CheckResult:
    """⊗^r(a+b+c) + ⊗^r c >= ⊗^r(a+c) + ⊗^r(b+c)."""
    hs = _tensor_inputs(a, b, c, r, cap, tol, validate)
    out = kernels.tensor_two_common(_single(*hs), r, tol)
    return _result(out, 0, "tensor-two-common", None, f"r={r}", digest(*hs))


def check_partial_det_three(a: BlockMat, b: BlockMat, c: BlockMat, side: int = 2,
                            tol: Tolerance = DEFAULT_TOL, validate: bool = True) -> CheckResult:
    """det_s(a+b+c) + det_s a + det_s b + det_s c >= det_s(a+b) + det_s(a+c) + det_s(b+c)."""
    side = _side(side)
    _same_blocks(a, b, c)
    _check_inputs([a.mat, b.mat, c.mat], tol, validate)
    out = kernels.det_three(_single(a, b, c), side, tol)
    return _result(out, 0, "det-three", side, None, digest(a, b, c))


def check_partial_det_three_common(a: BlockMat, b: BlockMat, c: BlockMat, side: int = 2,
                                   tol: Tolerance = DEFAULT_TOL, validate: bool = True
                                   ) -> CheckResult:
    """det_s(a+b+c) + det_s c >= det_s(a+c) + det_s(b+c)."""
    side = _side(side)
    _same_blocks(a, b, c)
    _check_inputs([a.mat, b.mat, c.mat], tol, validate)
    out = kernels.det_three_common(_single(a, b, c), side, tol)
    return _result(out, 0, "det-three-common", side, None, digest(a, b, c))


# ------------------------------------------------------------------- suite


@dataclass
class SuiteRecord:
    ensemble: str
    n: int
    k: int
    trial: int
    result: CheckResult


@dataclass(frozen=True)
class SuiteCheck:
    """One row of the suite plan: a kernel and the labels of the results it yields."""

    name: str
    side: Optional[int]
    variants: tuple
    arity: int
    kernel: Callable[[kernels.Batch, Tolerance], tuple]


def suite_plan(dim: int, tensor_orders: Iterable[int] = (1, 2, 3),
               tensor_cap: int = SUITE_TENSOR_CAP) -> list[SuiteCheck]:
    """Every check run on one trial, in report order.

    Tensor checks are included for the orders r with dim**r <= tensor_cap.
    """
    K = kernels
    plan = [
        SuiteCheck("fischer", None, (None,), 1, lambda bt, tol: (K.fischer(bt, False, tol),)),
        SuiteCheck("fischer", None, ("realigned",), 1,
                   lambda bt, tol: (K.fischer(bt, True, tol),)),
    ]
    for name, fn in (("thompson", K.thompson), ("fiedler-markham", K.fiedler_markham),
                     ("choi", K.choi)):
        for side in (1, 2):
            plan.append(SuiteCheck(name, side, (None,), 1,
                                   lambda bt, tol, f=fn, s=side: (f(bt, s, tol),)))
    for which in MEAN_KINDS:
        plan.append(SuiteCheck("mean-bounds", None, (which,), 1,
                               lambda bt, tol, w=which: (K.mean_bounds(bt, w, tol),)))
    for theorem, name in CHAIN_THEOREMS.items():
        plan.append(SuiteCheck(name, None, ("upper", "lower"), 1,
                               lambda bt, tol, t=theorem: K.proof_chain(bt, t, tol)))
    for side in (1, 2):
        plan.append(SuiteCheck("superadd", side, (None,), 2,
                               lambda bt, tol, s=side: (K.superadd(bt, s, tol),)))
    for r in tensor_orders:
        if dim ** r > tensor_cap:
            continue
        plan.append(SuiteCheck("tensor-three", None, (f"r={r}",), 3,
                               lambda bt, tol, r=r: (K.tensor_three(bt, r, tol),)))
        plan.append(SuiteCheck("tensor-two-common", None, (f"r={r}",), 3,
                               lambda bt, tol, r=r: (K.tensor_two_common(bt, r, tol),)))
    for name, fn in (("det-three", K.det_three), ("det-three-common", K.det_three_common)):
        for side in (1, 2):
            plan.append(SuiteCheck(name, side, (None,), 3,
                                   lambda bt, tol, f=fn, s=side: (f(bt, s, tol),)))
    return plan


def _failed(name: str, exc: BaseException, side=None, variant=None) -> CheckResult:
    return CheckResult(
        check_name=name, margin=float("nan"), passed=False, tol_used=float("nan"),
        input_digest="", side=side, variant=variant, error=f"{type(exc).__name__}: {exc}",
    )


def trial_seeds(spec: GenSpec, trial: int) -> list[int]:
    """Seeds of the three operands (a, b, c) for one trial of ``spec``."""
    ens = ENSEMBLES.index(spec.ensemble) if spec.ensemble in ENSEMBLES else len(ENSEMBLES)
    return [derive_seed(spec.seed, ens, spec.n, spec.k, spec.rank or 0, trial, role)
            for role in range(3)]


def _operands(spec: GenSpec, trials: Sequence[int], tol: Tolerance):
    """Generated, PSD-screened operand stacks, or a per-trial error for bad trials."""
    seeds = np.array([trial_seeds(spec, t) for t in trials], dtype=object)
    stacks, errors = {}, {}
    for role, name in enumerate("abc"):
        x = generate_many(spec.ensemble, spec.n, spec.k, list(seeds[:, role]), spec.rank)
        dev, lam, bound = kernels.psd_screen(x, tol)
        for i in np.flatnonzero(~((dev <= bound) & (lam >= -bound))):
            what = "not Hermitian" if dev[i] > bound[i] else f"not PSD (λ_min = {lam[i]:.3e})"
            errors.setdefault(int(i), NotPSD(f"generated operand {name} is {what}"))
        stacks[name] = x
    return stacks, errors


def _digests(stacks: dict, count: int) -> list[tuple[str, str, str]]:
    """Per trial: digests of (a), (a, b) and (a, b, c)."""
    rows = zip(*(stacks[name][:count] for name in "abc"))
    return [(digest(a), digest(a, b), digest(a, b, c)) for a, b, c in rows]


def _evaluate(check: SuiteCheck, stacks: dict, n: int, k: int, tol: Tolerance, count: int):
    """Per-trial lists of results for one plan row; a failing batch is retried trial by trial."""
    try:
        return [check.kernel(kernels.Batch(n, k, **stacks), tol)], None
    except Exception:  # isolate the offending trials below
        pass
    per_trial = []
    for i in range(count):
        one = {name: x[i:i + 1] for name, x in stacks.items()}
        try:
            per_trial.append(check.kernel(kernels.Batch(n, k, **one), tol))
        except Exception as exc:  # noqa: BLE001 - recorded as a failed entry
            per_trial.append(exc)
    return None, per_trial


def run_trials(spec: GenSpec, trials: Sequence[int], tol: Tolerance = DEFAULT_TOL,
               tensor_orders: Iterable[int] = (1, 2, 3),
               tensor_cap: int = SUITE_TENSOR_CAP) -> list[list[CheckResult]]:
    """All checks for each trial of ``spec``, evaluated as one batch.

    Errors become failed entries instead of raising.
    """
    trials = list(trials)
    try:
        stacks, errors = _operands(spec, trials, tol)
    except Exception as exc:  # a broken generator must not abort the suite
        return [[_failed("generate", exc)] for _ in trials]
    good = [i for i in range(len(trials)) if i not in errors]
    results: list[list[CheckResult]] = [[] for _ in trials]
    for i, exc in errors.items():
        results[i].append(_failed("generate", exc))
    if not good:
        return results
    stacks = {name: x[good] for name, x in stacks.items()}
    digests = _digests(stacks, len(good))
    n, k = spec.n, spec.k
    for check in suite_plan(n * k, tensor_orders, tensor_cap):
        batch_out, per_trial = _evaluate(check, stacks, n, k, tol, len(good))
        for pos, i in enumerate(good):
            dig = digests[pos][check.arity - 1]
            if batch_out is not None:
                outs, idx = batch_out[0], pos
            else:
                outs, idx = per_trial[pos], 0
            if isinstance(outs, Exception):
                results[i].extend(_failed(check.name, outs, check.side, v) for v in check.variants)
                continue
            results[i].extend(_result(out, idx, check.name, check.side, v, dig)
                              for out, v in zip(outs, check.variants))
    return results


def run_trial(spec: GenSpec, trial: int, tol: Tolerance = DEFAULT_TOL,
              tensor_orders: Iterable[int] = (1, 2, 3),
              tensor_cap: int = SUITE_TENSOR_CAP) -> list[CheckResult]:
    """All checks for one trial; errors become failed entries instead of raising."""
    return run_trials(spec, [trial], tol, tensor_orders, tensor_cap)[0]


def run_suite(specs: Sequence[GenSpec], trials: int, tol: Tolerance = DEFAULT_TOL,
              tensor_orders: Iterable[int] = (1, 2, 3), tensor_cap: int = SUITE_TENSOR_CAP,
              metadata: Optional[dict] = None, chunk: int = SUITE_CHUNK):
    """Run every check over ``trials`` generated triples per spec.

    Trials are evaluated ``chunk`` at a time as stacked arrays.  Records are
    ordered by (spec, trial, check), so the report does not depend on the
    chunking.  Per-check failures are recorded, never raised.
    """
    from .report import Report

    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tensor_orders = tuple(tensor_orders)
    started = time.time()
    records: list[SuiteRecord] = []
    for spec in specs:
        for first in range(0, trials, chunk):
            block = range(first, min(first + chunk, trials))
            for t, results in zip(block, run_trials(spec, block, tol, tensor_orders, tensor_cap)):
                records.extend(SuiteRecord(spec.ensemble, spec.n, spec.k, t, res) for res in results)
    meta = {
        "trials": trials,
        "tol_abs": tol.abs,
        "tol_rel": tol.rel,
        "tensor_orders": list(tensor_orders),
        "tensor_cap": tensor_cap,
        "specs": [
            {"ensemble": s.ensemble, "n": s.n, "k": s.k, "seed": s.seed, "rank": s.rank}
            for s in specs
        ],
    }
    meta.update(metadata or {})
    return Report(meta, records, started_at=started, duration=time.time() - started)


__all__ = [
    "CHAIN_NAMES",
    "CHECK_NAMES",
    "CheckResult",
    "MEAN_KINDS",
    "SuiteRecord",
    "check_choi",
    "check_fiedler_markham",
    "check_fischer",
    "check_mean_bounds",
    "check_partial_det_three",
    "check_partial_det_three_common",
    "check_proof_chain",
    "check_superadd_partial_det",
    "check_tensor_three",
    "check_tensor_two_common",
    "check_thompson",
    "digest",
    "run_suite",
    "run_trial",
    "run_trials",
    "suite_plan",
]
