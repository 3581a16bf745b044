"""Central tolerance record.

All numerical thresholds used by the library live here so that a run can be
reproduced from a single serialisable object.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian_tol: float = 1e-10
    singularity_tol: float = 1e-8
    cluster_tol: float = 1e-8
    resonance_tol: float = 1e-8
    degeneracy_tol: float = 1e-6
    singular_block_tol: float = 1e-12
    max_eig_condition: float = 1e8
    expm_norm_bound: float = 700.0
    branch_cut_tol: float = 1e-12
    fd_step: float = 1e-4
    fd_step_pushforward: float = 1e-3
    # U(n)* bracket normalisation relative to Im(pi_STS); fixed by calibration.
    sts_real_form_constant: float = 2.0
    # Wedge a^b = factor * (a(x)b - b(x)a); fixed by calibration.
    wedge_factor: float = 0.5
    # Sign of the tr(x [e_a, e_b]) D_a (x) D_b term; fixed by calibration.
    gauge_bracket_sign: float = -1.0
    # Coefficient of E_jj (x) d/dt^j in the slice bivector; fixed by calibration.
    slice_gt_coefficient: float = -1.0

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT = Tolerances()
