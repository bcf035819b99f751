"""Numerical laboratory for momentum ray transforms of symmetric tensor fields.

Submodules:

* ``symtensor`` -- packed symmetric tensor algebra
* ``fields`` -- Gaussian-polynomial and grid tensor fields, derivative and
  Fourier operators
* ``ray`` -- momentum ray transforms, phase-space extensions, the
  closed-form oracle and the moment-reduction stencil
* ``helmholtz`` -- k-solenoidal / k-potential decomposition
* ``slices`` -- Fourier-slice checks, injectivity slice systems, kernel
  structure of the moments
* ``john`` -- John-operator machinery and the range characterization
* ``cli`` -- command-line front end
"""

from .fields import GaussPolyField, GridField, GridSpec, random_field
from .helmholtz import (
    FreqProjection,
    decompose_k,
    freq_project,
    projector_formula,
    verify_decomposition,
)
from .john import (
    PhaseFunction,
    RangeReport,
    build_capital_psi,
    chi_build,
    john_apply,
    psi_from_phi,
    range_test,
    transport_identity_residual,
)
from .ray import (
    Line,
    MomentData,
    PhasePoint,
    QuadratureRule,
    batch_transform,
    direction_grid,
    extend_J,
    householder_frame,
    make_extend_J,
    moment_numeric,
    moment_oracle,
    oracle_moment_callables,
    random_line,
    restricted_transform,
)
from .slices import (
    RankResult,
    SliceSystem,
    assemble_slice_system,
    kernel_check,
    rank_probe,
    slice_check,
    slice_row_count,
)
from .symtensor import (
    SymTensor,
    contract,
    eval_power,
    multi_indices,
    multiplicity,
    sym_dim,
    sym_inner,
    sym_mult,
    symmetrize,
)

__version__ = "0.1.0"
