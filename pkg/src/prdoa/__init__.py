"""DOA estimation with partially relaxed subspace and covariance fitting.

The package splits into small layers: ``arrays`` (geometry, snapshots,
sample covariance), ``rankone`` (eigenvalues of diagonal-minus-rank-one
matrices via deflation and secular rooting), ``estimators`` (classical and
partial-relaxation null spectra), ``peaks`` (minima extraction and the joint
two-source search), and ``bench`` (Monte-Carlo RMSE sweeps behind the
``doa-bench`` CLI).
"""

from .arrays import (
    ArrayGeometry,
    SampleCovariance,
    Scenario,
    SearchGrid,
    SnapshotMatrix,
    diagonal_load,
    generate_snapshots,
    sample_covariance,
    snr_to_noise_power,
    steering_matrix,
    steering_vector,
)
from .bench import (
    ExperimentPlan,
    RmseRow,
    load_plan,
    materialize,
    parse_plan,
    parse_scenario,
    rmse,
    rows_to_csv,
    run_experiment,
    time_rows_to_csv,
    time_spectra,
    write_csv,
)
from .estimators import (
    SingularCovarianceError,
    SpectrumResult,
    UcfState,
    WsfWeighting,
    beamformer_spectrum,
    capon_power,
    capon_spectrum,
    music_spectrum,
    pr_ccf_spectrum,
    pr_dml_spectrum,
    pr_ucf_spectrum,
    pr_wsf_spectrum,
    register_estimator,
    spectrum,
    ucf_derivative,
    ucf_minimize,
    wsf_weighting,
)
from .peaks import DoaEstimate, dml_grid2, find_n_minima
from .rankone import (
    ConvergenceError,
    DeflationResult,
    RankOneMod,
    SecularRoots,
    batched_extremal_eigvals,
    deflate,
    eigenvalues,
    eigenvector_for_root,
    full_spectrum,
    root_secular_k,
    secular_value,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "SampleCovariance",
    "Scenario",
    "SearchGrid",
    "SnapshotMatrix",
    "diagonal_load",
    "generate_snapshots",
    "sample_covariance",
    "snr_to_noise_power",
    "steering_matrix",
    "steering_vector",
    "ExperimentPlan",
    "RmseRow",
    "load_plan",
    "parse_plan",
    "materialize",
    "parse_scenario",
    "rmse",
    "rows_to_csv",
    "run_experiment",
    "time_rows_to_csv",
    "time_spectra",
    "write_csv",
    "SingularCovarianceError",
    "SpectrumResult",
    "UcfState",
    "WsfWeighting",
    "beamformer_spectrum",
    "capon_power",
    "capon_spectrum",
    "music_spectrum",
    "pr_ccf_spectrum",
    "pr_dml_spectrum",
    "pr_ucf_spectrum",
    "pr_wsf_spectrum",
    "register_estimator",
    "spectrum",
    "ucf_derivative",
    "ucf_minimize",
    "wsf_weighting",
    "DoaEstimate",
    "dml_grid2",
    "find_n_minima",
    "ConvergenceError",
    "DeflationResult",
    "RankOneMod",
    "SecularRoots",
    "batched_extremal_eigvals",
    "deflate",
    "eigenvalues",
    "eigenvector_for_root",
    "full_spectrum",
    "root_secular_k",
    "secular_value",
    "__version__",
]
