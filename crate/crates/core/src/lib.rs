//! Active-learning classification on the hypersphere.
//!
//! Samples are reduced with PCA and placed on 𝕊^q. A localized Chebyshev
//! kernel Φ_n estimates where the data lives; low-density samples are pruned,
//! the rest are grouped into η-graph components over a sweep of η, and one
//! oracle query per unlabeled component labels it. Points the sweep cannot
//! settle are classified with a Jacobi-kernel witness function.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`preprocess`] | PCA, sphere projection, angle matrices |
//! | [`kernels`] | filter H, Φ_n, Jacobi polynomials and Φ_{n,q} |
//! | [`support`] | F_{n,M}, support pruning, containment harness |
//! | [`graph`] | η-graph components (union-find, BFS oracle, incremental sweep) |
//! | [`active`] | label oracles and the η sweep |
//! | [`witness`] | witness-function classification |
//! | [`data`] | benchmark subsets and synthetic cap fixtures |
//! | [`io`] | feature/label file formats |
//! | [`pipeline`] | the stages wired together |

pub mod active;
pub mod data;
pub mod error;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod pipeline;
pub mod preprocess;
pub mod support;
pub mod witness;

pub use active::{run_scale, LabelOracle, LabelState, LoopConfig, ReplayOracle, SweepStep, TruthOracle};
pub use data::{generate_synthetic, load_benchmark, BenchmarkName, BenchmarkSpec, Cap, SyntheticData, SyntheticSpec, Window};
pub use error::{Result, ScaleError};
pub use graph::{build_components, components_oracle, AngleGraph, EtaSweep};
pub use kernels::{chebyshev_kernel, filter_h, jacobi_eval, jacobi_kernel, jacobi_norm, ChebyshevKernel, JacobiKernel, KernelConfig};
pub use pipeline::{classify_points, prepare_points, refine_degree, sphere_dim, PipelineConfig, PipelineOutcome};
pub use preprocess::{angle_matrix, pca_reduce, project_to_sphere, AngleMatrix, PcaOutput, PcaTarget, Projection, RawDataset, SpherePoint};
pub use support::{f_estimator, prune_support, containment_harness, ContainmentReport, HarnessOptions, SupportEstimate};
pub use witness::{classify_uncertain, witness_classify, AnchorCap, WitnessModel};
