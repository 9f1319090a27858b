//! Model zoo: neurons and networks with analytic gradients, their proxies,
//! closed-form constants, and synthetic data generators.

pub mod activation;
pub mod data;
pub mod deep_linear;
pub mod leaky;
pub mod one_layer;
pub mod single_relu;

pub use activation::{ActivationKind, ActivationSpec, DEFAULT_SMOOTHING};
pub use data::{
    gen_conditioned_features, gen_halfspace_classification, gen_teacher_regression, gen_teacher_regression_on,
    normalize_rows, random_unit_vector, Dataset, DatasetMeta, HalfspaceDataConfig, Task,
};
pub use deep_linear::{make_deep_linear, make_deep_linear_with_targets, DeepLinear};
pub use leaky::{make_leaky_neuron, LeakyNeuron, LeakyNeuronModel};
pub use one_layer::{
    build_margin_vector, classification_error, make_one_layer, self_bounding_constant, smoothness_upper_bound,
    surrogate_from_margins, surrogate_loss, zero_one_from_surrogate, NetProxy, NetworkObjective, NetworkShape,
    OneLayerNet,
};
pub use single_relu::{make_single_relu_sq, SingleReluSq};
