//! State aggregation: symmetric K-L distances between emission rows,
//! complete-linkage clustering, and Bayesian estimation of the reduced model.

mod aggregate;
mod cluster;
mod kl;

pub use aggregate::{
    chained_bayes_transition, closed_form_transition, reduce_emission, reduce_transition, reduced_log_likelihood,
    Aggregated, ReducedModel, Weighting,
};
pub use cluster::{cut, hierarchical_cluster, ClusterMap, Dendrogram, Merge};
pub use kl::{check_positive, kl_divergence, pairwise_kl_distance, pairwise_kl_distance_with, symmetric_kl};
