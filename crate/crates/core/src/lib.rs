// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Homophily-based hypothesis tests for community structure in simple
//! undirected networks.
//!
//! The statistic is the mean intra-community edge density minus the mean
//! inter-community density, relative to the overall density. Communities
//! come from a detector (Walktrap by default) and the observed value is
//! compared against bootstrap replicates drawn from a fitted null model:
//! Erdős–Rényi for plain homophily, Chung–Lu to discount degree
//! heterogeneity, and a one-dimensional latent space model to discount
//! transitivity.

pub mod cli;
pub mod community_detection;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod homophily;
pub mod hypothesis_tests;
pub mod null_models;
pub mod rng;

pub use community_detection::Detector;
pub use error::{Error, Result};
pub use graph::{CommunityAssignment, DegreeVector, Graph};
pub use homophily::{HomophilyDecomposition, ProbabilityMatrix};
pub use hypothesis_tests::TestReport;
pub use null_models::{FittedNull, ModelSpec, NullKind};
