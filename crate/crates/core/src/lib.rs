// SPDX-License-Identifier: Apache-2.0

pub mod driftgeo;
pub mod experiments;
pub mod geom2d;
pub mod limitlaws;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod walks;
