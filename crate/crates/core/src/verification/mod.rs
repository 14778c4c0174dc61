// SPDX-License-Identifier: Apache-2.0

//! Independent checks of the closed-form results.

pub mod audit;
pub mod oracle;
pub mod sde;
