//! Shared fixtures for the benches.

pub const SK: &str = include_str!("../../../fixtures/sk.json");
pub const NABLA2: &str = include_str!("../../../fixtures/nabla2.json");
pub const PRODUCT: &str = include_str!("../../../fixtures/product.json");
pub const DENSITY: &str = include_str!("../../../fixtures/density.json");
