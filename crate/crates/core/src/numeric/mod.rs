pub mod linalg;
pub mod optim;
pub mod quad;
pub mod special;
pub mod stats;
