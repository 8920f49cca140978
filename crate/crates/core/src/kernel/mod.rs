pub mod filter;
pub mod mollifier;
pub mod svd;
pub mod lark;
pub mod toeplitz;
pub mod symmetry;
