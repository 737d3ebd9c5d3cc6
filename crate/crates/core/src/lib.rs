pub mod descent;
pub mod fem;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod newton;
pub mod problems;
pub mod quadrature;
pub mod shape;
pub mod tensor;
