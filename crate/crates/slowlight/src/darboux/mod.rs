pub mod dress;
pub mod families;
pub mod seed;
