//! The two worked estimation models.

pub mod landau_zener;
pub mod rotating_field;
