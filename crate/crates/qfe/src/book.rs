// The guide chapters double as doc-tests: every fenced Rust block in
// book/src compiles and runs under `cargo test --doc`, so the book cannot
// drift from the library. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/evolution.md")]
pub mod evolution {}

#[doc = include_str!("../../../book/src/fisher.md")]
pub mod fisher {}

#[doc = include_str!("../../../book/src/control.md")]
pub mod control {}

#[doc = include_str!("../../../book/src/rotating-field.md")]
pub mod rotating_field {}

#[doc = include_str!("../../../book/src/landau-zener.md")]
pub mod landau_zener {}
