//! Compiles every fenced Rust snippet of the book as a doc-test, keeping
//! the guide in `book/` in sync with the library. `cargo test --doc -p
//! teleconnect-book` runs them; one module per chapter so a failing
//! snippet names its chapter.

#[doc = include_str!("../../../book/src/ch01-getting-started.md")]
pub mod ch01_getting_started {}

#[doc = include_str!("../../../book/src/ch02-series.md")]
pub mod ch02_series {}

#[doc = include_str!("../../../book/src/ch03-ingest.md")]
pub mod ch03_ingest {}

#[doc = include_str!("../../../book/src/ch04-stationarity.md")]
pub mod ch04_stationarity {}

#[doc = include_str!("../../../book/src/ch05-arima.md")]
pub mod ch05_arima {}

#[doc = include_str!("../../../book/src/ch06-diagnostics.md")]
pub mod ch06_diagnostics {}

#[doc = include_str!("../../../book/src/ch07-spectral.md")]
pub mod ch07_spectral {}

#[doc = include_str!("../../../book/src/ch08-pipeline.md")]
pub mod ch08_pipeline {}
