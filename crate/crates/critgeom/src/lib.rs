//! Spec files, record output, the `critgeom` command line and the
//! verification suite, on top of `critgeom-core`.

pub mod cli;
pub mod output;
pub mod specfile;
pub mod verify;
