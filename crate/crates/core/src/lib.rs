//! Max-plus (tropical) kernels over finite and countable index sets:
//! Moreau conjugacies with certified windowed evaluation, subdifferential
//! coverings, optimal assignment with dual potentials, similarity and
//! normal forms, path closures and potentials, and the perestroika
//! peeling algorithm that certifies strong regularity.
//!
//! The crate is `no_std` + `alloc`: every algorithm is a pure function of
//! immutable inputs. IO, file formats and the command-line surface live in
//! the companion `maxplus-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assignment;
pub mod bijection;
pub mod closure;
pub mod conjugacy;
pub mod func;
pub mod kernel;
pub mod norms;
pub mod num;
pub mod perestroika;
pub mod similarity;
pub mod space;
pub mod subdiff;

pub use bijection::{rho, Bijection};
pub use func::{Func, Space, Tail};
pub use kernel::{BandCore, Kernel, TailFamily};
pub use num::ExtReal;
pub use space::{IndexKind, IndexSet, Window};

/// Three-valued verdict for checks whose truth can be blocked by
/// certification gaps (windowed suprema that are only known within ε).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}
