//! Certified bounds on pair-correlation functionals over Gaussian-weighted
//! polynomials.
//!
//! The pipeline runs bottom-up: [`gausspoly`] supplies the function class and
//! its Fourier operator, [`functionals`] evaluates the objectives,
//! [`sosmodel`] compiles a sum-of-squares parameterization into block SDP
//! data, [`sdp`] solves it in multiple precision, [`search`] optimizes the
//! outer parameters, [`rigor`] verifies a certificate with interval
//! arithmetic, [`certio`] reads and writes certificates and [`report`] turns
//! verified bounds into derived constants.

pub mod certio;
pub mod error;
pub mod functionals;
pub mod gausspoly;
pub mod linalg;
pub mod mp;
pub mod report;
pub mod rigor;
pub mod sdp;
pub mod search;
pub mod sosmodel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use certio::{read_certificate, read_certificate_str, write_certificate, SosCertificate};
pub use functionals::{Candidate, SeriesTruncation};
pub use gausspoly::{EvenPolyBasis, GaussianPoly, MomentTable};
pub use report::{derive_constants, format_report, BoundReport, ExactInterval, ReportStyle};
pub use rigor::{verify, VerificationReport};
pub use sdp::{SdpProblem, SdpSolution, SolverOptions, Status};
pub use search::{search_certificate, SearchConfig, SearchOutcome};
pub use sosmodel::SosParameterization;

/// The six functionals that can be optimized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionalKind {
    Z,
    ZTilde,
    L,
    Z1,
    P,
    PTilde,
}

impl FunctionalKind {
    pub const ALL: [FunctionalKind; 6] = [
        FunctionalKind::Z,
        FunctionalKind::ZTilde,
        FunctionalKind::L,
        FunctionalKind::Z1,
        FunctionalKind::P,
        FunctionalKind::PTilde,
    ];

    /// `P` and `PTilde` are threshold problems searched over `Λ`; the others
    /// minimize an objective.
    pub fn is_threshold(self) -> bool {
        matches!(self, FunctionalKind::P | FunctionalKind::PTilde)
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionalKind::Z => "Z",
            FunctionalKind::ZTilde => "ZTilde",
            FunctionalKind::L => "L",
            FunctionalKind::Z1 => "Z1",
            FunctionalKind::P => "P",
            FunctionalKind::PTilde => "PTilde",
        }
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionalKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown functional kind '{s}'")))
    }
}
