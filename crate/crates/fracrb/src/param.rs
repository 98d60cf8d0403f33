//! The problem parameter `mu = (s, nu)` and the coefficients derived from the
//! fractional order `s`.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Fractional orders used by the experiment drivers are restricted to this
/// interval so the discrete operators stay uniformly elliptic.
pub const S_MIN: f64 = 0.03;
pub const S_MAX: f64 = 0.97;

/// Parameter pair: fractional order `s`, optional right-hand-side parameter
/// `nu` (absent for the one-parameter problem).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Parameter {
    pub s: f64,
    pub nu: Option<f64>,
}

impl Parameter {
    pub fn new(s: f64) -> Self {
        Parameter { s, nu: None }
    }

    pub fn with_nu(s: f64, nu: f64) -> Self {
        Parameter { s, nu: Some(nu) }
    }

    pub fn subdomain(&self) -> Subdomain {
        if self.s <= 0.5 {
            Subdomain::D1
        } else {
            Subdomain::D2
        }
    }
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.nu {
            Some(nu) => write!(f, "(s = {}, nu = {})", self.s, nu),
            None => write!(f, "(s = {})", self.s),
        }
    }
}

/// Exponent of the degenerate diffusion weight `y^{a(s)}`.
pub fn weight_exponent(s: f64) -> f64 {
    1.0 - 2.0 * s
}

/// Normalization coefficient `d_s = 2^{a} Gamma(1 - s) / Gamma(s)`.
///
/// `d_{1/2} = 1`.
pub fn ds_coefficient(s: f64) -> f64 {
    2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
}

/// The two halves of the fractional-order range. The weight family behaves
/// differently on each half, so interpolation models, meshes and reduced
/// models are built per subdomain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subdomain {
    /// `s <= 1/2`: the weight `y^{1-2s}` is bounded at the origin.
    D1,
    /// `s > 1/2`: the weight is singular at the origin; the interpolated
    /// family is premultiplied by `y` to stay bounded.
    D2,
}

impl Subdomain {
    pub fn name(&self) -> &'static str {
        match self {
            Subdomain::D1 => "d1",
            Subdomain::D2 => "d2",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "d1" | "D1" => Ok(Subdomain::D1),
            "d2" | "D2" => Ok(Subdomain::D2),
            other => Err(Error::Config(format!("unknown subdomain `{other}`"))),
        }
    }

    /// Range of `s` covered by the subdomain in the experiment drivers.
    pub fn s_range(&self) -> (f64, f64) {
        match self {
            Subdomain::D1 => (S_MIN, 0.5),
            Subdomain::D2 => (0.5, S_MAX),
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        let (lo, hi) = self.s_range();
        s >= lo && s <= hi
    }

    /// Default grading exponent of the extension-direction mesh.
    pub fn default_grading(&self) -> f64 {
        match self {
            Subdomain::D1 => 6.0,
            Subdomain::D2 => 2.0,
        }
    }

    pub fn midpoint(&self) -> f64 {
        let (lo, hi) = self.s_range();
        0.5 * (lo + hi)
    }
}

impl std::fmt::Display for Subdomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `count` equispaced points on `[lo, hi]`, inclusive.
pub fn equispaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}
