use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use statrs::function::erf::erf;

use crate::SizeDist;

/// Draws one message size in bytes. Truncation is by rejection, so the
/// distribution inside the bounds keeps its log-normal shape.
pub fn sample_message_size<R: Rng + ?Sized>(dist: &SizeDist, rng: &mut R) -> u64 {
    match *dist {
        SizeDist::Point { bytes } => bytes,
        SizeDist::TruncLogNormal {
            ln_loc,
            sigma,
            min_bytes,
            max_bytes,
        } => {
            let ln = LogNormal::new(ln_loc, sigma).expect("validated parameters");
            for _ in 0..10_000 {
                let x = ln.sample(rng).round();
                if x >= min_bytes as f64 && x <= max_bytes as f64 {
                    return x as u64;
                }
            }
            // Rejection essentially never starves with sane bounds; clamp as
            // a last resort so the simulation cannot wedge.
            min_bytes
        }
    }
}

/// Mean message size in bytes, in closed form (moment of a doubly truncated
/// log-normal). Used to calibrate message inter-arrival rates.
pub fn analytic_mean_bytes(dist: &SizeDist) -> f64 {
    match *dist {
        SizeDist::Point { bytes } => bytes as f64,
        SizeDist::TruncLogNormal {
            ln_loc,
            sigma,
            min_bytes,
            max_bytes,
        } => {
            let alpha = ((min_bytes as f64).ln() - ln_loc) / sigma;
            let beta = ((max_bytes as f64).ln() - ln_loc) / sigma;
            let mass = std_normal_cdf(beta) - std_normal_cdf(alpha);
            let shifted = std_normal_cdf(beta - sigma) - std_normal_cdf(alpha - sigma);
            (ln_loc + 0.5 * sigma * sigma).exp() * shifted / mass
        }
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}
