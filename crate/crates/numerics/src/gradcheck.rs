use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::{GradAccum, NumericsError, ParamStore};

const FD_STEP: f64 = 1e-6;
const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_coord: usize,
    pub coords_checked: usize,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

impl std::fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "gradcheck {}: max rel err {:.3e} (tolerance {:.1e}) at {}[{}], {} coordinates",
            if self.passed() { "PASS" } else { "FAIL" },
            self.max_rel_err,
            self.tolerance,
            self.worst_param,
            self.worst_coord,
            self.coords_checked
        )
    }
}

/// Central finite differences (step 1e-6) against reverse-mode gradients.
///
/// `eval` must run the full forward pass and return the scalar loss plus the
/// dense reverse-mode gradients. It is called twice up front to detect
/// non-determinism (bitwise), then twice per sampled coordinate. At most
/// `max_coords` coordinates per parameter are checked, sampled with `seed`.
pub fn finite_diff_gradcheck<F>(
    store: &mut ParamStore,
    mut eval: F,
    tolerance: f64,
    max_coords: usize,
    seed: u64,
) -> Result<GradcheckReport, NumericsError>
where
    F: FnMut(&ParamStore) -> Result<(f64, GradAccum), NumericsError>,
{
    let (loss_a, analytic) = eval(store)?;
    let (loss_b, _) = eval(store)?;
    if loss_a.to_bits() != loss_b.to_bits() {
        return Err(NumericsError::State(format!(
            "non-deterministic forward: {loss_a:?} vs {loss_b:?}"
        )));
    }

    let mut report = GradcheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_coord: 0,
        coords_checked: 0,
        tolerance,
    };

    let n_params = store.len();
    for p in 0..n_params {
        let id = crate::ParamId(p);
        let len = store.get(id).value.len();
        let coords: Vec<usize> = if len <= max_coords {
            (0..len).collect()
        } else {
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (p as u64) << 17);
            rand::seq::index::sample(&mut rng, len, max_coords).into_vec()
        };
        for coord in coords {
            let orig = store.get(id).value.data()[coord];
            store.get_mut(id).value.data_mut()[coord] = orig + FD_STEP;
            let (loss_plus, _) = eval(store)?;
            store.get_mut(id).value.data_mut()[coord] = orig - FD_STEP;
            let (loss_minus, _) = eval(store)?;
            store.get_mut(id).value.data_mut()[coord] = orig;

            let numeric = (loss_plus - loss_minus) / (2.0 * FD_STEP);
            let a = analytic.get(id).data()[coord];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            report.coords_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = store.get(id).name.clone();
                report.worst_coord = coord;
            }
        }
    }
    Ok(report)
}
