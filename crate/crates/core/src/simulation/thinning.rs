use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

const BOUND_SLACK: f64 = 1e-9;

fn check_bound(t: f64, intensity: f64, bound: f64) -> Result<()> {
    if intensity > bound * (1.0 + BOUND_SLACK) + f64::MIN_POSITIVE {
        return Err(Error::InvalidBound { t, intensity, bound });
    }
    Ok(())
}

/// First arrival after `t0` of a point process with rate `intensity(t)`, by
/// thinning a homogeneous proposal stream.
///
/// `bound(t)` must dominate `intensity(s)` for every `s >= t`; it is
/// re-evaluated after every proposal, so a decaying envelope tightens as the
/// clock advances. Returns `None` when no point is accepted before `tf`
/// (which may be infinite).
pub fn sample_inhomog_poisson<R, F, B>(
    mut intensity: F,
    mut bound: B,
    t0: f64,
    tf: f64,
    rng: &mut R,
) -> Result<Option<f64>>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> f64,
    B: FnMut(f64) -> f64,
{
    let mut t = t0;
    loop {
        let b = bound(t);
        if !(b > 0.0) {
            return Ok(None);
        }
        let e: f64 = Exp1.sample(rng);
        t += e / b;
        if t >= tf {
            return Ok(None);
        }
        let rate = intensity(t);
        check_bound(t, rate, b)?;
        if rng.gen::<f64>() * b < rate {
            return Ok(Some(t));
        }
    }
}

/// Multidimensional variant: `intensity(t, out)` writes the per-dimension
/// rates into `out` and returns their sum. The accepted dimension is chosen
/// proportionally to its rate at the accepted time.
pub fn sample_inhomog_poisson_multi<R, F, B>(
    dims: usize,
    mut intensity: F,
    mut bound: B,
    t0: f64,
    tf: f64,
    rng: &mut R,
) -> Result<Option<(usize, f64)>>
where
    R: Rng + ?Sized,
    F: FnMut(f64, &mut [f64]) -> f64,
    B: FnMut(f64) -> f64,
{
    let mut rates = vec![0.0; dims];
    let mut t = t0;
    loop {
        let b = bound(t);
        if !(b > 0.0) {
            return Ok(None);
        }
        let e: f64 = Exp1.sample(rng);
        t += e / b;
        if t >= tf {
            return Ok(None);
        }
        let total = intensity(t, &mut rates);
        check_bound(t, total, b)?;
        if rng.gen::<f64>() * b < total {
            return Ok(Some((pick_index(&rates, total, rng), t)));
        }
    }
}

/// Index drawn with probability `weights[i] / total`.
pub(crate) fn pick_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}
