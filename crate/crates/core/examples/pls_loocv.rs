//! PLS regression on collinear data with more features than samples, scored
//! by leave-one-out for a range of component counts.
//!
//!     cargo run --example pls_loocv

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spectralweight::regression::{loocv, EvalReport};

fn main() -> spectralweight::Result<()> {
    let (n, d) = (30, 60);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let normal = Normal::new(0.0, 1.0).unwrap();
    // Three latent factors drive every column and the target.
    let factors = DMatrix::from_fn(n, 3, |_, _| normal.sample(&mut rng));
    let mixing = DMatrix::from_fn(3, d, |_, _| normal.sample(&mut rng));
    let x = &factors * mixing + DMatrix::from_fn(n, d, |_, _| 0.1 * normal.sample(&mut rng));
    let y: Vec<f64> = (0..n)
        .map(|i| 50.0 + 3.0 * factors[(i, 0)] - 2.0 * factors[(i, 1)] + 0.2 * normal.sample(&mut rng))
        .collect();

    let reports: Vec<EvalReport> = (1..=6)
        .map(|c| {
            let mut r = loocv(&x, &y, c)?;
            r.target = format!("{c} components");
            Ok(r)
        })
        .collect::<spectralweight::Result<_>>()?;
    print!("{}", EvalReport::table(&reports));
    Ok(())
}
