//! Scores a well-calibrated and an overconfident forecaster on the same
//! outcomes.

use chrono::{Days, NaiveDate};
use hnn::eval::{evaluate, EvalSettings, ForecastRecord};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> hnn::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let mut good = Vec::new();
    let mut narrow = Vec::new();
    for i in 0..400 {
        let sd = if (i / 50) % 2 == 0 { 0.5 } else { 2.0 };
        let z: f64 = StandardNormal.sample(&mut rng);
        let rec = ForecastRecord {
            date: start + Days::new(i),
            horizon: 1,
            mean: 0.0,
            variance: sd * sd,
            realization: sd * z,
        };
        good.push(rec);
        narrow.push(ForecastRecord { variance: rec.variance / 9.0, ..rec });
    }
    let settings = EvalSettings::default();
    let a = evaluate(&good, 1.4, None, &settings)?;
    let b = evaluate(&narrow, 1.4, Some(&good), &settings)?;
    print!("calibrated\n{}\n", a.summary_text());
    print!("overconfident\n{}\n", b.summary_text());
    Ok(())
}
