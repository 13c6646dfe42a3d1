use lpplab_core::fluctuations::equilibrium_sample;
use lpplab_core::lpp::last_passage;
use lpplab_core::points::{sample_point_set, Rect, WeightDistribution};
use std::time::Instant;

fn main() {
    let (x, t) = (600.0, 300.0);
    let reps = 20u64;
    let t0 = Instant::now();
    let mut n = 0usize;
    for i in 0..reps {
        let ps = sample_point_set(
            Rect::new(0.0, x, 0.0, t).unwrap(),
            1.0,
            &WeightDistribution::Dirac1,
            i,
        )
        .unwrap();
        n += ps.len();
    }
    println!("sample only: {:?}/rep ({} pts avg)", t0.elapsed() / reps as u32, n / reps as usize);

    let t0 = Instant::now();
    for i in 0..reps {
        let ps = sample_point_set(
            Rect::new(0.0, x, 0.0, t).unwrap(),
            1.0,
            &WeightDistribution::Dirac1,
            i,
        )
        .unwrap();
        let _ = last_passage(&ps, (0.0, 0.0), (x, t)).unwrap();
    }
    println!("sample+plain dp: {:?}/rep", t0.elapsed() / reps as u32);

    let t0 = Instant::now();
    for i in 0..reps {
        let _ = equilibrium_sample(1.0, x, t, i).unwrap();
    }
    println!("equilibrium_sample: {:?}/rep", t0.elapsed() / reps as u32);
}
