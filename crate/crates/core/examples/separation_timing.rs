//! Times the separation check on pure-noise Gaussian data.
//! `cargo run --release -p logit-core --example separation_timing -- 240 400 5`

use std::time::Instant;

use logit_core::designs::{sample_dataset, DesignKind, DesignSpec, LabelLaw};
use logit_core::{check_separation, ModelParams, SeededRng};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (d, n, reps) = (args.first().copied().unwrap_or(240), args.get(1).copied().unwrap_or(400), args.get(2).copied().unwrap_or(5));
    let spec = DesignSpec::new(DesignKind::Gaussian, d).unwrap();
    let law = LabelLaw::well_specified(ModelParams::zeros(d));
    let start = Instant::now();
    for r in 0..reps {
        let data = sample_dataset(&spec, &law, n, &mut SeededRng::with_path(1, 0, r as u64).stream()).unwrap();
        let res = check_separation(&data).unwrap();
        println!("replicate {r}: {:?}", res.status);
    }
    println!("{:.3}s per check", start.elapsed().as_secs_f64() / reps as f64);
}
