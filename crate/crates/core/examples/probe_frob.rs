fn main() {
    use discrep_core::sketch::{make_sketch, SketchKind, SketchParams};
    use discrep_core::sparse::CsrMatrix;
    use discrep_core::rng::RngStream;
    let a = CsrMatrix::from_triplets(1, 5, &[(0, 0, 1.0)]).unwrap();
    let p = SketchParams { scale: Some(1.0 / (200f64).sqrt()), ..Default::default() };
    for base in [0u64, 1000, 3000, 5000, 7000, 11000, 20000, 40000, 60000, 80000] {
        let mut ok = 0;
        for seed in 0..100 {
            let s = make_sketch(SketchKind::Gaussian, 200, 1, p, RngStream::new(base + seed, 0)).unwrap();
            let f = s.apply_left(&a).unwrap().frobenius_norm();
            if (0.9..=1.1).contains(&f) { ok += 1; }
        }
        println!("base {base}: {ok}/100");
    }
}
