use ncpain_core::dressing::{
    integrate_linear, iterated_darboux, iterated_eigenfunctions, n_fold_darboux, quasidet_eigenfunctions,
    DressingChain, LinearConvention, RationalSeed, SpectralPoint,
};
use ncpain_core::{CMat, Complex64, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chain(gammas: &[Complex64], d: usize, seed: u64) -> (DressingChain<CMat>, SpectralPoint<CMat>) {
    let spec = GridSpec::spanning(1.0, 1.1, 1e-3).unwrap();
    let v = RationalSeed::new(&CMat::identity(d), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = |g| {
        let init = (CMat::random(d, &mut rng), CMat::random(d, &mut rng));
        SpectralPoint::integrate(&v, g, init, spec, LinearConvention::BMatrix).unwrap()
    };
    let points = gammas.iter().map(|&g| point(g)).collect();
    let probe = point(Complex64::new(0.45, 0.6));
    (DressingChain::new(v.sample(spec), points, v.constant()).unwrap(), probe)
}

fn g(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn three_steps_quasidet_matches_iteration() {
    let (ch, probe) = chain(&[g(0.2, 1.0), g(-0.3, 0.7), g(0.9, 0.4)], 2, 21);
    let (qc, qp) = quasidet_eigenfunctions(&probe, &ch, 3).unwrap();
    let direct = iterated_eigenfunctions(&probe, &ch, 3).unwrap();
    assert!(qc.max_distance(&direct.chi) <= 1e-9 * direct.chi.sup_norm());
    assert!(qp.max_distance(&direct.phi) <= 1e-9 * direct.phi.sup_norm());
}

#[test]
fn theta_product_matches_composition_up_to_three() {
    let (ch, _) = chain(&[g(0.2, 1.0), g(-0.3, 0.7), g(0.9, 0.4)], 3, 5);
    let iterated = iterated_darboux(&ch, 3).unwrap();
    for (n, it) in iterated.iter().enumerate() {
        let v = n_fold_darboux(&ch, n).unwrap();
        assert!(v.max_distance(it) <= 1e-9 * it.sup_norm(), "N = {n}");
    }
}

#[test]
fn d7_at_lambda_equals_b_matrix_at_half_lambda() {
    let spec = GridSpec::spanning(1.0, 1.5, 1e-3).unwrap();
    let v = RationalSeed::new(&CMat::identity(2), -1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let init = (CMat::random(2, &mut rng), CMat::random(2, &mut rng));
    let lambda = g(1.5, -0.5);
    let (a, _) = integrate_linear(&v, lambda, init.clone(), spec, LinearConvention::D7).unwrap();
    let (b, _) = integrate_linear(&v, lambda * 0.5, init, spec, LinearConvention::BMatrix).unwrap();
    assert_eq!(a, b);
}
