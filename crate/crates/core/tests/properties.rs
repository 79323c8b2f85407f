use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use dercalc::algebra;
use dercalc::calculus::{interior, koszul_d, lie_derivative, random_form, wedge, DerivationFrame, Form, RandomElement};
use dercalc::connections::{gauge_transform, ConnectionOnA};
use dercalc::io::{self, CoeffJson};
use dercalc::matrix_functions::MixedFrame;
use dercalc::matrix_geometry::MatrixFrame;
use dercalc::moyal::{star, IspFrame, MoyalConfig, MoyalPoly};

fn sign(p: usize) -> Complex64 {
    Complex64::new(if p % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
}

fn leibniz_gap<F: DerivationFrame + RandomElement>(frame: &F, p: usize, q: usize, rng: &mut StdRng) -> f64 {
    let a = random_form(frame, p, Some(3), rng);
    let b = random_form(frame, q, Some(3), rng);
    let lhs = koszul_d(frame, &wedge(frame, &a, &b).unwrap()).unwrap();
    let r1 = wedge(frame, &koszul_d(frame, &a).unwrap(), &b).unwrap();
    let r2 = wedge(frame, &a, &koszul_d(frame, &b).unwrap()).unwrap().scale(frame, sign(p));
    lhs.distance(frame, &r1.add(frame, &r2).unwrap()).unwrap()
}

fn cartan_gap<F: DerivationFrame + RandomElement>(frame: &F, p: usize, a: usize, rng: &mut StdRng) -> f64 {
    let w = random_form(frame, p, Some(3), rng);
    let lie = lie_derivative(frame, a, &w).unwrap();
    let id = interior(frame, a, &koszul_d(frame, &w).unwrap()).unwrap();
    let di = koszul_d(frame, &interior(frame, a, &w).unwrap()).unwrap();
    lie.distance(frame, &id.add(frame, &di).unwrap()).unwrap()
}

fn json_round_trip<F>(frame: &F, w: &Form<F::Elem>) -> Form<F::Elem>
where
    F: DerivationFrame,
    F::Elem: CoeffJson,
{
    let text = io::to_compact(&io::form_to_json(w));
    io::form_from_json(frame, &serde_json::from_str(&text).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leibniz_on_matrices(seed in any::<u64>(), p in 0usize..3, q in 0usize..2) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mf = MatrixFrame::gell_mann(2).unwrap();
        prop_assert!(leibniz_gap(&mf, p, q, &mut rng) < 1e-10);
    }

    #[test]
    fn leibniz_on_mixed_frame(seed in any::<u64>(), p in 0usize..2, q in 0usize..2) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mf = MixedFrame::gell_mann(1, 2).unwrap();
        prop_assert!(leibniz_gap(&mf, p, q, &mut rng) < 1e-9);
    }

    #[test]
    fn leibniz_on_moyal_frame(seed in any::<u64>(), p in 0usize..2, q in 0usize..2) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = IspFrame::new(MoyalConfig::new(0.7).unwrap()).unwrap();
        prop_assert!(leibniz_gap(&f, p, q, &mut rng) < 1e-9);
    }

    #[test]
    fn cartan_formula(seed in any::<u64>(), p in 0usize..3, a in 0usize..8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mf = MatrixFrame::gell_mann(3).unwrap();
        prop_assert!(cartan_gap(&mf, p, a, &mut rng) < 1e-10);
    }

    #[test]
    fn cartan_formula_moyal(seed in any::<u64>(), p in 0usize..3, a in 0usize..5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = IspFrame::new(MoyalConfig::new(1.3).unwrap()).unwrap();
        prop_assert!(cartan_gap(&f, p, a, &mut rng) < 1e-9);
    }

    #[test]
    fn wedge_is_associative(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mf = MatrixFrame::gell_mann(2).unwrap();
        let [a, b, c] = [0, 1, 1].map(|p| random_form(&mf, p, None, &mut rng));
        let lhs = wedge(&mf, &wedge(&mf, &a, &b).unwrap(), &c).unwrap();
        let rhs = wedge(&mf, &a, &wedge(&mf, &b, &c).unwrap()).unwrap();
        prop_assert!(lhs.distance(&mf, &rhs).unwrap() < 1e-12);
    }

    #[test]
    fn gauge_transforms_compose(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mf = MatrixFrame::gell_mann(2).unwrap();
        let w = ConnectionOnA::new(random_form(&mf, 1, None, &mut rng)).unwrap();
        let g = algebra::random_invertible(2, &mut rng);
        let h = algebra::random_invertible(2, &mut rng);
        let twice = gauge_transform(&mf, &gauge_transform(&mf, &w, &g).unwrap(), &h).unwrap();
        let once = gauge_transform(&mf, &w, &(&g * &h)).unwrap();
        let scale = 1.0 + once.form().max_norm(&mf);
        prop_assert!(twice.form().distance(&mf, once.form()).unwrap() / scale < 1e-9);
    }

    #[test]
    fn forms_survive_json(seed in any::<u64>(), p in 0usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mf = MatrixFrame::gell_mann(2).unwrap();
        let w = random_form(&mf, p, None, &mut rng);
        prop_assert_eq!(json_round_trip(&mf, &w).distance(&mf, &w).unwrap(), 0.0);

        let mixed = MixedFrame::gell_mann(2, 2).unwrap();
        let w = random_form(&mixed, p, Some(4), &mut rng);
        prop_assert_eq!(json_round_trip(&mixed, &w).distance(&mixed, &w).unwrap(), 0.0);

        let isp = IspFrame::new(MoyalConfig::new(2.5).unwrap()).unwrap();
        let w = random_form(&isp, p, Some(4), &mut rng);
        prop_assert_eq!(json_round_trip(&isp, &w).distance(&isp, &w).unwrap(), 0.0);
    }

    #[test]
    fn moyal_text_round_trip(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = MoyalPoly::random(4, 6, &mut rng);
        let back: MoyalPoly = p.to_string().parse().unwrap();
        prop_assert!(back.sub(&p).max_abs() < 1e-12 * (1.0 + p.max_abs()));
    }

    #[test]
    fn star_with_constant_is_scaling(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let cfg = MoyalConfig::new(0.9).unwrap();
        let p = MoyalPoly::random(4, 6, &mut rng);
        let c = Complex64::new(re, im);
        let k = MoyalPoly::constant(c);
        prop_assert!(star(&k, &p, &cfg).sub(&p.scale(c)).max_abs() < 1e-12);
        prop_assert!(star(&p, &k, &cfg).sub(&p.scale(c)).max_abs() < 1e-12);
    }
}
