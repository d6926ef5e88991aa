use nalgebra::DMatrix;
use num_complex::Complex64;

use qwalk::catwalk::lemma_contract_finite;
use qwalk::groups::FiniteGroup;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The two-dimensional irreducible representation of `S₃`, built from an
/// element `r` of order 3 and a reflection `s` as `U(rⁱsʲ) = Rⁱ Fʲ`.
fn standard_rep(g: &FiniteGroup) -> Vec<DMatrix<Complex64>> {
    let order = |x: usize| (1..=6).find(|&k| (0..k).fold(0, |acc, _| g.mul(acc, x)) == 0).unwrap();
    let r = (0..6).find(|&x| order(x) == 3).unwrap();
    let s = (0..6).find(|&x| order(x) == 2).unwrap();
    let (cs, sn) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
    let rot = DMatrix::from_row_slice(2, 2, &[c(cs), c(-sn), c(sn), c(cs)]);
    let flip = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let mut u = vec![DMatrix::zeros(2, 2); 6];
    let mut ri = 0;
    let mut m_ri = DMatrix::identity(2, 2);
    for _ in 0..3 {
        u[ri] = m_ri.clone();
        u[g.mul(ri, s)] = &m_ri * &flip;
        ri = g.mul(ri, r);
        m_ri = &m_ri * &rot;
    }
    u
}

#[test]
fn two_dimensional_irreducible_of_s3() {
    let g = FiniteGroup::symmetric(3);
    let u = standard_rep(&g);
    let uniform = [1.0 / 6.0; 6];
    assert!(lemma_contract_finite(&g, &u, &uniform).unwrap() < 1e-15);

    // Rotations sum to −1 and reflections to 0 on this representation, so a
    // class function with weight w_e at e and w_r at each rotation averages
    // to (w_e − w_r)·1.
    let order2 = |x: usize| x != 0 && g.mul(x, x) == 0;
    let class: Vec<f64> = (0..6).map(|x| if x == 0 { 0.5 } else if order2(x) { 0.1 } else { 0.1 }).collect();
    assert!((lemma_contract_finite(&g, &u, &class).unwrap() - 0.4).abs() < 1e-14);

    // Extra weight 0.25 on one reflection adds 0.25·F to 0.45·1: norm 0.7.
    let refl = (0..6).find(|&x| order2(x)).unwrap();
    let skew: Vec<f64> = (0..6).map(|x| if x == 0 { 0.5 } else if x == refl { 0.3 } else { 0.05 }).collect();
    assert!((lemma_contract_finite(&g, &u, &skew).unwrap() - 0.7).abs() < 1e-14);
}
