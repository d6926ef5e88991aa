use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qwalk::fusion::{green_classical, FusionRing, GreenConfig, LabelMeasure, PointedRing};
use qwalk::groups::{Group, Order};

/// Mean and standard error of the number of visits to 0 in steps `0..=horizon`
/// of a nearest-neighbour chain on `{0, 1, ...}`, killed above `radius`.
fn visits(step: impl Fn(i64, &mut ChaCha8Rng) -> i64, horizon: usize, radius: i64, walks: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..walks {
        let mut x = 0i64;
        let mut count = 1.0;
        for _ in 0..horizon {
            x = step(x, &mut rng);
            if x.abs() > radius {
                break;
            }
            if x == 0 {
                count += 1.0;
            }
        }
        sum += count;
        sq += count * count;
    }
    let n = walks as f64;
    let mean = sum / n;
    (mean, ((sq / n - mean * mean) / (n - 1.0)).sqrt())
}

fn green_at_unit(g: Group, mu: &[(&str, f64)], horizon: usize, radius: u32) -> f64 {
    let ring = PointedRing::new(g);
    let mu = LabelMeasure::new(mu.iter().map(|(w, p)| (ring.parse_label(w).unwrap(), *p))).unwrap();
    let e = ring.unit();
    let config = GreenConfig { radius: Some(radius), ..GreenConfig::default() };
    green_classical(&e, &mu, &ring, horizon, &[e.clone()], &config).unwrap().get(&e).unwrap()
}

#[test]
fn tree_walk() {
    let g = Group::free_product_of(3, Order::Finite(2)).unwrap();
    let exact = green_at_unit(g, &[("a", 1.0 / 3.0), ("b", 1.0 / 3.0), ("c", 1.0 / 3.0)], 60, 16);
    assert!((exact - 2.0).abs() <= 0.01, "{exact}");
    // The distance from e is a birth-death chain: up with 2/3 away from 0.
    let step = |d: i64, rng: &mut ChaCha8Rng| if d == 0 || rng.gen_bool(2.0 / 3.0) { d + 1 } else { d - 1 };
    let (mean, se) = visits(step, 60, 16, 40_000, 11);
    assert!((mean - exact).abs() <= 2.0 * se, "{mean} ± {se} vs {exact}");
}

#[test]
fn drifted_integers() {
    let g = Group::free_product_of(1, Order::Infinite).unwrap();
    let exact = green_at_unit(g, &[("x", 0.75), ("x^-1", 0.25)], 400, 200);
    assert!((exact - 2.0).abs() <= 0.01, "{exact}");
    let step = |x: i64, rng: &mut ChaCha8Rng| if rng.gen_bool(0.75) { x + 1 } else { x - 1 };
    let (mean, se) = visits(step, 400, 200, 40_000, 12);
    assert!((mean - exact).abs() <= 2.0 * se, "{mean} ± {se} vs {exact}");
}
