//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use qwalk::boundary::{check_harmonic, dirichlet_solve, invariance_decay};
use qwalk::catwalk::{check_h1, check_h2, h_prime, lemma_contract_finite, shadow_contraction, split_measure, SubRingData};
use qwalk::crossed::{delta_of_nu, CrossedElement, NormalTrace, QGroupContext, Window};
use qwalk::fusion::{check_invariants, green_classical, FusionRing, GreenConfig, LabelMeasure, PointedRing, TableRing};
use qwalk::groups::{builtin_symmetric_action, Elem, FiniteGroup, Group, Order};
use qwalk_cli::scenario::Scenario;
use qwalk_cli::{execute, Command, Format, Overrides};

const TOL: f64 = 1e-12;
const BOUND_SLACK: f64 = 1e-6;
const SLOPE_SLACK: f64 = 0.02;

/// Sub-checks of one criterion: name, outcome, detail.
#[derive(Default)]
struct Checks(Vec<(String, bool, String)>);

impl Checks {
    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.0.push((name.into(), ok, detail.into()));
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn context(n: usize) -> QGroupContext {
    let (g, s) = builtin_symmetric_action(n, Order::Finite(2)).unwrap();
    QGroupContext::new(g, s)
}

fn dihedral_state(ctx: &QGroupContext) -> NormalTrace {
    let p = |w: &str| ctx.gamma().parse(w).unwrap();
    let mu = [(p("e"), 0.5), (p("a"), 0.25), (p("b"), 0.25)];
    NormalTrace::from_pair(ctx, &mu, &[(Elem::identity(), vec![(0, c(1.0)), (1, c(0.5))])]).unwrap()
}

fn s3_scenario() -> (Scenario, QGroupContext, NormalTrace) {
    let (sc, _) = Scenario::load(&scenario_path("s3_tree.toml")).unwrap();
    let ctx = sc.build_context().unwrap();
    let phi = sc.build_state(&ctx).unwrap();
    (sc, ctx, phi)
}

fn random_element(ctx: &QGroupContext, radius: u32, s_range: std::ops::Range<usize>, rng: &mut ChaCha8Rng) -> CrossedElement {
    let mut terms = Vec::new();
    for x in ctx.gamma().ball(radius).unwrap() {
        for s in s_range.clone() {
            if rng.gen_bool(0.3) {
                terms.push(((x.clone(), s), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
            }
        }
    }
    CrossedElement::from_terms(terms, Window::Ball(radius))
}

fn suite<R: FusionRing>(checks: &mut Checks, name: &str, ring: &R, sample: &[R::Label]) {
    let r = check_invariants(ring, sample, TOL).unwrap();
    let names: Vec<&str> = r.checks.iter().map(|c| c.name).collect();
    let required = ["associativity", "mass conservation", "unit", "dimension identity", "Frobenius reciprocity"];
    let complete = required.iter().all(|n| names.contains(n));
    checks.check(name, r.all_passed() && complete, format!("{} checks, failures {:?}", names.len(), r.failures()));
}

fn fusion_invariants(checks: &mut Checks) {
    let rep = TableRing::rep_s3();
    suite(checks, "Rep(S3)", &rep, &rep.labels().collect::<Vec<_>>());
    for (name, g) in [
        ("Z", Group::free_product_of(1, Order::Infinite).unwrap()),
        ("Z/2*Z/2", Group::free_product_of(2, Order::Finite(2)).unwrap()),
        ("(Z/2)^*3", Group::free_product_of(3, Order::Finite(2)).unwrap()),
    ] {
        let r = PointedRing::new(g);
        suite(checks, name, &r, &r.labels().take(40).collect::<Vec<_>>());
    }
    for (name, n) in [("Irr(H) dihedral", 2), ("Irr(H) S3", 3)] {
        let ctx = context(n);
        let irr = ctx.irr();
        suite(checks, name, &irr, &irr.labels().take(12).collect::<Vec<_>>());
    }
}

fn composition_law(checks: &mut Checks) {
    let dihedral = context(2);
    let (_, s3, s3_phi) = s3_scenario();
    for (name, ctx, phi, radius) in [("dihedral", &dihedral, dihedral_state(&dihedral), 8), ("S3", &s3, s3_phi, 4)] {
        let phi2 = phi.convolve(&phi, ctx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = random_element(ctx, radius, 0..ctx.s_order(), &mut rng);
            let twice = ctx.apply_p(&phi, &ctx.apply_p(&phi, &x).unwrap()).unwrap();
            let once = ctx.apply_p(&phi2, &x).unwrap();
            worst = worst.max(twice.max_abs_diff(&once));
        }
        checks.check(name, worst <= TOL, format!("max difference {worst:e} over 100 elements"));
    }
}

fn dihedral_decay(checks: &mut Checks) {
    let ctx = context(2);
    let phi = dihedral_state(&ctx);
    let x0 = CrossedElement::from_terms([((Elem::identity(), 1), c(1.0))], Window::Ball(20));
    let r = invariance_decay(&ctx, &x0, &phi, 20).unwrap();
    checks.check("rate", (r.rate_bound - 0.75).abs() <= TOL, format!("1 − tδ = {}", r.rate_bound));
    let within = r.r.iter().enumerate().all(|(n, v)| *v <= 0.75f64.powi(n as i32) * r.r[0] * (1.0 + BOUND_SLACK));
    checks.check("bound", within && r.r.len() == 21, format!("{} iterates", r.r.len() - 1));
    let slope = r.slope.unwrap_or(f64::NEG_INFINITY);
    checks.check("slope", slope <= 0.75f64.ln() + SLOPE_SLACK, format!("slope {slope:.6}"));

    let ratios_exact = r.r.windows(2).all(|w| (w[1] - 0.25 * w[0]).abs() <= TOL * w[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x = random_element(&ctx, 20, 1..2, &mut rng);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let px = ctx.apply_p(&phi, &x).unwrap();
        let quarter = ctx.restrict(&x, px.window()).scaled(c(0.25));
        worst = worst.max(px.max_abs_diff(&quarter));
        x = px;
    }
    checks.check("sigma quarter", ratios_exact && worst <= TOL, format!("coefficientwise defect {worst:e}"));
}

fn s3_decay(checks: &mut Checks) {
    let (sc, ctx, phi) = s3_scenario();
    let phi = phi.mix(2, &ctx).unwrap();
    let split = phi.split(&ctx).unwrap();
    let delta = delta_of_nu(ctx.symmetry().group(), &split.nu).unwrap();
    checks.check("faithful", split.t > 0.0 && delta > 0.0, format!("t = {:.6}, δ = {delta:.6}", split.t));
    let x0 = sc.start_element(&ctx).unwrap();
    checks.check("window", x0.window() == Window::Ball(30), format!("{}", x0.window()));
    let r = invariance_decay(&ctx, &x0, &phi, 12).unwrap();
    let rate = 1.0 - split.t * delta;
    let within = r.r.iter().enumerate().all(|(n, v)| *v <= rate.powi(n as i32) * r.r[0] * (1.0 + BOUND_SLACK));
    checks.check("bound", within && r.r.len() == 13, format!("rate {rate:.6}, r₁₂/r₀ = {:.3e}", r.r[12] / r.r[0]));
    let slope = r.slope.unwrap_or(f64::NEG_INFINITY);
    checks.check("slope", slope <= rate.ln() + SLOPE_SLACK, format!("slope {slope:.4} vs {:.4}", rate.ln()));
}

fn harmonic_lift(checks: &mut Checks) {
    let ctx = context(3);
    let g = ctx.gamma();
    let steps: Vec<(Elem, f64)> = g.step_generators().into_iter().map(|x| (x, 1.0 / 3.0)).collect();
    let phi = NormalTrace::from_pair(&ctx, &steps, &[]).unwrap();
    let mu = LabelMeasure::new(steps).unwrap();
    let sol = dirichlet_solve(g, &mu, 8, |x| match x.syllables().last() {
        Some(s) if s.factor == 0 => 1.0,
        _ => 0.0,
    })
    .unwrap();
    let h = ctx.from_function(|y| sol.value(y).unwrap_or(0.0), 8).unwrap();
    let residual = check_harmonic(&ctx, &h, &phi).unwrap();
    checks.check("residual", residual < 1e-8, format!("{residual:e}"));
    checks.check("E(h) = h", ctx.conditional_e(&h) == h, "");
    let he = sol.value(&Elem::identity()).unwrap();
    checks.check("h(e)", (he - 1.0 / 3.0).abs() <= 0.01, format!("{he:.6}"));
}

fn results(report: &qwalk_cli::report::Report) -> Value {
    serde_json::to_value(report).unwrap()
}

fn martin(checks: &mut Checks) {
    let cache = tempfile::tempdir().unwrap();
    let done = execute(Command::Martin, &scenario_path("s3_tree.toml"), &Overrides::default(), Some(&cache.path().to_path_buf())).unwrap();
    let v = results(&done.report);
    checks.check("horizon", v["parameters"]["horizon"] == 40, format!("{}", v["parameters"]["horizon"]));
    let mu_ok = v["results"]["martin_block"].is_string();
    checks.check("block measure", mu_ok, "e#0, e#1, e#2, a#0, a#1");
    for a in v["assertions"].as_array().unwrap() {
        let name = a["name"].as_str().unwrap();
        let detail = match name {
            "e_i0" => format!("defect {}", v["results"]["e_i0_defect"]),
            "unit_defect_decreasing" => format!("{}", v["results"]["unit_defect"]),
            "rho_strictly_decreasing" => format!("ρ = {}", v["results"]["rho"]),
            "rho_ratio" => format!("ρ(5)/ρ(1) = {}", v["results"]["rho_ratio"]),
            "witness_decreasing" => format!("{}", v["results"]["witness"]),
            _ => String::new(),
        };
        checks.check(name, a["passed"] == true, detail);
    }
}

fn classical_green(checks: &mut Checks) {
    let cases: [(&str, Group, Vec<(&str, f64)>, usize, u32); 2] = [
        ("tree", Group::free_product_of(3, Order::Finite(2)).unwrap(), vec![("a", 1.0 / 3.0), ("b", 1.0 / 3.0), ("c", 1.0 / 3.0)], 60, 16),
        ("drifted Z", Group::free_product_of(1, Order::Infinite).unwrap(), vec![("x", 0.75), ("x^-1", 0.25)], 400, 200),
    ];
    for (i, (name, g, mu, horizon, radius)) in cases.into_iter().enumerate() {
        let ring = PointedRing::new(g.clone());
        let mu_l = LabelMeasure::new(mu.iter().map(|(w, p)| (ring.parse_label(w).unwrap(), *p))).unwrap();
        let e = ring.unit();
        let config = GreenConfig { radius: Some(radius), ..GreenConfig::default() };
        let value = green_classical(&e, &mu_l, &ring, horizon, &[e.clone()], &config).unwrap().get(&e).unwrap();
        checks.check(&format!("{name} G(e,e)"), (value - 2.0).abs() <= 0.01, format!("{value:.6}"));

        // Independent estimate: sample the walk directly on group words.
        let steps: Vec<(Elem, f64)> = mu.iter().map(|(w, p)| (g.parse(w).unwrap(), *p)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(40 + i as u64);
        let walks = 20_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..walks {
            let mut x = Elem::identity();
            let mut visits = 1.0;
            for _ in 0..horizon {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let step = steps.iter().find(|(_, p)| {
                    acc += p;
                    u < acc
                });
                x = g.multiply(&x, &step.unwrap_or(steps.last().unwrap()).0);
                if g.length(&x) > radius {
                    break;
                }
                if x.is_identity() {
                    visits += 1.0;
                }
            }
            sum += visits;
            sq += visits * visits;
        }
        let n = walks as f64;
        let mean = sum / n;
        let se = ((sq / n - mean * mean) / (n - 1.0)).sqrt();
        checks.check(&format!("{name} Monte Carlo"), (mean - value).abs() <= 2.0 * se, format!("{mean:.4} ± {se:.4}"));
    }
}

fn subcategory_suite(checks: &mut Checks) {
    let rep = TableRing::rep_s3();
    let l = |n: &str| rep.parse_label(n).unwrap();
    let sub = SubRingData::new(&rep, [l("1"), l("sgn")]).unwrap();
    let h = h_prime(&sub);
    checks.check("h'", h.get(&l("1")) == 0.5 && h.get(&l("sgn")) == 0.5, format!("{:?}", h.iter().map(|(_, w)| w).collect::<Vec<_>>()));
    checks.check("h1", check_h1(&sub, 100, 5).unwrap().passed, "");
    checks.check("h2", check_h2(&sub, 100, 100, 5).unwrap().passed, "");

    let pointed = PointedRing::new(Group::free_product_of(2, Order::Finite(2)).unwrap());
    let p = |n: &str| pointed.parse_label(n).unwrap();
    let control = SubRingData::new(&pointed, [p("e"), p("a")]).unwrap();
    let h2 = check_h2(&control, 100, 60, 5).unwrap();
    let witness = h2.witness.as_ref().and_then(|w| w.label.clone());
    checks.check("control fails h2", !h2.passed && witness == Some(p("b")), format!("witness {:?}", witness.map(|w| pointed.label_name(&w))));

    let mu = LabelMeasure::new([(l("1"), 0.3), (l("sgn"), 0.1), (l("V"), 0.6)]).unwrap();
    let sp = split_measure(&mu, &sub).unwrap();
    checks.check("split", (sp.t - 0.4).abs() <= TOL && (sp.delta - 0.5).abs() <= TOL, format!("t = {}, δ = {}", sp.t, sp.delta));
    let all: Vec<usize> = rep.labels().collect();
    let sh = shadow_contraction(&sub, &sp.mu1, &all, 1000, 6, 100).unwrap();
    checks.check(
        "shadow",
        sh.samples == 1000 && sh.max_ratio <= 1.0 - sp.delta + 1e-9,
        format!("{} on {} samples", sh.max_ratio, sh.samples),
    );

    let z2 = FiniteGroup::cyclic(2);
    let m = |x: f64| DMatrix::from_element(1, 1, c(x));
    let sign = [m(1.0), m(-1.0)];
    let a = lemma_contract_finite(&z2, &sign, &[0.5, 0.5]).unwrap();
    let b = lemma_contract_finite(&z2, &sign, &[0.9, 0.1]).unwrap();
    checks.check("lemma", a.abs() <= TOL && (b - 0.8).abs() <= TOL, format!("{a}, {b}"));
}

fn determinism(checks: &mut Checks) {
    let none = Overrides::default();
    for (cmd, file) in [(Command::Decay, "dihedral.toml"), (Command::Catwalk, "rep_s3.toml"), (Command::Contraction, "s3_tree.toml")] {
        let path = scenario_path(file);
        let a = execute(cmd, &path, &none, None).unwrap();
        let b = execute(cmd, &path, &none, None).unwrap();
        let same = a.render(Format::Json) == b.render(Format::Json) && a.render(Format::Csv) == b.render(Format::Csv);
        checks.check(&format!("{cmd:?} {file}"), same, "json and csv");
    }
    for (cmd, file, short, long) in [(Command::GreenClassical, "tree_green.toml", 40, 60), (Command::Martin, "dihedral.toml", 15, 30)] {
        let dir = tempfile::tempdir().unwrap();
        let cache = Some(dir.path().to_path_buf());
        let path = scenario_path(file);
        let at = |h| Overrides { horizon: Some(h), ..Overrides::default() };
        execute(cmd, &path, &at(short), cache.as_ref()).unwrap();
        let resumed = execute(cmd, &path, &at(long), cache.as_ref()).unwrap();
        let fresh = execute(cmd, &path, &at(long), None).unwrap();
        let all_resumed = resumed.cache_log.iter().all(|(_, o)| *o == qwalk_cli::cache::Outcome::Resumed { from: short });
        let same = resumed.render(Format::Json) == fresh.render(Format::Json);
        checks.check(&format!("resume {file} {short}→{long}"), all_resumed && same, format!("{} cached sums", resumed.cache_log.len()));
    }
}

fn main() {
    let criteria: [(&str, Duration, fn(&mut Checks)); 9] = [
        ("fusion invariants", Duration::from_secs(5), fusion_invariants),
        ("composition law", Duration::from_secs(10), composition_law),
        ("dihedral decay", Duration::from_secs(30), dihedral_decay),
        ("S3 decay", Duration::from_secs(180), s3_decay),
        ("harmonic lift", Duration::from_secs(60), harmonic_lift),
        ("Martin comparison", Duration::from_secs(600), martin),
        ("classical Green", Duration::from_secs(60), classical_green),
        ("subcategory walks", Duration::from_secs(30), subcategory_suite),
        ("determinism and cache", Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let mut checks = Checks::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut checks)));
        let elapsed = started.elapsed();
        if let Err(e) = outcome {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            checks.check("completed", false, msg.unwrap_or_default());
        }
        checks.check("runtime", elapsed <= limit, format!("{:.2} s of {} s", elapsed.as_secs_f64(), limit.as_secs()));
        let bad: Vec<&(String, bool, String)> = checks.0.iter().filter(|c| !c.1).collect();
        let verdict = if bad.is_empty() { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {name} ({:.2} s)", i + 1, elapsed.as_secs_f64());
        for (check, ok, detail) in &checks.0 {
            println!("    {} {check}: {detail}", if *ok { "ok  " } else { "FAIL" });
        }
        if !bad.is_empty() {
            failed += 1;
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
