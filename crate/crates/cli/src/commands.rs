use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use qwalk::boundary::{
    check_harmonic, dirichlet_solve, invariance_decay, non_increasing, DecayReport, KilledGreen, KilledWalk,
    MartinHarness, MartinReport, SphereProfile,
};
use qwalk::catwalk::{check_h1, check_h2, h_prime, shadow_contraction, split_measure, SubRingData};
use qwalk::crossed::{delta_of_nu, CrossedElement, QGroupContext, Window};
use qwalk::fusion::{check_invariants, ClassicalGreen, FusionRing, LabelDomain, LabelMeasure, PointedRing};
use qwalk::groups::{Elem, Group};
use qwalk::Error;

use crate::cache::{self, Cache, Entry, Outcome};
use crate::report::{num, opt, Report, Table};
use crate::scenario::{Expectation, RunSection, Scenario};
use crate::CliError;

/// Labels of the pointed ring sampled by `fusion-check`.
const POINTED_SAMPLE: usize = 40;
/// Labels of `Irr(H)` sampled by `fusion-check`.
const IRR_SAMPLE: usize = 12;
/// Radius of the group ball listed by `describe`.
const DESCRIBE_RADIUS: u32 = 2;
/// Tolerance of the optional `h_e` and `green_e` targets.
const TARGET_TOL: f64 = 0.01;

pub struct Session {
    pub scenario: Scenario,
    pub dir: PathBuf,
    pub run: RunSection,
    pub cache: Cache,
    /// Cache outcomes, reported outside the deterministic report.
    pub cache_log: Vec<(String, Outcome)>,
}

impl Session {
    fn expect(&self, name: &str) -> Expectation {
        self.scenario.expect.get(name).copied().unwrap_or(Expectation::Pass)
    }

    fn new_report(&self, command: &str) -> Report {
        let params = serde_json::to_value(&self.run).expect("run section serializes");
        Report::new(command, &self.scenario.name, &self.scenario.hash(), params)
    }

    fn assert(&self, rep: &mut Report, name: &str, passed: bool, detail: impl Into<String>) {
        rep.assert(name, self.expect(name), passed, detail);
    }

    /// Partial sums of the killed walk for `x`, resumed from the cache when
    /// an entry at a lower or equal horizon exists.
    fn killed_green(&mut self, tag: &str, walk: &Arc<KilledWalk>, x: &CrossedElement) -> Result<KilledGreen, CliError> {
        let key = cache::key(&[&self.scenario.hash(), "killed-green", tag, &walk.radius().to_string()]);
        let mut g = KilledGreen::new(walk.clone(), x);
        let mut outcome = Outcome::Miss;
        if let Some(e) = self.cache.load(&key) {
            if e.horizon <= self.run.horizon && e.sections.len() == 2 && g.restore(e.horizon, &e.sections[0], &e.sections[1]).is_ok() {
                outcome = if e.horizon == self.run.horizon { Outcome::Hit } else { Outcome::Resumed { from: e.horizon } };
            }
        }
        g.advance_to(self.run.horizon)?;
        if outcome != Outcome::Hit {
            let (cur, sums) = g.snapshot();
            self.cache.store(&key, &Entry { horizon: g.horizon(), sections: vec![cur, sums] });
        }
        self.cache_log.push((format!("G({tag})"), outcome));
        Ok(g)
    }
}

fn word(g: &Group, x: &Elem) -> String {
    g.format(x)
}

fn profile_table(name: &str, prof: &[SphereProfile]) -> Table {
    let mut t = Table::new(name, &["sphere", "value", "blocks"]);
    for p in prof {
        t.push(vec![json!(p.sphere), opt(p.value), json!(p.blocks)]);
    }
    t
}

fn profile_values(prof: &[SphereProfile]) -> Value {
    Value::Array(prof.iter().map(|p| opt(p.value)).collect())
}

pub fn describe(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("describe");
    if s.scenario.group.is_some() {
        let ctx = s.scenario.build_context()?;
        let g = ctx.gamma();
        rep.result("generators", json!(g.generator_names()));
        let spheres = g.spheres(DESCRIBE_RADIUS, usize::MAX)?;
        rep.result("sphere_sizes", json!(spheres.iter().map(Vec::len).collect::<Vec<_>>()));
        let sym = ctx.symmetry();
        rep.result("symmetry", json!((0..ctx.s_order()).map(|i| ctx.s_name(i).to_string()).collect::<Vec<_>>()));
        let mut blocks = Table::new("blocks", &["block", "orbit", "stabilizer", "dim", "dual"]);
        for sphere in &spheres {
            for x in sphere.iter().filter(|x| sym.orbit_base(x) == **x) {
                let ob = ctx.orbit_blocks(x)?;
                let orbit: Vec<String> = ob.orbit.iter().map(|y| word(g, y)).collect();
                for b in &ob.blocks {
                    let dual = ctx.block_name(&ctx.dual_block(&b.label)?);
                    blocks.push(vec![
                        json!(ctx.block_name(&b.label)),
                        json!(orbit.join(" ")),
                        json!(ob.stabilizer.len()),
                        json!(b.dim),
                        json!(dual),
                    ]);
                }
            }
        }
        rep.tables.push(blocks);
        if s.scenario.state.is_some() {
            let phi = s.scenario.build_state(&ctx)?;
            rep.result("state_support", json!(phi.support_len()));
            rep.result("state_radius", json!(phi.radius()));
            let mut marg = Table::new("marginal", &["gamma", "weight"]);
            for (x, w) in phi.marginal().iter() {
                marg.push(vec![json!(word(g, x)), num(w)]);
            }
            rep.tables.push(marg);
            match phi.split(&ctx) {
                Ok(sp) => {
                    rep.result("t", num(sp.t));
                    rep.result("delta", num(delta_of_nu(sym.group(), &sp.nu)?));
                }
                Err(Error::SplitUndefined(m)) => rep.result("split", json!(m)),
                Err(e) => return Err(e.into()),
            }
        }
    }
    if s.scenario.ring.is_some() {
        let ring = s.scenario.build_ring(&s.dir)?;
        let mut t = Table::new("ring", &["label", "dim", "dual"]);
        for l in ring.labels() {
            t.push(vec![json!(ring.label_name(&l)), num(ring.dim(&l)?), json!(ring.label_name(&ring.dual(&l)?))]);
        }
        rep.tables.push(t);
    }
    Ok(rep)
}

fn invariant_rows<R: FusionRing>(
    s: &Session,
    rep: &mut Report,
    table: &mut Table,
    name: &str,
    ring: &R,
    sample: &[R::Label],
) -> Result<(), CliError> {
    let r = check_invariants(ring, sample, s.run.tolerance)?;
    for c in &r.checks {
        table.push(vec![json!(name), json!(c.name), json!(c.passed), num(c.worst)]);
    }
    s.assert(rep, &format!("invariants:{name}"), r.all_passed(), r.failures().join("; "));
    Ok(())
}

pub fn fusion_check(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("fusion-check");
    let mut table = Table::new("invariants", &["ring", "check", "passed", "worst"]);
    if s.scenario.ring.is_some() {
        let ring = s.scenario.build_ring(&s.dir)?;
        let sample: Vec<usize> = ring.labels().collect();
        invariant_rows(s, &mut rep, &mut table, "table", &ring, &sample)?;
    }
    if s.scenario.group.is_some() {
        let ctx = s.scenario.build_context()?;
        let pointed = PointedRing::new(ctx.gamma().clone());
        let sample: Vec<Elem> = pointed.labels().take(s.run.cap.min(POINTED_SAMPLE)).collect();
        invariant_rows(s, &mut rep, &mut table, "pointed", &pointed, &sample)?;
        if ctx.s_order() > 1 {
            let irr = ctx.irr();
            let sample: Vec<_> = irr.labels().take(IRR_SAMPLE).collect();
            invariant_rows(s, &mut rep, &mut table, "irr", &irr, &sample)?;
        }
    }
    if table.rows.is_empty() {
        return Err(CliError::Input("fusion-check needs a [ring] or [group] section".into()));
    }
    rep.tables.push(table);
    Ok(rep)
}

fn decay_table(r: &DecayReport) -> Table {
    let mut t = Table::new("decay", &["n", "r", "bound", "window"]);
    for (n, v) in r.r.iter().enumerate() {
        t.push(vec![
            json!(n),
            num(*v),
            num(r.rate_bound.powi(n as i32) * r.r[0]),
            json!(r.windows[n].to_string()),
        ]);
    }
    t
}

pub fn decay(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("decay");
    let ctx = s.scenario.build_context()?;
    let phi = s.scenario.build_state(&ctx)?;
    let x0 = s.scenario.start_element(&ctx)?;
    let (r, available) = match invariance_decay(&ctx, &x0, &phi, s.run.n_max) {
        Ok(r) => (r, true),
        Err(Error::BoundUnavailable(r)) => (*r, false),
        Err(e) => return Err(e.into()),
    };
    rep.result("t", num(r.t));
    rep.result("delta", num(r.delta));
    rep.result("rate_bound", num(r.rate_bound));
    rep.result("slope", opt(r.slope));
    rep.result("first_violation", json!(r.first_violation));
    rep.tables.push(decay_table(&r));
    s.assert(&mut rep, "bound_available", available, format!("δ = {}", r.delta));
    if available {
        s.assert(&mut rep, "bound_holds", r.bound_holds(), format!("first violation {:?}", r.first_violation));
        let limit = r.rate_bound.ln() + 0.02;
        let ok = r.slope.is_none_or(|sl| sl <= limit);
        s.assert(&mut rep, "slope", ok, format!("slope {:?} vs {limit}", r.slope));
    }
    Ok(rep)
}

/// Random element of `ker E` on `ball(radius)`: coefficients at `s ≠ e`.
fn random_off_element(ctx: &QGroupContext, radius: u32, rng: &mut ChaCha8Rng) -> Result<CrossedElement, CliError> {
    let mut terms = Vec::new();
    for x in ctx.gamma().ball(radius)? {
        for s in 1..ctx.s_order() {
            if rng.gen_bool(0.5) {
                terms.push(((x.clone(), s), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
            }
        }
    }
    Ok(CrossedElement::from_terms(terms, Window::Ball(radius)))
}

pub fn contraction(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("contraction");
    let ctx = s.scenario.build_context()?;
    let phi = s.scenario.build_state(&ctx)?;
    let sp = phi.split(&ctx)?;
    let delta = delta_of_nu(ctx.symmetry().group(), &sp.nu)?;
    let bound = 1.0 - sp.t * delta;
    rep.result("t", num(sp.t));
    rep.result("delta", num(delta));
    rep.result("bound", num(bound));
    let mut rng = ChaCha8Rng::seed_from_u64(s.run.seed);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for _ in 0..s.run.samples {
        let x = random_off_element(&ctx, s.run.sample_radius, &mut rng)?;
        let nx = ctx.norm(&x);
        if nx == 0.0 {
            continue;
        }
        let px = ctx.apply_p(&phi, &x)?;
        let off = px.sub(&ctx.conditional_e(&px));
        worst = worst.max(ctx.norm(&off) / nx);
        used += 1;
    }
    rep.result("samples", json!(used));
    rep.result("max_ratio", num(worst));
    s.assert(&mut rep, "sampled_bound", worst <= bound + 1e-9, format!("max ratio {worst} vs {bound}"));
    Ok(rep)
}

pub fn martin(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("martin");
    let ctx = s.scenario.build_context()?;
    let mu = match s.scenario.block_measure(&ctx)? {
        Some(mu) => mu,
        None => ctx.block_measure(&s.scenario.build_state(&ctx)?)?,
    };
    let (walk, phi_check) = MartinHarness::walk_for(&ctx, &mu, s.run.radius)?;
    let n = ctx.s_order() as f64;
    let i0 = ctx.i0();
    let p = ctx.p();
    let e_defect = ctx.conditional_e(&i0).max_abs_diff(&p.scaled(Complex64::new(1.0 / n, 0.0)));
    rep.result("e_i0_defect", num(e_defect));
    s.assert(&mut rep, "e_i0", e_defect <= 1e-15, format!("‖E(I₀) − p/{n}‖ = {e_defect}"));

    let g_unit = s.killed_green("I0", &walk, &i0)?.value();
    let mut h = MartinHarness::with_unit_green(&ctx, walk.clone(), phi_check, s.run.horizon, g_unit);
    let r_max = s.run.spheres;

    let gp = s.killed_green("p", &walk, &p)?.value();
    let defect = h.unit_defect_profile(&gp, r_max)?;
    rep.result("unit_defect", profile_values(&defect));
    s.assert(&mut rep, "unit_defect_decreasing", non_increasing(&defect), "n·1 − K(p) over spheres");
    rep.tables.push(profile_table("unit_defect", &defect));

    let zname = match &s.run.martin_block {
        Some(b) => b.clone(),
        None => {
            let first = ctx.gamma().spheres(1, usize::MAX)?.pop().and_then(|v| v.into_iter().next());
            let base = first.ok_or_else(|| CliError::Input("group has no sphere 1".into()))?;
            ctx.block_name(&ctx.orbit_blocks(&base)?.blocks[0].label)
        }
    };
    let zb = ctx.parse_block(&zname)?;
    let (ob, i) = ctx.block(&zb)?;
    let z = ob.blocks[i].idempotent.clone();
    let gz = s.killed_green(&format!("z:{zname}"), &walk, &z)?.value();
    let rho = h.compare_profile(&z, &gz, r_max)?;
    let report = MartinReport::from_profile(s.run.horizon, s.run.radius, rho);
    rep.result("martin_block", json!(zname));
    rep.result("rho", profile_values(&report.profile));
    rep.result("rho_ratio", opt(report.ratio));
    rep.result("truncated", json!(report.truncated));
    s.assert(&mut rep, "rho_strictly_decreasing", report.strictly_decreasing, "ρ(r) over spheres");
    let ratio_ok = report.ratio.is_some_and(|q| q < 0.5);
    s.assert(&mut rep, "rho_ratio", ratio_ok, format!("ρ(last)/ρ(1) = {:?}", report.ratio));
    rep.tables.push(profile_table("rho", &report.profile));

    let e_orbit = ctx.orbit_blocks(&Elem::identity())?;
    if e_orbit.blocks.len() >= 2 {
        let y = e_orbit.blocks[0].idempotent.sub(&e_orbit.blocks[1].idempotent);
        let gy = s.killed_green("witness", &walk, &y)?.value();
        let w = h.kernel_profile(&gy, r_max)?;
        rep.result("witness", profile_values(&w));
        s.assert(&mut rep, "witness_decreasing", non_increasing(&w), "K(z₊ − z₋) over spheres");
        rep.tables.push(profile_table("witness", &w));
    }
    Ok(rep)
}

fn walk_measure(s: &Session, ctx: &QGroupContext) -> Result<LabelMeasure<Elem>, CliError> {
    if s.scenario.state.is_some() {
        Ok(s.scenario.build_state(ctx)?.marginal())
    } else {
        Ok(LabelMeasure::uniform(ctx.gamma().step_generators()))
    }
}

pub fn harmonic(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("harmonic");
    let ctx = s.scenario.build_context()?;
    let g = ctx.gamma();
    let phi = match &s.scenario.state {
        Some(_) => s.scenario.build_state(&ctx)?,
        None => {
            let mu: Vec<(Elem, f64)> = walk_measure(s, &ctx)?.iter().map(|(x, w)| (x.clone(), w)).collect();
            qwalk::crossed::NormalTrace::from_pair(&ctx, &mu, &[])?
        }
    };
    let mu = phi.marginal();
    let names = g.generator_names();
    let branch = s.run.branch.clone().unwrap_or_else(|| names[0].clone());
    let factor = names
        .iter()
        .position(|n| *n == branch)
        .ok_or_else(|| CliError::Input(format!("run.branch: unknown generator {branch:?}")))? as u16;
    let indicator = |x: &Elem| match x.syllables().last() {
        Some(sy) if sy.factor == factor => 1.0,
        _ => 0.0,
    };
    let radius = s.run.dirichlet_radius;
    let sol = dirichlet_solve(g, &mu, radius, indicator)?;
    let x = ctx.from_function(|y| sol.value(y).unwrap_or(0.0), radius)?;
    let residual = check_harmonic(&ctx, &x, &phi)?;
    let he = sol.value(&Elem::identity()).unwrap_or(f64::NAN);
    rep.result("radius", json!(radius));
    rep.result("interior_radius", json!(sol.interior_radius));
    rep.result("least_squares", json!(sol.least_squares));
    rep.result("h_e", num(he));
    rep.result("residual", num(residual));
    let mut t = Table::new("h", &["gamma", "value"]);
    for y in g.ball(radius.min(2))? {
        t.push(vec![json!(word(g, &y)), num(sol.value(&y).unwrap_or(f64::NAN))]);
    }
    rep.tables.push(t);
    s.assert(&mut rep, "harmonic", residual < 1e-8, format!("‖P(h) − h‖ = {residual}"));
    s.assert(&mut rep, "e_fixed", ctx.conditional_e(&x) == x, "E(h) = h");
    if let Some(target) = s.run.h_e {
        s.assert(&mut rep, "h_e", (he - target).abs() <= TARGET_TOL, format!("h(e) = {he} vs {target}"));
    }
    Ok(rep)
}

fn catwalk_on<R: FusionRing>(s: &Session, rep: &mut Report, ring: &R) -> Result<(), CliError> {
    let sec = s.scenario.subcategory.as_ref().expect("checked by caller");
    let labels = sec.labels.iter().map(|l| ring.parse_label(l)).collect::<qwalk::Result<Vec<_>>>()?;
    let sub = SubRingData::new(ring, labels)?;
    let h = h_prime(&sub);
    let mut t = Table::new("h_prime", &["label", "weight"]);
    for (l, w) in h.iter() {
        t.push(vec![json!(ring.label_name(l)), num(w)]);
    }
    rep.tables.push(t);
    rep.result("global_dim", num(sub.global_dim()));

    let h1 = check_h1(&sub, s.run.trials, s.run.seed)?;
    let detail = |w: &Option<qwalk::catwalk::Witness<R::Label>>| match w {
        None => String::new(),
        Some(w) => match &w.label {
            Some(l) => format!("witness δ_{} (difference {})", ring.label_name(l), w.difference),
            None => format!("witness random measure (difference {})", w.difference),
        },
    };
    s.assert(rep, "h1", h1.passed, detail(&h1.witness));
    let h2 = check_h2(&sub, s.run.trials, s.run.cap, s.run.seed)?;
    rep.result("h2_labels_tested", json!(h2.labels_tested));
    rep.result("h2_capped", json!(h2.capped));
    rep.result("h2_witness", json!(h2.witness.as_ref().and_then(|w| w.label.as_ref()).map(|l| ring.label_name(l))));
    s.assert(rep, "h2", h2.passed, detail(&h2.witness));

    if !sec.mu.is_empty() {
        let mu = LabelMeasure::new(
            sec.mu.iter().map(|(l, w)| Ok((ring.parse_label(l)?, *w))).collect::<qwalk::Result<Vec<_>>>()?,
        )?;
        let sp = split_measure(&mu, &sub)?;
        rep.result("t", num(sp.t));
        rep.result("delta", num(sp.delta));
        let recon = sp.reconstruct().max_abs_diff(&mu);
        s.assert(rep, "split", recon <= 1e-14 && !sp.degenerate(), format!("reconstruction {recon}, δ = {}", sp.delta));
        let window: Vec<R::Label> = ring.labels().take(s.run.cap).collect();
        let sh = shadow_contraction(&sub, &sp.mu1, &window, s.run.samples, s.run.seed, s.run.cap.saturating_mul(64))?;
        rep.result("shadow_max_ratio", num(sh.max_ratio));
        rep.result("shadow_bound", num(sh.bound));
        s.assert(rep, "shadow", sh.holds(), format!("{} ≤ {} on {} samples", sh.max_ratio, sh.bound, sh.samples));
    }
    Ok(())
}

pub fn catwalk(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("catwalk");
    let sec = s.scenario.subcategory.as_ref().ok_or_else(|| CliError::Input("catwalk needs [subcategory]".into()))?;
    match sec.ring.as_str() {
        "table" => {
            let ring = s.scenario.build_ring(&s.dir)?;
            catwalk_on(s, &mut rep, &ring)?;
        }
        "pointed" => {
            let ring = PointedRing::new(s.scenario.build_group()?);
            catwalk_on(s, &mut rep, &ring)?;
        }
        "irr" => {
            let ctx = s.scenario.build_context()?;
            catwalk_on(s, &mut rep, &ctx.irr())?;
        }
        other => {
            return Err(CliError::Input(format!(
                "subcategory.ring: expected \"table\", \"pointed\" or \"irr\", got {other:?}"
            )))
        }
    }
    Ok(rep)
}

pub fn green_classical(s: &mut Session) -> Result<Report, CliError> {
    let mut rep = s.new_report("green-classical");
    let ctx = s.scenario.build_context()?;
    let ring = PointedRing::new(ctx.gamma().clone());
    let mu = walk_measure(s, &ctx)?;
    let domain = Arc::new(LabelDomain::build(&ring, &mu, Some(s.run.window), usize::MAX)?);
    let e = Elem::identity();
    let mut acc = ClassicalGreen::new(domain.clone(), &e, std::slice::from_ref(&e), u64::MAX)?;
    let key = cache::key(&[&s.scenario.hash(), "classical-green", &s.run.window.to_string()]);
    let mut outcome = Outcome::Miss;
    if let Some(entry) = s.cache.load(&key) {
        if entry.horizon <= s.run.horizon && entry.sections.len() == 3 {
            let mut sec = entry.sections.into_iter();
            let (c, su, hi) = (sec.next().unwrap(), sec.next().unwrap(), sec.next().unwrap());
            if acc.restore(entry.horizon, c, su, vec![hi]).is_ok() {
                outcome =
                    if entry.horizon == s.run.horizon { Outcome::Hit } else { Outcome::Resumed { from: entry.horizon } };
            }
        }
    }
    acc.advance_to(s.run.horizon)?;
    if outcome != Outcome::Hit {
        let (c, su, mut hi) = acc.snapshot();
        s.cache.store(&key, &Entry { horizon: acc.horizon(), sections: vec![c, su, hi.remove(0)] });
    }
    s.cache_log.push(("G(e, e)".into(), outcome));
    let table = acc.table();
    let value = table.get(&e).unwrap_or(0.0);
    let tail = table.tails[&e];
    rep.result("green_e_e", num(value));
    rep.result("tail_ratio", num(tail.ratio));
    rep.result("tail_estimate", num(tail.tail));
    rep.result("domain_labels", json!(domain.labels().len()));
    rep.result("truncation", json!(table.truncation));
    s.assert(&mut rep, "transient", !tail.suspect_recurrent, format!("increment ratio {}", tail.ratio));
    if let Some(target) = s.run.green_e {
        s.assert(&mut rep, "green_e", (value - target).abs() <= TARGET_TOL, format!("G(e, e) = {value} vs {target}"));
    }
    Ok(rep)
}
