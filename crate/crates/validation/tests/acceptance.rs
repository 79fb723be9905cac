//! Acceptance criteria 1 to 10. Each test prints one `criterion N: PASS|FAIL` line
//! to the real stdout, so the lines show up without `--nocapture`.

use std::cmp::Ordering;
use std::io::Write;
use std::time::{Duration, Instant};

use maxlab::counterexamples::{
    continuous_base, continuous_member, discrete_member, heights, reproduce, Family, RecordFunction, Setting,
};
use maxlab::experiments::{
    converge_thm1, converge_thm2, fuzz_inequalities, monotone_instance, random_bv, random_pwl, random_step,
    variation_ratio, ContinuousFamily, DiscreteFamily, ExperimentReport, ExperimentVerdict, Inequality, RandomBVSpec,
};
use maxlab::maxcont::{one_sided_max, step_max_continuous, uncentered_max_continuous};
use maxlab::maxdisc::maximal_discrete;
use maxlab::structure::{
    check_contact, derivative_formula_check, disconnecting_set, one_sided_control_check, tail_limits, uniform_grid,
    Verdict,
};
use maxlab::{Average, Beta, DiscreteBVFunction, FloatPwl, OperatorVariant, Rational, Scalar, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use maxlab_validation::{bvnorm, discrete_classical, discrete_fractional, half, pwl_left, pwl_right, q, step_lattice};

fn announce(n: u32, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n}: {status} {detail}").unwrap();
}

/// Collects failed sub-checks of one criterion.
struct Criterion {
    n: u32,
    failures: Vec<String>,
}

impl Criterion {
    fn new(n: u32) -> Self {
        Criterion { n, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn finish(self, summary: &str) {
        let ok = self.failures.is_empty();
        let detail = if ok { summary.to_string() } else { format!("{summary}; {}", self.failures.join("; ")) };
        announce(self.n, ok, &detail);
        assert!(ok, "criterion {} failed: {}", self.n, self.failures.join("; "));
    }
}

fn disc_value(f: &DiscreteBVFunction<Rational>, n: i64, v: &OperatorVariant) -> Average<Rational> {
    maximal_discrete(f, n, v).unwrap().average().cloned().expect("finite")
}

fn cont_value(f: &maxlab::ExactStep, x: i64, v: &OperatorVariant) -> f64 {
    step_max_continuous(f, &Rational::int(x), v).unwrap().to_f64()
}

fn pow(x: f64, beta: Beta) -> f64 {
    x.powf(beta.as_f64() - 1.0)
}

/// `(|Δ|^q / d^(q-1))^(1/q)` for two points at distance `d`.
fn two_point_varq(gap: f64, d: f64, beta: Beta) -> f64 {
    let qq = beta.q_f64();
    (gap.powf(qq) / d.powf(qq - 1.0)).powf(1.0 / qq)
}

#[test]
fn criterion_1_discrete_uncentered_fractional() {
    let start = Instant::now();
    let beta = half();
    let variant = OperatorVariant::uncentered(beta);
    let mut c = Criterion::new(1);

    let delta = DiscreteBVFunction::<Rational>::delta_at_origin();
    let (b0, b1) = (disc_value(&delta, 0, &variant), disc_value(&delta, 1, &variant));
    let base = b1.to_f64() - b0.to_f64();
    c.check((base - (2f64.powf(-0.5) - 1.0)).abs() <= 1e-12, || format!("base derivative {base}"));
    c.check((base + 0.2928932).abs() < 1e-7, || format!("base derivative {base} is not -0.2928932"));

    let hs = heights(Setting::Thm5, beta, 20).unwrap();
    c.check(hs[0] == 4, || format!("h_1 = {}", hs[0]));
    let l1 = RecordFunction::new(Family::L, 1, beta);
    let three_halves = Average::of_value(q(3, 2), beta);
    c.check(l1.average(3).same_value(&l1.average(0)), || "L_1(3) and L_1(0) differ".into());
    c.check(l1.average(0).same_value(&three_halves), || "L_1(0) is not 3/2".into());
    c.check(l1.average(4).compare(&three_halves) == Ordering::Greater, || "L_1(4) is not a strict record".into());

    let mut min_gap = f64::INFINITY;
    for (i, &h) in hs.iter().enumerate() {
        let j = i as u32 + 1;
        let fj = discrete_member(j, h).unwrap();
        let (v0, v1) = (disc_value(&fj, 0, &variant), disc_value(&fj, 1, &variant));
        c.check(v0.compare(&v1) == Ordering::Equal, || format!("j = {j}: M f_j(1) != M f_j(0) exactly"));
        let d = v1.to_f64() - v0.to_f64();
        c.check(d.abs() <= 1e-12, || format!("j = {j}: float derivative {d}"));
        let gap = (d - base).abs();
        min_gap = min_gap.min(gap);
        c.check(gap >= 0.29, || format!("j = {j}: gap {gap}"));
        let dist = bvnorm(&fj.sub(&delta));
        c.check(dist == q(1, j as i64), || format!("j = {j}: BV distance {dist}"));
    }
    let rep = reproduce(Setting::Thm5, beta, 20).unwrap();
    c.check(rep.passed(), || format!("reproduction failures: {:?}", rep.failures));
    let elapsed = start.elapsed();
    c.check(elapsed <= Duration::from_secs(60), || format!("runtime {elapsed:?}"));
    c.finish(&format!("j<=20, h_1={}, min gap {min_gap:.7}, runtime {:.2}s", hs[0], elapsed.as_secs_f64()));
}

#[test]
fn criterion_2_discrete_centered_fractional() {
    let beta = half();
    let variant = OperatorVariant::centered(beta);
    let mut c = Criterion::new(2);
    let delta = DiscreteBVFunction::<Rational>::delta_at_origin();
    let base = disc_value(&delta, 1, &variant).to_f64() - disc_value(&delta, 0, &variant).to_f64();
    c.check((base - (3f64.powf(-0.5) - 1.0)).abs() <= 1e-12, || format!("base derivative {base}"));
    c.check((base + 0.4226497).abs() < 1e-7, || format!("base derivative {base} is not -0.4226497"));

    let hs = heights(Setting::Thm6, beta, 20).unwrap();
    let mut first_below = None;
    let mut worst = 0f64;
    for (i, &h) in hs.iter().enumerate() {
        let j = i as u32 + 1;
        let fj = discrete_member(j, h).unwrap();
        let got = (disc_value(&fj, 1, &variant).to_f64() - disc_value(&fj, 0, &variant).to_f64()).abs();
        let want = (1.0 + (h + 1) as f64 / (2.0 * f64::from(j))) * (pow((2 * h - 1) as f64, beta) - pow((2 * h + 1) as f64, beta));
        worst = worst.max((got - want).abs());
        c.check((got - want).abs() <= 1e-10, || format!("j = {j}: derivative {got} vs closed form {want}"));
        if got < 0.05 && first_below.is_none() {
            first_below = Some(j);
        }
    }
    c.check(first_below.is_some(), || "derivative never drops below 0.05".into());
    let below = first_below.map_or("never".to_string(), |j| format!("from j = {j}"));
    c.finish(&format!("max closed-form error {worst:.1e}, below 0.05 {below}"));
}

#[test]
fn criterion_3_continuous_uncentered_fractional() {
    let beta = half();
    let variant = OperatorVariant::uncentered(beta);
    let mut c = Criterion::new(3);
    let f = continuous_base();
    let (b0, b2) = (cont_value(&f, 0, &variant), cont_value(&f, 2, &variant));
    c.check((b0 - 1.0).abs() <= 1e-9, || format!("M f(0) = {b0}"));
    c.check((b2 - 2f64.powf(-0.5)).abs() <= 1e-9, || format!("M f(2) = {b2}"));

    let threshold = ((1.0 - 2f64.powf(-0.5)).powi(2) / 2.0).sqrt() - 1e-6;
    let mut min_lb = f64::INFINITY;
    for (i, &h) in heights(Setting::Thm3, beta, 10).unwrap().iter().enumerate() {
        let j = i as u32 + 1;
        let fj = continuous_member(j, h).unwrap();
        let (v0, v2) = (cont_value(&fj, 0, &variant), cont_value(&fj, 2, &variant));
        c.check((v0 - v2).abs() <= 1e-9, || format!("j = {j}: M f_j(0) = {v0}, M f_j(2) = {v2}"));
        let lb = two_point_varq(((v2 - v0) - (b2 - b0)).abs(), 2.0, beta);
        min_lb = min_lb.min(lb);
        c.check(lb >= threshold, || format!("j = {j}: Var_q lower bound {lb}"));
    }
    c.finish(&format!("j<=10, min Var_q lower bound {min_lb:.8} (threshold {threshold:.8})"));
}

#[test]
fn criterion_4_continuous_centered_fractional() {
    let beta = half();
    let variant = OperatorVariant::centered(beta);
    let mut c = Criterion::new(4);
    let f = continuous_base();
    let (b0, b2) = (cont_value(&f, 0, &variant), cont_value(&f, 2, &variant));
    c.check((b0 - 2f64.powf(-0.5)).abs() <= 1e-9, || format!("M f(0) = {b0}"));
    c.check((b2 - 0.5).abs() <= 1e-9, || format!("M f(2) = {b2}"));

    let mut diffs = Vec::new();
    for (i, &h) in heights(Setting::Thm4, beta, 10).unwrap().iter().enumerate() {
        let j = i as u32 + 1;
        let fj = continuous_member(j, h).unwrap();
        let got = cont_value(&fj, 2, &variant) - cont_value(&fj, 0, &variant);
        let want = (1.0 + h as f64 / (2.0 * f64::from(j))) * (pow((2 * h - 4) as f64, beta) - pow((2 * h) as f64, beta));
        c.check((got - want).abs() <= 1e-9, || format!("j = {j}: difference {got} vs closed form {want}"));
        diffs.push(got);
    }
    c.check(diffs.iter().all(|d| *d > 0.0), || format!("differences not positive: {diffs:?}"));
    c.check(diffs.windows(2).all(|w| w[1] < w[0]), || format!("differences not decreasing: {diffs:?}"));
    c.finish(&format!("difference {:.6} at j=1 down to {:.6} at j=10", diffs[0], diffs[diffs.len() - 1]));
}

fn violations(report: &ExperimentReport) -> f64 {
    report.column("violation").unwrap().iter().sum()
}

#[test]
fn criterion_5_inequality_fuzzing() {
    let start = Instant::now();
    let mut c = Criterion::new(5);
    let spec = RandomBVSpec::with_seed(42);
    let var = fuzz_inequalities(&spec, 10_000, Inequality::VarBound, Beta::ZERO).unwrap();
    let n_var = violations(&var);
    c.check(var.rows.len() == 10_000, || format!("{} var-bound trials", var.rows.len()));
    c.check(n_var == 0.0, || format!("{n_var} violations of Var(M f) <= Var(f)"));
    let max_ratio = var.column("ratio").unwrap().into_iter().fold(0f64, f64::max);

    let ratio = variation_ratio(&monotone_instance()).unwrap();
    c.check(ratio == Some(Rational::int(1)), || {
        format!("monotone instance has ratio {}, not 1", ratio.as_ref().map_or("undefined".into(), |r| r.to_string()))
    });

    let varq = fuzz_inequalities(&spec, 1_000, Inequality::VarqBound, half()).unwrap();
    let n_varq = violations(&varq);
    c.check(varq.rows.len() == 1_000, || format!("{} varq trials", varq.rows.len()));
    c.check(n_varq == 0.0, || format!("{n_varq} violations of the Var_q bound"));
    let elapsed = start.elapsed();
    c.check(elapsed <= Duration::from_secs(300), || format!("runtime {elapsed:?}"));
    c.finish(&format!(
        "{n_var} + {n_varq} violations, max random ratio {max_ratio}, runtime {:.1}s",
        elapsed.as_secs_f64()
    ));
}

#[test]
fn criterion_6_structural_checks() {
    let mut c = Criterion::new(6);
    let mut counts = [0usize; 3];
    let mut applicable = 0usize;
    for i in 0..1_000u64 {
        let spec = RandomBVSpec { seed: 6, tails: ((i % 5) as i64 - 2, ((i / 5) % 5) as i64 - 2), ..RandomBVSpec::default() };
        let f = random_bv(&spec, i).unwrap();
        let contact = check_contact(&f).unwrap();
        if !contact.passed() {
            counts[0] += 1;
            c.check(counts[0] > 3, || format!("contact: {:?}", contact.violations));
        }
        for n in (f.core_lo() - 2)..=(f.core_hi() + 2) {
            let r = one_sided_control_check(&f, n).unwrap();
            match r.verdict {
                Verdict::Fail => {
                    counts[1] += 1;
                    c.check(counts[1] > 3, || format!("one-sided control at {n}: {:?}", r.violations));
                }
                Verdict::Pass => applicable += 1,
                Verdict::NotApplicable => {}
            }
        }
        let (_, tails) = tail_limits(&f, 64).unwrap();
        if !tails.passed() {
            counts[2] += 1;
            c.check(counts[2] > 3, || format!("tail limits: {:?}", tails.violations));
        }
    }
    c.check(counts.iter().all(|k| *k == 0), || format!("violation counts {counts:?}"));
    c.finish(&format!("1000 instances, violations {counts:?}, {applicable} applicable one-sided points"));
}

#[test]
fn criterion_7_discrete_continuity() {
    let mut c = Criterion::new(7);
    let delta = DiscreteBVFunction::<Rational>::delta_at_origin();
    let families = [
        DiscreteFamily::Block { lo: 0, hi: 4 },
        DiscreteFamily::Spike,
        DiscreteFamily::Record { setting: Setting::Thm5, beta: half() },
    ];
    let mut summary = Vec::new();
    for fam in &families {
        let report = converge_thm2(&delta, fam, 50).unwrap();
        let last = *report.column("var_difference").unwrap().last().unwrap();
        let bl = *report.column("brezis_lieb_gap").unwrap().last().unwrap();
        let norms = report.column("bv_norm").unwrap();
        c.check(norms.iter().enumerate().all(|(i, v)| (v - 1.0 / (i as f64 + 1.0)).abs() < 1e-15), || {
            format!("{}: perturbation norms are not 1/j", fam.label())
        });
        c.check(report.verdict == ExperimentVerdict::Converges, || {
            format!("{}: verdict {} with Var(D_50) = {last:.3e}", fam.label(), report.verdict)
        });
        c.check(bl <= 1e-6, || format!("{}: Brezis-Lieb gap {bl:.3e} at j = 50", fam.label()));
        summary.push(format!("{} {last:.3e}/{bl:.1e}", fam.label()));
    }
    c.finish(&format!("Var(D_50)/BL gap: {}", summary.join(", ")));
}

#[test]
fn criterion_8_continuous_continuity() {
    let mut c = Criterion::new(8);
    let tent = FloatPwl::tent();
    let report = converge_thm1(&tent, &ContinuousFamily::Scaled(tent.clone()), 1e-3, 30).unwrap();
    let du = *report.column("derivative_distance").unwrap().last().unwrap();
    let dr = *report.column("right_distance").unwrap().last().unwrap();
    c.check(report.verdict == ExperimentVerdict::Converges, || {
        format!("uncentered verdict {} with distance {du:.4e} at j = 30", report.verdict)
    });
    let right = report.checks.iter().find(|k| k.name == "right_operator").unwrap();
    c.check(right.passed, || format!("M_R distance {dr:.4e} at j = 30 does not converge"));

    let spec = RandomBVSpec::with_seed(8);
    let mut bad = 0;
    for i in 0..50 {
        let f = random_pwl(&spec, i).unwrap().to_f64();
        let (lo, hi) = f.hull();
        let set = disconnecting_set(&f, &uniform_grid(lo - 1.0, hi + 1.0, 1e-3)).unwrap();
        if !set.report.passed() {
            bad += 1;
            c.check(bad > 3, || format!("instance {i}: {:?}", &set.report.violations[..set.report.violations.len().min(3)]));
        }
    }
    c.check(bad == 0, || format!("{bad} of 50 instances violate the sign facts"));
    c.finish(&format!("j=30 distances: uncentered {du:.4e}, right {dr:.4e}; sign facts on 50 instances, {bad} failing"));
}

#[test]
fn criterion_9_oracle_equivalence() {
    let mut c = Criterion::new(9);
    let mut worst_frac = 0f64;
    for i in 0..500u64 {
        let classical = i % 2 == 0;
        let centered = i % 4 >= 2;
        let tails = if classical { ((i % 7) as i64 - 3, ((i / 7) % 7) as i64 - 3) } else { (0, 0) };
        let spec = RandomBVSpec { seed: 9, tails, ..RandomBVSpec::default() };
        let f = random_bv(&spec, i).unwrap();
        let beta = if classical { Beta::ZERO } else { half() };
        let variant = if centered { OperatorVariant::centered(beta) } else { OperatorVariant::uncentered(beta) };
        for n in (f.core_lo() - 3)..=(f.core_hi() + 3) {
            let got = maximal_discrete(&f, n, &variant).unwrap();
            if classical {
                let want = discrete_classical(&f, n, centered);
                let v = got.value().expect("finite");
                c.check(v == want, || format!("instance {i} at {n} ({variant}): {v} vs oracle {want}"));
            } else {
                let want = discrete_fractional(&f, n, centered, beta);
                let err = (got.to_f64() - want).abs();
                worst_frac = worst_frac.max(err);
                c.check(err <= 1e-10, || format!("instance {i} at {n} ({variant}): error {err:.3e}"));
            }
        }
    }

    let spec = RandomBVSpec::with_seed(99);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_cont = 0f64;
    for i in 0..100u64 {
        let f = random_pwl(&spec, i).unwrap().to_f64();
        let (lo, hi) = f.hull();
        for _ in 0..3 {
            let x = rng.gen_range(lo - 0.5..hi + 0.5);
            let r = one_sided_max(&f, &x, Side::Right).unwrap().to_f64();
            let l = one_sided_max(&f, &x, Side::Left).unwrap().to_f64();
            let u = uncentered_max_continuous(&f, &x).unwrap().to_f64();
            let (rw, lw) = (pwl_right(&f, x), pwl_left(&f, x));
            for (name, got, want) in [("M_R", r, rw), ("M_L", l, lw), ("uncentered", u, rw.max(lw))] {
                let err = (got - want).abs();
                worst_cont = worst_cont.max(err);
                c.check(err <= 1e-6, || format!("pwl {i} at {x}: {name} {got} vs search {want}"));
            }
        }
    }
    for i in 0..100u64 {
        let f = random_step(&spec, i).unwrap();
        let (lo, hi) = f.hull().unwrap();
        let m = 8;
        let (lo_m, hi_m) = ((lo * Rational::int(m)).to_integer(), (hi * Rational::int(m)).to_integer());
        let lo_m: i64 = lo_m.try_into().unwrap();
        let hi_m: i64 = hi_m.try_into().unwrap();
        for _ in 0..2 {
            let x = q(rng.gen_range(lo_m - m..=hi_m + m), m);
            for (centered, beta) in [(false, Beta::ZERO), (true, Beta::ZERO), (false, half()), (true, half())] {
                let variant = if centered { OperatorVariant::centered(beta) } else { OperatorVariant::uncentered(beta) };
                let got = step_max_continuous(&f, &x, &variant).unwrap().to_f64();
                let want = step_lattice(&f, &x, centered, beta, m, 2);
                let err = (got - want).abs();
                worst_cont = worst_cont.max(err);
                c.check(err <= 1e-6, || format!("step {i} at {x} ({variant}): {got} vs lattice {want}"));
            }
        }
    }
    c.finish(&format!(
        "500 discrete instances (worst fractional error {worst_frac:.1e}), 200 continuous instances (worst error {worst_cont:.1e})"
    ));
}

#[test]
fn criterion_10_derivative_formula() {
    let spec = RandomBVSpec::with_seed(10);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut pass, mut fail) = (0usize, 0usize);
    for i in 0..100 {
        let f = random_pwl(&spec, i).unwrap().to_f64();
        let (lo, hi) = f.hull();
        for _ in 0..10 {
            let x = rng.gen_range(lo..hi);
            match derivative_formula_check(&f, x).unwrap().verdict {
                Verdict::Pass => pass += 1,
                Verdict::Fail => fail += 1,
                Verdict::NotApplicable => {}
            }
        }
    }
    let rate = pass as f64 / (pass + fail).max(1) as f64;
    let mut c = Criterion::new(10);
    c.check(pass + fail > 0, || "no applicable points".into());
    c.check(rate >= 0.95, || format!("pass rate {rate:.4}"));
    c.finish(&format!("{pass} of {} applicable points pass ({:.2}%)", pass + fail, 100.0 * rate));
}
