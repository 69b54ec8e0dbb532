//! Acceptance suite: one PASS/FAIL line per criterion, with wall time.

use std::process::{Command, ExitCode};
use std::time::Instant;

use affdim::diagnostics::{
    mass_distribution_check, obnc_check, projection_density_check, sample_directions,
    sample_points, slice_dimension_criterion, verify_example_hypotheses, Rect,
};
use affdim::domination::find_multicone;
use affdim::pressure::{affinity_closed_form, affinity_upper_bound};
use affdim::slices::{slice_content, slice_integral_h, slice_measure_eta, slice_subinvariance};
use affdim::symbolic::{compose_word, stopping_section, SectionVariant, SECTION_CAP};
use affdim::transfer::{comparability_band, s0_surrogate};
use affdim::{
    DominationCertificate, IfsSystem, InfiniteWord, KaenmakiApprox, KaenmakiMeasure, Preset,
    ProjPoint, SliceQuery, TransferOperator, Verdict, Word,
};

const SEED: u64 = 0x5EED;
const QUAD: usize = 128;
const R_MIN: f64 = 2e-3;

type Check = Result<(bool, String), String>;

struct Suite {
    failures: usize,
    notes: Vec<String>,
}

impl Suite {
    fn run(&mut self, id: &str, name: &str, budget_secs: f64, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok && secs < budget_secs, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let over = if secs >= budget_secs {
            format!(" over budget {budget_secs}s")
        } else {
            String::new()
        };
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {id:<3} {name:<44} {detail} ({secs:.2}s{over})",
            if ok { "PASS" } else { "FAIL" }
        );
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn cert(sys: &IfsSystem) -> Result<DominationCertificate, String> {
    find_multicone(sys, 4, 200).map_err(e)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f decreasing, root of f = 1.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Periodic words built from the leading symbols of seeded sample words.
fn sample_bases(sys: &IfsSystem, count: usize) -> Vec<InfiniteWord> {
    sample_points(sys, count, SEED)
        .into_iter()
        .map(|(w, _)| InfiniteWord::periodic(&w.prefix(6)))
        .collect()
}

fn all_words(n: usize, len: usize) -> impl Iterator<Item = Word> {
    (0..n.pow(len as u32)).map(move |i| Word::from_index(i, len, n))
}

// ---------------------------------------------------------------- 1

fn c1() -> Check {
    let fig = Preset::Figure1;
    let rep = slice_dimension_criterion(&fig.system(), &fig.carpet().unwrap(), 1).map_err(e)?;
    let oracle = 3f64.ln() / 5f64.ln();
    let ok = (rep.slice_dimension - oracle).abs() <= 1e-6
        && (rep.slice_dimension - 0.6826062).abs() <= 1e-6;
    Ok((ok, format!("log3/log5 = {:.7}", rep.slice_dimension)))
}

// ---------------------------------------------------------------- 2

fn c2() -> Check {
    let fig = Preset::Figure1;
    let sys = fig.system();
    // Level one by hand: five maps diag(1/3, 1/5), one with singular values 0.3, 0.1.
    let oracle = bisect(
        |s| 5.0 * (1.0 / 3.0) * 0.2f64.powf(s - 1.0) + 0.3 * 0.1f64.powf(s - 1.0),
        1.0,
        2.0,
    );
    let mut s = Vec::new();
    for n in [1, 2, 4, 8] {
        s.push(affinity_upper_bound(&sys, n, 1e-12).map_err(e)?.s_n);
    }
    let monotone = s.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let capped = s.iter().all(|&x| x <= 1.607);
    let rep = affdim::diagnostics::slice_dimension_verdict(&fig.carpet().unwrap(), s[3], 8);
    let ok = (s[0] - 1.3970).abs() <= 1e-3
        && (s[0] - oracle).abs() <= 1e-9
        && monotone
        && capped
        && rep.verdict == Verdict::NullMeasure
        && rep.s_n - 1.0 < 0.68261;
    Ok((
        ok,
        format!(
            "s1,s2,s4,s8 = {:.6},{:.6},{:.6},{:.6}; verdict {:?}",
            s[0], s[1], s[2], s[3], rep.verdict
        ),
    ))
}

// ---------------------------------------------------------------- 3

fn c3(notes: &mut Vec<String>) -> Check {
    let ex1 = affinity_closed_form(&Preset::Ex1Diag.system()).map_err(e)?;
    let ex1_oracle = 1.0 + (10.0f64 / 3.0).ln() / 121f64.ln();
    let ex2 = affinity_closed_form(&Preset::Ex2Triangular(28).system()).map_err(e)?;
    // 28 maps with diagonal (1/29, 1/3): 28/3 · 29^{1−s} = 1.
    let ex2_oracle = 1.0 + (28.0f64 / 3.0).ln() / 29f64.ln();
    let h1 = verify_example_hypotheses(Preset::Ex1Diag).map_err(e)?;
    let h2 = verify_example_hypotheses(Preset::Ex2Triangular(28)).map_err(e)?;
    let v1 = h1.hypotheses[1].value;
    let v2 = h1.hypotheses[2].value;
    let v3 = h2.hypotheses[3].value;
    let v3_oracle = 84.0 * 29f64.powf(-2.0 * (ex2_oracle - 1.0));
    let ok = (ex1 - ex1_oracle).abs() <= 1e-9
        && 1.25 < ex1
        && ex1 < 1.5
        && (ex2 - ex2_oracle).abs() <= 1e-9
        && (v1 - 10.0 / 3.0 * 121f64.powf(-0.25)).abs() <= 1e-4
        && (v1 - 1.00506).abs() <= 1e-4
        && v1 > 1.0
        && (v2 - 10.0 / 11.0).abs() <= 1e-4
        && (v2 - 0.909091).abs() <= 1e-4
        && v2 < 1.0
        && (v3 - v3_oracle).abs() <= 1e-4
        && (v3 - 27.0 / 28.0).abs() <= 1e-12
        && v3 < 1.0
        && h1.verdict == Verdict::Satisfied
        && h2.verdict == Verdict::Satisfied;
    for (what, got, quoted, tol) in [
        ("ex1-diag s0", ex1, 1.2510486, 1e-9),
        ("ex2-triangular(28) s0", ex2, 1.663322, 1e-9),
        ("84*29^(-2(s0-1))", v3, 0.9641, 1e-4),
    ] {
        if (got - quoted).abs() > tol {
            notes.push(format!(
                "{what}: computed {got:.10} matches its formula, but the quoted {quoted} is off by {:.2e} (> {tol:e})",
                (got - quoted).abs()
            ));
        }
    }
    Ok((
        ok,
        format!("s0 = {ex1:.10}, {ex2:.10}; hypotheses {v1:.6} {v2:.6} {v3:.7}"),
    ))
}

// ---------------------------------------------------------------- 4

fn c4() -> Check {
    let sys = Preset::Grid2x3.system();
    let mut ok = true;
    let mut notes = Vec::new();

    let s0 = affinity_closed_form(&sys).map_err(e)?;
    ok &= s0 == 2.0;

    let cert = cert(&sys)?;
    let op = TransferOperator::new(&sys, &cert, s0, 4).map_err(e)?;
    let k = KaenmakiApprox::new(op, 1e-13).map_err(e)?;
    let p_dev =
        k.p.values
            .iter()
            .fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    let nu_dev =
        k.nu.masses
            .iter()
            .fold(0.0f64, |m, v| m.max((v * 6f64.powi(4) - 1.0).abs()));
    ok &= k.p_residual <= 1e-10 && k.nu_residual <= 1e-10 && p_dev <= 1e-10 && nu_dev <= 1e-10;
    notes.push(format!("res {:.1e}/{:.1e}", k.p_residual, k.nu_residual));

    let mu = KaenmakiMeasure::build(&sys, None, s0, 4, 1e-13).map_err(e)?;
    for len in 0..=4 {
        for w in all_words(6, len) {
            ok &= mu.mu_k(&w).map_err(e)? == 6f64.powi(-(len as i32));
        }
    }

    let c = slice_content(
        &sys,
        &SliceQuery {
            direction: ProjPoint::from_angle(0.0),
            t: 0.5,
            exponent: 1.0,
            r_min: 1e-3,
        },
    )
    .map_err(e)?;
    let h = slice_integral_h(
        &sys,
        &cert,
        &InfiniteWord::constant(0),
        s0,
        256,
        R_MIN * sys.diameter(),
    )
    .map_err(e)?
    .value;
    ok &= (c.value - 1.0).abs() <= 0.05 && (h - 1.0).abs() <= 0.05;
    notes.push(format!("slice {:.4} h {h:.4}", c.value));

    let scales: Vec<f64> = (2..=4).map(|m| 3f64.powi(-m) * sys.diameter()).collect();
    let dirs = sample_directions(&sys, &cert, 8, SEED);
    let proj = projection_density_check(&sys, &mu, &dirs, &scales, 256, SEED).map_err(e)?;
    let mass = mass_distribution_check(&sys, &mu, s0, &scales, 256, SEED).map_err(e)?;
    let obnc = obnc_check(&sys, &Rect::unit(), &scales, 256, SEED).map_err(e)?;
    let pmax = proj.max_ratio.iter().fold(0.0f64, |m, &v| m.max(v));
    let mmax = mass.max_ratio.iter().fold(0.0f64, |m, &v| m.max(v));
    let omax = obnc.max_ratio.iter().fold(0.0f64, |m, &v| m.max(v));
    ok &= pmax <= 2.1 && mmax <= std::f64::consts::PI + 0.5 && omax <= 16.0;
    notes.push(format!("proj {pmax:.3} mass {mmax:.3} obnc {omax}"));
    Ok((ok, notes.join("; ")))
}

// ---------------------------------------------------------------- 5

fn c5() -> Check {
    let sys = Preset::Figure1.system();
    let (s8, _) = s0_surrogate(&sys, 8).map_err(e)?;
    let cert = cert(&sys)?;
    let op = TransferOperator::new(&sys, &cert, s8, 6).map_err(e)?;
    let k = KaenmakiApprox::new(op, 1e-13).map_err(e)?;
    let mut shift = 0.0f64;
    for len in 0..=5 {
        for w in all_words(6, len) {
            let sum: f64 = (0..6)
                .map(|s| k.mu_f(&w.prepended(s)))
                .sum::<Result<f64, _>>()
                .map_err(e)?;
            shift = shift.max((sum - k.mu_f(&w).map_err(e)?).abs());
        }
    }
    let (pr, nr) = (k.p_residual, k.nu_residual);
    let mu = KaenmakiMeasure::Transfer(Box::new(k));
    let band = comparability_band(&sys, &mu, s8, 6).map_err(e)?;
    let ok = pr <= 1e-6 && nr <= 1e-6 && shift <= 1e-8 && band.c < 50.0;
    Ok((
        ok,
        format!(
            "res {pr:.1e}/{nr:.1e}, shift {shift:.1e}, band [{:.4}, {:.4}] c = {:.4}",
            band.lo, band.hi, band.c
        ),
    ))
}

// ---------------------------------------------------------------- 6

fn s0_of(sys: &IfsSystem) -> Result<f64, String> {
    let level = if sys.len() <= 6 { 8 } else { 4 };
    Ok(s0_surrogate(sys, level).map_err(e)?.0)
}

fn c6_subinvariance() -> Check {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for preset in [
        Preset::Grid2x3,
        Preset::Figure1,
        Preset::Ex1Diag,
        Preset::Ex2Triangular(28),
        Preset::SingletonDegenerate,
    ] {
        let sys = preset.system();
        let s0 = s0_of(&sys)?;
        let cert = cert(&sys)?;
        let mut local = 0.0f64;
        for base in sample_bases(&sys, 20) {
            let r = slice_subinvariance(&sys, &cert, &base, s0, QUAD, R_MIN * sys.diameter())
                .map_err(e)?;
            if r.h > 0.0 {
                local = local.max(r.h / r.lh);
            } else if r.lh < 0.0 {
                return Err(format!("negative Lh on {preset}"));
            }
        }
        worst = worst.max(local);
        parts.push(format!("{preset} {local:.3}"));
    }
    Ok((worst <= 1.05, format!("max h/Lh: {}", parts.join(", "))))
}

fn c6_spread() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (preset, depth) in [(Preset::Grid2x3, 4), (Preset::Ex1Diag, 3)] {
        let sys = preset.system();
        let s0 = s0_of(&sys)?;
        let cert = cert(&sys)?;
        let k = KaenmakiApprox::new(
            TransferOperator::new(&sys, &cert, s0, depth).map_err(e)?,
            1e-13,
        )
        .map_err(e)?;
        let ratios: Vec<f64> = sample_bases(&sys, 20)
            .iter()
            .map(|b| {
                let h = slice_integral_h(&sys, &cert, b, s0, QUAD, R_MIN * sys.diameter())
                    .map_err(e)?
                    .value;
                Ok(h / k.p.get(&b.truncate(depth)))
            })
            .collect::<Result<_, String>>()?;
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = (hi - lo) / mean;
        ok &= spread <= 0.15;
        parts.push(format!("{preset} {:.2}%", 100.0 * spread));
    }
    Ok((ok, format!("spread of h/p: {}", parts.join(", "))))
}

fn c6_eta_band() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for preset in [Preset::Grid2x3, Preset::Ex1Diag, Preset::Ex2Triangular(28)] {
        let sys = preset.system();
        let n = sys.len();
        let s0 = s0_of(&sys)?;
        let cert = cert(&sys)?;
        let mu = KaenmakiMeasure::build(&sys, Some(&cert), s0, 2, 1e-13).map_err(e)?;
        let mut words: Vec<Word> = all_words(n, 1).collect();
        let picks = sample_points(&sys, 12, SEED ^ 1);
        words.extend(picks.iter().map(|(w, _)| w.prefix(2)));
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for base in sample_bases(&sys, 3) {
            let r = R_MIN * sys.diameter();
            let h = slice_integral_h(&sys, &cert, &base, s0, QUAD, r)
                .map_err(e)?
                .value;
            for j in &words {
                let eta = slice_measure_eta(&sys, &cert, &base, j, s0, QUAD, r)
                    .map_err(e)?
                    .value;
                let ratio = eta / (h * mu.mu_k(j).map_err(e)?);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        let c = hi.max(1.0 / lo);
        ok &= lo > 0.0 && c.is_finite() && c < 50.0;
        parts.push(format!("{preset} [{lo:.3}, {hi:.3}]"));
    }
    Ok((ok, format!("eta/(h mu_K): {}", parts.join(", "))))
}

fn c6_singleton() -> Check {
    let sys = Preset::SingletonDegenerate.system();
    let s0 = affinity_closed_form(&sys).map_err(e)?;
    let cert = cert(&sys)?;
    let h = slice_integral_h(&sys, &cert, &InfiniteWord::constant(0), s0, QUAD, 1e-3)
        .map_err(e)?
        .value;
    let mu = KaenmakiMeasure::build(&sys, None, s0, 4, 1e-13).map_err(e)?;
    let scales: Vec<f64> = (2..=4).map(|m| 3f64.powi(-m) * sys.diameter()).collect();
    let mass = mass_distribution_check(&sys, &mu, s0, &scales, 64, SEED).map_err(e)?;
    Ok((
        h == 0.0 && mass.verdict == Verdict::Divergent,
        format!(
            "h = {h}, mass ratios {:?} {:?}",
            mass.max_ratio, mass.verdict
        ),
    ))
}

// ---------------------------------------------------------------- 7

fn presets() -> Vec<Preset> {
    vec![
        Preset::Grid2x3,
        Preset::Figure1,
        Preset::Ex1Diag,
        Preset::Ex2Triangular(28),
        Preset::SingletonDegenerate,
    ]
}

fn c7_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_affdim");
    let mut same = true;
    for args in [
        vec![
            "check",
            "--preset",
            "figure1",
            "--mass",
            "--obnc",
            "--samples",
            "64",
        ],
        vec!["kaenmaki", "--preset", "figure1", "--depth", "4"],
        vec!["dim", "--preset", "figure1", "--depth", "4"],
    ] {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let mut full = args.clone();
                full.push("--json");
                Command::new(bin).args(&full).output().map(|o| o.stdout)
            })
            .collect::<Result<_, _>>()
            .map_err(e)?;
        same &= !outs[0].is_empty() && outs[0] == outs[1];
    }
    let sys = Preset::Figure1.system();
    let c = cert(&sys)?;
    let a = sample_directions(&sys, &c, 4, SEED);
    let b = sample_directions(&sys, &c, 4, SEED);
    same &= a == b;
    Ok((same, "CLI reports and seeded samples repeat exactly".into()))
}

fn c7_roundtrip() -> Check {
    let mut ok = true;
    for p in presets() {
        let sys = p.system();
        let json = sys.to_json();
        let back = IfsSystem::from_json(&json).map_err(e)?;
        ok &= back == sys && back.to_json() == json;
        for (a, b) in sys.maps().iter().zip(back.maps()) {
            ok &= a.a.rows().iter().flatten().map(|x| x.to_bits()).eq(b
                .a
                .rows()
                .iter()
                .flatten()
                .map(|x| x.to_bits()));
            ok &= a.t.x.to_bits() == b.t.x.to_bits() && a.t.y.to_bits() == b.t.y.to_bits();
        }
        let c = cert(&sys)?;
        ok &= DominationCertificate::from_json(&c.to_json()).map_err(e)? == c;
    }
    Ok((ok, "systems and certificates, all presets".into()))
}

fn c7_sections() -> Check {
    let mut ok = true;
    let mut sizes = Vec::new();
    for p in presets() {
        let sys = p.system();
        let n = sys.len();
        let uniform = vec![1.0 / n as f64; n];
        let skewed: Vec<f64> = {
            let w: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
            let t: f64 = w.iter().sum();
            w.iter().map(|x| x / t).collect()
        };
        for f in [0.3, 0.1, 0.03] {
            let r = f * sys.diameter();
            let sec = stopping_section(&sys, r, SectionVariant::Alpha2, SECTION_CAP).map_err(e)?;
            ok &= sec.is_prefix_free()
                && (sec.bernoulli_mass(&uniform) - 1.0).abs() <= 1e-9
                && (sec.bernoulli_mass(&skewed) - 1.0).abs() <= 1e-9;
            // Minimality: every member stops, its parent does not.
            for m in &sec.members {
                let a2 = |w: &Word| {
                    affdim::linalg::singular_values(&compose_word(&sys, w).a).1 * sys.diameter()
                };
                ok &= a2(&m.word) <= r * (1.0 + 1e-12);
                if !m.word.is_empty() {
                    ok &= a2(&m.word.prefix(m.word.len() - 1)) > r * (1.0 - 1e-12);
                }
            }
            sizes.push(sec.len());
        }
    }
    Ok((ok, format!("prefix-free, mass 1, minimal; sizes {sizes:?}")))
}

fn main() -> ExitCode {
    let mut suite = Suite {
        failures: 0,
        notes: Vec::new(),
    };
    suite.run("1", "figure1 slice dimension", 1.0, c1);
    suite.run("2", "figure1 affinity dimension bounds", 120.0, c2);
    let mut notes = Vec::new();
    suite.run("3", "example closed forms and hypotheses", 1.0, || {
        c3(&mut notes)
    });
    for n in notes {
        suite.note(n);
    }
    suite.run("4", "grid-2x3 oracle suite", 60.0, c4);
    suite.run("5", "figure1 transfer operator at depth 6", 120.0, c5);
    let six = Instant::now();
    suite.run(
        "6a",
        "h <= 1.05 Lh on 20 words per preset",
        300.0,
        c6_subinvariance,
    );
    suite.run(
        "6b",
        "h/p spread on grid-2x3 and ex1-diag",
        300.0,
        c6_spread,
    );
    suite.run(
        "6c",
        "eta/mu_K band on positive presets",
        300.0,
        c6_eta_band,
    );
    suite.run(
        "6d",
        "singleton: h = 0, divergent mass",
        300.0,
        c6_singleton,
    );
    let six = six.elapsed().as_secs_f64();
    println!(
        "{} 6   slice identities total time {six:.2}s (budget 300s)",
        if six < 300.0 { "PASS" } else { "FAIL" }
    );
    if six >= 300.0 {
        suite.failures += 1;
    }
    suite.run("7a", "determinism", 60.0, c7_determinism);
    suite.run("7b", "bit-exact JSON round-trip", 60.0, c7_roundtrip);
    suite.run("7c", "stopping sections at 3 scales", 60.0, c7_sections);
    for n in &suite.notes {
        println!("NOTE {n}");
    }
    println!("acceptance: {} failure(s)", suite.failures);
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
