use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use affdim::diagnostics::{
    self, mass_distribution_check, obnc_check, projection_density_check, sample_directions,
    slice_dimension_verdict, ssc_check, verify_example_hypotheses, HypothesisReport, Rect,
    SliceDimensionReport, SscReport,
};
use affdim::domination::{domin_constants, find_multicone};
use affdim::pressure::{affinity_closed_form, affinity_upper_bound, PressureEstimate};
use affdim::render::{default_shape, render_svg, BaseShape};
use affdim::slices::{slice_content, slice_integral_h, SliceIntegral};
use affdim::transfer::{
    birkhoff_deviation, comparability_band, s0_surrogate, ComparabilityBand, S0Source,
};
use affdim::{
    CheckReport, ContentEstimate, DominConstants, DominationCertificate, IfsSystem, InfiniteWord,
    KaenmakiApprox, KaenmakiMeasure, Preset, ProjPoint, SliceQuery, StructureTag, TransferOperator,
    Vec2, Word,
};

use crate::Common;

/// Levels whose word count stays below this are evaluated.
const LEVEL_BUDGET: u64 = 2_000_000;
/// Cylinder states for a measure built on the side.
const STATE_BUDGET: u64 = 200_000;
const MEASURE_TOL: f64 = 1e-13;

struct Loaded {
    sys: IfsSystem,
    preset: Option<Preset>,
    label: String,
}

fn load(common: &Common) -> Result<Loaded> {
    match (&common.preset, &common.system) {
        (Some(name), None) => {
            let preset = Preset::parse(name, common.n)?;
            Ok(Loaded {
                sys: preset.system(),
                preset: Some(preset),
                label: preset.to_string(),
            })
        }
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let sys = IfsSystem::from_json(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            Ok(Loaded {
                sys,
                preset: None,
                label: path.display().to_string(),
            })
        }
        _ => bail!("give exactly one of --preset or --system"),
    }
}

fn pow_fits(n: usize, level: usize, budget: u64) -> bool {
    (n as u64)
        .checked_pow(level as u32)
        .is_some_and(|c| c <= budget)
}

/// Deepest level `≤ max` whose word count fits the budget.
fn fitting_level(n: usize, max: usize, budget: u64) -> usize {
    (1..=max)
        .rev()
        .find(|&l| pow_fits(n, l, budget))
        .unwrap_or(1)
}

fn surrogate(sys: &IfsSystem) -> Result<(f64, S0Source)> {
    Ok(s0_surrogate(
        sys,
        fitting_level(sys.len(), 8, LEVEL_BUDGET),
    )?)
}

fn certificate(sys: &IfsSystem) -> Result<DominationCertificate> {
    find_multicone(
        sys,
        affdim::domination::DEFAULT_MAX_INTERVALS,
        affdim::domination::DEFAULT_MAX_ITER,
    )
    .context("no dominated splitting found")
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            affdim::system::parse_number(p.trim())
                .with_context(|| format!("bad {what} entry {p:?}"))
        })
        .collect()
}

/// Writes `name` into the output directory, if there is one.
fn write_out(common: &Common, name: &str, contents: &str) -> Result<()> {
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn write_csv<F>(common: &Common, name: &str, header: &[&str], fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    if common.out.is_none() {
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    let bytes = w.into_inner().context("flushing csv")?;
    write_out(common, name, &String::from_utf8(bytes)?)
}

/// Prints the summary (or the JSON with `--json`) and writes
/// `<command>.json` and `system.json`.
fn emit<T: Serialize>(
    common: &Common,
    loaded: &Loaded,
    command: &str,
    report: &T,
    summary: &str,
) -> Result<()> {
    let json = serde_json::to_string_pretty(report)? + "\n";
    write_out(common, &format!("{command}.json"), &json)?;
    write_out(common, "system.json", &(loaded.sys.to_json() + "\n"))?;
    if common.json {
        print!("{json}");
    } else {
        println!("system: {}", loaded.label);
        print!("{summary}");
    }
    Ok(())
}

fn fmt_s0(s0: f64, source: S0Source) -> String {
    match source {
        S0Source::ClosedForm => format!("s0 = {s0:.10} (closed form)"),
        S0Source::UpperBound { level } => format!("s0 <= {s0:.10} (level {level} bound)"),
    }
}

// ---------------------------------------------------------------- render

pub fn render(common: &Common, depth: usize, shape: Option<&str>) -> Result<bool> {
    let loaded = load(common)?;
    let shape = match shape {
        None => default_shape(&loaded.sys),
        Some("square") => BaseShape::UnitSquare,
        Some("ball") => BaseShape::Ball,
        Some(other) => bail!("unknown shape {other:?}; expected square or ball"),
    };
    let svg = render_svg(&loaded.sys, depth, shape)?;
    if common.out.is_some() {
        write_out(common, "render.svg", &svg)?;
        write_out(common, "system.json", &(loaded.sys.to_json() + "\n"))?;
        println!(
            "system: {}\nwrote {} cylinders at depth {depth}",
            loaded.label,
            svg.matches("<polygon").count()
        );
    } else {
        print!("{svg}");
    }
    Ok(true)
}

// ---------------------------------------------------------------- dim

#[derive(Serialize)]
struct DimReport {
    system: String,
    n_maps: usize,
    tag: StructureTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<f64>,
    levels: Vec<PressureEstimate>,
    /// Levels skipped because `N^n` exceeds the budget.
    skipped: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slice_criterion: Option<SliceDimensionReport>,
}

pub fn dim(common: &Common, depth: usize, tol: f64) -> Result<bool> {
    let loaded = load(common)?;
    let sys = &loaded.sys;
    if depth == 0 {
        bail!("--depth must be at least 1");
    }
    let closed_form = match sys.tag() {
        StructureTag::General => None,
        _ => affinity_closed_form(sys).ok(),
    };
    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    let mut times = Vec::new();
    let mut n = 1;
    while n <= depth {
        if pow_fits(sys.len(), n, LEVEL_BUDGET) {
            let start = Instant::now();
            levels.push(affinity_upper_bound(sys, n, tol)?);
            times.push(start.elapsed().as_secs_f64());
        } else {
            skipped.push(n);
        }
        n *= 2;
    }
    let slice_criterion = match (loaded.preset.and_then(|p| p.carpet()), levels.last()) {
        (Some(carpet), Some(last)) => Some(slice_dimension_verdict(&carpet, last.s_n, last.n)),
        _ => None,
    };

    let mut header = vec!["n", "s_n", "sum_at_root", "evaluations"];
    if common.timing {
        header.push("wall_time");
    }
    write_csv(common, "dim.csv", &header, |w| {
        for (est, t) in levels.iter().zip(&times) {
            let mut row = vec![
                est.n.to_string(),
                est.s_n.to_string(),
                est.sum_at_root.to_string(),
                est.evaluations.to_string(),
            ];
            if common.timing {
                row.push(format!("{t:.6}"));
            }
            w.write_record(&row)?;
        }
        Ok(())
    })?;

    let mut summary = String::new();
    if let Some(s0) = closed_form {
        let _ = writeln!(summary, "s0 = {s0:.10} (closed form)");
    }
    for est in &levels {
        let _ = writeln!(summary, "s_{} = {:.10}", est.n, est.s_n);
    }
    if !skipped.is_empty() {
        let _ = writeln!(summary, "skipped levels {skipped:?} (too many words)");
    }
    if let Some(rep) = &slice_criterion {
        let _ = writeln!(
            summary,
            "fullest column {} has {} digits, slice dimension {:.7}; s_{} - 1 = {:.7}: {}",
            rep.column,
            rep.column_count,
            rep.slice_dimension,
            rep.level,
            rep.s_n - 1.0,
            match rep.verdict {
                affdim::Verdict::NullMeasure => "H^s0(X) = 0",
                _ => "inconclusive",
            }
        );
    }
    let report = DimReport {
        system: loaded.label.clone(),
        n_maps: sys.len(),
        tag: sys.tag(),
        closed_form,
        levels,
        skipped,
        slice_criterion,
    };
    emit(common, &loaded, "dim", &report, &summary)?;
    Ok(true)
}

// ---------------------------------------------------------------- domination

#[derive(Serialize)]
struct DominationReport {
    certificate: DominationCertificate,
    constants: DominConstants,
}

pub fn domination(
    common: &Common,
    max_intervals: usize,
    max_iter: usize,
    depth: usize,
) -> Result<bool> {
    let loaded = load(common)?;
    let sys = &loaded.sys;
    let cert = find_multicone(sys, max_intervals, max_iter)?;
    let depth = depth.min(fitting_level(sys.len(), depth.max(1), LEVEL_BUDGET));
    let constants = domin_constants(sys, &cert, depth)?;
    write_out(common, "certificate.json", &(cert.to_json() + "\n"))?;

    let mut summary = String::new();
    let arcs: Vec<String> = cert
        .cone
        .intervals()
        .iter()
        .map(|j| format!("[{:.6}, {:.6}]", j.start, j.start + j.len))
        .collect();
    let _ = writeln!(summary, "multicone (angles): {}", arcs.join(" "));
    let _ = writeln!(summary, "margin = {:.3e}", cert.margin);
    let _ = writeln!(
        summary,
        "tau = {:.6} (block {}), C_dom = {:.6}",
        cert.tau, cert.tau_depth, cert.c_dom
    );
    let _ = writeln!(
        summary,
        "C_emp = {:.6} over |w| <= {depth} (word {})",
        constants.c_emp, constants.word
    );
    let report = DominationReport {
        certificate: cert,
        constants,
    };
    emit(common, &loaded, "domination", &report, &summary)?;
    Ok(true)
}

// ---------------------------------------------------------------- kaenmaki

#[derive(Serialize)]
struct KaenmakiReport {
    s0: f64,
    s0_source: S0Source,
    depth: usize,
    lambda: f64,
    p_residual: f64,
    nu_residual: f64,
    band: ComparabilityBand,
    birkhoff_deviation: f64,
    birkhoff_word: Word,
    log_c_emp: f64,
}

pub fn kaenmaki(common: &Common, depth: usize, tol: f64) -> Result<bool> {
    let loaded = load(common)?;
    let sys = &loaded.sys;
    if depth == 0 {
        bail!("--depth must be at least 1");
    }
    let (s0, source) = surrogate(sys)?;
    let cert = certificate(sys)?;
    let op = TransferOperator::new(sys, &cert, s0, depth)?;
    let approx = KaenmakiApprox::new(op, tol)?;
    let n = sys.len();

    write_csv(common, "kaenmaki.csv", &["word", "p", "nu", "mu_k"], |w| {
        for (idx, (&p, &nu)) in approx.p.values.iter().zip(&approx.nu.masses).enumerate() {
            let word = Word::from_index(idx, depth, n);
            let mu = approx.mu_k(&word.reversed()).unwrap_or(f64::NAN);
            w.write_record([
                word.to_string(),
                p.to_string(),
                nu.to_string(),
                mu.to_string(),
            ])?;
        }
        Ok(())
    })?;

    let lambda = approx.lambda;
    let (p_residual, nu_residual) = (approx.p_residual, approx.nu_residual);
    let band_depth = depth.min(fitting_level(n, depth, STATE_BUDGET));
    let mu = KaenmakiMeasure::Transfer(Box::new(approx));
    let band = comparability_band(sys, &mu, s0, band_depth)?;
    let (dev, dev_word) = birkhoff_deviation(sys, &cert, s0, 8, 32, common.seed);
    let c_emp = domin_constants(sys, &cert, fitting_level(n, 6, STATE_BUDGET))?.c_emp;

    let mut summary = String::new();
    let _ = writeln!(summary, "{}", fmt_s0(s0, source));
    let _ = writeln!(summary, "lambda = {lambda:.12} at depth {depth}");
    let _ = writeln!(
        summary,
        "residuals: p {p_residual:.3e}, nu {nu_residual:.3e}"
    );
    let _ = writeln!(
        summary,
        "mu_K[w] / phi^s0(A_w) in [{:.6}, {:.6}] for |w| <= {band_depth}, c = {:.6}",
        band.lo, band.hi, band.c
    );
    let _ = writeln!(
        summary,
        "Birkhoff sums vs log phi: max deviation {dev:.6} (log C_emp = {:.6})",
        c_emp.ln()
    );
    let report = KaenmakiReport {
        s0,
        s0_source: source,
        depth,
        lambda,
        p_residual,
        nu_residual,
        band,
        birkhoff_deviation: dev,
        birkhoff_word: dev_word,
        log_c_emp: c_emp.ln(),
    };
    emit(common, &loaded, "kaenmaki", &report, &summary)?;
    Ok(true)
}

// ---------------------------------------------------------------- slices

#[derive(Serialize)]
#[serde(untagged)]
enum SlicesReport {
    Integral {
        base: String,
        s0: f64,
        s0_source: S0Source,
        integral: SliceIntegral,
    },
    Single {
        base: String,
        s0: f64,
        s0_source: S0Source,
        query: SliceQuery,
        content: ContentEstimate,
    },
}

pub fn slices(
    common: &Common,
    word: &str,
    quad: usize,
    r_min: f64,
    exponent: Option<f64>,
    t: Option<f64>,
) -> Result<bool> {
    let loaded = load(common)?;
    let sys = &loaded.sys;
    let period = Word::parse(word)?;
    if period.is_empty() {
        bail!("--word needs at least one symbol");
    }
    let base = InfiniteWord::periodic(&period);
    base.check(sys.len())?;
    let (s0, source) = surrogate(sys)?;
    let exponent = exponent.unwrap_or((s0 - 1.0).clamp(0.0, 1.0));
    let cert = certificate(sys)?;
    let r_abs = r_min * sys.diameter();
    let mut summary = String::new();
    let _ = writeln!(summary, "{}", fmt_s0(s0, source));
    let report = match t {
        Some(t) => {
            let direction: ProjPoint =
                affdim::domination::furstenberg_direction(sys, &cert, &base, 1e-13);
            let query = SliceQuery {
                direction,
                t,
                exponent,
                r_min: r_abs,
            };
            let content = slice_content(sys, &query)?;
            let _ = writeln!(
                summary,
                "V({base}) at angle {:.8}; content^{exponent:.6} of slice t = {t} is {:.8} ({} pieces)",
                direction.angle(),
                content.value,
                content.cover_size
            );
            SlicesReport::Single {
                base: base.to_string(),
                s0,
                s0_source: source,
                query,
                content,
            }
        }
        None => {
            let integral = if (exponent - (s0 - 1.0).clamp(0.0, 1.0)).abs() == 0.0 {
                slice_integral_h(sys, &cert, &base, s0, quad, r_abs)?
            } else {
                let v = affdim::domination::furstenberg_direction(sys, &cert, &base, 1e-13);
                affdim::slices::Slicer::new(sys).integral(
                    &Word::empty(),
                    v,
                    exponent,
                    quad,
                    r_abs,
                )?
            };
            write_csv(common, "slices.csv", &["t", "content"], |w| {
                for (t, c) in &integral.profile {
                    w.write_record([t.to_string(), c.to_string()])?;
                }
                Ok(())
            })?;
            let _ = writeln!(
                summary,
                "h({base}) = {:.8} over {} nodes, V at angle {:.8}",
                integral.value,
                integral.quad_points,
                integral.direction.angle()
            );
            SlicesReport::Integral {
                base: base.to_string(),
                s0,
                s0_source: source,
                integral,
            }
        }
    };
    emit(common, &loaded, "slices", &report, &summary)?;
    Ok(true)
}

// ---------------------------------------------------------------- check

#[derive(Debug, Clone, Copy)]
pub struct Checks {
    pub mass: bool,
    pub projection: bool,
    pub obnc: bool,
    pub ssc: bool,
}

#[derive(Serialize, Default)]
struct CheckOutput {
    s0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projection: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    obnc: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ssc: Option<SscReport>,
    pass: bool,
}

fn parse_rect(s: &str) -> Result<Rect> {
    let v = parse_list(s, "--rect")?;
    if v.len() != 4 || v[0] >= v[2] || v[1] >= v[3] {
        bail!("--rect needs x0,y0,x1,y1 with x0 < x1 and y0 < y1");
    }
    Ok(Rect {
        lo: Vec2::new(v[0], v[1]),
        hi: Vec2::new(v[2], v[3]),
    })
}

fn describe(report: &CheckReport) -> String {
    let ratios: Vec<String> = report
        .scales
        .iter()
        .zip(&report.max_ratio)
        .map(|(r, q)| format!("r={r:.4e}: {q:.6}"))
        .collect();
    format!("{}: {}", ratios.join(", "), verdict_name(report.verdict))
}

fn verdict_name(v: affdim::Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn check(
    common: &Common,
    mut which: Checks,
    scales: Option<&str>,
    samples: usize,
    depth: usize,
    rect: &str,
) -> Result<bool> {
    let loaded = load(common)?;
    let sys = &loaded.sys;
    if !(which.mass || which.projection || which.obnc || which.ssc) {
        which = Checks {
            mass: true,
            projection: true,
            obnc: true,
            ssc: true,
        };
    }
    let scales = match scales {
        Some(s) => parse_list(s, "--scales")?,
        None => (2..=4).map(|m| 3f64.powi(-m) * sys.diameter()).collect(),
    };
    if samples == 0 {
        bail!("--samples must be positive");
    }
    let mut out = CheckOutput {
        pass: true,
        ..Default::default()
    };
    let mut summary = String::new();

    if which.mass || which.projection {
        let (s0, source) = surrogate(sys)?;
        out.s0 = Some(s0);
        let _ = writeln!(summary, "{}", fmt_s0(s0, source));
        let needs_cert = which.projection || sys.tag() == StructureTag::General;
        let cert = needs_cert.then(|| certificate(sys)).transpose()?;
        let m = fitting_level(sys.len(), 6, STATE_BUDGET);
        let mu = KaenmakiMeasure::build(sys, cert.as_ref(), s0, m, MEASURE_TOL)?;
        if which.mass {
            let rep = mass_distribution_check(sys, &mu, s0, &scales, samples, common.seed)?;
            let _ = writeln!(summary, "mass  sup mu(B(x,r))/r^s0  {}", describe(&rep));
            out.pass &= rep.verdict.passes();
            out.mass = Some(rep);
        }
        if let (true, Some(cert)) = (which.projection, &cert) {
            let dirs = sample_directions(sys, cert, 8, common.seed);
            let rep = projection_density_check(sys, &mu, &dirs, &scales, samples, common.seed)?;
            let _ = writeln!(summary, "proj  sup mu(strip)/r       {}", describe(&rep));
            out.pass &= rep.verdict.passes();
            out.projection = Some(rep);
        }
    }
    if which.obnc {
        let u = parse_rect(rect)?;
        let rep = obnc_check(sys, &u, &scales, samples, common.seed)?;
        let _ = writeln!(summary, "obnc  max #Delta_r images   {}", describe(&rep));
        out.pass &= rep.verdict.passes();
        out.obnc = Some(rep);
    }
    if which.ssc {
        let rep = ssc_check(sys, depth);
        let witness = rep
            .witness
            .as_ref()
            .map(|(a, b)| format!(" (words {a} / {b}, gap {:.3e})", rep.gap))
            .unwrap_or_default();
        let _ = writeln!(
            summary,
            "ssc   depth {}: {}{witness}",
            rep.depth,
            verdict_name(rep.verdict)
        );
        out.pass &= rep.verdict.passes();
        out.ssc = Some(rep);
    }
    let _ = writeln!(summary, "{}", if out.pass { "PASS" } else { "FAIL" });
    emit(common, &loaded, "check", &out, &summary)?;
    Ok(out.pass)
}

// ---------------------------------------------------------------- examples

pub fn verify_example(common: &Common) -> Result<bool> {
    let loaded = load(common)?;
    let Some(preset) = loaded.preset else {
        bail!("verify-example needs --preset ex1-diag or ex2-triangular");
    };
    let report: HypothesisReport = verify_example_hypotheses(preset)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "s0 = {:.10}", report.s0);
    for h in &report.hypotheses {
        let _ = writeln!(
            summary,
            "{:<28} {:.10} {} {}  {}",
            h.name,
            h.value,
            h.relation,
            h.bound,
            if h.holds { "ok" } else { "FAILS" }
        );
    }
    let _ = writeln!(summary, "{}", verdict_name(report.verdict));
    emit(common, &loaded, "verify-example", &report, &summary)?;
    Ok(report.verdict == diagnostics::Verdict::Satisfied)
}
