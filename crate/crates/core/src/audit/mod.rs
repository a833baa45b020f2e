//! Post-hoc verification of finished builds.
//!
//! Structural checks (lengths, folding, containment, decoding, cost bounds)
//! decide [`AuditReport::passed`]. Density profiles are estimates from a
//! compressor and are reported as informational checks.

pub mod decode;
pub mod lz;
pub mod plot;

use std::thread;

use serde::Serialize;

use crate::bits::BitString;
use crate::construct::{
    recover_a, recover_parity, BitSource, Condition, Schedule, TargetSequence, Thm1Build, Thm2Build,
};
use crate::dyadic::{certify_inside, interval_of, product_prefix, Dyadic, Multiplier};
use crate::error::{Error, Result};
use crate::extension::zeros_schedule;

pub use decode::{cost_deltas, decode_blocks, lead_bound, neg_log2_ceil, verify_decode, CostDelta, DecodedStage, StageLayout};
pub use lz::{density_profile, khat_of_count, lz_estimate, phrase_count, DensityPoint};

/// Largest cost delta allowed between consecutive blocks.
pub const COST_BOUND: u64 = 7;
/// Guard bits over `ℓ(τ)` at which containment audits start.
pub const AUDIT_GUARD: u64 = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks do not affect [`AuditReport::passed`].
    pub structural: bool,
    pub detail: String,
}

impl Check {
    fn structural(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, structural: true, detail: detail.into() }
    }

    fn informational(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, structural: false, detail: detail.into() }
    }
}

/// `a·0.x ∈ [τ̃]` at one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContainmentRecord {
    pub stage: u64,
    pub requirement: usize,
    pub tau_len: u64,
    pub inside: bool,
    /// Precision of the enclosure of `a` that decided it; 0 when exact.
    pub precision: u64,
    /// Whether the first `ℓ(τ)` digits of `a·0.x` are `τ`.
    pub prefix_matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruncationEvent {
    pub stage: u64,
    pub requirement: usize,
    pub rho_len: u64,
    /// `ν(k + 1) − 1`.
    pub kept: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecodeRecord {
    pub stage: u64,
    pub requirement: usize,
    pub traceless: bool,
    /// First differing index of `T`, if any.
    pub mismatch: Option<u64>,
    pub error: Option<String>,
    pub layout: Option<StageLayout>,
    pub lead_bound: u64,
}

/// `K̂/n` of `a_i·r` at the audit points of one requirement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityProfile {
    pub requirement: usize,
    pub spec: String,
    pub points: Vec<DensityPoint>,
    /// The target sequence's own profile at the same lengths (block coding only).
    pub reference: Vec<DensityPoint>,
    /// Audit points longer than the profile cap.
    pub skipped: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub theorem: u8,
    pub schedule: String,
    pub stages: u64,
    pub x_len: u64,
    pub checks: Vec<Check>,
    pub containment: Vec<ContainmentRecord>,
    pub cost_deltas: Vec<CostDelta>,
    pub truncations: Vec<TruncationEvent>,
    pub recovered_a: Option<BitString>,
    pub recovered_phi: Option<BitString>,
    pub decodes: Vec<DecodeRecord>,
    pub density: Vec<DensityProfile>,
    pub decode_mismatches: u64,
    pub first_mismatch: Option<u64>,
    pub passed: bool,
}

impl AuditReport {
    fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed || !c.structural);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.structural && !c.passed)
    }
}

#[derive(Clone, Debug)]
pub struct AuditOptions {
    /// Audit points longer than this are left out of density profiles.
    pub max_profile_len: u64,
    /// Shortest audit point at which density tolerances are judged.
    pub min_judged_len: u64,
    /// Allowed gap between product and target profiles.
    pub density_tolerance: f64,
    /// Also decode without the trace.
    pub traceless: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { max_profile_len: 1 << 22, min_judged_len: 1 << 12, density_tolerance: 0.15, traceless: true }
    }
}

/// Runs `f` for every requirement index on its own thread.
fn per_requirement<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    if count == 1 {
        return vec![f(0)];
    }
    thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..count).map(|i| s.spawn(move || f(i))).collect();
        handles.into_iter().map(|h| h.join().expect("audit thread panicked")).collect()
    })
}

/// Density of `a·0.x` at the given points, capped at `opts.max_profile_len`.
fn product_profile(
    a: &Multiplier,
    x: &BitString,
    requirement: usize,
    spec: &str,
    points: &[u64],
    opts: &AuditOptions,
) -> Result<DensityProfile> {
    let (kept, skipped): (Vec<u64>, Vec<u64>) = points.iter().partition(|&&n| n <= opts.max_profile_len);
    let points = match kept.last() {
        Some(&n) => density_profile(&product_prefix(a.value(), x, n)?, &kept)?,
        None => Vec::new(),
    };
    Ok(DensityProfile { requirement, spec: spec.into(), points, reference: Vec::new(), skipped })
}

fn length_check(traces: impl Iterator<Item = (u64, u64)>, x_len: u64, sched: &Schedule, stages: u64) -> Result<Check> {
    let mut bad = Vec::new();
    for (stage, len) in traces {
        if len != sched.nu(stage)? {
            bad.push(stage);
        }
    }
    let want = if stages == 0 { 0 } else { sched.nu(stages)? };
    let ok = bad.is_empty() && x_len == want;
    let detail = if ok { format!("ℓ(x) = ν({stages}) = {want}") } else { format!("ℓ(x) = {x_len}, ν({stages}) = {want}, stages off: {bad:?}") };
    Ok(Check::structural("length_law", ok, detail))
}

fn source_check(name: &str, got: &BitString, src: Option<&dyn BitSource>) -> Option<Check> {
    let src = src?;
    let want = src.prefix(got.len() as u64);
    let detail = match got.first_difference(&want) {
        None => format!("{} bits recovered", got.len()),
        Some(i) => format!("first difference at bit {i}"),
    };
    Some(Check::structural(name, got == &want, detail))
}

/// Audits a zero-coding build.
pub fn verify_thm1(
    build: &Thm1Build,
    conditions: &[Condition],
    oracle: Option<&dyn BitSource>,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    let sched = build.schedule;
    let mut report = AuditReport {
        theorem: 1,
        schedule: sched.to_string(),
        stages: build.stages,
        x_len: build.x.len() as u64,
        ..Default::default()
    };
    if build.stages == 0 {
        return Ok(report.finish());
    }
    if build.traces.iter().any(|t| t.requirement >= conditions.len()) {
        return Err(Error::Invalid("trace refers to a condition that was not supplied".into()));
    }
    let x = &build.x;
    report.checks.push(length_check(build.traces.iter().map(|t| (t.stage, t.x_len)), x.len() as u64, &sched, build.stages)?);

    let a_bits = recover_a(x, &sched, build.stages)?;
    report.checks.extend(source_check("folding", &a_bits, oracle));
    report.recovered_a = Some(a_bits);

    report.truncations = build
        .traces
        .iter()
        .filter(|t| t.truncated)
        .map(|t| TruncationEvent { stage: t.stage, requirement: t.requirement, rho_len: t.rho_len, kept: t.x_len - 1 })
        .collect();

    // Per requirement: containment at its coded stages, then density at D.
    let xr = Dyadic::from_bits(x);
    let results = per_requirement(conditions.len(), |i| -> Result<(Vec<ContainmentRecord>, Option<DensityProfile>)> {
        let Some(a) = conditions[i].multiplier() else { return Ok((Vec::new(), None)) };
        let mine: Vec<_> = build.traces.iter().filter(|t| t.requirement == i).collect();
        let mut recs = Vec::new();
        for t in mine.iter().filter(|t| t.is_coded()) {
            let tau = t.tau();
            let tau_len = tau.len() as u64;
            let c = certify_inside(a.value(), &xr, &interval_of(&tau), tau_len + AUDIT_GUARD)?;
            let prefix_matches = product_prefix(a.value(), x, tau_len)? == tau;
            recs.push(ContainmentRecord {
                stage: t.stage,
                requirement: i,
                tau_len,
                inside: c.inside,
                precision: c.precision,
                prefix_matches,
            });
        }
        let d: Vec<u64> = mine.iter().filter(|t| !t.skipped).map(|t| t.x_len).collect();
        let profile = product_profile(a, x, i, &conditions[i].spec, &d, opts)?;
        Ok((recs, Some(profile)))
    });
    for r in results {
        let (recs, profile) = r?;
        report.containment.extend(recs);
        report.density.extend(profile);
    }
    report.containment.sort_by_key(|c| c.stage);

    let bad: Vec<u64> = report.containment.iter().filter(|c| !c.inside || !c.prefix_matches).map(|c| c.stage).collect();
    report.checks.push(Check::structural(
        "containment",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} coded stages certified", report.containment.len())
        } else {
            format!("failed at stages {bad:?}")
        },
    ));

    match sched {
        Schedule::Thm1Paper => report.checks.push(eventual_space(build)?),
        _ => {
            let t: Vec<u64> = report.truncations.iter().map(|t| t.stage).collect();
            report.checks.push(Check::structural(
                "capacity",
                t.is_empty(),
                if t.is_empty() { "no stage truncated".into() } else { format!("truncated stages {t:?}") },
            ));
        }
    }

    for p in &report.density {
        let after: Vec<f64> = p.points.iter().skip(1).map(|q| q.ratio).collect();
        let ok = after.windows(2).all(|w| w[1] <= w[0]);
        let detail = p.points.iter().map(|q| format!("{}:{:.4}", q.n, q.ratio)).collect::<Vec<_>>().join(" ");
        report.checks.push(Check::informational(&format!("density_trend[{}]", p.requirement), ok, detail));
    }
    Ok(report.finish())
}

/// With `s = 12kν(k) + 1`: stages `k ≥ 3` are not truncated, and
/// `s < ν(k+1) − ν(k) − 4` for every such `k` up to the last stage (at least 3).
fn eventual_space(build: &Thm1Build) -> Result<Check> {
    let sched = build.schedule;
    let mut parts = Vec::new();
    let mut ok = true;
    for k in 3..build.stages.max(4) {
        let s = zeros_schedule(k, sched.nu(k)?)?;
        let room = sched.nu(k + 1)? - sched.nu(k)? - 4;
        ok &= s < room;
        parts.push(format!("k={k}: {s} < {room}"));
    }
    let late: Vec<u64> = build.traces.iter().filter(|t| t.k >= 3 && t.truncated).map(|t| t.stage).collect();
    if !late.is_empty() {
        ok = false;
        parts.push(format!("truncated late stages {late:?}"));
    }
    Ok(Check::structural("eventual_space", ok, parts.join("; ")))
}

/// Audits a block-coding build.
pub fn verify_thm2(
    build: &Thm2Build,
    conditions: &[Condition],
    target: &TargetSequence,
    oracle: Option<&dyn BitSource>,
    phi: Option<&dyn BitSource>,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    let sched = build.schedule;
    let mut report = AuditReport {
        theorem: 2,
        schedule: sched.to_string(),
        stages: build.stages,
        x_len: build.x.len() as u64,
        ..Default::default()
    };
    if build.stages == 0 {
        return Ok(report.finish());
    }
    if build.traces.iter().any(|t| t.requirement >= conditions.len()) {
        return Err(Error::Invalid("trace refers to a condition that was not supplied".into()));
    }
    let x = &build.x;
    report.checks.push(length_check(build.traces.iter().map(|t| (t.stage, t.x_len)), x.len() as u64, &sched, build.stages)?);

    let (ra, rp) = recover_parity(x, &sched, build.stages)?;
    report.checks.extend(source_check("parity_a", &ra, oracle));
    report.checks.extend(source_check("parity_phi", &rp, phi));
    report.recovered_a = Some(ra);
    report.recovered_phi = Some(rp);

    // Block layout and budgets.
    let mut layout_bad = Vec::new();
    for t in build.traces.iter().filter(|t| t.coded) {
        let (nu, mu, xi) = (sched.nu(t.k)?, sched.mu(t.k)?, sched.xi(t.k)?);
        let w = sched.block_len(t.k)?;
        let ok = t.blocks.len() as u64 == xi
            && t.blocks.iter().zip(1..).all(|(b, j)| {
                b.j == j && b.start == nu + (j - 1) * mu && b.tau_len == b.tau_prime_len + w && b.rho_len <= b.start + mu
            });
        if !ok {
            layout_bad.push(t.stage);
        }
    }
    report.checks.push(Check::structural(
        "block_layout",
        layout_bad.is_empty(),
        if layout_bad.is_empty() { "every block within its budget".into() } else { format!("stages {layout_bad:?}") },
    ));

    report.cost_deltas = cost_deltas(&build.traces);
    let over: Vec<&CostDelta> = report.cost_deltas.iter().filter(|c| c.delta > COST_BOUND).collect();
    let max = report.cost_deltas.iter().map(|c| c.delta).max().unwrap_or(0);
    report.checks.push(Check::structural(
        "cost",
        over.is_empty(),
        format!("{} deltas, max {max}, {} over {COST_BOUND}", report.cost_deltas.len(), over.len()),
    ));

    let results = per_requirement(conditions.len(), |i| -> Result<(Vec<DecodeRecord>, Option<DensityProfile>)> {
        let Some(a) = conditions[i].multiplier() else { return Ok((Vec::new(), None)) };
        let mine: Vec<_> = build.traces.iter().filter(|t| t.requirement == i && t.coded).collect();
        let mut recs = Vec::new();
        for t in &mine {
            let bound = lead_bound(a, &sched, t.k)?;
            let modes: &[bool] = if opts.traceless { &[false, true] } else { &[false] };
            for &traceless in modes {
                let tr = if traceless { None } else { Some(*t) };
                let mut rec = DecodeRecord {
                    stage: t.stage,
                    requirement: i,
                    traceless,
                    mismatch: None,
                    error: None,
                    layout: None,
                    lead_bound: bound,
                };
                match verify_decode(x, a, &sched, t.k, target, tr) {
                    Ok(d) => rec.layout = Some(d.layout),
                    Err(Error::DecodeMismatch { index }) => rec.mismatch = Some(index),
                    Err(e) => rec.error = Some(e.to_string()),
                }
                recs.push(rec);
            }
        }
        let ends: Vec<u64> = mine.iter().map(|t| t.x_len).collect();
        let mut profile = product_profile(a, x, i, &conditions[i].spec, &ends, opts)?;
        if let Some(p) = profile.points.last() {
            let kept: Vec<u64> = profile.points.iter().map(|q| q.n).collect();
            profile.reference = density_profile(&target.prefix(p.n), &kept)?;
        }
        Ok((recs, Some(profile)))
    });
    for r in results {
        let (recs, profile) = r?;
        report.decodes.extend(recs);
        report.density.extend(profile);
    }
    report.decodes.sort_by_key(|d| (d.stage, d.traceless));

    for traceless in [false, true] {
        let recs: Vec<&DecodeRecord> = report.decodes.iter().filter(|d| d.traceless == traceless).collect();
        if traceless && !opts.traceless {
            continue;
        }
        let mismatched: Vec<u64> = recs.iter().filter_map(|d| d.mismatch).collect();
        let errors: Vec<String> = recs.iter().filter_map(|d| d.error.as_ref().map(|e| format!("stage {}: {e}", d.stage))).collect();
        let name = if traceless { "decode_traceless" } else { "decode" };
        let ok = mismatched.is_empty() && errors.is_empty();
        let detail = if ok {
            format!("{} stages decoded exactly", recs.len())
        } else {
            format!("mismatches at T indices {mismatched:?}; errors {errors:?}")
        };
        report.checks.push(Check::structural(name, ok, detail));
    }
    if opts.traceless {
        let disagree: Vec<u64> = report
            .decodes
            .chunks(2)
            .filter(|p| p.len() == 2 && p[0].layout.is_some() && p[1].layout.is_some() && p[0].layout != p[1].layout)
            .map(|p| p[0].stage)
            .collect();
        report.checks.push(Check::structural(
            "traceless_positions",
            disagree.is_empty(),
            if disagree.is_empty() { "recomputed block positions equal the trace".into() } else { format!("stages {disagree:?}") },
        ));
    }
    let mism: Vec<u64> = report.decodes.iter().filter(|d| !d.traceless).filter_map(|d| d.mismatch).collect();
    report.decode_mismatches = mism.len() as u64;
    report.first_mismatch = mism.iter().min().copied();

    let leads: Vec<String> = report
        .decodes
        .iter()
        .filter(|d| !d.traceless)
        .filter_map(|d| d.layout.as_ref().filter(|l| l.lead > d.lead_bound).map(|l| format!("stage {}: {} > {}", d.stage, l.lead, d.lead_bound)))
        .collect();
    report.checks.push(Check::structural(
        "interleave_lead",
        leads.is_empty(),
        if leads.is_empty() { "ℓ(σ) ≤ ⌈−log₂ a⌉ + ν(k) + 2 at every coded stage".into() } else { leads.join("; ") },
    ));
    let trailers: Vec<i64> =
        report.decodes.iter().filter(|d| !d.traceless).filter_map(|d| d.layout.as_ref().map(|l| l.trailer)).collect();
    let long: Vec<i64> = trailers.iter().copied().filter(|&t| !(0..=COST_BOUND as i64).contains(&t)).collect();
    report.checks.push(Check::structural(
        "trailer",
        long.is_empty(),
        format!("ℓ(σ′) over coded stages: {trailers:?}"),
    ));

    for p in &report.density {
        let judged: Vec<(DensityPoint, DensityPoint)> = p
            .points
            .iter()
            .zip(&p.reference)
            .filter(|(q, _)| q.n >= opts.min_judged_len)
            .map(|(q, r)| (*q, *r))
            .collect();
        let ok = judged.iter().all(|(q, r)| (q.ratio - r.ratio).abs() <= opts.density_tolerance);
        let detail = judged
            .iter()
            .map(|(q, r)| format!("{}: {:.4} vs {:.4}", q.n, q.ratio, r.ratio))
            .collect::<Vec<_>>()
            .join("; ");
        report.checks.push(Check::informational(&format!("density_match[{}]", p.requirement), ok, detail));
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_thm1, build_thm2, Periodic, PrngBits, Ratio};

    #[test]
    fn empty_reports() {
        let c = Condition::parse_all(&["1/2"]).unwrap();
        let b = build_thm1(&PrngBits::new(1), &c, Schedule::Thm1Paper, 0, 1 << 20).unwrap();
        let r = verify_thm1(&b, &c, None, &AuditOptions::default()).unwrap();
        assert!(r.passed && r.checks.is_empty() && r.density.is_empty());
        let t = TargetSequence::new(Ratio::new(1, 2).unwrap(), 1);
        let b = build_thm2(&PrngBits::new(1), &PrngBits::new(2), &c, &t, Schedule::scaled(8).unwrap(), 0, 1 << 20).unwrap();
        let r = verify_thm2(&b, &c, &t, None, None, &AuditOptions::default()).unwrap();
        assert!(r.passed && r.checks.is_empty());
    }

    #[test]
    fn thm1_scaled_passes() {
        let c = Condition::parse_all(&["1/2", "3/7"]).unwrap();
        let a = PrngBits::new(4);
        let b = build_thm1(&a, &c, Schedule::scaled(8).unwrap(), 5, 1 << 20).unwrap();
        let r = verify_thm1(&b, &c, Some(&a), &AuditOptions::default()).unwrap();
        assert!(r.passed, "{:#?}", r.checks);
        assert!(r.containment.iter().all(|c| c.inside && c.prefix_matches));
        assert_eq!(r.density.len(), 2);
        let wrong = Periodic(BitString::from_bools(a.prefix(5).iter().map(|b| !b)));
        let r = verify_thm1(&b, &c, Some(&wrong), &AuditOptions::default()).unwrap();
        assert!(!r.passed && r.check("folding").is_some_and(|c| !c.passed));
    }

    #[test]
    fn thm1_detects_corruption() {
        let c = Condition::parse_all(&["1/2"]).unwrap();
        let a = PrngBits::new(4);
        let mut b = build_thm1(&a, &c, Schedule::scaled(8).unwrap(), 4, 1 << 20).unwrap();
        let t = &b.traces[3];
        let p = t.tau_prime.len() + 10;
        b.x.set(p, !b.x.get(p));
        let r = verify_thm1(&b, &c, Some(&a), &AuditOptions::default()).unwrap();
        assert!(r.check("containment").is_some_and(|c| !c.passed));
    }

    #[test]
    fn thm2_passes_and_detects() {
        let c = Condition::parse_all(&["3/7"]).unwrap();
        let (a, phi) = (PrngBits::new(1), PrngBits::with_stream(6, 1));
        let t = TargetSequence::new(Ratio::new(1, 2).unwrap(), 6);
        let mut b = build_thm2(&a, &phi, &c, &t, Schedule::scaled(8).unwrap(), 4, 1 << 20).unwrap();
        let opts = AuditOptions::default();
        let r = verify_thm2(&b, &c, &t, Some(&a), Some(&phi), &opts).unwrap();
        assert!(r.passed, "{:#?}", r.checks);
        assert_eq!(r.decode_mismatches, 0);
        assert!(!r.cost_deltas.is_empty());

        let blk = &b.traces[3].blocks[30];
        let p = (blk.tau_prime_len + 10) as usize;
        b.x.set(p, !b.x.get(p));
        let r = verify_thm2(&b, &c, &t, Some(&a), Some(&phi), &opts).unwrap();
        assert!(!r.passed);
        assert_eq!(r.decode_mismatches, 1);
        let first = r.first_mismatch.unwrap();
        let w = b.schedule.block_len(3).unwrap();
        let off = b.schedule.target_offset(3).unwrap();
        assert!((off + 30 * w..off + 31 * w).contains(&first), "{first}");
    }
}
