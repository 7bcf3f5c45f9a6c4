use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::attractor::llt_approx_grid;
use crate::error::{LatconvError, Result};
use crate::expansion::{analyze, SpectralAnalysis, Verdict};
use crate::format::fmt_f64;
use crate::homogeneous::HomogeneousPolynomial;
use crate::lattice::{
    DenseGrid, LatticeBox, LatticeFunction, LatticePoint, PowerConfig, PowerMethod,
};
use crate::legendre::{ConjugateEvaluator, ConjugateTable};

use super::diff::dense_diff;
use super::powers::{for_each_power, PathPolicy};

/// Allowed max/min spread of the scaled sup column.
pub const BAND_FACTOR: f64 = 2.0;
/// Late `l^1` growth tolerated by the stable verdict.
pub const STABILITY_FACTOR: f64 = 1.02;
/// Allowed spread of a fitted constant across the top two octaves of `n`.
pub const FIT_RATIO: f64 = 1.5;
/// `l^1` growth over five octaves that signals instability.
pub const GROWTH_FACTOR: f64 = 2.0;

const M_GRID_STEPS: i32 = 20;
const DRIFT_TOL: f64 = 1e-8;
const POLY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportVerdict {
    BoundedBand,
    OutsideBand,
    Stable,
    Unstable,
    Inconclusive,
    Fitted,
    Unfitted,
    NotApplicable,
}

impl ReportVerdict {
    pub fn passed(self) -> bool {
        matches!(
            self,
            ReportVerdict::BoundedBand
                | ReportVerdict::Stable
                | ReportVerdict::Fitted
                | ReportVerdict::NotApplicable
        )
    }
}

impl fmt::Display for ReportVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportVerdict::BoundedBand => "bounded-band",
            ReportVerdict::OutsideBand => "outside-band",
            ReportVerdict::Stable => "stable",
            ReportVerdict::Unstable => "unstable",
            ReportVerdict::Inconclusive => "inconclusive",
            ReportVerdict::Fitted => "fitted",
            ReportVerdict::Unfitted => "unfitted",
            ReportVerdict::NotApplicable => "not-applicable",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub n: u64,
    pub sup: f64,
    pub l1: f64,
    /// The report's scaled quantity: `n^mu sup`, a fitted constant at this `n`, or `l1`.
    pub scaled: f64,
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub title: String,
    pub rows: Vec<BoundRow>,
    pub constants: Vec<(String, f64)>,
    /// Spread that decided the verdict.
    pub ratio: Option<f64>,
    pub verdict: ReportVerdict,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(title: &str) -> Self {
        BoundReport {
            title: title.to_string(),
            rows: Vec::new(),
            constants: Vec::new(),
            ratio: None,
            verdict: ReportVerdict::Inconclusive,
            notes: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    pub fn row(&self, n: u64) -> Option<&BoundRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// CSV with a leading `# verdict:` line, then `#` metadata and `n,sup,l1,scaled` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# verdict: {}\n# report: {}\n", self.verdict, self.title);
        if let Some(r) = self.ratio {
            out.push_str(&format!("# ratio: {}\n", fmt_f64(r)));
        }
        for (k, v) in &self.constants {
            out.push_str(&format!("# {k}: {}\n", fmt_f64(*v)));
        }
        for note in &self.notes {
            out.push_str(&format!("# note: {note}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "sup", "l1", "scaled"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_f64(r.sup),
                fmt_f64(r.l1),
                fmt_f64(r.scaled),
            ])
            .expect("in-memory write");
        }
        out.push_str(
            &String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output"),
        );
        out
    }
}

fn mu_f64(a: &SpectralAnalysis) -> f64 {
    let mu = a.mu.expect("positive homogeneous analysis");
    *mu.numer() as f64 / *mu.denom() as f64
}

fn require_classified(a: &SpectralAnalysis) -> Result<()> {
    if a.verdict == Verdict::Indeterminate {
        return Err(LatconvError::AnalysisFailed(
            "classification is indeterminate; raise the expansion order".into(),
        ));
    }
    Ok(())
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > 0.0 && hi.is_finite() {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Indices of the last row and of the last row at or below half its `n`.
fn top_two(ns: &[u64]) -> Option<(usize, usize)> {
    let last = ns.len().checked_sub(1)?;
    let prev = ns.iter().rposition(|&n| 2 * n <= ns[last])?;
    Some((last, prev))
}

/// Rows `(n, ||g^(n)||_inf, ||g^(n)||_1, n^mu ||g^(n)||_inf)` for the normalized input,
/// with the band verdict over the top three octaves of `n`.
pub fn sup_decay_report(f: &LatticeFunction, ns: &[u64]) -> Result<BoundReport> {
    let a = analyze(f)?;
    require_classified(&a)?;
    let mut rep = BoundReport::new("sup-decay");
    rep.constants.push(("scale".into(), a.scale));
    let applicable = a.verdict == Verdict::PositiveHomogeneousType;
    let mu = if applicable { mu_f64(&a) } else { 0.0 };
    if applicable {
        rep.constants.push(("mu".into(), mu));
    }
    for_each_power(
        &a.normalized,
        ns,
        PathPolicy::Fast,
        &PowerConfig::default(),
        |n, g| {
            let sup = g.norm_linf();
            rep.rows.push(BoundRow {
                n,
                sup,
                l1: g.norm_l1(),
                scaled: (n as f64).powf(mu) * sup,
            });
            Ok(())
        },
    )?;
    if !applicable {
        rep.verdict = ReportVerdict::NotApplicable;
        rep.notes
            .push("some unit-modulus point is not of positive homogeneous type".into());
        return Ok(rep);
    }
    let n_max = ns.last().copied().unwrap_or(0);
    let ratio = spread(
        rep.rows
            .iter()
            .filter(|r| 8 * r.n >= n_max)
            .map(|r| r.scaled),
    );
    rep.ratio = Some(ratio);
    rep.verdict = if ratio <= BAND_FACTOR {
        ReportVerdict::BoundedBand
    } else {
        ReportVerdict::OutsideBand
    };
    Ok(rep)
}

#[derive(Clone, Debug)]
pub struct LltError {
    pub n: u64,
    pub sup_error: f64,
    /// `n^mu` times the sup error.
    pub scaled_error: f64,
    pub argmax: LatticePoint,
    pub window: LatticeBox,
}

/// Sup distance between `g^(n)` and the local-limit approximation, where `g` is the
/// normalized input, over the support of `g^(n)` joined with a box of half-width
/// `6 n^{lambda_max}` around every `n alpha_q`.
pub fn llt_error(analysis: &SpectralAnalysis, n: u64, cfg: &PowerConfig) -> Result<LltError> {
    require_classified(analysis)?;
    if analysis.verdict != Verdict::PositiveHomogeneousType {
        return Err(LatconvError::AnalysisFailed(
            "some unit-modulus point is not of positive homogeneous type".into(),
        ));
    }
    let d = analysis.dim;
    let g = analysis.normalized.power_dense(n, PowerMethod::Fast, cfg)?;
    let mut window = g.bounds();
    let nf = n as f64;
    for q in analysis.minimal_points() {
        let poly = q.polynomial().expect("classified point");
        let half = (6.0 * nf.powf(poly.lambda_max()) * (d as f64).sqrt()).ceil() as i64;
        let alpha = q.drift().expect("classified point");
        let lo: Vec<i64> = alpha
            .iter()
            .map(|a| (a * nf).floor() as i64 - half)
            .collect();
        let hi: Vec<i64> = alpha
            .iter()
            .map(|a| (a * nf).ceil() as i64 + half)
            .collect();
        window = window.union(&LatticeBox::new(lo, hi)?);
    }
    let approx = llt_approx_grid(analysis, n, &window, cfg)?;
    let back = analysis.scale.powf(nf);
    let exact = g.restrict(&window);
    let mut worst = 0.0f64;
    let mut at = 0;
    for (i, (x, y)) in exact.data().iter().zip(approx.data()).enumerate() {
        let e = (x - y * back).norm();
        if e > worst {
            worst = e;
            at = i;
        }
    }
    let mu = mu_f64(analysis);
    Ok(LltError {
        n,
        sup_error: worst,
        scaled_error: nf.powf(mu) * worst,
        argmax: exact.point(at),
        window,
    })
}

fn same_polynomial(p: &HomogeneousPolynomial, q: &HomogeneousPolynomial) -> bool {
    let zero = Complex64::new(0.0, 0.0);
    let keys = p.coefficients().keys().chain(q.coefficients().keys());
    keys.into_iter().all(|k| {
        let a = p.coefficients().get(k).copied().unwrap_or(zero);
        let b = q.coefficients().get(k).copied().unwrap_or(zero);
        (a - b).norm() <= POLY_TOL
    })
}

/// Fits `|g^(n)(x)| <= C n^{-mu} exp(-n M R^#((x - n alpha)/n))` for the normalized input.
///
/// `M` runs over `1, 1/2, ..., 2^-20`; the largest `M` whose constant is finite and agrees
/// within [`FIT_RATIO`] across the top two octaves of `n` is reported with `C` the maximum
/// over all `n`.
pub fn gaussian_bound_fit(
    f: &LatticeFunction,
    ns: &[u64],
    cfg: &PowerConfig,
) -> Result<BoundReport> {
    let a = analyze(f)?;
    require_classified(&a)?;
    if a.verdict != Verdict::PositiveHomogeneousType {
        return Err(LatconvError::HypothesisViolation(
            "some unit-modulus point is not of positive homogeneous type".into(),
        ));
    }
    let first = &a.points[0];
    let poly = first.polynomial().expect("classified point").clone();
    let alpha = first.drift().expect("classified point").to_vec();
    for q in &a.points[1..] {
        let qa = q.drift().expect("classified point");
        let drift_gap = qa
            .iter()
            .zip(&alpha)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if drift_gap > DRIFT_TOL
            || !same_polynomial(q.polynomial().expect("classified point"), &poly)
        {
            return Err(LatconvError::HypothesisViolation(
                "unit-modulus points carry distinct drifts or polynomials; use the sub-exponential fit".into(),
            ));
        }
    }
    let mu = mu_f64(&a);
    let ev = ConjugateEvaluator::new(&poly)?;
    let table = ConjugateTable::new(&ev, if poly.dim() == 2 { 2048 } else { 48 })?;
    // per n: (log |g| + mu log n, n R^#) over the nonzero entries
    let mut samples: Vec<(u64, f64, f64, Vec<(f64, f64)>)> = Vec::new();
    let direct = for_each_power(&a.normalized, ns, PathPolicy::Auto, cfg, |n, g| {
        let nf = n as f64;
        let mut pts = Vec::new();
        let mut err = None;
        g.for_each(|x, v| {
            let m = v.norm();
            if m == 0.0 || err.is_some() {
                return;
            }
            let y: Vec<f64> = x
                .iter()
                .zip(&alpha)
                .map(|(&xi, a)| (xi as f64 - nf * a) / nf)
                .collect();
            match table.value(&y) {
                Ok(r) => pts.push((m.ln() + mu * nf.ln(), nf * r)),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        samples.push((n, g.norm_linf(), g.norm_l1(), pts));
        Ok(())
    })?;
    let mut rep = BoundReport::new("gaussian-bound");
    rep.notes.push(format!(
        "{} power path",
        if direct { "direct" } else { "fast" }
    ));
    let ns_seen: Vec<u64> = samples.iter().map(|s| s.0).collect();
    let Some((last, prev)) = top_two(&ns_seen) else {
        return Err(LatconvError::invalid(
            "need n values spanning at least one octave",
        ));
    };
    let s_of = |m: f64, pts: &[(f64, f64)]| {
        pts.iter()
            .map(|(l, r)| (l + m * r).exp())
            .fold(0.0, f64::max)
    };
    let mut chosen: Option<(f64, Vec<f64>, f64)> = None;
    for k in 0..=M_GRID_STEPS {
        let m = 2f64.powi(-k);
        let per_n: Vec<f64> = samples.iter().map(|s| s_of(m, &s.3)).collect();
        let ratio = spread([per_n[last], per_n[prev]].into_iter());
        if per_n.iter().all(|v| v.is_finite()) && ratio <= FIT_RATIO {
            chosen = Some((m, per_n, ratio));
            break;
        }
    }
    match chosen {
        Some((m, per_n, ratio)) => {
            let c = per_n.iter().cloned().fold(0.0, f64::max);
            for (s, v) in samples.iter().zip(&per_n) {
                rep.rows.push(BoundRow {
                    n: s.0,
                    sup: s.1,
                    l1: s.2,
                    scaled: *v,
                });
            }
            rep.constants.push(("M".into(), m));
            rep.constants.push(("C".into(), c));
            rep.constants.push(("mu".into(), mu));
            rep.ratio = Some(ratio);
            rep.verdict = ReportVerdict::Fitted;
        }
        None => {
            for s in &samples {
                rep.rows.push(BoundRow {
                    n: s.0,
                    sup: s.1,
                    l1: s.2,
                    scaled: f64::NAN,
                });
            }
            rep.verdict = ReportVerdict::Unfitted;
            rep.notes
                .push(format!("no M >= 2^-{M_GRID_STEPS} gives a stable constant"));
        }
    }
    Ok(rep)
}

/// Fits `C_N = max_x |g^(n)(x)| / sum_q n^{-mu_q} (1 + |n^{-E_q^*}(x - n alpha_q)|)^{-N}`
/// over every unit-modulus point `q`.
pub fn subexp_bound_fit(
    f: &LatticeFunction,
    ns: &[u64],
    order: u32,
    cfg: &PowerConfig,
) -> Result<BoundReport> {
    let a = analyze(f)?;
    require_classified(&a)?;
    let mut rep = BoundReport::new("subexponential-bound");
    rep.constants.push(("N".into(), order as f64));
    if a.verdict != Verdict::PositiveHomogeneousType {
        rep.verdict = ReportVerdict::NotApplicable;
        rep.notes
            .push("some unit-modulus point is not of positive homogeneous type".into());
        return Ok(rep);
    }
    struct Term {
        mu: f64,
        alpha: Vec<f64>,
        poly: HomogeneousPolynomial,
    }
    let terms: Vec<Term> = a
        .points
        .iter()
        .map(|q| {
            let c = &q.classification;
            let mu = c.mu().expect("classified point");
            Term {
                mu: *mu.numer() as f64 / *mu.denom() as f64,
                alpha: q.drift().expect("classified point").to_vec(),
                poly: q.polynomial().expect("classified point").clone(),
            }
        })
        .collect();
    let nn = order as i32;
    for_each_power(&a.normalized, ns, PathPolicy::Fast, cfg, |n, g| {
        let nf = n as f64;
        let mats: Vec<_> = terms
            .iter()
            .map(|t| t.poly.group_matrix(1.0 / nf).map(|m| m.transpose()))
            .collect::<Result<_>>()?;
        let mut c: f64 = 0.0;
        g.for_each(|x, v| {
            let mut env = 0.0;
            for (t, m) in terms.iter().zip(&mats) {
                let y = DVector::from_iterator(
                    x.len(),
                    x.iter().zip(&t.alpha).map(|(&xi, a)| xi as f64 - nf * a),
                );
                env += nf.powf(-t.mu) * (1.0 + (m * y).norm()).powi(-nn);
            }
            c = c.max(v.norm() / env);
        });
        rep.rows.push(BoundRow {
            n,
            sup: g.norm_linf(),
            l1: g.norm_l1(),
            scaled: c,
        });
        Ok(())
    })?;
    let ns_seen: Vec<u64> = rep.rows.iter().map(|r| r.n).collect();
    let Some((last, prev)) = top_two(&ns_seen) else {
        return Err(LatconvError::invalid(
            "need n values spanning at least one octave",
        ));
    };
    let ratio = spread([rep.rows[last].scaled, rep.rows[prev].scaled].into_iter());
    let c = rep.rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    rep.constants.push(("C".into(), c));
    rep.ratio = Some(ratio);
    rep.verdict = if ratio <= FIT_RATIO && c.is_finite() {
        ReportVerdict::Fitted
    } else {
        ReportVerdict::Unfitted
    };
    Ok(rep)
}

/// `l^1` norms of `f^(n)` for dyadic `n` up to `n_max`.
///
/// Stable when the maximum over `[n_max/2, n_max]` is within [`STABILITY_FACTOR`] of the
/// maximum over `[1, n_max/2]`; unstable when the final norm is at least [`GROWTH_FACTOR`]
/// times the norm at `n_max/32`.
pub fn stability_report(f: &LatticeFunction, n_max: u64, cfg: &PowerConfig) -> Result<BoundReport> {
    if n_max < 2 {
        return Err(LatconvError::invalid("n_max must be at least 2"));
    }
    let ns = super::powers::dyadic(n_max);
    let mut rep = BoundReport::new("stability");
    let direct = for_each_power(f, &ns, PathPolicy::Auto, cfg, |n, g| {
        let l1 = g.norm_l1();
        rep.rows.push(BoundRow {
            n,
            sup: g.norm_linf(),
            l1,
            scaled: l1,
        });
        Ok(())
    })?;
    rep.notes.push(format!(
        "{} power path",
        if direct { "direct" } else { "fast" }
    ));
    let half = n_max / 2;
    let early = rep
        .rows
        .iter()
        .filter(|r| r.n <= half)
        .map(|r| r.l1)
        .fold(0.0, f64::max);
    let late = rep
        .rows
        .iter()
        .filter(|r| r.n >= half)
        .map(|r| r.l1)
        .fold(0.0, f64::max);
    let last = rep.rows.last().expect("nonempty").l1;
    let base = rep
        .rows
        .iter()
        .filter(|r| 32 * r.n <= n_max)
        .map(|r| r.l1)
        .next_back();
    let ratio = late / early;
    rep.ratio = Some(ratio);
    rep.constants.push((
        "C".into(),
        rep.rows.iter().map(|r| r.l1).fold(0.0, f64::max),
    ));
    if let Some(b) = base {
        rep.constants.push(("growth".into(), last / b));
    }
    rep.verdict = if ratio <= STABILITY_FACTOR {
        ReportVerdict::Stable
    } else if base.is_some_and(|b| last >= GROWTH_FACTOR * b) {
        ReportVerdict::Unstable
    } else {
        ReportVerdict::Inconclusive
    };
    Ok(rep)
}

/// Fits `C_beta = n^{mu + |beta:2m|} sup |D_v^beta g^(n)|` for a single unit-modulus point.
pub fn derivative_bound_fit(
    f: &LatticeFunction,
    v: &[Vec<i64>],
    beta: &[u32],
    ns: &[u64],
    cfg: &PowerConfig,
) -> Result<BoundReport> {
    let a = analyze(f)?;
    require_classified(&a)?;
    if a.verdict != Verdict::PositiveHomogeneousType {
        return Err(LatconvError::HypothesisViolation(
            "some unit-modulus point is not of positive homogeneous type".into(),
        ));
    }
    if a.points.len() != 1 {
        return Err(LatconvError::HypothesisViolation(format!(
            "derivative estimates need a single unit-modulus point, found {}",
            a.points.len()
        )));
    }
    let d = a.dim;
    if v.len() != d || beta.len() != d {
        return Err(LatconvError::DimensionMismatch {
            expected: d,
            found: v.len().min(beta.len()),
        });
    }
    let poly = a.points[0].polynomial().expect("classified point");
    let vf: Vec<Vec<f64>> = v
        .iter()
        .map(|w| w.iter().map(|&c| c as f64).collect())
        .collect();
    let (fitted, weights) = poly.p_fitted(&vf)?;
    if !fitted {
        return Err(LatconvError::HypothesisViolation(
            "difference directions are not fitted to the polynomial".into(),
        ));
    }
    let mu = mu_f64(&a);
    let extra: f64 = beta
        .iter()
        .zip(&weights)
        .map(|(&b, &m)| b as f64 / (2.0 * m as f64))
        .sum();
    let exponent = mu + extra;
    let mut rep = BoundReport::new("derivative-bound");
    rep.constants.push(("exponent".into(), exponent));
    for_each_power(&a.normalized, ns, PathPolicy::Auto, cfg, |n, g| {
        let mut cur: DenseGrid = g.clone();
        for (w, &b) in v.iter().zip(beta) {
            for _ in 0..b {
                cur = dense_diff(&cur, w)?;
            }
        }
        let sup = cur.norm_linf();
        rep.rows.push(BoundRow {
            n,
            sup,
            l1: cur.norm_l1(),
            scaled: (n as f64).powf(exponent) * sup,
        });
        Ok(())
    })?;
    let ns_seen: Vec<u64> = rep.rows.iter().map(|r| r.n).collect();
    let Some((last, prev)) = top_two(&ns_seen) else {
        return Err(LatconvError::invalid(
            "need n values spanning at least one octave",
        ));
    };
    let ratio = spread([rep.rows[last].scaled, rep.rows[prev].scaled].into_iter());
    rep.constants.push((
        "C".into(),
        rep.rows.iter().map(|r| r.scaled).fold(0.0, f64::max),
    ));
    rep.ratio = Some(ratio);
    rep.verdict = if ratio <= FIT_RATIO {
        ReportVerdict::Fitted
    } else {
        ReportVerdict::Unfitted
    };
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{simple_random_walk, unstable1d};

    #[test]
    fn translation_is_not_applicable() {
        let f = LatticeFunction::delta(&[3]).unwrap();
        let r = sup_decay_report(&f, &[1, 2, 4]).unwrap();
        assert_eq!(r.verdict, ReportVerdict::NotApplicable);
        assert!(r.rows.iter().all(|row| (row.sup - 1.0).abs() < 1e-12));
        assert!(r.to_csv().starts_with("# verdict: not-applicable\n"));
    }

    #[test]
    fn walk_mass_is_conserved() {
        let r =
            stability_report(&simple_random_walk(2).unwrap(), 64, &PowerConfig::default()).unwrap();
        assert_eq!(r.verdict, ReportVerdict::Stable);
        assert!(r.rows.iter().all(|row| (row.l1 - 1.0).abs() < 1e-12));
    }

    #[test]
    fn growth_is_flagged() {
        let r = stability_report(&unstable1d(), 512, &PowerConfig::default()).unwrap();
        assert_eq!(r.verdict, ReportVerdict::Unstable, "{:?}", r.rows);
    }
}
