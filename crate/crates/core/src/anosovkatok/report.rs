use std::fmt::Write as _;

use serde::Serialize;

use super::{BuildReport, EpsilonBreakdown};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Below,
    Above,
    Exact,
}

/// One measured quantity against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub condition: &'static str,
    pub stage: usize,
    pub quantity: String,
    pub measured: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn below(condition: &'static str, stage: usize, quantity: String, measured: f64, threshold: f64) -> Self {
        Check {
            condition,
            stage,
            quantity,
            measured,
            threshold,
            relation: Relation::Below,
            pass: measured < threshold,
        }
    }

    pub fn above(condition: &'static str, stage: usize, quantity: String, measured: f64, threshold: f64) -> Self {
        Check {
            condition,
            stage,
            quantity,
            measured,
            threshold,
            relation: Relation::Above,
            pass: measured > threshold,
        }
    }

    pub fn exact(condition: &'static str, stage: usize, quantity: String, measured: f64, pass: bool) -> Self {
        Check {
            condition,
            stage,
            quantity,
            measured,
            threshold: f64::NAN,
            relation: Relation::Exact,
            pass,
        }
    }

    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::Below => format!("< {:.6e}", self.threshold),
            Relation::Above => format!("> {:.6e}", self.threshold),
            Relation::Exact => "exact".to_string(),
        };
        format!(
            "[{}] stage {} {:<12} {:.6e} {rel}  {}",
            if self.pass { "pass" } else { "FAIL" },
            self.stage,
            self.condition,
            self.measured,
            self.quantity
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub checks: Vec<Check>,
    pub epsilon: EpsilonBreakdown,
    pub build: Option<BuildReport>,
}

/// Probe pair whose orbits separate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub x: [String; 2],
    pub y: [String; 2],
    pub m: String,
    pub distance: f64,
    pub separation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionReport {
    pub stages: usize,
    pub q: String,
    pub omega: [String; 2],
    pub kappa_hat: f64,
    pub bmm_certified: f64,
    pub witness: Witness,
    pub periodicity_error: f64,
    /// `(q_j, ln q_j, score of ω_n at q_j)`
    pub liouville: Vec<(String, f64, f64)>,
    pub records: Vec<StageRecord>,
    /// Final-stage checks followed by every per-stage check.
    pub checks: Vec<Check>,
    pub relaxation: &'static str,
}

impl ConstructionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "stages: {}", self.stages);
        let _ = writeln!(s, "q_n: {}", self.q);
        let _ = writeln!(s, "omega_n: ({}, {})", self.omega[0], self.omega[1]);
        let _ = writeln!(s, "kappa_hat: {:.6e} (certified bound {:.6e})", self.kappa_hat, self.bmm_certified);
        let _ = writeln!(
            s,
            "witness: m = {}, d(x, y) = {:.6e}, separation = {:.6e}",
            self.witness.m, self.witness.distance, self.witness.separation
        );
        let _ = writeln!(s, "periodicity error: {:.3e}", self.periodicity_error);
        for (q, ln_q, score) in &self.liouville {
            let _ = writeln!(s, "liouville: q = {q} (ln q = {ln_q:.3}), score {score:.6e}");
        }
        for r in &self.records {
            let e = &r.epsilon;
            let _ = writeln!(
                s,
                "epsilon_{}: {:.6e} (bmm {:.3e}, separation {:.3e}, arithmetic {:.3e}, density {:.3e})",
                r.stage, e.epsilon, e.bmm, e.separation, e.arithmetic, e.density
            );
        }
        for c in &self.checks {
            let _ = writeln!(s, "{}", c.line());
        }
        let _ = writeln!(s, "note: {}", self.relaxation);
        let _ = writeln!(s, "result: {}", if self.passed() { "pass" } else { "FAIL" });
        s
    }
}
