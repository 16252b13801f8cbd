use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_scenario, HarnessError, Heating, RunResult, Scenario, Setup};
use crate::energy::EnergyError;

pub const COMPARISON_HEADER: &str = "group,T_amb_C,seed,E_eq_base_J,E_eq_eco_J,saving_pct,E_DAHE_base_J,E_DAHE_eco_J,idle_base_s,idle_eco_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientGroup {
    VeryCold,
    Cold,
    Mild,
}

impl AmbientGroup {
    pub fn label(&self) -> &'static str {
        match self {
            AmbientGroup::VeryCold => "very_cold",
            AmbientGroup::Cold => "cold",
            AmbientGroup::Mild => "mild",
        }
    }
}

/// Very cold at or below −5 °C, cold up to 0 °C, mild above.
pub fn ambient_group(t_amb: f64) -> AmbientGroup {
    if t_amb <= -5.0 {
        AmbientGroup::VeryCold
    } else if t_amb <= 0.0 {
        AmbientGroup::Cold
    } else {
        AmbientGroup::Mild
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub group: AmbientGroup,
    pub t_amb: f64,
    pub seed: u64,
    pub e_eq_base: f64,
    pub e_eq_eco: f64,
    pub saving_pct: f64,
    pub e_dahe_base: f64,
    pub e_dahe_eco: f64,
    pub idle_base: f64,
    pub idle_eco: f64,
}

impl ComparisonRow {
    /// Relative change of heating energy, percent.
    pub fn dahe_change_pct(&self) -> f64 {
        100.0 * (self.e_dahe_eco - self.e_dahe_base) / self.e_dahe_base
    }

    pub fn idle_change_s(&self) -> f64 {
        self.idle_eco - self.idle_base
    }
}

/// Savings of `b` relative to the baseline `a`.
pub fn compare(a: &RunResult, b: &RunResult) -> Result<ComparisonRow, HarnessError> {
    let (sa, sb) = (&a.scenario, &b.scenario);
    if a.corridor != b.corridor || sa.long_stop != sb.long_stop {
        return Err(HarnessError::IncomparableScenarios(format!(
            "{} and {} ran on different corridors",
            sa.name, sb.name
        )));
    }
    if sa.t_amb != sb.t_amb {
        return Err(HarnessError::IncomparableScenarios(format!(
            "ambient {} °C vs {} °C",
            sa.t_amb, sb.t_amb
        )));
    }
    Ok(ComparisonRow {
        group: ambient_group(sa.t_amb),
        t_amb: sa.t_amb,
        seed: sa.seed,
        e_eq_base: a.report.e_eq,
        e_eq_eco: b.report.e_eq,
        saving_pct: 100.0 * (a.report.e_eq - b.report.e_eq) / a.report.e_eq,
        e_dahe_base: a.report.e_dahe,
        e_dahe_eco: b.report.e_dahe,
        idle_base: a.report.engine_idle_seconds,
        idle_eco: b.report.engine_idle_seconds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: AmbientGroup,
    pub runs: usize,
    pub mean_saving_pct: f64,
    pub mean_dahe_change_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub groups: Vec<GroupSummary>,
}

impl ComparisonTable {
    pub fn from_rows(rows: Vec<ComparisonRow>) -> Self {
        let mut groups = Vec::new();
        for g in [AmbientGroup::VeryCold, AmbientGroup::Cold, AmbientGroup::Mild] {
            let members: Vec<_> = rows.iter().filter(|r| r.group == g).collect();
            if members.is_empty() {
                continue;
            }
            let n = members.len() as f64;
            groups.push(GroupSummary {
                group: g,
                runs: members.len(),
                mean_saving_pct: members.iter().map(|r| r.saving_pct).sum::<f64>() / n,
                mean_dahe_change_pct: members.iter().map(|r| r.dahe_change_pct()).sum::<f64>() / n,
            });
        }
        ComparisonTable { rows, groups }
    }

    pub fn group(&self, g: AmbientGroup) -> Option<&GroupSummary> {
        self.groups.iter().find(|s| s.group == g)
    }
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<(), EnergyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.group.label().to_string(),
            r.t_amb.to_string(),
            r.seed.to_string(),
            r.e_eq_base.to_string(),
            r.e_eq_eco.to_string(),
            r.saving_pct.to_string(),
            r.e_dahe_base.to_string(),
            r.e_dahe_eco.to_string(),
            r.idle_base.to_string(),
            r.idle_eco.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
pub(crate) fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Paired constant/eco heating runs for every ambient and seed
/// `base.seed .. base.seed + repeats`.
pub fn sweep_ambient(
    base: &Scenario,
    temps: &[f64],
    repeats: usize,
    setup: &Setup,
    jobs: usize,
) -> Result<ComparisonTable, HarnessError> {
    if temps.is_empty() {
        return Err(HarnessError::EmptyInput("ambient temperature list"));
    }
    if repeats == 0 {
        return Err(HarnessError::EmptyInput("seed list"));
    }
    let mut pairs = Vec::new();
    for &t in temps {
        for r in 0..repeats as u64 {
            let s = base.with_ambient(t).with_seed(base.seed + r);
            pairs.push((s.with_heating(Heating::Constant), s.with_heating(Heating::Eco)));
        }
    }
    let rows = par_map(&pairs, jobs, |(a, b)| -> Result<ComparisonRow, HarnessError> {
        let ra = run_scenario(a, setup)?;
        let rb = run_scenario(b, setup)?;
        compare(&ra, &rb)
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonTable::from_rows(rows))
}
