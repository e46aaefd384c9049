//! Seeded Monte Carlo comparison of sampled trees against the closed forms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::branching::{
    count_fathers_survivals, map_replicates, Criticality, SampleStatus, SurvivalParams,
};
use crate::error::{Error, Result};
use crate::inference::{
    extinction_probability, father_pmf, joint_pmf, mgf_fixed_point, no_father_mass, FatherStat,
    MgfQuery,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: usize,
    pub seed: u64,
    pub root_type: u32,
    pub max_vertices: usize,
    /// Points at which `E[exp(2 s ||tau||)]` is compared with the fixed point.
    pub s_values: Vec<f64>,
    pub mgf_tolerance: f64,
    pub mgf_max_iterations: u64,
    /// Cells with less theoretical mass are left out of the report.
    pub min_cell_mass: f64,
}

impl McConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            root_type: 1,
            max_vertices: 10_000,
            s_values: vec![-0.05, -0.2],
            mgf_tolerance: crate::inference::DEFAULT_MGF_TOLERANCE,
            mgf_max_iterations: crate::inference::DEFAULT_MGF_MAX_ITERATIONS,
            min_cell_mass: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellKind {
    Extinction,
    Mgf,
    Father,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: CellKind,
    pub label: String,
    pub theoretical: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub z: f64,
}

impl Cell {
    fn proportion(kind: CellKind, label: String, theoretical: f64, hits: u64, n: usize) -> Self {
        let empirical = hits as f64 / n as f64;
        let std_error = (theoretical * (1.0 - theoretical) / n as f64).sqrt();
        Self {
            kind,
            label,
            theoretical,
            empirical,
            std_error,
            z: z_score(empirical - theoretical, std_error),
        }
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub params: SurvivalParams,
    pub config: McConfig,
    pub criticality: Criticality,
    pub complete: u64,
    pub truncated: u64,
    pub cells: Vec<Cell>,
    /// Total variation distance between the empirical and theoretical
    /// `(D1, D2)` laws, `None` when the father law is undefined.
    pub father_tv: Option<f64>,
}

impl McReport {
    pub fn max_abs_z(&self, kind: CellKind, min_mass: f64) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.kind == kind && c.theoretical > min_mass)
            .map(|c| c.z.abs())
            .fold(0.0, f64::max)
    }

    pub fn cell(&self, kind: CellKind, label: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.kind == kind && c.label == label)
    }

    /// `cell,theoretical,empirical,z` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,theoretical,empirical,z\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{}\n",
                c.label, c.theoretical, c.empirical, c.z
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "replicates: {} (seed {:#x}, root type {})\n",
            self.config.replicates, self.config.seed, self.config.root_type
        );
        out.push_str(&format!("criticality: {:?}\n", self.criticality));
        out.push_str(&format!(
            "complete: {}  truncated: {} (max {} vertices)\n",
            self.complete, self.truncated, self.config.max_vertices
        ));
        for kind in [
            CellKind::Extinction,
            CellKind::Mgf,
            CellKind::Father,
            CellKind::Joint,
        ] {
            let n = self.cells.iter().filter(|c| c.kind == kind).count();
            if n > 0 {
                out.push_str(&format!(
                    "{kind:?}: {n} cells, max |z| {:.3} (cells above 1%: {:.3})\n",
                    self.max_abs_z(kind, 0.0),
                    self.max_abs_z(kind, 0.01)
                ));
            }
        }
        if let Some(tv) = self.father_tv {
            out.push_str(&format!("father law total variation: {tv:.5}\n"));
        }
        out
    }
}

/// Per-replicate summary kept by the harness.
#[derive(Debug, Clone, Copy)]
struct Replicate {
    complete: bool,
    edges: usize,
    counts: [u64; 4],
}

/// Samples `config.replicates` trees and compares the empirical extinction
/// frequency, contour-period transforms, father law and joint father/survival
/// law with their closed forms.
pub fn mc_compare(params: &SurvivalParams, config: &McConfig) -> Result<McReport> {
    params.check()?;
    if config.replicates == 0 {
        return Err(Error::arg("at least one replicate is required"));
    }
    if config.root_type != 1 && config.root_type != 2 {
        return Err(Error::arg("root type must be 1 or 2"));
    }
    let dist = params.distribution();
    let reps = map_replicates(
        &dist,
        config.root_type,
        config.seed,
        config.replicates,
        config.max_vertices,
        |out| {
            let complete = out.status == SampleStatus::Complete;
            // A truncated prefix can end between the two children of a father.
            let counts = if complete {
                let c = count_fathers_survivals(&out.tree).expect("survival model sample");
                [c.d1, c.d2, c.s1, c.s2]
            } else {
                [0; 4]
            };
            Replicate {
                complete,
                edges: out.edge_count,
                counts,
            }
        },
    )?;
    let n = reps.len();
    let complete = reps.iter().filter(|r| r.complete).count() as u64;
    let truncated = n as u64 - complete;
    let ri = (config.root_type - 1) as usize;
    let mut cells = Vec::new();

    let ext = extinction_probability(params)[ri];
    cells.push(Cell::proportion(
        CellKind::Extinction,
        "extinction".into(),
        ext,
        complete,
        n,
    ));

    for &s in &config.s_values {
        let query = MgfQuery {
            s,
            tolerance: config.mgf_tolerance,
            max_iterations: config.mgf_max_iterations,
        };
        let theory = mgf_fixed_point(&dist, &query)?.values[ri];
        // Truncated trees are (almost surely) infinite ones; their transform is 0.
        let vals: Vec<f64> = reps
            .iter()
            .map(|r| {
                if r.complete {
                    (2.0 * s * r.edges as f64).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let (mean, var) = mean_var(&vals);
        let se = (var / n as f64).sqrt();
        cells.push(Cell {
            kind: CellKind::Mgf,
            label: format!("mgf(s={s})"),
            theoretical: theory,
            empirical: mean,
            std_error: se,
            z: z_score(mean - theory, se),
        });
    }

    let mut father_tv = None;
    if params.classify() == Criticality::AlmostSurelyFinite && config.root_type == 1 {
        let mut fathers: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        let mut joint: BTreeMap<[u64; 4], u64> = BTreeMap::new();
        for r in reps.iter().filter(|r| r.complete) {
            *fathers.entry((r.counts[0], r.counts[1])).or_default() += 1;
            *joint.entry(r.counts).or_default() += 1;
        }
        let father_mass = |d1: u64, d2: u64| -> Result<f64> {
            match (d1, d2) {
                (0, 0) => no_father_mass(params),
                (0, _) => Ok(0.0),
                _ => father_pmf(params, d1, d2),
            }
        };
        let joint_mass = |k: [u64; 4]| -> Result<f64> {
            match k {
                [0, 0, s1, 0] => Ok(params.p1.powi(s1 as i32) * params.p0),
                [0, ..] => Ok(0.0),
                [d1, d2, s1, s2] => joint_pmf(params, &FatherStat::with_survivals(d1, d2, s1, s2)?),
            }
        };

        // Total variation: observed cells contribute |emp - theo|, the rest
        // of the theoretical mass is unobserved.
        let mut observed_theory = 0.0;
        let mut abs_diff = 0.0;
        for (&(d1, d2), &hits) in &fathers {
            let t = father_mass(d1, d2)?;
            observed_theory += t;
            abs_diff += (hits as f64 / n as f64 - t).abs();
        }
        father_tv = Some(0.5 * (abs_diff + (1.0 - observed_theory).max(0.0)));

        for (d1, d2) in father_cells(params, config.min_cell_mass)? {
            let t = father_mass(d1, d2)?;
            let hits = fathers.get(&(d1, d2)).copied().unwrap_or(0);
            cells.push(Cell::proportion(
                CellKind::Father,
                format!("D1={d1};D2={d2}"),
                t,
                hits,
                n,
            ));
        }
        let mut keys: Vec<[u64; 4]> = joint.keys().copied().collect();
        keys.sort();
        for key in keys {
            let t = joint_mass(key)?;
            if t < config.min_cell_mass {
                continue;
            }
            let [d1, d2, s1, s2] = key;
            cells.push(Cell::proportion(
                CellKind::Joint,
                format!("D1={d1};D2={d2};S1={s1};S2={s2}"),
                t,
                joint[&key],
                n,
            ));
        }
    }

    Ok(McReport {
        params: *params,
        config: config.clone(),
        criticality: params.classify(),
        complete,
        truncated,
        cells,
        father_tv,
    })
}

/// `(0,0)` and every `(n, m)` with father mass at least `min_mass`, found by
/// scanning shells of `n + m` until a whole shell falls below it.
fn father_cells(params: &SurvivalParams, min_mass: f64) -> Result<Vec<(u64, u64)>> {
    let mut out = vec![(0, 0)];
    let mut quiet = 0;
    for k in 1..10_000u64 {
        let mut any = false;
        for m in 0..k {
            if father_pmf(params, k - m, m)? >= min_mass {
                out.push((k - m, m));
                any = true;
            }
        }
        quiet = if any { 0 } else { quiet + 1 };
        if quiet >= 5 {
            break;
        }
    }
    out.sort();
    Ok(out)
}

/// Mean and unbiased variance with compensated accumulation.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    let mean = sum / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}
