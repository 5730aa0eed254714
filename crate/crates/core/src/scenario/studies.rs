use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Scenario, SlotSource};
use super::slots::{ingest_reference_csv, synthetic_slots, SlotTable, DEFAULT_SLOT_SEED};
use crate::allocation::{allocate_ppa, allocate_upa, Allocator};
use crate::efficiency::{
    individual_ee, solve_see, solve_see_constrained, sum_efficiency, DEFAULT_EPSILON,
    DEFAULT_ITER_MAX,
};
use crate::error::{Error, Result};
use crate::population::Population;
use crate::tariff::{constant_rtp_tariff, design_ibr, realized_welfare, CostModel, DeltaPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Allocation,
    Pricing,
    Ee,
}

impl Study {
    pub const ALL: [Study; 3] = [Study::Allocation, Study::Pricing, Study::Ee];
}

/// `(best − other)/best`, or 0 when `best` is 0.
pub fn relative_gap(best: f64, other: f64) -> f64 {
    if best == 0.0 {
        0.0
    } else {
        (best - other) / best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationRow {
    pub chi: f64,
    pub utility_opt: f64,
    pub utility_ppa: f64,
    pub utility_upa: f64,
    pub improvement_ppa: f64,
    pub improvement_upa: f64,
}

pub fn run_allocation_study(scn: &Scenario) -> Result<Vec<AllocationRow>> {
    let pop = scn.population()?;
    let alloc = Allocator::new(&pop)?;
    let s = &scn.allocation;
    let n = ((s.chi_max - s.chi_min) / s.chi_step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| {
            let chi = s.chi_min + i as f64 * s.chi_step;
            let opt = alloc.objective(chi);
            let ppa = allocate_ppa(chi, &pop)?.objective;
            let upa = allocate_upa(chi, &pop)?.objective;
            Ok(AllocationRow {
                chi,
                utility_opt: opt,
                utility_ppa: ppa,
                utility_upa: upa,
                improvement_ppa: relative_gap(opt, ppa),
                improvement_upa: relative_gap(opt, upa),
            })
        })
        .collect()
}

/// Indices of strict interior local maxima (plateaus count once, at their left end).
pub fn local_peaks(values: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < values.len() {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < values.len() && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < values.len() && values[j + 1] < values[i] {
                peaks.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRow {
    pub slot: String,
    pub demand: f64,
    pub chi_star: f64,
    pub p: f64,
    pub q: f64,
    pub welfare_ibr: f64,
    pub welfare_flat: f64,
    pub load_ibr: f64,
    pub load_flat: f64,
    /// `(W_ibr − W_flat)/W_flat`
    pub improvement: f64,
    pub window_empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: f64,
    pub mean_demand: f64,
    pub welfare_ibr: f64,
    pub welfare_flat: f64,
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricingStudy {
    pub slots: Vec<SlotRow>,
    pub sweep: Vec<SweepRow>,
}

impl PricingStudy {
    /// Population standard deviation of the hourly aggregate load.
    pub fn load_std(&self) -> (f64, f64) {
        let ibr: Vec<f64> = self.slots.iter().map(|s| s.load_ibr).collect();
        let flat: Vec<f64> = self.slots.iter().map(|s| s.load_flat).collect();
        (std_dev(&ibr), std_dev(&flat))
    }
}

pub fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Welfare and load under the designed tariff and under a flat tariff at
/// the same upper-tier price.
pub struct TariffComparison {
    pub chi_star: f64,
    pub p: f64,
    pub q: f64,
    pub welfare_ibr: f64,
    pub welfare_flat: f64,
    pub load_ibr: f64,
    pub load_flat: f64,
    pub window_empty: bool,
}

pub fn compare_tariffs(pop: &Population, cost: &CostModel) -> Result<TariffComparison> {
    let ibr = design_ibr(pop, cost, DeltaPolicy::Midpoint)?;
    let flat = constant_rtp_tariff(ibr.p)?;
    let (w_ibr, x_ibr) = realized_welfare(&ibr, pop, cost);
    let (w_flat, x_flat) = realized_welfare(&flat, pop, cost);
    let design = ibr.design.as_ref().expect("designed tariff");
    Ok(TariffComparison {
        chi_star: design.chi_star,
        p: ibr.p,
        q: ibr.q,
        welfare_ibr: w_ibr,
        welfare_flat: w_flat,
        load_ibr: x_ibr.iter().sum(),
        load_flat: x_flat.iter().sum(),
        window_empty: design.window_empty,
    })
}

pub fn load_slots(scn: &Scenario) -> Result<SlotTable> {
    match &scn.pricing.slots {
        SlotSource::Bundled => Ok(SlotTable::bundled()),
        SlotSource::Synthetic {
            consumers,
            peak_hour,
            seed,
        } => synthetic_slots(*consumers, *peak_hour, seed.unwrap_or(DEFAULT_SLOT_SEED)),
        SlotSource::Csv { path } => ingest_reference_csv(scn.resolve(path)),
    }
}

pub fn run_pricing_study(scn: &Scenario, slots: &SlotTable) -> Result<PricingStudy> {
    let cost = scn.cost.model();
    let mut rows = Vec::with_capacity(slots.rows.len());
    for (label, r) in slots.labels.iter().zip(&slots.rows) {
        let pop = Population::new(r, scn.lambda, scn.alpha)?;
        let cmp = compare_tariffs(&pop, &cost)
            .map_err(|e| Error::Config(format!("slot {label}: {e}")))?;
        rows.push(SlotRow {
            slot: label.clone(),
            demand: r.iter().sum(),
            chi_star: cmp.chi_star,
            p: cmp.p,
            q: cmp.q,
            welfare_ibr: cmp.welfare_ibr,
            welfare_flat: cmp.welfare_flat,
            load_ibr: cmp.load_ibr,
            load_flat: cmp.load_flat,
            improvement: relative_gap_over(cmp.welfare_ibr, cmp.welfare_flat),
            window_empty: cmp.window_empty,
        });
    }
    let sweep = run_demand_sweep(scn)?;
    Ok(PricingStudy { slots: rows, sweep })
}

/// `(a − b)/b`, or 0 when `b` is 0.
fn relative_gap_over(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        (a - b) / b
    }
}

/// Average welfare of both tariffs over random populations at each demand level.
pub fn run_demand_sweep(scn: &Scenario) -> Result<Vec<SweepRow>> {
    let d = &scn.pricing.sweep;
    let cost = scn.cost.model();
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
    let n = ((d.level_max - d.level_min) / d.level_step + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let level = d.level_min + i as f64 * d.level_step;
        let (mut w_ibr, mut w_flat, mut demand) = (0.0, 0.0, 0.0);
        for _ in 0..d.trials {
            let r: Vec<f64> = (0..d.consumers)
                .map(|_| level - d.spread + 2.0 * d.spread * rng.random::<f64>())
                .collect();
            let pop = Population::new(&r, scn.lambda, scn.alpha)?;
            let cmp = compare_tariffs(&pop, &cost)?;
            w_ibr += cmp.welfare_ibr;
            w_flat += cmp.welfare_flat;
            demand += pop.total_reference();
        }
        let t = d.trials as f64;
        let (w_ibr, w_flat) = (w_ibr / t, w_flat / t);
        out.push(SweepRow {
            level,
            mean_demand: demand / t,
            welfare_ibr: w_ibr,
            welfare_flat: w_flat,
            improvement: relative_gap_over(w_ibr, w_flat),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EeRow {
    pub scale: f64,
    pub demand: f64,
    pub see: f64,
    pub see_c: f64,
    pub iee: f64,
    pub upa: f64,
    pub iterations: usize,
}

/// Sum efficiency of the four policies as every reference point is scaled.
pub fn run_ee_study(scn: &Scenario) -> Result<Vec<EeRow>> {
    scn.ee
        .scales
        .iter()
        .map(|&scale| {
            let constrained = scn.population_with_needs(scale)?;
            let r: Vec<f64> = constrained.reference_points();
            let free = Population::new(&r, scn.lambda, scn.alpha)?;
            let see = solve_see(&free)?;
            let see_c = solve_see_constrained(&constrained, DEFAULT_EPSILON, DEFAULT_ITER_MAX)?;
            let x_iee = free
                .profiles()
                .iter()
                .map(|c| individual_ee(c).map(|p| p.x_iee))
                .collect::<Result<Vec<f64>>>()?;
            let total: f64 = see_c.x.iter().sum();
            let uniform = vec![total / free.len() as f64; free.len()];
            Ok(EeRow {
                scale,
                demand: free.total_reference(),
                see: see.e_star,
                see_c: see_c.e_star,
                iee: sum_efficiency(&x_iee, &free),
                upa: sum_efficiency(&uniform, &free),
                iterations: see_c.iterations,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaks_found() {
        assert_eq!(
            local_peaks(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 3.0]),
            vec![1, 3]
        );
        assert!(local_peaks(&[1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn gaps() {
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert_eq!(relative_gap(2.0, 1.0), 0.5);
        assert_eq!(std_dev(&[1.0, 3.0]), 1.0);
    }
}
