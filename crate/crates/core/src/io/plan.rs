use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scheduler::PruningPlan;
use crate::tensor::ToyModel;

pub fn write_plan(plan: &PruningPlan) -> Result<String> {
    toml::to_string(plan).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_plan(text: &str) -> Result<PruningPlan> {
    toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

/// Checks that every index of the plan names an existing, distinct filter of
/// a prunable layer of `model`.
pub fn validate_plan<T: Scalar>(plan: &PruningPlan, model: &ToyModel<T>) -> Result<()> {
    let prunable = model.prunable_layers();
    let mut seen_layers = Vec::new();
    for lp in &plan.layers {
        if !prunable.contains(&lp.layer) {
            return Err(Error::Arch(format!(
                "plan names layer {}, which is not prunable",
                lp.layer
            )));
        }
        if seen_layers.contains(&lp.layer) {
            return Err(Error::Arch(format!("plan lists layer {} twice", lp.layer)));
        }
        seen_layers.push(lp.layer);
        let rows = model.filter_matrix(lp.layer)?.0;
        let mut sorted = lp.selected.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != lp.selected.len() {
            return Err(Error::Arch(format!(
                "duplicate filter in plan for layer {}",
                lp.layer
            )));
        }
        if let Some(&bad) = sorted.iter().find(|&&f| f >= rows) {
            return Err(Error::IndexOutOfRange {
                what: "planned filter",
                index: bad,
                len: rows,
            });
        }
        if sorted.len() >= rows {
            return Err(Error::Arch(format!(
                "plan removes every filter of layer {}",
                lp.layer
            )));
        }
    }
    Ok(())
}
