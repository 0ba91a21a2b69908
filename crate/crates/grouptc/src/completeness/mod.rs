//! Brute-force orbit oracle and exhaustive completeness scans.
//!
//! The scan enumerates every signal over a small integer value grid,
//! fingerprints each one by its exact integer triple correlation, and
//! classifies fingerprint collisions as same-orbit or cross-orbit using the
//! orbit oracle. With the Fourier-invertibility filter on, cross-orbit
//! collisions witness a completeness failure; none exist on the grids the
//! crate tests.

pub mod metamer;

pub use metamer::{metamer_search, MetamerConfig, MetamerReport, RestartOutcome, RestartResult};

use crate::action::{apply_signal_action, DomainSignal, PermutationAction};
use crate::group::FiniteGroup;
use crate::spectral::irreps::IrrepTable;
use crate::spectral::{gft, SpectralContext};
use crate::tc::triple_correlation_int;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CompletenessError {
    #[error("signal lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("search space of {signals} signals exceeds the guard of {guard}")]
    SearchSpaceTooLarge { signals: u128, guard: u128 },
    #[error("value set is empty")]
    EmptyValueSet,
}

/// Smallest-index group element mapping `theta1` onto `theta2`, if any.
pub fn same_orbit(
    theta1: &[f64],
    theta2: &[f64],
    action: &PermutationAction,
    tol: f64,
) -> Result<Option<usize>, CompletenessError> {
    if theta1.len() != theta2.len() {
        return Err(CompletenessError::LengthMismatch { a: theta1.len(), b: theta2.len() });
    }
    if theta1.len() != action.domain_size() {
        return Err(CompletenessError::LengthMismatch {
            a: theta1.len(),
            b: action.domain_size(),
        });
    }
    let signal = DomainSignal::new(theta1.to_vec(), action.shape().clone());
    for h in 0..action.group().order() {
        let moved = apply_signal_action(action, h, &signal).expect("length checked");
        let max_diff = moved
            .values
            .iter()
            .zip(theta2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if max_diff <= tol {
            return Ok(Some(h));
        }
    }
    Ok(None)
}

/// Exact-integer orbit check used by the scan.
fn same_orbit_int(group: &FiniteGroup, a: &[i64], b: &[i64]) -> Option<usize> {
    let n = group.order();
    (0..n).find(|&h| {
        let hinv = group.inv(h);
        (0..n).all(|g| a[group.mul(hinv, g)] == b[g])
    })
}

/// Which signals participate in a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanFilter {
    /// Every signal on the grid.
    All,
    /// Only signals whose Fourier blocks are all invertible (checked at
    /// tolerance 1e-9 on the smallest singular value).
    NonzeroFourier,
}

/// A pair of distinct signals sharing a TC fingerprint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionWitness {
    pub first: Vec<i64>,
    pub second: Vec<i64>,
    /// Group element aligning them, when they share an orbit.
    pub aligning_element: Option<usize>,
}

/// Scan outcome.
#[derive(Debug, Clone)]
pub struct CollisionReport {
    pub group_name: String,
    pub values: Vec<i64>,
    pub filter: ScanFilter,
    pub signals_total: u64,
    pub signals_scanned: u64,
    pub fingerprints: u64,
    pub same_orbit_pairs: u64,
    pub cross_orbit_pairs: u64,
    /// Cross-orbit witnesses in deterministic order, capped.
    pub witnesses: Vec<CollisionWitness>,
}

const SCAN_GUARD: u128 = 10_000_000;
const WITNESS_CAP: usize = 32;

/// Enumerate all |V|^|G| signals, fingerprint by exact TC, classify
/// fingerprint collisions through the orbit oracle.
pub fn completeness_scan(
    group: &Arc<FiniteGroup>,
    irreps: &IrrepTable,
    values: &[i64],
    filter: ScanFilter,
) -> Result<CollisionReport, CompletenessError> {
    if values.is_empty() {
        return Err(CompletenessError::EmptyValueSet);
    }
    let n = group.order();
    let total = (values.len() as u128).pow(n as u32);
    if total > SCAN_GUARD {
        return Err(CompletenessError::SearchSpaceTooLarge { signals: total, guard: SCAN_GUARD });
    }
    let mut buckets: HashMap<Vec<i64>, Vec<Vec<i64>>> = HashMap::new();
    let mut scanned = 0u64;
    let mut digits = vec![0usize; n];
    let mut theta = vec![values[0]; n];
    loop {
        let keep = match filter {
            ScanFilter::All => true,
            ScanFilter::NonzeroFourier => {
                let floats: Vec<f64> = theta.iter().map(|&v| v as f64).collect();
                let f = gft(&floats, irreps).expect("length matches");
                f.blocks.iter().all(|b| b.smallest_singular_value() > 1e-9)
            }
        };
        if keep {
            scanned += 1;
            let tc = triple_correlation_int(group, &theta).expect("length matches");
            let fingerprint: Vec<i64> = tc.into_iter().flatten().collect();
            buckets.entry(fingerprint).or_default().push(theta.clone());
        }
        // odometer over the value grid
        let mut pos = n;
        for i in (0..n).rev() {
            if digits[i] + 1 < values.len() {
                digits[i] += 1;
                theta[i] = values[digits[i]];
                pos = i;
                break;
            }
            digits[i] = 0;
            theta[i] = values[0];
        }
        if pos == n {
            break;
        }
    }

    let mut same_orbit_pairs = 0u64;
    let mut cross_orbit_pairs = 0u64;
    let mut witnesses = Vec::new();
    let mut keys: Vec<&Vec<i64>> = buckets.keys().collect();
    keys.sort();
    for key in keys {
        let members = &buckets[key];
        for a in 0..members.len() {
            for b in (a + 1)..members.len() {
                match same_orbit_int(group, &members[a], &members[b]) {
                    Some(h) => {
                        same_orbit_pairs += 1;
                        let _ = h;
                    }
                    None => {
                        cross_orbit_pairs += 1;
                        if witnesses.len() < WITNESS_CAP {
                            witnesses.push(CollisionWitness {
                                first: members[a].clone(),
                                second: members[b].clone(),
                                aligning_element: None,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(CollisionReport {
        group_name: group.name().to_string(),
        values: values.to_vec(),
        filter,
        signals_total: total as u64,
        signals_scanned: scanned,
        fingerprints: buckets.len() as u64,
        same_orbit_pairs,
        cross_orbit_pairs,
        witnesses,
    })
}

/// Convenience wrapper building the spectral context internally.
pub fn completeness_scan_ctx(
    ctx: &SpectralContext,
    values: &[i64],
    filter: ScanFilter,
) -> Result<CollisionReport, CompletenessError> {
    completeness_scan(ctx.table.group(), &ctx.table, values, filter)
}
