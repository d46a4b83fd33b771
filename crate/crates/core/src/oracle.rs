//! Brute-force Dempster–Shafer machinery over the full power set.
//!
//! Subsets of the `K` classes are bitmasks (bit `k` set iff class `k` is in
//! the subset) and a mass function is a dense array of length `2^K`. This is
//! validation tooling: it is exponential in `K` and capped at
//! [`MAX_CLASSES`].

use crate::error::{Error, Result};
use crate::evidential::{Distribution, EvidentialWeights, EXP_GUARD};

pub const MAX_CLASSES: usize = 20;

/// Enumeration budget for [`fuse_feature_masses`].
pub const MAX_FUSE_CLASSES: usize = 12;
pub const MAX_FUSE_FEATURES: usize = 8;

const NEGATIVE_CLAMP: f64 = -1e-15;
const RENORMALIZE_WITHIN: f64 = 1e-10;
const CONFLICT_LIMIT: f64 = 1.0 - 1e-12;

type Mask = u32;

fn full_mask(num_classes: usize) -> Mask {
    ((1u64 << num_classes) - 1) as Mask
}

fn check_classes(num_classes: usize) -> Result<()> {
    if num_classes == 0 {
        return Err(Error::InvalidParams("frame must contain at least one class".into()));
    }
    if num_classes > MAX_CLASSES {
        return Err(Error::TooManyClasses {
            found: num_classes,
            max: MAX_CLASSES,
        });
    }
    Ok(())
}

/// Belief mass over every subset of the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSetMass {
    num_classes: usize,
    masses: Vec<f64>,
}

impl PowerSetMass {
    /// All mass on the full frame.
    pub fn vacuous(num_classes: usize) -> Result<Self> {
        check_classes(num_classes)?;
        let mut masses = vec![0.0; 1 << num_classes];
        masses[full_mask(num_classes) as usize] = 1.0;
        Ok(Self { num_classes, masses })
    }

    /// Validates a dense mass vector. Entries above `-1e-15` are clamped to
    /// zero; a total within `1e-10` of one is renormalized, anything further
    /// off is rejected.
    pub fn from_masses(num_classes: usize, mut masses: Vec<f64>) -> Result<Self> {
        check_classes(num_classes)?;
        if masses.len() != 1 << num_classes {
            return Err(Error::dims("power-set masses", 1 << num_classes, masses.len()));
        }
        crate::error::check_finite("masses", &masses)?;
        if masses[0] != 0.0 {
            return Err(Error::InvalidParams(format!(
                "mass on the empty set must be 0, got {}",
                masses[0]
            )));
        }
        for (index, m) in masses.iter_mut().enumerate() {
            if *m < 0.0 {
                if *m < NEGATIVE_CLAMP {
                    return Err(Error::InvalidParams(format!(
                        "negative mass {} on subset {index:#b}",
                        *m
                    )));
                }
                *m = 0.0;
            }
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_WITHIN {
            return Err(Error::NotNormalized { total });
        }
        masses.iter_mut().for_each(|m| *m /= total);
        Ok(Self { num_classes, masses })
    }

    /// Normalizes nonnegative unnormalized masses by their total.
    fn from_unnormalized(num_classes: usize, mut masses: Vec<f64>) -> Result<Self> {
        masses[0] = 0.0;
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalized { total });
        }
        masses.iter_mut().for_each(|m| *m /= total);
        Ok(Self { num_classes, masses })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Mass of the subset given as a bitmask.
    pub fn get(&self, subset: u32) -> f64 {
        self.masses[subset as usize]
    }

    pub fn singleton(&self, class: usize) -> f64 {
        self.masses[1 << class]
    }

    pub fn full_set(&self) -> f64 {
        self.masses[full_mask(self.num_classes) as usize]
    }

    pub fn is_vacuous(&self) -> bool {
        self.full_set() == 1.0
    }

    /// Subsets carrying nonzero mass, with their masses.
    pub fn focal_elements(&self) -> impl Iterator<Item = (Mask, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0.0)
            .map(|(a, &m)| (a as Mask, m))
    }

    pub fn plausibility(&self) -> PlausibilityVector {
        let mut pl = vec![0.0; self.num_classes];
        for (subset, m) in self.focal_elements() {
            for (k, p) in pl.iter_mut().enumerate() {
                if subset & (1 << k) != 0 {
                    *p += m;
                }
            }
        }
        PlausibilityVector(pl)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &PowerSetMass) -> f64 {
        self.masses
            .iter()
            .zip(&other.masses)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Simple mass function: support `s` on one focal set, `1 − s` on the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleMass {
    pub num_classes: usize,
    pub focal_set: u32,
    pub support: f64,
}

impl SimpleMass {
    pub fn is_vacuous(&self) -> bool {
        self.support == 0.0
    }

    pub fn to_power_set(&self) -> Result<PowerSetMass> {
        check_classes(self.num_classes)?;
        let full = full_mask(self.num_classes);
        if !(0.0..=1.0).contains(&self.support) {
            return Err(Error::InvalidParams(format!(
                "simple mass support {} outside [0, 1]",
                self.support
            )));
        }
        if self.focal_set == full && self.support != 0.0 {
            return Err(Error::InvalidParams("focal set of a simple mass must be a strict subset".into()));
        }
        if self.focal_set == 0 && self.support != 0.0 {
            return Err(Error::InvalidParams("simple mass cannot support the empty set".into()));
        }
        let mut masses = vec![0.0; 1 << self.num_classes];
        masses[full as usize] += 1.0 - self.support;
        masses[self.focal_set as usize] += self.support;
        Ok(PowerSetMass {
            num_classes: self.num_classes,
            masses,
        })
    }
}

/// Plausibility `pl(z_k)` of every singleton.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityVector(pub Vec<f64>);

/// The two simple masses carried by one evidential weight: support for
/// `{z_k}` from `w⁺` and support for its complement from `w⁻`.
pub fn simple_mass_pair(w_jk: f64, class_k: usize, num_classes: usize) -> Result<(SimpleMass, SimpleMass)> {
    if !w_jk.is_finite() {
        return Err(Error::NonFinite {
            field: "w_jk".into(),
            index: class_k,
        });
    }
    check_classes(num_classes)?;
    if class_k >= num_classes {
        return Err(Error::InvalidParams(format!(
            "class {class_k} out of range for {num_classes} classes"
        )));
    }
    let singleton = 1 << class_k;
    let positive = SimpleMass {
        num_classes,
        focal_set: singleton,
        support: -(-w_jk.max(0.0)).exp_m1(),
    };
    let negative = SimpleMass {
        num_classes,
        focal_set: full_mask(num_classes) & !singleton,
        support: -(-(-w_jk).max(0.0)).exp_m1(),
    };
    Ok((positive, negative))
}

/// Dempster's rule. Returns the fused mass and the conflict `κ`.
pub fn dempster_combine(m1: &PowerSetMass, m2: &PowerSetMass) -> Result<(PowerSetMass, f64)> {
    if m1.num_classes != m2.num_classes {
        return Err(Error::dims("frame size", m1.num_classes, m2.num_classes));
    }
    let focal2: Vec<(Mask, f64)> = m2.focal_elements().collect();
    let mut fused = vec![0.0; m1.masses.len()];
    let mut conflict = 0.0;
    for (b, mb) in m1.focal_elements() {
        for &(c, mc) in &focal2 {
            let a = b & c;
            if a == 0 {
                conflict += mb * mc;
            } else {
                fused[a as usize] += mb * mc;
            }
        }
    }
    if conflict >= CONFLICT_LIMIT {
        return Err(Error::TotalConflict { kappa: conflict });
    }
    // Dividing by the retained total rather than 1 − κ avoids cancellation.
    let fused = PowerSetMass::from_unnormalized(m1.num_classes, fused)?;
    Ok((fused, conflict))
}

/// Fuses the simple masses of a `J × K` matrix of per-feature weights, in
/// feature-major, class, positive-then-negative order.
pub fn fuse_feature_masses(weights: &[Vec<f64>]) -> Result<PowerSetMass> {
    let num_features = weights.len();
    let num_classes = weights.first().map_or(0, Vec::len);
    if num_features == 0 || num_classes == 0 {
        return Err(Error::InvalidParams("empty weight matrix".into()));
    }
    if num_classes > MAX_FUSE_CLASSES || num_features > MAX_FUSE_FEATURES {
        return Err(Error::EnumerationBudget(format!(
            "fusion limited to K <= {MAX_FUSE_CLASSES}, J <= {MAX_FUSE_FEATURES}; got K = {num_classes}, J = {num_features}"
        )));
    }
    let mut fused = PowerSetMass::vacuous(num_classes)?;
    for (j, row) in weights.iter().enumerate() {
        if row.len() != num_classes {
            return Err(Error::dims(format!("weight row {j}"), num_classes, row.len()));
        }
        for (k, &w) in row.iter().enumerate() {
            let (positive, negative) = simple_mass_pair(w, k, num_classes)?;
            for simple in [positive, negative] {
                fused = dempster_combine(&fused, &simple.to_power_set()?)?.0;
            }
        }
    }
    Ok(fused)
}

/// Closed-form output mass from net evidential weights.
pub fn closed_form_mass(ew: &EvidentialWeights) -> Result<PowerSetMass> {
    closed_form_mass_split(ew.w_plus(), ew.w_minus())
}

/// Closed-form output mass from separately accumulated evidence for
/// (`w_plus`) and against (`w_minus`) each class.
///
/// Evaluated in log space and normalized over all non-empty subsets.
pub fn closed_form_mass_split(w_plus: &[f64], w_minus: &[f64]) -> Result<PowerSetMass> {
    let num_classes = w_plus.len();
    if w_minus.len() != num_classes {
        return Err(Error::dims("w_minus", num_classes, w_minus.len()));
    }
    check_classes(num_classes)?;
    crate::error::check_finite("w_plus", w_plus)?;
    crate::error::check_finite("w_minus", w_minus)?;
    if let Some(index) = w_plus.iter().chain(w_minus).position(|&v| v < 0.0) {
        return Err(Error::InvalidParams(format!(
            "evidence parts must be nonnegative (entry {index})"
        )));
    }
    let max_abs = w_plus
        .iter()
        .chain(w_minus)
        .fold(0.0_f64, |acc, v| acc.max(*v));
    if max_abs > EXP_GUARD {
        return Err(Error::OverflowGuard {
            max_abs,
            limit: EXP_GUARD,
        });
    }

    // ln(1 − e^{−w⁻}), −∞ when w⁻ = 0.
    let ln_against: Vec<f64> = w_minus.iter().map(|&m| (-(-m).exp_m1()).ln()).collect();
    let against: Vec<f64> = w_minus.iter().map(|&m| -(-m).exp_m1()).collect();

    let size = 1usize << num_classes;
    let mut log_masses = vec![f64::NEG_INFINITY; size];
    for (subset, slot) in log_masses.iter_mut().enumerate().skip(1) {
        if subset.count_ones() == 1 {
            let k = subset.trailing_zeros() as usize;
            let others: f64 = against
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != k)
                .map(|(_, &a)| a)
                .product();
            *slot = -w_minus[k] + (w_plus[k].exp_m1() + others).ln();
        } else {
            *slot = (0..num_classes)
                .map(|k| {
                    if subset & (1 << k) != 0 {
                        -w_minus[k]
                    } else {
                        ln_against[k]
                    }
                })
                .sum();
        }
    }
    let max = log_masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let masses: Vec<f64> = log_masses.iter().map(|&l| (l - max).exp()).collect();
    PowerSetMass::from_unnormalized(num_classes, masses)
}

/// Normalized plausibilities of the singletons.
pub fn plausibility_transform(m: &PowerSetMass) -> Distribution {
    let PlausibilityVector(pl) = m.plausibility();
    let total: f64 = pl.iter().sum();
    Distribution::from_raw(pl.into_iter().map(|p| p / total).collect())
}
