//! Picking test modules whose HAL traffic is already covered by background
//! noise, so running them adds little.

use std::collections::BTreeMap;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleTrace {
    pub name: String,
    pub duration: Duration,
    /// Trace bytes per HAL interface the module exercised.
    pub sizes: BTreeMap<String, u64>,
}

impl ModuleTrace {
    pub fn new(name: impl Into<String>, duration: Duration) -> Self {
        Self {
            name: name.into(),
            duration,
            sizes: BTreeMap::new(),
        }
    }

    pub fn with(mut self, fqname: impl Into<String>, bytes: u64) -> Self {
        self.sizes.insert(fqname.into(), bytes);
        self
    }
}

/// Whether `module` bytes and `noise` bytes are within a factor of ten of
/// each other, i.e. `module / noise` lies in `[0.1, 10]`.
pub fn same_magnitude(module: u64, noise: u64) -> bool {
    let (m, n) = (u128::from(module), u128::from(noise));
    10 * m >= n && m <= 10 * n
}

/// Sum over touched HALs of the smaller of module and noise size.
fn overlap(module: &ModuleTrace, noise: &BTreeMap<String, u64>) -> u64 {
    module
        .sizes
        .iter()
        .map(|(hal, &size)| size.min(noise.get(hal).copied().unwrap_or(0)))
        .sum()
}

fn is_candidate(module: &ModuleTrace, noise: &BTreeMap<String, u64>) -> bool {
    module
        .sizes
        .iter()
        .all(|(hal, &size)| noise.get(hal).is_some_and(|&n| same_magnitude(size, n)))
}

/// Modules whose every touched HAL appears in `noise` at a comparable
/// size, longest first; ties go to the larger overlap, then the name. The
/// list is a suggestion for a human to confirm.
pub fn select_removable(modules: &[ModuleTrace], noise: &BTreeMap<String, u64>) -> Vec<String> {
    let mut picked: Vec<(&ModuleTrace, u64)> = modules
        .iter()
        .filter(|m| is_candidate(m, noise))
        .map(|m| (m, overlap(m, noise)))
        .collect();
    picked.sort_by(|(a, ao), (b, bo)| {
        b.duration
            .cmp(&a.duration)
            .then(bo.cmp(ao))
            .then_with(|| a.name.cmp(&b.name))
    });
    picked.into_iter().map(|(m, _)| m.name.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_bounds_are_inclusive() {
        assert!(same_magnitude(1, 10));
        assert!(same_magnitude(100, 10));
        assert!(!same_magnitude(101, 10));
        assert!(!same_magnitude(9, 100));
        assert!(same_magnitude(2048, 3072));
        assert!(!same_magnitude(0, 1));
    }
}
