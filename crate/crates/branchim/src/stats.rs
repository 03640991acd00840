//! Goodness-of-fit tests.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Fewest samples accepted by [`ks_statistic`].
pub const KS_MIN_SAMPLES: usize = 100;

/// Default smallest expected count per chi-square cell.
pub const CHI_SQUARE_MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution,
/// `P(K > x) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²x²}`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Theta-function form converges fast for small x.
        let mut cdf = 0.0;
        for j in 1..=20 {
            let m = (2 * j - 1) as f64;
            cdf += (-(m * m) * PI * PI / (8.0 * x * x)).exp();
        }
        return (1.0 - (2.0 * PI).sqrt() / x * cdf).clamp(0.0, 1.0);
    }
    let mut sf = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * x * x).exp();
        sf += if j % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sf).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test. The p-value uses the asymptotic law
/// with Stephens' small-sample correction.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<TestOutcome> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got: n,
        });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let root = nf.sqrt();
    let p = kolmogorov_sf((root + 0.12 + 0.11 / root) * d);
    Ok(TestOutcome {
        statistic: d,
        p_value: p,
    })
}

/// Values scanned past the largest sample before the tail is closed, for
/// pmfs whose mass sums to less than one.
const SCAN_PAST_MAX: u64 = 1 << 20;

/// Observed and expected counts of one chi-square cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Smallest value in the cell; the last cell is open-ended.
    pub from: u64,
    pub observed: f64,
    pub expected: f64,
}

/// Groups `0, 1, 2, …` into consecutive cells with expected count at least
/// `min_expected`; everything past the last full cell joins it.
pub fn chi_square_cells<F: Fn(u64) -> f64>(samples: &[u64], pmf: F, min_expected: f64) -> Vec<Cell> {
    let n = samples.len() as f64;
    let mut counts = BTreeMap::new();
    for &x in samples {
        *counts.entry(x).or_insert(0u64) += 1;
    }
    let max_seen = counts.keys().next_back().copied().unwrap_or(0);
    let mut cells: Vec<Cell> = Vec::new();
    let mut cur = Cell {
        from: 0,
        observed: 0.0,
        expected: 0.0,
    };
    let mut cum = 0.0;
    let mut x = 0u64;
    loop {
        let p = pmf(x);
        cum += p;
        cur.expected += n * p;
        cur.observed += counts.get(&x).copied().unwrap_or(0) as f64;
        let tail = n * (1.0 - cum).max(0.0);
        if cur.expected >= min_expected && tail >= min_expected {
            cells.push(cur);
            cur = Cell {
                from: x + 1,
                observed: 0.0,
                expected: 0.0,
            };
        } else if (tail < min_expected && (cur.expected >= min_expected || x >= max_seen))
            || x >= max_seen + SCAN_PAST_MAX
        {
            // Close the open-ended last cell with the remaining tail.
            cur.expected += tail;
            cur.observed += counts.range(x + 1..).map(|(_, &c)| c as f64).sum::<f64>();
            break;
        }
        x += 1;
    }
    if cur.expected < min_expected {
        if let Some(last) = cells.last_mut() {
            last.observed += cur.observed;
            last.expected += cur.expected;
        } else {
            cells.push(cur);
        }
    } else {
        cells.push(cur);
    }
    cells
}

/// Pearson chi-square test of integer samples against a pmf on `0, 1, …`,
/// with `cells − 1` degrees of freedom.
pub fn chi_square_pmf<F: Fn(u64) -> f64>(samples: &[u64], pmf: F, min_expected: f64) -> Result<TestOutcome> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let cells = chi_square_cells(samples, pmf, min_expected);
    if cells.len() < 2 {
        return Err(Error::SingleCell);
    }
    let stat: f64 = cells
        .iter()
        .map(|c| (c.observed - c.expected).powi(2) / c.expected)
        .sum();
    let dof = (cells.len() - 1) as f64;
    let law = ChiSquared::new(dof).map_err(|e| Error::Config(e.to_string()))?;
    Ok(TestOutcome {
        statistic: stat,
        p_value: law.sf(stat),
    })
}
