use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};

fn distinct_count(samples: &[Complex64]) -> usize {
    let mut v: Vec<(f64, f64)> = samples.iter().map(|z| (z.re, z.im)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.dedup();
    v.len()
}

/// Weighted Leja sequence on a sample, as indices into `samples`.
///
/// The first node maximizes `|z|` (ties go to the lowest index); node `k`
/// maximizes `sum_{j<k} log|z - z_j| - k * weight(z)`.
pub fn leja_indices(samples: &[Complex64], weights: &[f64], count: usize) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::Config("Leja count must be at least 1".into()));
    }
    if samples.len() != weights.len() {
        return Err(Error::Config("samples and weights differ in length".into()));
    }
    if samples.len() < 4 * count {
        return Err(Error::Config(format!(
            "Leja needs at least {} samples for {count} nodes (got {})",
            4 * count,
            samples.len()
        )));
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::InvalidWeight(format!("weight is {} at sample {i} ({})", weights[i], samples[i])));
    }
    if samples.iter().any(|z| !z.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let distinct = distinct_count(samples);
    if distinct < count {
        return Err(Error::Degenerate(format!("only {distinct} distinct samples for {count} Leja nodes")));
    }

    let argmax = |score: &dyn Fn(usize) -> f64| {
        let mut best = 0usize;
        let mut best_s = f64::NEG_INFINITY;
        for i in 0..samples.len() {
            let s = score(i);
            if s > best_s {
                best_s = s;
                best = i;
            }
        }
        (best, best_s)
    };
    let (first, _) = argmax(&|i| samples[i].norm());
    let mut out = vec![first];
    let mut acc = vec![0.0f64; samples.len()];
    while out.len() < count {
        let last = samples[*out.last().expect("non-empty")];
        for (a, z) in acc.iter_mut().zip(samples) {
            *a += (*z - last).norm().ln();
        }
        let k = out.len() as f64;
        let (i, s) = argmax(&|i| acc[i] - k * weights[i]);
        if s == f64::NEG_INFINITY {
            return Err(Error::Degenerate("Leja score is -inf on every sample".into()));
        }
        out.push(i);
    }
    Ok(out)
}

/// [`leja_indices`] returning points; `weight` is `(Q + phi)` in chart 0.
pub fn leja_nodes<F>(samples: &[Complex64], weight: F, count: usize) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> f64,
{
    let w: Vec<f64> = samples.iter().map(|&z| weight(z)).collect();
    Ok(leja_indices(samples, &w, count)?.into_iter().map(|i| samples[i]).collect())
}

/// `sum_{j<k} log|z_j - z_k|`.
pub fn log_vandermonde(nodes: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for (j, a) in nodes.iter().enumerate() {
        for b in &nodes[j + 1..] {
            s += (a - b).norm().ln();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn interval(m: usize) -> Vec<Complex64> {
        (0..m).map(|i| Complex64::new(-1.0 + 2.0 * i as f64 / (m - 1) as f64, 0.0)).collect()
    }

    fn circle(m: usize) -> Vec<Complex64> {
        (0..m).map(|i| Complex64::from_polar(1.0, TAU * i as f64 / m as f64)).collect()
    }

    /// Independent greedy oracle: recomputes the full product at every step.
    fn greedy_oracle(samples: &[Complex64], count: usize) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::new();
        for _ in 0..count {
            let mut best = (f64::NEG_INFINITY, 0);
            for (i, z) in samples.iter().enumerate() {
                let score = if chosen.is_empty() {
                    z.norm()
                } else {
                    chosen.iter().map(|&j| (z - samples[j]).norm()).product::<f64>()
                };
                if score > best.0 {
                    best = (score, i);
                }
            }
            chosen.push(best.1);
        }
        chosen
    }

    #[test]
    fn interval_start() {
        let s = interval(2001);
        let nodes = leja_nodes(&s, |_| 0.0, 3).unwrap();
        assert_eq!(nodes, vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(leja_indices(&s, &vec![0.0; s.len()], 12).unwrap(), greedy_oracle(&s, 12));
    }

    #[test]
    fn single_node_is_the_argmax() {
        let s = interval(9);
        assert_eq!(leja_indices(&s, &[0.0; 9], 1).unwrap(), vec![0]);
    }

    #[test]
    fn circle_leja_versus_fekete() {
        let m = 120;
        let s = circle(m);
        let leja = leja_indices(&s, &vec![0.0; m], 5).unwrap();
        assert_eq!(leja, greedy_oracle(&s, 5));
        assert_eq!(leja[..2], [0, 60]);
        let mut quarter = [leja[2], leja[3]];
        quarter.sort();
        assert_eq!(quarter, [30, 90]);
        // Brute-force maximal Vandermonde over 5-subsets containing node 0
        // (rotation invariance) is the 5th-roots pattern.
        let mut best = (f64::NEG_INFINITY, vec![]);
        for a in 1..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    for d in c + 1..m {
                        let pts: Vec<_> = [0, a, b, c, d].iter().map(|&i| s[i]).collect();
                        let v = log_vandermonde(&pts);
                        if v > best.0 {
                            best = (v, vec![0, a, b, c, d]);
                        }
                    }
                }
            }
        }
        assert_eq!(best.1, vec![0, 24, 48, 72, 96]);
        let lv = log_vandermonde(&leja.iter().map(|&i| s[i]).collect::<Vec<_>>());
        assert!(lv < best.0 - 0.1);
    }

    #[test]
    fn weighted_nodes_avoid_large_weight() {
        let s = interval(401);
        let w: Vec<f64> = s.iter().map(|z| if z.re > 0.0 { 5.0 } else { 0.0 }).collect();
        let idx = leja_indices(&s, &w, 6).unwrap();
        assert!(idx[1..].iter().all(|&i| s[i].re <= 0.0), "{idx:?}");
    }

    #[test]
    fn errors() {
        let s = interval(11);
        assert!(matches!(leja_indices(&s, &[0.0; 11], 3), Err(Error::Config(_))));
        let dup = vec![Complex64::new(0.5, 0.0); 40];
        assert!(matches!(leja_indices(&dup, &[0.0; 40], 2), Err(Error::Degenerate(_))));
        let mut w = vec![0.0; 40];
        w[3] = f64::NAN;
        assert!(matches!(leja_indices(&interval(40), &w, 2), Err(Error::InvalidWeight(_))));
    }
}
