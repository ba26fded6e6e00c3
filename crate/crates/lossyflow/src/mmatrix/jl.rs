//! The Johnson–Lindenstrauss projection dimension for constant-dimension
//! norm estimation.

use super::MMatrixError;

const K_CAP: u64 = 1 << 31;

/// Success probability that a k-dimensional Gaussian projection satisfies
/// both norm-estimate conclusions for parameters `(alpha, beta, gamma)`:
/// `1 − 2/(2+(k−4)(1−2/k)²(γ−2/(k−2))²) − 2/(β(2+(α/(1−α))²k))`.
pub fn jl_success_bound(alpha: f64, beta: f64, gamma: f64, k: u64) -> f64 {
    let kf = k as f64;
    let t1 = 2.0
        / (2.0 + (kf - 4.0) * (1.0 - 2.0 / kf).powi(2) * (gamma - 2.0 / (kf - 2.0)).powi(2));
    let t2 = 2.0 / (beta * (2.0 + (alpha / (1.0 - alpha)).powi(2) * kf));
    1.0 - t1 - t2
}

/// Smallest `k ≥ 5` whose success bound reaches `p`. The bound is monotone in
/// `k` past a threshold, so a linear scan terminates; the search is capped at
/// `2³¹` with an explicit overflow error.
pub fn k_jl(alpha: f64, beta: f64, gamma: f64, p: f64) -> Result<usize, MMatrixError> {
    for &(name, v) in &[("alpha", alpha), ("beta", beta), ("gamma", gamma), ("p", p)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(MMatrixError::InvalidConfig(format!(
                "k_JL argument {name} = {v}; all arguments must lie in (0, 1)"
            )));
        }
    }
    // The bound is not monotone below its valley near k ≈ 2 + 2/γ, so scan
    // the low range directly; past SCAN_LIMIT the bound is monotone for any
    // constants that can still succeed, and bisection applies.
    const SCAN_LIMIT: u64 = 1 << 24;
    for k in 5..=SCAN_LIMIT {
        if jl_success_bound(alpha, beta, gamma, k) >= p {
            return Ok(k as usize);
        }
    }
    let mut hi = SCAN_LIMIT;
    while jl_success_bound(alpha, beta, gamma, hi) < p {
        hi = hi.saturating_mul(2);
        if hi > K_CAP {
            return Err(MMatrixError::KJlOverflow);
        }
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if jl_success_bound(alpha, beta, gamma, mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi as usize)
}
