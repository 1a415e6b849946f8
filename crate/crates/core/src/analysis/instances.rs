use crate::error::{domain, Result};
use crate::market::{Instance, PriceBounds};
use crate::scalar::Scalar;

fn check_peak<T: Scalar>(bounds: &PriceBounds<T>, p: T) -> Result<()> {
    if bounds.contains(p) {
        Ok(())
    } else {
        Err(domain(format!("peak {p} outside [{}, {}]", bounds.lower(), bounds.upper())))
    }
}

/// Prices rise linearly from `L` to `p` over `N - 1` steps, then drop to `L`.
pub fn p_instance<T: Scalar>(bounds: &PriceBounds<T>, p: T, n: usize) -> Result<Instance<T>> {
    check_peak(bounds, p)?;
    if n < 3 {
        return Err(domain(format!("p-instance needs at least 3 steps, got {n}")));
    }
    let l = bounds.lower();
    let delta = (p - l) / T::lit((n - 2) as f64);
    let mut prices: Vec<T> = (0..n - 1).map(|k| (l + T::lit(k as f64) * delta).min(p)).collect();
    prices[n - 2] = p;
    prices.push(l);
    Ok(Instance::new(prices))
}

/// `n` copies of `p`.
pub fn constant_instance<T: Scalar>(bounds: &PriceBounds<T>, p: T, n: usize) -> Result<Instance<T>> {
    check_peak(bounds, p)?;
    if n == 0 {
        return Err(domain("constant instance needs at least one step"));
    }
    Ok(Instance::new(vec![p; n]))
}

/// `[L, p, L]`.
pub fn spike_instance<T: Scalar>(bounds: &PriceBounds<T>, p: T) -> Result<Instance<T>> {
    check_peak(bounds, p)?;
    let l = bounds.lower();
    Ok(Instance::new(vec![l, p, l]))
}
