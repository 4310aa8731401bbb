use crate::error::{Error, Result};

/// Parses `name=start:stop:count` into `count` evenly spaced values from
/// `start` to `stop` inclusive. A count of 1 yields `[start]`.
pub fn parse_grid(spec: &str) -> Result<(String, Vec<f64>)> {
    let bad = |msg: &str| Error::domain(format!("grid `{spec}`: {msg}"));
    let (name, range) = spec
        .split_once('=')
        .ok_or_else(|| bad("expected name=start:stop:count"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(bad("missing name"));
    }
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(bad("expected start:stop:count"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(&format!("not a finite number: {s:?}")))
    };
    let (start, stop) = (num(start)?, num(stop)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| bad(&format!("count must be a positive integer, got {count:?}")))?;
    if count == 0 || count > 1_000_000 {
        return Err(bad("count must be between 1 and 1000000"));
    }
    if !(stop - start).is_finite() {
        return Err(bad("range is too wide"));
    }
    let values = if count == 1 {
        vec![start]
    } else {
        (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect()
    };
    Ok((name.to_string(), values))
}
