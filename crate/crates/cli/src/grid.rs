/// Parse `start:stop:count[:log]` into `count` points, endpoints included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let (start, stop, count, log) = match parts.as_slice() {
        [s, e, c] => (*s, *e, *c, false),
        [s, e, c, "log"] => (*s, *e, *c, true),
        [_, _, _, other] => return Err(format!("unknown grid option `{other}` (expected `log`)")),
        _ => return Err(format!("grid `{spec}` is not start:stop:count[:log]")),
    };
    let num = |t: &str, what: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| format!("grid {what} `{t}`: {e}"))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("grid {what} must be finite"))
                }
            })
    };
    let (start, stop) = (num(start, "start")?, num(stop, "stop")?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|e| format!("grid count `{count}`: {e}"))?;
    if count == 0 {
        return Err("grid count must be positive".into());
    }
    if count > 1 && start >= stop {
        return Err(format!("grid start {start} must be below stop {stop}"));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let last = (count - 1) as f64;
    if log {
        if start <= 0.0 {
            return Err("log grid needs a positive start".into());
        }
        let (l, h) = (start.ln(), stop.ln());
        let mut g: Vec<f64> = (0..count)
            .map(|i| (l + (h - l) * i as f64 / last).exp())
            .collect();
        g[0] = start;
        g[count - 1] = stop;
        Ok(g)
    } else {
        let mut g: Vec<f64> = (0..count)
            .map(|i| round_sig(start + (stop - start) * i as f64 / last))
            .collect();
        g[0] = start;
        g[count - 1] = stop;
        Ok(g)
    }
}

/// Round to 15 significant digits, so `0:0.9:10` yields 0.3 rather than 0.30000000000000004.
fn round_sig(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_grid() {
        let g = parse_grid("0:0.9:10").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[9], 0.9);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[6], 0.6);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
    }

    #[test]
    fn log_grid() {
        let g = parse_grid("1e-6:1e-1:6:log").unwrap();
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[5], 1e-1);
        assert!((g[2] / 1e-4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_grids() {
        for s in [
            "0:1",
            "0:1:x",
            "1:0:5",
            "0:1:0",
            "0:1:5:lin",
            "0:1:5:log",
            "a:1:3",
        ] {
            assert!(parse_grid(s).is_err(), "{s}");
        }
    }
}
