//! Parsing of angle lists, plane pairs and model specs.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use leggett_core::{ModelSpec, Plane, Vec3};

/// One angle with an explicit unit: `30deg`, `0.5rad` or `0.25pi`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim();
    let (num, scale) = if let Some(n) = s.strip_suffix("deg") {
        (n, PI / 180.0)
    } else if let Some(n) = s.strip_suffix("rad") {
        (n, 1.0)
    } else if let Some(n) = s.strip_suffix("pi") {
        (n, PI)
    } else {
        bail!("angle '{s}' needs a unit suffix: deg, rad or pi");
    };
    let num = num.trim();
    let value: f64 = if num.is_empty() && scale == PI {
        1.0
    } else {
        num.parse().with_context(|| format!("bad angle '{s}'"))?
    };
    if !value.is_finite() {
        bail!("angle '{s}' is not finite");
    }
    if scale == PI / 180.0 {
        Ok(value.to_radians())
    } else {
        Ok(value * scale)
    }
}

/// Comma-separated angles, or an inclusive grid `START..END:COUNT`.
pub fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    if let Some((range, count)) = s.split_once(':') {
        let (start, end) = range
            .split_once("..")
            .ok_or_else(|| anyhow!("angle grid must look like START..END:COUNT, got '{s}'"))?;
        let (start, end) = (parse_angle(start)?, parse_angle(end)?);
        let count: usize = count.trim().parse().with_context(|| format!("bad grid count in '{s}'"))?;
        return match count {
            0 => bail!("angle grid needs at least one point"),
            1 => Ok(vec![start]),
            _ => Ok((0..count)
                .map(|i| {
                    if i == count - 1 {
                        end
                    } else {
                        start + (end - start) * i as f64 / (count - 1) as f64
                    }
                })
                .collect()),
        };
    }
    s.split(',').map(parse_angle).collect()
}

/// `xy`, `xz`, `yz`, or a custom plane given by its normal, `n:X:Y:Z`.
pub fn parse_plane(s: &str) -> Result<Plane> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("n:") {
        let parts: Vec<f64> = rest
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad plane normal '{s}'"))?;
        let [x, y, z] = parts[..] else {
            bail!("plane normal needs three components, got '{s}'");
        };
        return Ok(Plane::from_normal(Vec3::new(x, y, z))?);
    }
    Ok(Plane::from_label(s)?)
}

pub fn parse_planes(s: &str) -> Result<(Plane, Plane)> {
    let items: Vec<&str> = s.split(',').collect();
    let [first, second] = items[..] else {
        bail!("--planes needs exactly two planes, got '{s}'");
    };
    Ok((parse_plane(first)?, parse_plane(second)?))
}

pub fn plane_name(p: &Plane) -> String {
    match p.label() {
        Some(l) => l.to_string(),
        None => {
            let n = p.normal;
            format!("n:{}:{}:{}", n.x(), n.y(), n.z())
        }
    }
}

/// Inline JSON, or a path to a JSON file.
pub fn parse_model(s: &str) -> Result<ModelSpec> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(Path::new(s)).with_context(|| format!("cannot read model file '{s}'"))?
    };
    let spec: ModelSpec = serde_json::from_str(&text).with_context(|| format!("invalid model spec '{s}'"))?;
    spec.build()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("180deg").unwrap(), PI);
        assert_eq!(parse_angle("0.5rad").unwrap(), 0.5);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("0.5pi").unwrap(), 0.5 * PI);
        assert!(parse_angle("30").is_err());
        assert!(parse_angle("xdeg").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_alphas("0deg..180deg:181").unwrap();
        assert_eq!(g.len(), 181);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[180], PI);
        assert!((g[90] - PI / 2.0).abs() < 1e-15);
        assert_eq!(parse_alphas("10deg,0.1rad").unwrap().len(), 2);
        assert!(parse_alphas("0deg..1rad:0").is_err());
    }

    #[test]
    fn planes() {
        let (a, b) = parse_planes("xy,xz").unwrap();
        assert_eq!(plane_name(&a), "xy");
        assert_eq!(plane_name(&b), "xz");
        let (c, _) = parse_planes("n:0:0:2,yz").unwrap();
        assert_eq!(plane_name(&c), "xy");
        assert!(parse_planes("xy").is_err());
        assert!(parse_planes("xy,ab").is_err());
    }

    #[test]
    fn models() {
        assert!(parse_model(r#"{"model":"qm","seed":3}"#).is_ok());
        assert!(parse_model(r#"{"model":"nlhv","coupling":"comonotone"}"#).is_err());
        assert!(parse_model("/nonexistent/model.json").is_err());
    }
}
