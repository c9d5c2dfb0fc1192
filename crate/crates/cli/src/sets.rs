//! Parsing of `--set` descriptors into target sets.
//!
//! Grammar: `name` or `name:key=value,...`. Radial intervals are written
//! as `lo-hi` pairs, e.g. `radial:0.1-0.2,0.3-0.45`.

use gstrip_core::geom::{BoundingBox, Point};
use gstrip_core::kolmap::CoverStrategy;
use gstrip_core::setlib::{
    make_carpet, make_disk, make_koch, make_radial, make_square, make_subgraph, SetSpec,
};

use crate::CliError;

/// The two built-in subgraph targets live on this interval.
const GRAPH_DOMAIN: (f64, f64) = (-1.0 / 12.0, 1.0 / 12.0);

fn sine_field(x: &Point) -> f64 {
    x[0].sin() / 10.0
}

fn parabola_field(x: &Point) -> f64 {
    x[0] * x[0] / 20.0
}

/// Parses a set descriptor and returns the set with its natural cover
/// strategy.
pub fn parse_set(spec: &str) -> Result<(SetSpec, CoverStrategy), CliError> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n, a),
        None => (spec, ""),
    };
    match name {
        "square" => Ok((make_square(), CoverStrategy::GridLines)),
        "disk" => {
            let r = num_arg(args, "r")?.unwrap_or(1.0);
            Ok((make_disk(r)?, CoverStrategy::Convex))
        }
        "koch" => {
            let k = num_arg(args, "k")?.unwrap_or(3.0);
            Ok((make_koch(int_param(k, "k")?)?, CoverStrategy::GridLines))
        }
        "carpet" => {
            let k = num_arg(args, "k")?.unwrap_or(2.0);
            Ok((make_carpet(int_param(k, "k")?)?, CoverStrategy::GridLines))
        }
        "radial" => {
            let intervals = parse_intervals(args)?;
            Ok((make_radial(&intervals)?, CoverStrategy::Radial))
        }
        "sine" => {
            let domain = graph_domain()?;
            let set = make_subgraph(sine_field, 0.1, Some(0.1), &domain)?;
            Ok((set, CoverStrategy::Surface))
        }
        "parabola" => {
            let lip = GRAPH_DOMAIN.1.abs() / 10.0;
            let domain = graph_domain()?;
            let set = make_subgraph(parabola_field, lip, Some(0.1), &domain)?;
            Ok((set, CoverStrategy::Surface))
        }
        other => Err(CliError::parse(format!(
            "unknown set '{other}' (expected square, disk, koch, carpet, radial, sine or parabola)"
        ))),
    }
}

fn graph_domain() -> Result<BoundingBox, CliError> {
    BoundingBox::new(
        Point::from_slice(&[GRAPH_DOMAIN.0]),
        Point::from_slice(&[GRAPH_DOMAIN.1]),
    )
    .map_err(CliError::from)
}

fn num_arg(args: &str, key: &str) -> Result<Option<f64>, CliError> {
    for part in args.split(',').filter(|p| !p.is_empty()) {
        let Some((k, v)) = part.split_once('=') else {
            return Err(CliError::parse(format!(
                "set argument '{part}' is not of the form key=value"
            )));
        };
        if k == key {
            let value: f64 = v
                .parse()
                .map_err(|_| CliError::parse(format!("set argument {key}={v} is not a number")))?;
            return Ok(Some(value));
        }
    }
    Ok(None)
}

fn int_param(value: f64, key: &str) -> Result<u32, CliError> {
    if value.fract() != 0.0 || !(0.0..=64.0).contains(&value) {
        return Err(CliError::parse(format!(
            "set argument {key}={value} must be a small nonnegative integer"
        )));
    }
    Ok(value as u32)
}

fn parse_intervals(args: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut intervals = Vec::new();
    for part in args.split(',').filter(|p| !p.is_empty()) {
        let Some((lo, hi)) = part.split_once('-') else {
            return Err(CliError::parse(format!(
                "radial interval '{part}' is not of the form lo-hi"
            )));
        };
        let lo: f64 = lo
            .parse()
            .map_err(|_| CliError::parse(format!("radial endpoint '{lo}' is not a number")))?;
        let hi: f64 = hi
            .parse()
            .map_err(|_| CliError::parse(format!("radial endpoint '{hi}' is not a number")))?;
        intervals.push((lo, hi));
    }
    if intervals.is_empty() {
        return Err(CliError::parse(
            "radial set needs at least one interval, e.g. radial:0.1-0.2".into(),
        ));
    }
    Ok(intervals)
}
