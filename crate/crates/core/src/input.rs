//! Built-in test functions and the CSV exchange format for grid functions.
//!
//! A grid CSV has a header row `x,value` (one dimension) or
//! `x1,...,xn,value`, then one row per grid point in row-major order (last
//! axis fastest). Coordinates must match the configured grid to within
//! `1e-9 max(1, L)`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::bmo::test_function;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridGeometry};
use crate::hermite::HermiteBasis;

/// Floats in CSV output: 17 significant digits, no locale.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Functions that can be sampled by name: `constant[:c]`,
/// `coordinate[:i]`, `sin[:i]`, `log_spike:s[,x0_1,...]` and
/// `hermite:k_1[,...]`. Axes count from 1; missing centre components are 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Constant(f64),
    Coordinate { axis: usize },
    Sin { axis: usize },
    LogSpike { s: f64, x0: Vec<f64> },
    Hermite(Vec<usize>),
}

fn parse_list<T: FromStr>(spec: &str, args: &str) -> Result<Vec<T>> {
    args.split(',')
        .map(|a| {
            a.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad argument `{a}` in function `{spec}`")))
        })
        .collect()
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (spec.trim(), None),
        };
        let axis = |args: Option<&str>| -> Result<usize> {
            match args {
                None => Ok(0),
                Some(a) => match parse_list::<usize>(spec, a)?.as_slice() {
                    [i] if *i >= 1 => Ok(i - 1),
                    _ => Err(Error::Config(format!("`{spec}` takes one axis, counted from 1"))),
                },
            }
        };
        match name {
            "constant" => Ok(Builtin::Constant(match args {
                None => 1.0,
                Some(a) => match parse_list::<f64>(spec, a)?.as_slice() {
                    [c] => *c,
                    _ => return Err(Error::Config(format!("`{spec}` takes one value"))),
                },
            })),
            "coordinate" => Ok(Builtin::Coordinate { axis: axis(args)? }),
            "sin" => Ok(Builtin::Sin { axis: axis(args)? }),
            "log_spike" => {
                let v = parse_list::<f64>(spec, args.ok_or_else(|| Error::Config("`log_spike` needs `:s[,x0...]`".into()))?)?;
                Ok(Builtin::LogSpike {
                    s: v[0],
                    x0: v[1..].to_vec(),
                })
            }
            "hermite" => Ok(Builtin::Hermite(parse_list(
                spec,
                args.ok_or_else(|| Error::Config("`hermite` needs `:k1[,k2...]`".into()))?,
            )?)),
            _ => Err(Error::Config(format!("unknown function `{name}`"))),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[String]| v.join(",");
        match self {
            Builtin::Constant(c) => write!(f, "constant:{c}"),
            Builtin::Coordinate { axis } => write!(f, "coordinate:{}", axis + 1),
            Builtin::Sin { axis } => write!(f, "sin:{}", axis + 1),
            Builtin::LogSpike { s, x0 } => {
                let mut v = vec![s.to_string()];
                v.extend(x0.iter().map(|c| c.to_string()));
                write!(f, "log_spike:{}", join(&v))
            }
            Builtin::Hermite(k) => write!(f, "hermite:{}", join(&k.iter().map(|k| k.to_string()).collect::<Vec<_>>())),
        }
    }
}

impl Builtin {
    pub fn sample(&self, geom: GridGeometry) -> Result<GridFunction> {
        let n = geom.n;
        let check_axis = |axis: usize| {
            if axis >= n {
                Err(Error::Config(format!("axis {} out of range for dimension {n}", axis + 1)))
            } else {
                Ok(())
            }
        };
        match self {
            Builtin::Constant(c) => GridFunction::from_fn(geom, |_| *c),
            Builtin::Coordinate { axis } => {
                check_axis(*axis)?;
                GridFunction::from_fn(geom, |x| x[*axis])
            }
            Builtin::Sin { axis } => {
                check_axis(*axis)?;
                GridFunction::from_fn(geom, |x| x[*axis].sin())
            }
            Builtin::LogSpike { s, x0 } => {
                if x0.len() > n {
                    return Err(Error::Config(format!("centre has more than {n} components")));
                }
                let mut c = x0.clone();
                c.resize(n, 0.0);
                // validates 0 < s <= gamma(x0) once, so sampling cannot fail
                test_function(&c, *s, &c)?;
                GridFunction::from_fn(geom, |x| test_function(x, *s, &c).expect("radius checked"))
            }
            Builtin::Hermite(k) => {
                if k.len() != n {
                    return Err(Error::Config(format!("hermite needs {n} indices")));
                }
                let basis = HermiteBasis::new(n, k.iter().sum())?;
                GridFunction::from_fn(geom, |x| basis.eval(k, x).expect("degree checked"))
            }
        }
    }
}

fn coordinate_header(n: usize, prefix: &str) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// Column names of an `n`-dimensional grid CSV.
pub fn grid_header(n: usize) -> Vec<String> {
    let mut h = coordinate_header(n, "x");
    h.push("value".into());
    h
}

/// Reads a grid CSV laid out on `geom`.
pub fn read_grid_csv(reader: impl Read, geom: GridGeometry) -> Result<GridFunction> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let want = grid_header(geom.n);
    let ingest = |row: usize, message: String| Error::Ingestion { row, message };
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(ingest(1, "missing header row".into())),
        Some(r) => r.map_err(|e| ingest(1, e.to_string()))?,
    };
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != want {
        return Err(ingest(
            1,
            format!("expected header `{}`, found `{}`", want.join(","), got.join(",")),
        ));
    }
    let tol = 1e-9 * geom.half_width.max(1.0);
    let mut samples = Vec::with_capacity(geom.len());
    for (k, rec) in records.enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| ingest(row, e.to_string()))?;
        if rec.len() != geom.n + 1 {
            return Err(ingest(row, format!("expected {} fields, found {}", geom.n + 1, rec.len())));
        }
        if k >= geom.len() {
            return Err(ingest(row, format!("more than the {} rows of the grid", geom.len())));
        }
        let vals = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|_| ingest(row, format!("`{f}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        let p = geom.point(k);
        for (d, (a, b)) in vals.iter().zip(&p).enumerate() {
            if !((a - b).abs() <= tol) {
                return Err(ingest(row, format!("coordinate {} is {a}, grid expects {b}", d + 1)));
            }
        }
        if !vals[geom.n].is_finite() {
            return Err(ingest(row, "value is not finite".into()));
        }
        samples.push(vals[geom.n]);
    }
    if samples.len() != geom.len() {
        return Err(ingest(
            samples.len() + 2,
            format!("expected {} rows, found {}", geom.len(), samples.len()),
        ));
    }
    GridFunction::from_samples(geom, samples)
}

/// Writes a grid function in the grid CSV format.
pub fn write_grid_csv(mut w: impl Write, f: &GridFunction) -> Result<()> {
    writeln!(w, "{}", grid_header(f.geom.n).join(","))?;
    for (i, v) in f.samples.iter().enumerate() {
        let mut fields: Vec<String> = f.geom.point(i).into_iter().map(fmt_float).collect();
        fields.push(fmt_float(*v));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Column names `x..., y...` of a point pair.
pub fn pair_header(n: usize) -> Vec<String> {
    let mut h = coordinate_header(n, "x");
    h.extend(coordinate_header(n, "y"));
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_print() {
        for s in ["constant:2.5", "coordinate:1", "sin:2", "log_spike:0.0625,0,1", "hermite:1,0"] {
            assert_eq!(s.parse::<Builtin>().unwrap().to_string(), s);
        }
        assert_eq!("constant".parse::<Builtin>().unwrap(), Builtin::Constant(1.0));
        assert!("coordinate:0".parse::<Builtin>().is_err());
        assert!("square".parse::<Builtin>().is_err());
        assert!("log_spike".parse::<Builtin>().is_err());
    }

    #[test]
    fn log_spike_checks_its_radius() {
        let geom = GridGeometry::new(1, 2.0, 41).unwrap();
        let f = "log_spike:0.125".parse::<Builtin>().unwrap().sample(geom).unwrap();
        assert!((f.samples[20] - 4f64.ln()).abs() < 1e-15);
        assert!("log_spike:0.6".parse::<Builtin>().unwrap().sample(geom).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let geom = GridGeometry::new(2, 1.5, 5).unwrap();
        let f = "sin:2".parse::<Builtin>().unwrap().sample(geom).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &f).unwrap();
        assert!(buf.starts_with(b"x1,x2,value\n"));
        let g = read_grid_csv(buf.as_slice(), geom).unwrap();
        assert_eq!(f.samples, g.samples);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let geom = GridGeometry::new(1, 1.0, 3).unwrap();
        let err = |text: &str| read_grid_csv(text.as_bytes(), geom).unwrap_err();
        assert!(matches!(err("y,value\n"), Error::Ingestion { row: 1, .. }));
        assert!(matches!(err("x,value\n-1,0\n0,1,2\n"), Error::Ingestion { row: 3, .. }));
        assert!(matches!(err("x,value\n-1,0\n0.5,1\n1,2\n"), Error::Ingestion { row: 3, .. }));
        assert!(matches!(err("x,value\n-1,0\n0,abc\n1,2\n"), Error::Ingestion { row: 3, .. }));
        assert!(matches!(err("x,value\n-1,0\n0,1\n"), Error::Ingestion { row: 4, .. }));
        assert!(read_grid_csv("x,value\n-1,0\n0,1\n1,2\n".as_bytes(), geom).is_ok());
    }
}
