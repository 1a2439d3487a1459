//! Result artifacts: `results.csv`, `summary.json` and ASCII PGM images.
//!
//! `results.csv` has one row per check with the columns
//! `experiment, parameter, value, target, gap, statistic, threshold,
//! comparison, pass, degenerate, samples, seed, fragment, hazards`.
//! `gap` is `value - target`; missing numbers are written as `NaN`.
//!
//! `summary.json` is
//! `{"pass": bool, "experiments": [{"name", "pass", "reports": [..]}]}`
//! where each report carries the CSV fields plus a `diagnostics` map.
//! Non-finite numbers become `null`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::analysis::TestReport;
use crate::error::{Error, Result};
use crate::lattice::{IntVec, Fragment};

#[derive(Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    parameter: &'a str,
    value: f64,
    target: f64,
    gap: f64,
    statistic: f64,
    threshold: f64,
    comparison: &'static str,
    pass: bool,
    degenerate: bool,
    samples: u64,
    seed: u64,
    fragment: &'a str,
    hazards: u64,
}

pub fn write_csv<W: Write>(reports: &[TestReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(CsvRow {
            experiment: &r.experiment,
            parameter: &r.parameter,
            value: r.value,
            target: r.target,
            gap: r.gap(),
            statistic: r.statistic,
            threshold: r.threshold,
            comparison: match r.comparison {
                crate::analysis::Comparison::Below => "below",
                crate::analysis::Comparison::Above => "above",
            },
            pass: r.pass,
            degenerate: r.degenerate,
            samples: r.samples,
            seed: r.seed,
            fragment: &r.fragment,
            hazards: r.hazards,
        })
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reports of one experiment run.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub pass: bool,
    pub reports: Vec<TestReport>,
}

impl ExperimentSummary {
    pub fn new(name: &str, reports: Vec<TestReport>) -> Self {
        let pass = reports.iter().all(|r| r.pass || r.degenerate);
        ExperimentSummary { name: name.to_string(), pass, reports }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    pass: bool,
    experiments: &'a [ExperimentSummary],
}

pub fn summary_json(experiments: &[ExperimentSummary]) -> String {
    let pass = experiments.iter().all(|e| e.pass);
    let mut s = serde_json::to_string_pretty(&Summary { pass, experiments }).expect("plain data serializes");
    s.push('\n');
    s
}

/// 8-bit grey image, row-major from the top row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub const GREY: u8 = 170;
pub const WHITE: u8 = 255;

impl PixelImage {
    pub fn get(&self, column: usize, row: usize) -> u8 {
        self.pixels[row * self.width + column]
    }

    pub fn count(&self, value: u8) -> usize {
        self.pixels.iter().filter(|&&p| p == value).count()
    }

    /// ASCII PGM (`P2`, maxval 255), lines at most 70 characters.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width.max(1)) {
            let mut line = String::new();
            for p in row {
                let token = p.to_string();
                if !line.is_empty() && line.len() + 1 + token.len() > 70 {
                    out.push_str(&line);
                    out.push('\n');
                    line.clear();
                }
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&token);
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm())?;
        Ok(())
    }
}

/// Grey where `pred` holds at `(a_1 + i, a_2 + j)`, white elsewhere; column
/// `i`, with row 0 holding the largest second coordinate.
pub fn render_fragment<P: Fn(&IntVec) -> bool>(pred: P, frag: &Fragment) -> Result<PixelImage> {
    if frag.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: frag.dim() });
    }
    let (width, height) = (frag.edges()[0] as usize, frag.edges()[1] as usize);
    let (a1, a2) = (frag.corner()[0], frag.corner()[1]);
    let mut pixels = vec![WHITE; width * height];
    for j in 0..height {
        let row = height - 1 - j;
        for i in 0..width {
            if pred(&IntVec::from([a1 + i as i64, a2 + j as i64])) {
                pixels[row * width + i] = GREY;
            }
        }
    }
    Ok(PixelImage { width, height, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_golden() {
        let f = Fragment::new(vec![0, 0], vec![3, 2]).unwrap();
        let img = render_fragment(|x| x.as_slice()[0] == x.as_slice()[1], &f).unwrap();
        assert_eq!(img.to_pgm(), "P2\n3 2\n255\n255 170 255\n170 255 255\n");
    }

    #[test]
    fn pgm_wraps_long_rows() {
        let f = Fragment::new(vec![0, 0], vec![40, 1]).unwrap();
        let pgm = render_fragment(|_| true, &f).unwrap().to_pgm();
        assert!(pgm.lines().all(|l| l.len() <= 70));
        assert_eq!(pgm.split_whitespace().skip(4).count(), 40);
    }

    #[test]
    fn constant_predicates() {
        let f = Fragment::new(vec![-2, 5], vec![4, 3]).unwrap();
        assert_eq!(render_fragment(|_| true, &f).unwrap().count(GREY), 12);
        assert_eq!(render_fragment(|_| false, &f).unwrap().count(WHITE), 12);
        let cube = Fragment::new(vec![0, 0, 0], vec![1, 1, 1]).unwrap();
        assert!(render_fragment(|_| true, &cube).is_err());
    }

    #[test]
    fn csv_header_and_nan() {
        let r = TestReport::new("x", "p").statistic(0.5).below(1.0);
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,parameter,value,target,gap,statistic,threshold,comparison,pass,degenerate,samples,seed,fragment,hazards"
        );
        assert!(lines.next().unwrap().starts_with("x,p,NaN,NaN,NaN,0.5,1.0,below,true"));
    }
}
