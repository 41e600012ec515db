//! CSV and JSON serialization of model outputs, and the disease catalog.
//!
//! CSV numbers carry 10 significant digits with `.` as decimal separator;
//! JSON numbers use the shortest representation that parses back to the
//! same `f64`, so JSON artifacts round-trip exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{Cohort, DiseaseEntry, DiseaseRow, OptimizationResult, SweepGrid};
use crate::error::{Error, Result};
use crate::model::{DiseaseParams, PopulationState, ScenarioConfig, Trajectory};

/// The four-disease catalog shipped with the crate.
pub const DEFAULT_CATALOG: &str = include_str!("../data/diseases.csv");

pub const TRAJECTORY_COLUMNS: [&str; 7] = ["t", "S", "I", "R", "I_a", "I_h", "T_h_cum"];
pub const SWEEP_COLUMNS: [&str; 3] = ["a", "R0", "Th_inf"];
pub const RIDGE_COLUMNS: [&str; 3] = ["R0", "a_star", "Th_star"];
pub const TABLE_COLUMNS: [&str; 5] = ["name", "r0_used", "a_star", "Th_star", "savings"];
pub const CATALOG_COLUMNS: [&str; 5] = ["name", "r0_low", "r0_high", "r0_used", "gamma"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Formats `v` with 10 significant digits, dropping trailing zeros.
///
/// Magnitudes in `[1e-5, 1e10)` are written positionally, everything else in
/// `1.5e-7` style.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_fraction(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_owned()))
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        let keep = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(keep);
    }
    s
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_json<W: Write, T: Serialize>(value: &T, mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, value)?;
    sink.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TrajectoryMeta {
    params: DiseaseParams,
    config: ScenarioConfig,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryDocument {
    meta: TrajectoryMeta,
    t: Vec<f64>,
    #[serde(rename = "S")]
    s: Vec<f64>,
    #[serde(rename = "I")]
    i: Vec<f64>,
    #[serde(rename = "R")]
    r: Vec<f64>,
    #[serde(rename = "I_a")]
    i_a: Vec<f64>,
    #[serde(rename = "I_h")]
    i_h: Vec<f64>,
    #[serde(rename = "T_h_cum")]
    th_cum: Vec<f64>,
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, format: OutputFormat, sink: W) -> Result<()> {
    if traj.samples.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let a = traj.config.attendance();
    match format {
        OutputFormat::Csv => {
            let mut w = csv_writer(sink);
            w.write_record(TRAJECTORY_COLUMNS).map_err(csv_error)?;
            for s in &traj.samples {
                w.write_record([s.t, s.s, s.i, s.r, s.attending(a), s.home(a), s.th_cum].map(format_number))
                    .map_err(csv_error)?;
            }
            w.flush()?;
            Ok(())
        }
        OutputFormat::Json => {
            let column = |f: &dyn Fn(&PopulationState) -> f64| traj.samples.iter().map(f).collect::<Vec<_>>();
            let doc = TrajectoryDocument {
                meta: TrajectoryMeta {
                    params: traj.params,
                    config: traj.config,
                },
                t: column(&|s| s.t),
                s: column(&|s| s.s),
                i: column(&|s| s.i),
                r: column(&|s| s.r),
                i_a: column(&|s| s.attending(a)),
                i_h: column(&|s| s.home(a)),
                th_cum: column(&|s| s.th_cum),
            };
            write_json(&doc, sink)
        }
    }
}

/// Reads a trajectory written by [`write_trajectory`] in JSON form.
pub fn read_trajectory_json<R: Read>(source: R) -> Result<Trajectory> {
    let doc: TrajectoryDocument = serde_json::from_reader(source)?;
    let n = doc.t.len();
    if [doc.s.len(), doc.i.len(), doc.r.len(), doc.th_cum.len()]
        .iter()
        .any(|&l| l != n)
    {
        return Err(Error::Json(serde::de::Error::custom(
            "trajectory columns differ in length",
        )));
    }
    let samples = (0..n)
        .map(|k| PopulationState {
            t: doc.t[k],
            s: doc.s[k],
            i: doc.i[k],
            r: doc.r[k],
            th_cum: doc.th_cum[k],
        })
        .collect();
    Ok(Trajectory {
        samples,
        params: doc.meta.params,
        config: doc.meta.config,
    })
}

/// Sweep grid plus the fixed parameters it was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub gamma: f64,
    pub cohort: Cohort,
    #[serde(flatten)]
    pub grid: SweepGrid,
}

/// Long-form CSV (`a,R0,Th_inf`, grouped by R₀ with `a` ascending), a blank
/// line, then the ridge section `R0,a_star,Th_star`. JSON carries the axes,
/// the matrix and the ridge.
pub fn write_sweep<W: Write>(doc: &SweepDocument, format: OutputFormat, mut sink: W) -> Result<()> {
    let grid = &doc.grid;
    match format {
        OutputFormat::Csv => {
            {
                let mut w = csv_writer(&mut sink);
                w.write_record(SWEEP_COLUMNS).map_err(csv_error)?;
                for (j, &r0) in grid.r0_values.iter().enumerate() {
                    for (i, &a) in grid.a_values.iter().enumerate() {
                        w.write_record([a, r0, grid.th_matrix[i][j]].map(format_number))
                            .map_err(csv_error)?;
                    }
                }
                w.flush()?;
            }
            sink.write_all(b"\n")?;
            let mut w = csv_writer(&mut sink);
            w.write_record(RIDGE_COLUMNS).map_err(csv_error)?;
            for p in &grid.ridge {
                w.write_record([p.r0, p.a_star, p.th_star].map(format_number))
                    .map_err(csv_error)?;
            }
            w.flush()?;
            Ok(())
        }
        OutputFormat::Json => write_json(doc, sink),
    }
}

pub fn read_sweep_json<R: Read>(source: R) -> Result<SweepDocument> {
    Ok(serde_json::from_reader(source)?)
}

/// Optimal attendance for one disease together with the staffing savings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub r0: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(flatten)]
    pub result: OptimizationResult,
    pub savings: f64,
}

pub fn write_optimization<W: Write>(report: &OptimizationReport, format: OutputFormat, sink: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv_writer(sink);
            w.write_record(["R0", "a_star", "Th_star", "savings"])
                .map_err(csv_error)?;
            w.write_record([report.r0, report.result.a_star, report.result.th_star, report.savings].map(format_number))
                .map_err(csv_error)?;
            w.flush()?;
            Ok(())
        }
        OutputFormat::Json => write_json(report, sink),
    }
}

pub fn write_disease_table<W: Write>(rows: &[DiseaseRow], format: OutputFormat, sink: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv_writer(sink);
            w.write_record(TABLE_COLUMNS).map_err(csv_error)?;
            for row in rows {
                let [r0, a, th, sav] = [row.r0_used, row.a_star, row.th_star, row.savings].map(format_number);
                w.write_record([row.name.as_str(), &r0, &a, &th, &sav])
                    .map_err(csv_error)?;
            }
            w.flush()?;
            Ok(())
        }
        OutputFormat::Json => write_json(&rows, sink),
    }
}

/// Parses a disease catalog: CSV with header
/// `name,r0_low,r0_high,r0_used,gamma`. Fields are whitespace-trimmed and an
/// empty `r0_used` defaults to the midpoint of `[r0_low, r0_high]`.
pub fn read_disease_catalog<R: Read>(source: R) -> Result<Vec<DiseaseEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);

    let headers = reader.headers().map_err(|e| parse_error(&e, "header"))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != CATALOG_COLUMNS {
        return Err(Error::CatalogParse {
            line: 1,
            field: "header".into(),
            message: format!("expected `{}`, got `{}`", CATALOG_COLUMNS.join(","), names.join(",")),
        });
    }

    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(&e, "record"))?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |idx: usize| -> Result<Option<f64>> {
            let raw = &record[idx];
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>().map(Some).map_err(|e| Error::CatalogParse {
                line,
                field: CATALOG_COLUMNS[idx].into(),
                message: format!("`{raw}`: {e}"),
            })
        };
        let required = |idx: usize| -> Result<f64> {
            number(idx)?.ok_or_else(|| Error::CatalogParse {
                line,
                field: CATALOG_COLUMNS[idx].into(),
                message: "missing value".into(),
            })
        };
        let (r0_low, r0_high, r0_used, gamma) = (required(1)?, required(2)?, number(3)?, required(4)?);
        let entry =
            DiseaseEntry::new(&record[0], r0_low, r0_high, r0_used, gamma).map_err(|e| Error::CatalogValidation {
                line,
                message: e.to_string(),
            })?;
        entries.push(entry);
    }
    Ok(entries)
}

fn parse_error(e: &csv::Error, field: &str) -> Error {
    Error::CatalogParse {
        line: e.position().map_or(0, |p| p.line()),
        field: field.into(),
        message: e.to_string(),
    }
}

/// Writes entries in the format read by [`read_disease_catalog`], with every
/// number in shortest round-trip form.
pub fn write_disease_catalog<W: Write>(entries: &[DiseaseEntry], sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(CATALOG_COLUMNS).map_err(csv_error)?;
    for e in entries {
        let nums = [e.r0_low, e.r0_high, e.r0_used, e.gamma].map(|v| v.to_string());
        w.write_record([e.name.as_str(), &nums[0], &nums[1], &nums[2], &nums[3]])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn default_catalog() -> Vec<DiseaseEntry> {
    read_disease_catalog(DEFAULT_CATALOG.as_bytes()).expect("shipped catalog is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{sweep, RidgePoint};
    use crate::model::{simulate, SimulationSettings};
    use crate::numerics::SolverSettings;
    use proptest::prelude::*;

    fn one_sample() -> Trajectory {
        Trajectory {
            samples: vec![PopulationState {
                t: 0.0,
                s: 99.0,
                i: 1.0,
                r: 0.0,
                th_cum: 0.0,
            }],
            params: DiseaseParams::new(0.5, 0.1).unwrap(),
            config: ScenarioConfig::with_attendance(0.4).unwrap(),
        }
    }

    fn to_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn number_formatting() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (99.0, "99"),
            (0.4, "0.4"),
            (1.0 - 0.4, "0.6"),
            (480.1224806, "480.1224806"),
            (480.12248060607956, "480.1224806"),
            (0.19271427595252116, "0.192714276"),
            (1.0 / 3.0, "0.3333333333"),
            (2.0 / 3.0, "0.6666666667"),
            (-1.5, "-1.5"),
            (9.99999999996, "10"),
            (1e-5, "0.00001"),
            (1.5e-7, "1.5e-7"),
            (12345678912.0, "1.234567891e10"),
            (1234567891.0, "1234567891"),
        ];
        for (v, want) in cases {
            assert_eq!(format_number(v), want, "{v:e}");
        }
    }

    #[test]
    fn initial_condition_row() {
        let csv = to_string(|b| write_trajectory(&one_sample(), OutputFormat::Csv, b));
        assert_eq!(csv, "t,S,I,R,I_a,I_h,T_h_cum\n0,99,1,0,0.4,0.6,0\n");
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let mut t = one_sample();
        t.samples.clear();
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            assert!(matches!(
                write_trajectory(&t, format, Vec::new()),
                Err(Error::EmptyTrajectory)
            ));
        }
    }

    #[test]
    fn trajectory_json_round_trip() {
        let params = DiseaseParams::new(0.5, 0.1).unwrap();
        let cfg = ScenarioConfig::with_attendance(0.3998468940960324).unwrap();
        let traj = simulate(&params, &cfg, &SimulationSettings::default()).unwrap();
        let json = to_string(|b| write_trajectory(&traj, OutputFormat::Json, b));
        let back = read_trajectory_json(json.as_bytes()).unwrap();
        assert_eq!(back, traj);
        let again = to_string(|b| write_trajectory(&back, OutputFormat::Json, b));
        assert_eq!(json, again);
    }

    #[test]
    fn trajectory_json_has_meta_and_columns() {
        let json = to_string(|b| write_trajectory(&one_sample(), OutputFormat::Json, b));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in TRAJECTORY_COLUMNS {
            assert_eq!(v[key].as_array().unwrap().len(), 1, "{key}");
        }
        assert_eq!(v["meta"]["params"]["beta"], 0.5);
        assert_eq!(v["meta"]["config"]["attendance"], 0.4);
        assert_eq!(v["I_h"][0], 0.6);
    }

    #[test]
    fn trajectory_json_rejects_invalid_meta() {
        let json = to_string(|b| write_trajectory(&one_sample(), OutputFormat::Json, b));
        let broken = json.replace("\"attendance\": 0.4", "\"attendance\": 1.4");
        assert_ne!(broken, json);
        assert!(read_trajectory_json(broken.as_bytes()).is_err());
    }

    fn sweep_doc(a: &[f64], r0: &[f64]) -> SweepDocument {
        let cohort = Cohort::default();
        SweepDocument {
            gamma: 0.1,
            cohort,
            grid: sweep(a, r0, 0.1, &cohort, SolverSettings::default()).unwrap(),
        }
    }

    #[test]
    fn sweep_single_cell_csv() {
        let csv = to_string(|b| write_sweep(&sweep_doc(&[0.40], &[5.0]), OutputFormat::Csv, b));
        let mut sections = csv.split("\n\n");
        let cells: Vec<&str> = sections.next().unwrap().lines().collect();
        assert_eq!(cells[0], "a,R0,Th_inf");
        assert_eq!(cells.len(), 2);
        let th: f64 = cells[1].split(',').nth(2).unwrap().parse().unwrap();
        assert!((th - 480.0).abs() <= 2.0);

        let ridge: Vec<&str> = sections.next().unwrap().lines().collect();
        assert_eq!(ridge[0], "R0,a_star,Th_star");
        let fields: Vec<f64> = ridge[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[0], 5.0);
        assert!((fields[1] - 0.40).abs() <= 0.01);
        assert!((fields[2] - 480.0).abs() <= 5.0);
    }

    #[test]
    fn sweep_rows_ascend_in_a() {
        let csv = to_string(|b| write_sweep(&sweep_doc(&[0.3, 0.6], &[5.0]), OutputFormat::Csv, b));
        let rows: Vec<&str> = csv.lines().skip(1).take(2).collect();
        assert!(rows[0].starts_with("0.3,5,"));
        assert!(rows[1].starts_with("0.6,5,"));
    }

    #[test]
    fn sweep_json_round_trip() {
        let doc = sweep_doc(&[0.1, 0.35, 0.9], &[1.5, 5.0]);
        let json = to_string(|b| write_sweep(&doc, OutputFormat::Json, b));
        assert_eq!(read_sweep_json(json.as_bytes()).unwrap(), doc);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["th_matrix"].as_array().unwrap().len(), 3);
        assert_eq!(v["r0_values"][1], 5.0);
        assert_eq!(v["ridge"][0]["r0"], 1.5);
    }

    #[test]
    fn optimization_outputs() {
        let report = OptimizationReport {
            r0: 5.0,
            beta: 0.5,
            gamma: 0.1,
            result: OptimizationResult {
                a_star: 0.4,
                th_star: 480.0,
                evaluations: 42,
                tolerance_used: 1e-8,
            },
            savings: 57.0,
        };
        let csv = to_string(|b| write_optimization(&report, OutputFormat::Csv, b));
        assert_eq!(csv, "R0,a_star,Th_star,savings\n5,0.4,480,57\n");
        let json = to_string(|b| write_optimization(&report, OutputFormat::Json, b));
        let back: OptimizationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn table_csv_quotes_names() {
        let rows = vec![DiseaseRow {
            name: "Flu, seasonal".into(),
            r0_used: 1.3,
            a_star: 0.84,
            th_star: 36.7,
            savings: 4.4,
        }];
        let csv = to_string(|b| write_disease_table(&rows, OutputFormat::Csv, b));
        assert_eq!(
            csv,
            "name,r0_used,a_star,Th_star,savings\n\"Flu, seasonal\",1.3,0.84,36.7,4.4\n"
        );
    }

    #[test]
    fn catalog_midpoint_default() {
        let src = "name,r0_low,r0_high,r0_used,gamma\nmeasles, 12, 18, , 0.1\n";
        let entries = read_disease_catalog(src.as_bytes()).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].name, "measles");
        assert_eq!(entries[0].r0_used, 15.0);
        assert_eq!(entries[0].gamma, 0.1);
    }

    #[test]
    fn catalog_errors_carry_location() {
        let inverted = "name,r0_low,r0_high,r0_used,gamma\nok,1,2,,0.1\nbad,18,12,,0.1\n";
        match read_disease_catalog(inverted.as_bytes()) {
            Err(Error::CatalogValidation { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("r0_low"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        let garbled = "name,r0_low,r0_high,r0_used,gamma\nx,1,two,,0.1\n";
        match read_disease_catalog(garbled.as_bytes()) {
            Err(Error::CatalogParse { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "r0_high");
            }
            other => panic!("unexpected {other:?}"),
        }

        let missing = "name,r0_low,r0_high,r0_used,gamma\nx,1,2,,\n";
        assert!(matches!(
            read_disease_catalog(missing.as_bytes()),
            Err(Error::CatalogParse { field, .. }) if field == "gamma"
        ));

        let short = "name,r0_low,r0_high,r0_used,gamma\nx,1,2\n";
        assert!(matches!(
            read_disease_catalog(short.as_bytes()),
            Err(Error::CatalogParse { line: 2, .. })
        ));

        let header = "disease,lo,hi,used,gamma\n";
        assert!(matches!(
            read_disease_catalog(header.as_bytes()),
            Err(Error::CatalogParse { line: 1, .. })
        ));
    }

    #[test]
    fn shipped_catalog_lists_four_diseases() {
        let entries = default_catalog();
        let names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "Measles",
                "COVID-19 (Omicron)",
                "COVID-19 (ancestral)",
                "Influenza (seasonal)"
            ]
        );
        let ranges: Vec<(f64, f64)> = entries.iter().map(|e| (e.r0_low, e.r0_high)).collect();
        assert_eq!(ranges, [(12.0, 18.0), (9.5, 9.5), (2.4, 3.4), (1.2, 1.4)]);
        let used: Vec<f64> = entries.iter().map(|e| e.r0_used).collect();
        for (got, want) in used.iter().zip([15.0, 9.5, 2.9, 1.3]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(entries.iter().all(|e| e.gamma == 0.1));
    }

    #[test]
    fn ridge_point_serializes_flat() {
        let p = RidgePoint {
            r0: 5.0,
            a_star: 0.4,
            th_star: 480.0,
        };
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"r0":5.0,"a_star":0.4,"th_star":480.0}"#
        );
    }

    prop_compose! {
        fn entry()(name in "[A-Za-z][A-Za-z0-9 ,()\"-]{0,20}", lo in 0.1..20.0f64, width in 0.0..5.0f64,
                   t in 0.0..=1.0f64, gamma in 0.01..1.0f64) -> DiseaseEntry {
            let hi = lo + width;
            let used = (lo + t * width).clamp(lo, hi);
            DiseaseEntry::new(name.trim().to_owned(), lo, hi, Some(used), gamma).unwrap()
        }
    }

    proptest! {
        #[test]
        fn catalog_round_trip(entries in proptest::collection::vec(entry(), 0..6)) {
            let mut buf = Vec::new();
            write_disease_catalog(&entries, &mut buf).unwrap();
            let back = read_disease_catalog(buf.as_slice()).unwrap();
            prop_assert_eq!(back, entries);
        }

        #[test]
        fn formatted_numbers_keep_ten_digits(v in -1e12..1e12f64) {
            let text = format_number(v);
            let parsed: f64 = text.parse().unwrap();
            prop_assert!((parsed - v).abs() <= 5e-10 * v.abs());
        }
    }
}
