//! Study reports and their CSV serialization.
//!
//! Two schemas, both with fixed headers and values printed via `{:.16e}`
//! (17 significant digits), so a written file parses back to bitwise
//! identical numbers and identical runs produce identical bytes:
//!
//! ```text
//! case,N,h,norm,value,eoc_vs_prev
//! case,k,h,limsup_estimate,verdict
//! ```

use crate::error::{Error, Result};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

pub const REPORT_HEADER: &str = "case,N,h,norm,value,eoc_vs_prev";
pub const LIMSUP_HEADER: &str = "case,k,h,limsup_estimate,verdict";

/// Experimental order of convergence relative to the previous resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eoc {
    /// No predecessor (first resolution of a chain).
    Na,
    /// At least one of the paired errors was exactly zero.
    Exact,
    Order(f64),
}

impl fmt::Display for Eoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eoc::Na => write!(f, "NA"),
            Eoc::Exact => write!(f, "exact"),
            Eoc::Order(p) => write!(f, "{p:.16e}"),
        }
    }
}

impl FromStr for Eoc {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "NA" => Ok(Eoc::Na),
            "exact" => Ok(Eoc::Exact),
            other => other
                .parse::<f64>()
                .map(Eoc::Order)
                .map_err(|e| format!("bad eoc value {other:?}: {e}")),
        }
    }
}

/// Pairwise order from two (h, error) samples; `Exact` when an error
/// vanishes, since the log-ratio is then undefined.
pub fn pairwise_eoc(h_prev: f64, err_prev: f64, h: f64, err: f64) -> Eoc {
    if err_prev == 0.0 || err == 0.0 {
        return Eoc::Exact;
    }
    Eoc::Order((err_prev / err).ln() / (h_prev / h).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub case: String,
    pub n: usize,
    pub h: f64,
    pub norm: String,
    pub value: f64,
    pub eoc_vs_prev: Eoc,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConsistencyReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Growing,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Bounded => write!(f, "bounded"),
            Verdict::Growing => write!(f, "unbounded"),
        }
    }
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bounded" => Ok(Verdict::Bounded),
            "unbounded" => Ok(Verdict::Growing),
            other => Err(format!("bad verdict {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimsupRow {
    pub case: String,
    pub k: u32,
    pub h: f64,
    pub limsup_estimate: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LimsupReport {
    pub rows: Vec<LimsupRow>,
}

fn check_field(name: &str, value: &str) -> Result<()> {
    if value.is_empty() || value.contains(',') || value.contains('\n') {
        return Err(Error::domain(format!(
            "{name} {value:?} cannot be stored in a CSV field"
        )));
    }
    Ok(())
}

impl ConsistencyReport {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for row in &self.rows {
            check_field("case", &row.case)?;
            check_field("norm", &row.norm)?;
            out.push_str(&format!(
                "{},{},{:.16e},{},{:.16e},{}\n",
                row.case, row.n, row.h, row.norm, row.value, row.eoc_vs_prev
            ));
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<ConsistencyReport> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<ConsistencyReport> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == REPORT_HEADER => {}
            Some((_, header)) => {
                return Err(Error::ReportParse {
                    line: 1,
                    msg: format!("expected header {REPORT_HEADER:?}, found {header:?}"),
                })
            }
            None => {
                return Err(Error::ReportParse {
                    line: 1,
                    msg: "empty report".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 6 {
                return Err(Error::ReportParse {
                    line: lineno,
                    msg: format!("expected 6 fields, found {}", parts.len()),
                });
            }
            let parse_f64 = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| Error::ReportParse {
                    line: lineno,
                    msg: format!("bad {what} {s:?}: {e}"),
                })
            };
            rows.push(ReportRow {
                case: parts[0].to_string(),
                n: parts[1].parse::<usize>().map_err(|e| Error::ReportParse {
                    line: lineno,
                    msg: format!("bad N {:?}: {e}", parts[1]),
                })?,
                h: parse_f64(parts[2], "h")?,
                norm: parts[3].to_string(),
                value: parse_f64(parts[4], "value")?,
                eoc_vs_prev: parts[5].parse::<Eoc>().map_err(|msg| Error::ReportParse {
                    line: lineno,
                    msg,
                })?,
            });
        }
        Ok(ConsistencyReport { rows })
    }
}

impl LimsupReport {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::from(LIMSUP_HEADER);
        out.push('\n');
        for row in &self.rows {
            check_field("case", &row.case)?;
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{}\n",
                row.case, row.k, row.h, row.limsup_estimate, row.verdict
            ));
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<LimsupReport> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<LimsupReport> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == LIMSUP_HEADER => {}
            Some((_, header)) => {
                return Err(Error::ReportParse {
                    line: 1,
                    msg: format!("expected header {LIMSUP_HEADER:?}, found {header:?}"),
                })
            }
            None => {
                return Err(Error::ReportParse {
                    line: 1,
                    msg: "empty report".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 5 {
                return Err(Error::ReportParse {
                    line: lineno,
                    msg: format!("expected 5 fields, found {}", parts.len()),
                });
            }
            let parse_f64 = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| Error::ReportParse {
                    line: lineno,
                    msg: format!("bad {what} {s:?}: {e}"),
                })
            };
            rows.push(LimsupRow {
                case: parts[0].to_string(),
                k: parts[1].parse::<u32>().map_err(|e| Error::ReportParse {
                    line: lineno,
                    msg: format!("bad k {:?}: {e}", parts[1]),
                })?,
                h: parse_f64(parts[2], "h")?,
                limsup_estimate: parse_f64(parts[3], "limsup_estimate")?,
                verdict: parts[4].parse::<Verdict>().map_err(|msg| Error::ReportParse {
                    line: lineno,
                    msg,
                })?,
            });
        }
        Ok(LimsupReport { rows })
    }
}
