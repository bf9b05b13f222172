use serde::Serialize;

/// One direction of a per-direction check (CSV row).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DirectionRow {
    pub index: usize,
    pub direction: Vec<f64>,
    /// Labelled values along the chain or both sides of an identity.
    pub values: Vec<(String, f64)>,
    pub pass: bool,
}

/// Structured outcome of an inequality or identity check.
///
/// `pass` holds iff the stated relation holds within `tolerance` on every sample.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerifyReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub bound: f64,
    /// Signed slack; positive when the inequality holds strictly.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: usize,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<DirectionRow>,
}

impl VerifyReport {
    pub fn new(name: &str) -> Self {
        VerifyReport {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            ratio: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            tolerance: 0.0,
            pass: false,
            samples: 0,
            seed: None,
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    /// One CSV line per direction row (or a single summary line).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.rows.is_empty() {
            out.push_str("name,lhs,rhs,ratio,bound,margin,tolerance,pass,samples\n");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.name, self.lhs, self.rhs, self.ratio, self.bound, self.margin, self.tolerance, self.pass, self.samples
            ));
            return out;
        }
        let labels: Vec<&str> = self.rows[0].values.iter().map(|v| v.0.as_str()).collect();
        out.push_str("index,direction,");
        out.push_str(&labels.join(","));
        out.push_str(",pass\n");
        for r in &self.rows {
            let dir: Vec<String> = r.direction.iter().map(|x| x.to_string()).collect();
            let vals: Vec<String> = r.values.iter().map(|v| v.1.to_string()).collect();
            out.push_str(&format!("{},{},{},{}\n", r.index, dir.join(" "), vals.join(","), r.pass));
        }
        out
    }
}
