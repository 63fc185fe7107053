use std::io::Write;

pub const TWOSTATE_COLUMNS: &[&str] = &["hbar", "T_or_diag", "A_label", "re", "im", "born_value", "abs_gap"];
pub const DOUBLEWELL_COLUMNS: &[&str] = &[
    "hbar",
    "sample_id",
    "flea_amp",
    "flea_center",
    "flea_width",
    "class",
    "c0_sq",
    "c1_sq",
    "tail_sq",
    "occ_right_diag",
    "occ_right_finiteT",
    "wigner_right_weight",
];
pub const PROP1_COLUMNS: &[&str] = &["hbar", "T", "observable", "paired_mean", "dephased_value", "limit_value", "residual"];
pub const EQUIDISTRIBUTION_COLUMNS: &[&str] = &["t", "tv_distance", "char_fn_magnitude"];
pub const SPLITTING_COLUMNS: &[&str] = &["hbar", "numeric", "asymptotic", "ratio", "d_V"];

/// Shortest round-trip text of a float; identical inputs give identical bytes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Rows under a fixed column schema, preceded by `#` provenance lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    provenance: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), provenance: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn provenance(&self) -> &[(String, String)] {
        &self.provenance
    }

    /// Appends a row; panics if the width differs from the schema, which is a programming error.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the column schema");
        self.rows.push(row);
    }

    pub fn add_provenance(&mut self, key: &str, value: impl Into<String>) {
        self.provenance.push((key.to_string(), value.into()));
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, v) in &self.provenance {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for r in &self.rows {
            writeln!(out, "{}", r.join(","))?;
        }
        out.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("table text is UTF-8")
    }
}
