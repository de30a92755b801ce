//! Ion species and the delimiter-separated species file.
//!
//! Columns: `label,n_electrons,configuration,twice_j,reduced_me_au`.
//! Lines starting with `#` are comments; a header line starting with
//! `label` is skipped.

use crate::error::{Error, Result};
use crate::halfint::HalfInt;

const DEFAULT_TABLE: &str = include_str!("../data/table1.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct IonSpecies {
    pub label: String,
    pub n_electrons: u32,
    pub configuration: String,
    pub j: HalfInt,
    /// `|⟨J‖T⁽²⁾‖J⟩|` in atomic units.
    pub reduced_me_au: f64,
}

impl IonSpecies {
    pub fn new(label: &str, n_electrons: u32, configuration: &str, j: HalfInt, reduced_me_au: f64) -> Result<Self> {
        if j.twice() < 2 {
            return Err(Error::RankTooLow(j.to_string()));
        }
        if !reduced_me_au.is_finite() || reduced_me_au < 0.0 {
            return Err(Error::InvalidParameter(format!("reduced matrix element {reduced_me_au}")));
        }
        Ok(IonSpecies {
            label: label.to_string(),
            n_electrons,
            configuration: configuration.to_string(),
            j,
            reduced_me_au,
        })
    }

    /// Same species with a different reduced matrix element.
    pub fn with_reduced_me(&self, reduced_me_au: f64) -> Result<Self> {
        IonSpecies::new(&self.label, self.n_electrons, &self.configuration, self.j, reduced_me_au)
    }
}

pub fn parse_species(text: &str) -> Result<Vec<IonSpecies>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("label") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(Error::Parse { line: line_no, msg: format!("expected 5 columns, found {}", cols.len()) });
        }
        let parse_err = |what: &str| Error::Parse { line: line_no, msg: format!("bad {what}") };
        let n_electrons = cols[1].parse().map_err(|_| parse_err("n_electrons"))?;
        let twice_j: i32 = cols[3].parse().map_err(|_| parse_err("twice_j"))?;
        let me: f64 = cols[4].parse().map_err(|_| parse_err("reduced_me_au"))?;
        let species = IonSpecies::new(cols[0], n_electrons, cols[2], HalfInt::from_twice(twice_j), me)
            .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        out.push(species);
    }
    Ok(out)
}

pub fn format_species(species: &[IonSpecies]) -> String {
    let mut s = String::from("label,n_electrons,configuration,twice_j,reduced_me_au\n");
    for sp in species {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            sp.label,
            sp.n_electrons,
            sp.configuration,
            sp.j.twice(),
            sp.reduced_me_au
        ));
    }
    s
}

/// Raw text of the bundled species table.
pub fn default_species_text() -> &'static str {
    DEFAULT_TABLE
}

pub fn default_species() -> Vec<IonSpecies> {
    parse_species(DEFAULT_TABLE).expect("bundled species table parses")
}

pub fn find_species<'a>(species: &'a [IonSpecies], label: &str) -> Option<&'a IonSpecies> {
    species.iter().find(|s| s.label == label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_loads() {
        let all = default_species();
        assert_eq!(all.len(), 18);
        let yb = find_species(&all, "Yb+").unwrap();
        assert_eq!(yb.j, HalfInt::from_twice(7));
        assert_eq!(yb.reduced_me_au, 135.0);
        assert_eq!(parse_species(&format_species(&all)).unwrap(), all);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "label,n_electrons,configuration,twice_j,reduced_me_au\nX,1,s,5,1.0\nY,1,s,5\n";
        match parse_species(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_species("Z,1,s,1,2.0"), Err(Error::Parse { line: 1, .. })));
    }
}
