//! Tip-age calibrations: CSV lines `name,min_age,max_age` in years BP.

use crate::error::ParseError;
use crate::tree::{CalibrationPrior, TaxonSet};

/// Reads calibrations for `taxa`. Taxa that are not listed are extant.
pub fn parse_calibrations(text: &str, taxa: &[String]) -> Result<Vec<CalibrationPrior>, ParseError> {
    let mut out = vec![CalibrationPrior::EXTANT; taxa.len()];
    let mut seen = vec![false; taxa.len()];
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(ParseError::line(lineno, "expected `name,min_age,max_age`"));
        }
        // Optional header row.
        if lineno == 1 && fields[1].parse::<f64>().is_err() {
            continue;
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::line(lineno, format!("bad age `{s}`")))
        };
        let (min, max) = (num(fields[1])?, num(fields[2])?);
        let name = fields[0];
        let idx = taxa
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| ParseError::UnknownTaxon(name.to_string()))?;
        if min > max {
            return Err(ParseError::line(
                lineno,
                format!("taxon `{name}`: min_age {min} exceeds max_age {max}"),
            ));
        }
        if min < 0.0 {
            return Err(ParseError::line(lineno, format!("taxon `{name}`: negative age")));
        }
        if seen[idx] {
            return Err(ParseError::line(lineno, format!("taxon `{name}` listed twice")));
        }
        seen[idx] = true;
        out[idx] = CalibrationPrior {
            min_age: min,
            max_age: max,
        };
    }
    Ok(out)
}

pub fn write_calibrations(taxa: &TaxonSet) -> String {
    let mut out = String::from("name,min_age,max_age\n");
    for t in taxa.iter().filter(|t| !t.calibration.is_extant()) {
        out.push_str(&format!(
            "{},{},{}\n",
            t.name, t.calibration.min_age, t.calibration.max_age
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taxa() -> Vec<String> {
        ["Hittite", "Gothic", "English"].map(String::from).to_vec()
    }

    #[test]
    fn reads_bounds_and_defaults_to_extant() {
        let c = parse_calibrations("Hittite,3500,3600\nGothic,1625,1675\n", &taxa()).unwrap();
        assert_eq!((c[0].min_age, c[0].max_age), (3500.0, 3600.0));
        assert_eq!((c[1].min_age, c[1].max_age), (1625.0, 1675.0));
        assert_eq!(c[2], CalibrationPrior::EXTANT);
    }

    #[test]
    fn rejects_inverted_bounds_and_unknown_names() {
        let e = parse_calibrations("Hittite,3600,3500", &taxa()).unwrap_err();
        assert!(e.to_string().contains("Hittite"));
        let e = parse_calibrations("Luvian,3300,3500", &taxa()).unwrap_err();
        assert!(matches!(e, ParseError::UnknownTaxon(ref n) if n == "Luvian"));
    }

    #[test]
    fn header_and_round_trip() {
        let mut set = TaxonSet::new(taxa()).unwrap();
        set.set_calibration(0, CalibrationPrior::new(3500.0, 3600.0).unwrap());
        let text = write_calibrations(&set);
        let back = parse_calibrations(&text, &taxa()).unwrap();
        assert_eq!(back, set.calibrations());
    }
}
