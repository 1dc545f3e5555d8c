//! Molpro FCIDUMP reader and writer.

use std::fmt::Write as _;

use super::{IntegralSet, MolhamError};

const DUPLICATE_TOL: f64 = 1e-10;

#[derive(Default)]
struct Header {
    norb: Option<usize>,
    nelec: Option<usize>,
    ms2: i64,
    orbsym: Vec<u32>,
    isym: Option<u32>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> MolhamError {
    MolhamError::Parse { line, msg: msg.into() }
}

fn parse_header(lines: &[(usize, &str)]) -> Result<Header, MolhamError> {
    let mut header = Header::default();
    let mut current: Option<String> = None;
    for &(lineno, raw) in lines {
        let mut text = raw.trim().to_string();
        for marker in ["&FCI", "&fci", "&END", "&end", "/"] {
            text = text.replace(marker, " ");
        }
        for token in text.split(|c: char| c == ',' || c.is_whitespace()) {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            let (key, value) = match token.split_once('=') {
                Some((k, v)) => {
                    let key = k.trim().to_ascii_uppercase();
                    current = Some(key.clone());
                    (key, v.trim())
                }
                None => match &current {
                    Some(k) => (k.clone(), token),
                    None => return Err(parse_err(lineno, format!("unexpected token `{token}`"))),
                },
            };
            if value.is_empty() {
                continue;
            }
            let int = |v: &str| -> Result<i64, MolhamError> {
                v.parse::<i64>()
                    .map_err(|_| parse_err(lineno, format!("bad integer `{v}` for {key}")))
            };
            match key.as_str() {
                "NORB" => {
                    let n = int(value)?;
                    if n < 1 {
                        return Err(parse_err(lineno, "NORB must be at least 1"));
                    }
                    header.norb = Some(n as usize);
                }
                "NELEC" => {
                    let n = int(value)?;
                    if n < 0 {
                        return Err(parse_err(lineno, "NELEC must be non-negative"));
                    }
                    header.nelec = Some(n as usize);
                }
                "MS2" => header.ms2 = int(value)?,
                "ORBSYM" => header.orbsym.push(int(value)? as u32),
                "ISYM" => header.isym = Some(int(value)? as u32),
                // UHF, IUHF, ST, III, ... are accepted and ignored.
                _ => {}
            }
        }
    }
    Ok(header)
}

fn parse_value(token: &str, lineno: usize) -> Result<f64, MolhamError> {
    token
        .replace(['D', 'd'], "E")
        .parse::<f64>()
        .map_err(|_| parse_err(lineno, format!("bad value `{token}`")))
}

/// Parse FCIDUMP text into a fully symmetrized [`IntegralSet`].
pub fn parse_fcidump(text: &str) -> Result<IntegralSet, MolhamError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    let start = lines
        .iter()
        .position(|(_, l)| l.trim_start().to_ascii_uppercase().starts_with("&FCI"))
        .ok_or_else(|| parse_err(1, "missing &FCI header"))?;
    let end = lines[start..]
        .iter()
        .position(|(_, l)| {
            let t = l.trim().to_ascii_uppercase();
            t.contains("&END") || t == "/" || t.ends_with('/')
        })
        .map(|off| start + off)
        .ok_or_else(|| parse_err(lines[start].0, "header not terminated by &END"))?;

    let header = parse_header(&lines[start..=end])?;
    let header_line = lines[start].0;
    let norb = header.norb.ok_or_else(|| parse_err(header_line, "NORB missing"))?;
    let nelec = header.nelec.ok_or_else(|| parse_err(header_line, "NELEC missing"))?;
    if !header.orbsym.is_empty() && header.orbsym.len() != norb {
        return Err(parse_err(
            header_line,
            format!("ORBSYM has {} entries, NORB is {norb}", header.orbsym.len()),
        ));
    }

    let mut ints = IntegralSet::zeros(norb, nelec);
    ints.ms2 = header.ms2;
    ints.orbsym = header.orbsym;
    ints.isym = header.isym;
    let mut seen_one = vec![false; norb * norb];
    let mut seen_two = vec![false; norb * norb * norb * norb];
    let mut seen_core = false;

    for &(lineno, raw) in &lines[end + 1..] {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 5 {
            return Err(parse_err(lineno, format!("expected 5 fields, found {}", tokens.len())));
        }
        let value = parse_value(tokens[0], lineno)?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&tokens[1..]) {
            let v: i64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad index `{tok}`")))?;
            if v < 0 || v as usize > norb {
                return Err(parse_err(lineno, format!("index {v} outside [1, {norb}]")));
            }
            *slot = v as usize;
        }
        match idx {
            [0, 0, 0, 0] => {
                if seen_core && (ints.core_energy - value).abs() > DUPLICATE_TOL {
                    return Err(MolhamError::Consistency { line: lineno, msg: "core energy given twice".into() });
                }
                ints.core_energy = value;
                seen_core = true;
            }
            // orbital energies: read and discarded
            [_, 0, 0, 0] => {}
            [i, j, 0, 0] if i > 0 && j > 0 => {
                let (i, j) = (i - 1, j - 1);
                for (a, b) in [(i, j), (j, i)] {
                    let k = a * norb + b;
                    if seen_one[k] && (ints.one_body[k] - value).abs() > DUPLICATE_TOL {
                        return Err(MolhamError::Consistency {
                            line: lineno,
                            msg: format!("contradictory one-body entry ({}, {})", i + 1, j + 1),
                        });
                    }
                    ints.one_body[k] = value;
                    seen_one[k] = true;
                }
            }
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                for (p, q, r, s) in eightfold(i, j, k, l) {
                    let at = ((p * norb + q) * norb + r) * norb + s;
                    if seen_two[at] && (ints.two_body[at] - value).abs() > DUPLICATE_TOL {
                        return Err(MolhamError::Consistency {
                            line: lineno,
                            msg: format!(
                                "contradictory two-body entry ({} {} | {} {})",
                                i + 1,
                                j + 1,
                                k + 1,
                                l + 1
                            ),
                        });
                    }
                    ints.two_body[at] = value;
                    seen_two[at] = true;
                }
            }
            _ => return Err(parse_err(lineno, format!("unrecognised index pattern {idx:?}"))),
        }
    }
    Ok(ints)
}

pub(crate) fn eightfold(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    ]
}

/// Serialize in the same convention `parse_fcidump` reads.
pub fn write_fcidump(ints: &IntegralSet) -> String {
    let n = ints.n_orbitals;
    let mut out = String::new();
    let _ = writeln!(out, " &FCI NORB={},NELEC={},MS2={},", n, ints.n_electrons, ints.ms2);
    if !ints.orbsym.is_empty() {
        let syms: Vec<String> = ints.orbsym.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "  ORBSYM={},", syms.join(","));
    }
    if let Some(isym) = ints.isym {
        let _ = writeln!(out, "  ISYM={isym},");
    }
    out.push_str(" &END\n");
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if i * (i + 1) / 2 + j < k * (k + 1) / 2 + l {
                        continue;
                    }
                    let v = ints.two(i, j, k, l);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = ints.one(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{v:e} {} {} 0 0", i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", ints.core_energy);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n 0.5 1 1 1 1\n";

    #[test]
    fn single_integral_echo() {
        let ints = parse_fcidump(MINIMAL).unwrap();
        assert_eq!(ints.n_orbitals, 2);
        assert_eq!(ints.n_electrons, 2);
        assert_eq!(ints.two(0, 0, 0, 0), 0.5);
        let nonzero = ints.two_body.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 1);
        assert!(ints.one_body.iter().all(|v| *v == 0.0));
        assert_eq!(ints.core_energy, 0.0);
        assert_eq!(ints.orbsym, vec![1, 1]);
    }

    #[test]
    fn core_energy_line() {
        // H2 at 0.7414 Angstrom: 1 / (0.7414 / 0.529177) = 0.713754...
        let text = " &FCI NORB=1,NELEC=2, &END\n 0.713754 0 0 0 0\n";
        let ints = parse_fcidump(text).unwrap();
        assert_eq!(ints.core_energy, 0.713754);
        assert!((1.0 / (0.7414 / 0.529177) - ints.core_energy).abs() < 5e-6);
    }

    #[test]
    fn eightfold_lookup() {
        let text = " &FCI NORB=2,NELEC=2, &END\n 0.25 1 1 2 2\n 0.1 1 2 1 2\n";
        let ints = parse_fcidump(text).unwrap();
        assert_eq!(ints.two(1, 1, 0, 0), 0.25);
        assert_eq!(ints.two(0, 0, 1, 1), 0.25);
        assert_eq!(ints.two(1, 0, 0, 1), 0.1);
        assert_eq!(ints.two(0, 1, 1, 0), 0.1);
    }

    #[test]
    fn fortran_exponents_accepted() {
        let text = "&FCI NORB=1,NELEC=1,&END\n-1.25D+00 1 1 0 0\n";
        assert_eq!(parse_fcidump(text).unwrap().one(0, 0), -1.25);
    }

    #[test]
    fn out_of_range_index_reports_line() {
        let text = " &FCI NORB=2,NELEC=2, &END\n 0.5 1 1 1 1\n 0.5 3 1 1 1\n";
        match parse_fcidump(text) {
            Err(MolhamError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        let text = " &FCI NORB=two,NELEC=2, &END\n";
        assert!(matches!(parse_fcidump(text), Err(MolhamError::Parse { line: 1, .. })));
        assert!(matches!(parse_fcidump("0.5 1 1 1 1\n"), Err(MolhamError::Parse { .. })));
        let text = " &FCI NELEC=2, &END\n";
        assert!(matches!(parse_fcidump(text), Err(MolhamError::Parse { .. })));
    }

    #[test]
    fn contradictory_duplicate() {
        let text = " &FCI NORB=2,NELEC=2, &END\n 0.5 1 1 2 2\n 0.6 2 2 1 1\n";
        assert!(matches!(parse_fcidump(text), Err(MolhamError::Consistency { line: 3, .. })));
        // consistent duplicates are fine
        let text = " &FCI NORB=2,NELEC=2, &END\n 0.5 1 1 2 2\n 0.5 2 2 1 1\n";
        assert!(parse_fcidump(text).is_ok());
    }

    #[test]
    fn multiline_header() {
        let text = " &FCI NORB=3,NELEC=2,MS2=0,\n  ORBSYM=1,\n 2,3,\n  ISYM=1,\n /\n 1.0 2 2 0 0\n";
        let ints = parse_fcidump(text).unwrap();
        assert_eq!(ints.orbsym, vec![1, 2, 3]);
        assert_eq!(ints.one(1, 1), 1.0);
    }
}
