//! One-line-per-iteration attack traces.

use relock_core::attack::{AttackOutcome, AttackResult};

/// Hex string of a bit vector, first bit most significant. Empty vectors
/// print as `0x`.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let mut s = String::from("0x");
    let pad = (4 - bits.len() % 4) % 4;
    let padded: Vec<bool> = std::iter::repeat_n(false, pad)
        .chain(bits.iter().copied())
        .collect();
    for nib in padded.chunks(4) {
        let v = nib.iter().fold(0u8, |acc, &b| acc << 1 | b as u8);
        s.push(char::from_digit(v as u32, 16).unwrap());
    }
    s
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn trace_lines(r: &AttackResult) -> Vec<String> {
    let mut out: Vec<String> = r
        .dips
        .iter()
        .enumerate()
        .map(|(i, d)| {
            format!(
                "iter {} dip={} out={} clauses={} vars={} solve_us={}",
                i + 1,
                bits_to_hex(&d.input),
                bits_to_hex(&d.response),
                d.clauses,
                d.vars,
                d.solve_time.as_micros()
            )
        })
        .collect();
    if r.unsat_without_dips() {
        out.push("note: instance unsatisfiable before the first DIP".into());
    }
    let outcome = match &r.outcome {
        AttackOutcome::KeyFound(k) => format!("key={}", bits_to_string(k)),
        AttackOutcome::Unsat => "UNSAT".into(),
        AttackOutcome::Timeout => "TIMEOUT".into(),
    };
    out.push(format!(
        "done {} iterations={} final_solve_us={}",
        outcome,
        r.iterations(),
        r.final_solve_time.as_micros()
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex() {
        assert_eq!(bits_to_hex(&[false, false]), "0x0");
        assert_eq!(bits_to_hex(&[true]), "0x1");
        assert_eq!(bits_to_hex(&[true, false, false, false, false]), "0x10");
        assert_eq!(bits_to_hex(&[]), "0x");
        assert_eq!(parse_bits("0110"), Some(vec![false, true, true, false]));
        assert_eq!(parse_bits("01x"), None);
    }
}
