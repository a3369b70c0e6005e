/// ABI names indexed by register number.
pub const ABI_NAMES: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "s2",
    "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
];

/// Accepts `x0`..`x31`, the ABI names, and `fp` as an alias of `s0`.
pub fn parse_register(s: &str) -> Option<u8> {
    if let Some(n) = s.strip_prefix('x') {
        if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) && (n.len() == 1 || !n.starts_with('0')) {
            return n.parse::<u8>().ok().filter(|&r| r < 32);
        }
    }
    if s == "fp" {
        return Some(8);
    }
    ABI_NAMES.iter().position(|&name| name == s).map(|i| i as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_spellings() {
        assert_eq!(parse_register("x0"), Some(0));
        assert_eq!(parse_register("zero"), Some(0));
        assert_eq!(parse_register("a7"), Some(17));
        assert_eq!(parse_register("x31"), Some(31));
        assert_eq!(parse_register("t6"), Some(31));
        assert_eq!(parse_register("fp"), Some(8));
        assert_eq!(parse_register("x32"), None);
        assert_eq!(parse_register("x05"), None);
        assert_eq!(parse_register("q1"), None);
    }
}
