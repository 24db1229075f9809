//! Ising instances, spin configurations and the line-oriented instance format.
//!
//! The cost function is `H(σ) = Σ_{i<j} J_ij σ_i σ_j + Σ_i h_i σ_i` with
//! `σ_i ∈ {−1, +1}`. A negative coupling is ferromagnetic.
//!
//! All coupling and bias values are stored as exact integers over a common
//! decimal denominator `10^scale`, so every energy is an exact integer in
//! those units and exactness checks never touch floating point.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest system accepted by [`brute_force_ground_state`].
pub const BRUTE_FORCE_MAX_SPINS: usize = 24;

/// Largest decimal exponent accepted in values.
const MAX_SCALE: u32 = 12;

/// Errors raised by the data model and the instance parser.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsingError {
    #[error("configuration has {got} spins but the instance has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("spin value {0} is not ±1")]
    InvalidSpin(i64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value {0:?}")]
    InvalidValue(String),
    #[error("brute force limited to {max} spins, instance has {n}")]
    TooLarge { n: usize, max: usize },
    #[error("instance has no planted configuration")]
    MissingPlanted,
    #[error("instance has nonzero biases")]
    NonzeroBias,
}

/// Exact decimal value `num / 10^scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixed {
    pub num: i64,
    pub scale: u32,
}

impl Fixed {
    pub fn integer(v: i64) -> Self {
        Fixed { num: v, scale: 0 }
    }

    /// Numerator of this value over the denominator `10^scale`, or `None` if
    /// it is not representable at that scale.
    pub fn rescaled(self, scale: u32) -> Option<i64> {
        if scale >= self.scale {
            self.num.checked_mul(10_i64.checked_pow(scale - self.scale)?)
        } else {
            let div = 10_i64.checked_pow(self.scale - scale)?;
            (self.num % div == 0).then(|| self.num / div)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / 10f64.powi(self.scale as i32)
    }
}

impl FromStr for Fixed {
    type Err = IsingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IsingError::InvalidValue(s.to_string());
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((a, b)) => (a, b),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let frac = frac_part.trim_end_matches('0');
        let scale = frac.len() as u32;
        if scale > MAX_SCALE {
            return Err(bad());
        }
        let mut num: i64 = 0;
        for b in int_part.bytes().chain(frac.bytes()) {
            num = num
                .checked_mul(10)
                .and_then(|x| x.checked_add((b - b'0') as i64))
                .ok_or_else(bad)?;
        }
        Ok(Fixed {
            num: if negative { -num } else { num },
            scale,
        })
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_scaled(self.num, self.scale))
    }
}

/// Formats `num / 10^scale` in plain decimal notation, trailing zeros trimmed.
pub fn format_scaled(num: i64, scale: u32) -> String {
    if scale == 0 {
        return num.to_string();
    }
    let den = 10_u64.pow(scale);
    let abs = num.unsigned_abs();
    let int = abs / den;
    let frac = abs % den;
    let sign = if num < 0 { "-" } else { "" };
    if frac == 0 {
        return format!("{sign}{int}");
    }
    let digits = format!("{:0width$}", frac, width = scale as usize);
    format!("{sign}{int}.{}", digits.trim_end_matches('0'))
}

/// A vector of ±1 spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self, IsingError> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(IsingError::InvalidSpin(bad as i64));
        }
        Ok(SpinConfiguration(spins))
    }

    pub fn uniform(n: usize) -> Self {
        SpinConfiguration(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn flipped(&self) -> Self {
        SpinConfiguration(self.0.iter().map(|s| -s).collect())
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bias {
    pub i: usize,
    pub value: i64,
}

/// Structural origin of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TopologyTag {
    Chimera(usize),
    LogicalSquare(usize),
    Anticluster(usize),
    #[default]
    General,
}

impl fmt::Display for TopologyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyTag::Chimera(c) => write!(f, "chimera({c})"),
            TopologyTag::LogicalSquare(c) => write!(f, "logical_square({c})"),
            TopologyTag::Anticluster(c) => write!(f, "anticluster({c})"),
            TopologyTag::General => write!(f, "general"),
        }
    }
}

/// Generator provenance. Parameters are kept as ordered key/value pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub generator: Option<String>,
    pub params: Vec<(String, String)>,
    pub rng_algorithm: Option<String>,
}

impl Metadata {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// An Ising problem. Values are numerators over `10^scale`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsingInstance {
    pub n: usize,
    pub couplings: Vec<Coupling>,
    pub biases: Vec<Bias>,
    pub scale: u32,
    pub topology: TopologyTag,
    pub planted: Option<SpinConfiguration>,
    pub metadata: Metadata,
}

impl IsingInstance {
    /// Builds an instance with integer couplings, normalizing pairs to `i < j`
    /// and sorting them.
    pub fn from_couplings(n: usize, couplings: impl IntoIterator<Item = (usize, usize, i64)>) -> Self {
        let mut inst = IsingInstance {
            n,
            couplings: couplings
                .into_iter()
                .map(|(i, j, value)| Coupling {
                    i: i.min(j),
                    j: i.max(j),
                    value,
                })
                .collect(),
            ..Default::default()
        };
        inst.couplings.sort_by_key(|c| (c.i, c.j));
        inst
    }

    pub fn with_biases(mut self, biases: impl IntoIterator<Item = (usize, i64)>) -> Self {
        self.biases = biases.into_iter().map(|(i, value)| Bias { i, value }).collect();
        self.biases.sort_by_key(|b| b.i);
        self
    }

    pub fn denominator(&self) -> i64 {
        10_i64.pow(self.scale)
    }

    /// Formats a value given in this instance's units.
    pub fn format_value(&self, num: i64) -> String {
        format_scaled(num, self.scale)
    }

    pub fn value_to_f64(&self, num: i64) -> f64 {
        num as f64 / self.denominator() as f64
    }

    pub fn has_biases(&self) -> bool {
        self.biases.iter().any(|b| b.value != 0)
    }

    /// Sum of all coupling values.
    pub fn coupling_sum(&self) -> i64 {
        self.couplings.iter().map(|c| c.value).sum()
    }

    /// Reduces `scale` to the smallest exponent that represents all values.
    pub fn canonicalize_scale(&mut self) {
        while self.scale > 0
            && self
                .couplings
                .iter()
                .map(|c| c.value)
                .chain(self.biases.iter().map(|b| b.value))
                .all(|v| v % 10 == 0)
        {
            for c in &mut self.couplings {
                c.value /= 10;
            }
            for b in &mut self.biases {
                b.value /= 10;
            }
            self.scale -= 1;
        }
    }

    /// Adjacency lists `(neighbor, coupling)` over nonzero couplings, sorted
    /// by neighbor index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, i64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for c in self.couplings.iter().filter(|c| c.value != 0) {
            adj[c.i].push((c.j, c.value));
            adj[c.j].push((c.i, c.value));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Bias per site (dense).
    pub fn bias_vector(&self) -> Vec<i64> {
        let mut h = vec![0; self.n];
        for b in &self.biases {
            h[b.i] += b.value;
        }
        h
    }
}

/// `Σ J_ij σ_i σ_j + Σ h_i σ_i`, in units of `1 / instance.denominator()`.
pub fn energy(instance: &IsingInstance, config: &SpinConfiguration) -> Result<i64, IsingError> {
    energy_of_spins(instance, config.spins())
}

pub fn energy_of_spins(instance: &IsingInstance, spins: &[i8]) -> Result<i64, IsingError> {
    if spins.len() != instance.n {
        return Err(IsingError::LengthMismatch {
            expected: instance.n,
            got: spins.len(),
        });
    }
    let pair: i64 = instance
        .couplings
        .iter()
        .map(|c| c.value * (spins[c.i] * spins[c.j]) as i64)
        .sum();
    let field: i64 = instance
        .biases
        .iter()
        .map(|b| b.value * spins[b.i] as i64)
        .sum();
    Ok(pair + field)
}

/// A single invariant violation reported by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    IndexOutOfRange { i: usize, j: usize },
    Ordering { i: usize, j: usize },
    DuplicatePair { i: usize, j: usize },
    DuplicateBias { i: usize },
    PlantedLength { expected: usize, got: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange { i, j } => write!(f, "index out of range: ({i}, {j})"),
            Violation::Ordering { i, j } => write!(f, "i<j ordering: ({i}, {j})"),
            Violation::DuplicatePair { i, j } => write!(f, "duplicate pair: ({i}, {j})"),
            Violation::DuplicateBias { i } => write!(f, "duplicate bias: {i}"),
            Violation::PlantedLength { expected, got } => {
                write!(f, "planted length {got} != n = {expected}")
            }
        }
    }
}

/// Checks the structural invariants of an instance. Planted optimality is not
/// checked here.
pub fn validate_instance(instance: &IsingInstance) -> Vec<Violation> {
    let n = instance.n;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for c in &instance.couplings {
        if c.i >= n || c.j >= n {
            out.push(Violation::IndexOutOfRange { i: c.i, j: c.j });
        }
        if c.i >= c.j {
            out.push(Violation::Ordering { i: c.i, j: c.j });
        }
        if !seen.insert((c.i.min(c.j), c.i.max(c.j))) {
            out.push(Violation::DuplicatePair { i: c.i, j: c.j });
        }
    }
    let mut seen_bias = HashSet::new();
    for b in &instance.biases {
        if b.i >= n {
            out.push(Violation::IndexOutOfRange { i: b.i, j: b.i });
        }
        if !seen_bias.insert(b.i) {
            out.push(Violation::DuplicateBias { i: b.i });
        }
    }
    if let Some(p) = &instance.planted {
        if p.len() != n {
            out.push(Violation::PlantedLength {
                expected: n,
                got: p.len(),
            });
        }
    }
    out
}

/// Parses the instance text format: a first line holding `n`, then one
/// `i j v` line per term (`i == j` is a bias). Lines starting with `#` are
/// comments.
pub fn parse_instance(text: &str) -> Result<IsingInstance, IsingError> {
    let err = |line: usize, message: String| IsingError::Parse { line, message };
    let mut n: Option<usize> = None;
    let mut raw_couplings: Vec<(usize, usize, Fixed)> = Vec::new();
    let mut raw_biases: Vec<(usize, Fixed)> = Vec::new();
    let mut pairs = HashSet::new();
    let mut bias_sites = HashSet::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(count) = n else {
            let value = line
                .parse::<usize>()
                .map_err(|_| err(lineno, format!("expected spin count, found {line:?}")))?;
            n = Some(value);
            continue;
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(lineno, format!("expected `i j v`, found {line:?}")));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| err(lineno, format!("bad index {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| err(lineno, format!("bad index {:?}", fields[1])))?;
        let v: Fixed = fields[2]
            .parse()
            .map_err(|_| err(lineno, format!("bad or non-finite value {:?}", fields[2])))?;
        if i >= count || j >= count {
            return Err(err(lineno, format!("index out of range for n = {count}")));
        }
        if i == j {
            if !bias_sites.insert(i) {
                return Err(err(lineno, format!("duplicate bias for site {i}")));
            }
            raw_biases.push((i, v));
        } else {
            let key = (i.min(j), i.max(j));
            if !pairs.insert(key) {
                return Err(err(lineno, format!("duplicate pair ({}, {})", key.0, key.1)));
            }
            raw_couplings.push((key.0, key.1, v));
        }
    }
    let n = n.ok_or_else(|| err(1, "missing spin count".into()))?;
    let scale = raw_couplings
        .iter()
        .map(|c| c.2.scale)
        .chain(raw_biases.iter().map(|b| b.1.scale))
        .max()
        .unwrap_or(0);
    let rescale = |v: Fixed| {
        v.rescaled(scale)
            .ok_or_else(|| IsingError::InvalidValue(v.to_string()))
    };
    let mut inst = IsingInstance {
        n,
        scale,
        ..Default::default()
    };
    for (i, j, v) in raw_couplings {
        inst.couplings.push(Coupling {
            i,
            j,
            value: rescale(v)?,
        });
    }
    for (i, v) in raw_biases {
        inst.biases.push(Bias { i, value: rescale(v)? });
    }
    inst.couplings.sort_by_key(|c| (c.i, c.j));
    inst.biases.sort_by_key(|b| b.i);
    inst.canonicalize_scale();
    Ok(inst)
}

/// Canonical text form: couplings sorted by `(i, j)`, then biases sorted by
/// `i`; zero values are omitted.
pub fn serialize_instance(instance: &IsingInstance) -> String {
    let mut couplings: Vec<&Coupling> =
        instance.couplings.iter().filter(|c| c.value != 0).collect();
    couplings.sort_by_key(|c| (c.i.min(c.j), c.i.max(c.j)));
    let mut biases: Vec<&Bias> = instance.biases.iter().filter(|b| b.value != 0).collect();
    biases.sort_by_key(|b| b.i);

    let mut out = format!("{}\n", instance.n);
    for c in couplings {
        out.push_str(&format!(
            "{} {} {}\n",
            c.i.min(c.j),
            c.i.max(c.j),
            format_scaled(c.value, instance.scale)
        ));
    }
    for b in biases {
        out.push_str(&format!("{} {} {}\n", b.i, b.i, format_scaled(b.value, instance.scale)));
    }
    out
}

/// Energy of the planted configuration.
pub fn planted_energy(instance: &IsingInstance) -> Result<i64, IsingError> {
    let planted = instance.planted.as_ref().ok_or(IsingError::MissingPlanted)?;
    if instance.has_biases() {
        return Err(IsingError::NonzeroBias);
    }
    energy(instance, planted)
}

/// Exhaustive minimum over all `2^n` configurations, enumerated in Gray-code
/// order. Ties resolve to the first configuration reached.
pub fn brute_force_ground_state(
    instance: &IsingInstance,
) -> Result<(SpinConfiguration, i64), IsingError> {
    let n = instance.n;
    if n > BRUTE_FORCE_MAX_SPINS {
        return Err(IsingError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_SPINS,
        });
    }
    let adj = instance.adjacency();
    let h = instance.bias_vector();
    let mut spins = vec![1_i8; n];
    let mut current = energy_of_spins(instance, &spins)?;
    let mut best = current;
    let mut best_step: u64 = 0;
    for step in 1..(1_u64 << n) {
        let k = step.trailing_zeros() as usize;
        let field: i64 = adj[k].iter().map(|&(j, v)| v * spins[j] as i64).sum::<i64>() + h[k];
        current -= 2 * spins[k] as i64 * field;
        spins[k] = -spins[k];
        if current < best {
            best = current;
            best_step = step;
        }
    }
    let gray = best_step ^ (best_step >> 1);
    let config = (0..n)
        .map(|i| if gray >> i & 1 == 1 { -1 } else { 1 })
        .collect();
    Ok((SpinConfiguration(config), best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ferromagnetic_bond() {
        let inst = IsingInstance::from_couplings(2, [(0, 1, -1)]);
        assert_eq!(energy(&inst, &SpinConfiguration::uniform(2)).unwrap(), -1);
    }

    #[test]
    fn bias_only_energy() {
        let inst = IsingInstance::from_couplings(2, []).with_biases([(0, 1), (1, -2)]);
        assert_eq!(energy(&inst, &SpinConfiguration::uniform(2)).unwrap(), -1);
    }

    #[test]
    fn four_cycle_uniform_energy() {
        let inst =
            IsingInstance::from_couplings(4, [(0, 1, -1), (1, 2, -1), (2, 3, -1), (0, 3, 1)]);
        assert_eq!(energy(&inst, &SpinConfiguration::uniform(4)).unwrap(), -2);
    }

    #[test]
    fn energy_rejects_wrong_length() {
        let inst = IsingInstance::from_couplings(3, [(0, 1, -1)]);
        assert!(matches!(
            energy(&inst, &SpinConfiguration::uniform(2)),
            Err(IsingError::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn parse_examples() {
        let inst = parse_instance("2\n0 1 -1\n").unwrap();
        assert_eq!(inst.n, 2);
        assert_eq!(inst.couplings, vec![Coupling { i: 0, j: 1, value: -1 }]);

        let inst = parse_instance("1\n0 0 2\n").unwrap();
        assert_eq!(inst.biases, vec![Bias { i: 0, value: 2 }]);

        let err = parse_instance("2\n0 1 -1\n0 1 1\n").unwrap_err();
        assert!(err.to_string().contains("duplicate pair"), "{err}");
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_instance("2\n0 2 1\n").is_err());
        assert!(parse_instance("2\n0 1 inf\n").is_err());
        assert!(parse_instance("2\n0 1 NaN\n").is_err());
        assert!(parse_instance("2\n0 1\n").is_err());
        assert!(parse_instance("x\n").is_err());
        assert!(parse_instance("# only a comment\n").is_err());
    }

    #[test]
    fn parse_decimals_share_a_denominator() {
        let inst = parse_instance("# c\n3\n0 1 -0.25\n1 2 1.5\n").unwrap();
        assert_eq!(inst.scale, 2);
        assert_eq!(inst.couplings[0].value, -25);
        assert_eq!(inst.couplings[1].value, 150);
        assert_eq!(serialize_instance(&inst), "3\n0 1 -0.25\n1 2 1.5\n");
    }

    #[test]
    fn serialize_examples() {
        let inst = IsingInstance::from_couplings(2, [(0, 1, -1)]);
        assert_eq!(serialize_instance(&inst), "2\n0 1 -1\n");
        let inst = IsingInstance::from_couplings(3, [(0, 2, 2), (0, 1, -1)]);
        assert_eq!(serialize_instance(&inst), "3\n0 1 -1\n0 2 2\n");
    }

    #[test]
    fn serialize_drops_zero_couplings() {
        let inst = IsingInstance::from_couplings(3, [(0, 1, 0), (1, 2, 3)]);
        assert_eq!(serialize_instance(&inst), "3\n1 2 3\n");
    }

    #[test]
    fn validation_reports_violations() {
        let ok = IsingInstance::from_couplings(3, [(0, 1, 1)]);
        assert!(validate_instance(&ok).is_empty());

        let mut bad = ok.clone();
        bad.couplings.push(Coupling { i: 2, j: 1, value: 1 });
        let v = validate_instance(&bad);
        assert!(v.iter().any(|v| v.to_string().starts_with("i<j ordering")));

        let mut bad = ok.clone();
        bad.couplings.push(Coupling { i: 1, j: 3, value: 1 });
        let v = validate_instance(&bad);
        assert!(v.iter().any(|v| v.to_string().starts_with("index out of range")));
    }

    #[test]
    fn fixed_parse_and_format() {
        assert_eq!("-0.50".parse::<Fixed>().unwrap(), Fixed { num: -5, scale: 1 });
        assert_eq!("3".parse::<Fixed>().unwrap(), Fixed::integer(3));
        assert_eq!(".5".parse::<Fixed>().unwrap(), Fixed { num: 5, scale: 1 });
        assert!("1e3".parse::<Fixed>().is_err());
        assert!("-".parse::<Fixed>().is_err());
        assert_eq!(format_scaled(-75, 2), "-0.75");
        assert_eq!(format_scaled(100, 2), "1");
        assert_eq!(format_scaled(0, 3), "0");
    }

    #[test]
    fn planted_energy_requires_planted() {
        let mut inst =
            IsingInstance::from_couplings(4, [(0, 1, -1), (1, 2, -1), (2, 3, -1), (0, 3, 1)]);
        assert_eq!(planted_energy(&inst), Err(IsingError::MissingPlanted));
        inst.planted = Some(SpinConfiguration::uniform(4));
        assert_eq!(planted_energy(&inst), Ok(-2));
    }

    #[test]
    fn brute_force_frustrated_square() {
        let inst =
            IsingInstance::from_couplings(4, [(0, 1, -1), (1, 3, -1), (2, 3, -1), (0, 2, 1)]);
        let (cfg, e) = brute_force_ground_state(&inst).unwrap();
        assert_eq!(e, -2);
        assert_eq!(energy(&inst, &cfg).unwrap(), -2);
    }

    #[test]
    fn brute_force_guard() {
        let inst = IsingInstance::from_couplings(30, []);
        assert!(matches!(
            brute_force_ground_state(&inst),
            Err(IsingError::TooLarge { n: 30, .. })
        ));
    }

    #[test]
    fn brute_force_with_biases() {
        let inst = IsingInstance::from_couplings(2, [(0, 1, -1)]).with_biases([(0, 3), (1, 3)]);
        let (cfg, e) = brute_force_ground_state(&inst).unwrap();
        assert_eq!(e, -7);
        assert_eq!(cfg.spins(), &[-1, -1]);
    }
}
