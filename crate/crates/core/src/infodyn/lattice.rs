use serde::{Deserialize, Serialize};

/// A non-empty subset of the two system variables: `{1}`, `{2}` or `{1,2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    One,
    Two,
    Both,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::One, Source::Two, Source::Both];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Positions (0 = variable 1, 1 = variable 2) contained in the subset.
    pub fn variables(self) -> &'static [usize] {
        match self {
            Source::One => &[0],
            Source::Two => &[1],
            Source::Both => &[0, 1],
        }
    }

    pub fn swapped(self) -> Source {
        match self {
            Source::One => Source::Two,
            Source::Two => Source::One,
            Source::Both => Source::Both,
        }
    }
}

/// Node of the two-source redundancy lattice.
///
/// `Red = {{1},{2}}`, `Unq1 = {{1}}`, `Unq2 = {{2}}`, `Syn = {{1,2}}`, ordered
/// as a diamond with `Red` at the bottom and `Syn` at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Antichain {
    Red,
    Unq1,
    Unq2,
    Syn,
}

impl Antichain {
    pub const ALL: [Antichain; 4] = [
        Antichain::Red,
        Antichain::Unq1,
        Antichain::Unq2,
        Antichain::Syn,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Antichain::Red => "red",
            Antichain::Unq1 => "unq1",
            Antichain::Unq2 => "unq2",
            Antichain::Syn => "syn",
        }
    }

    /// Source subsets making up the antichain.
    pub fn members(self) -> &'static [Source] {
        match self {
            Antichain::Red => &[Source::One, Source::Two],
            Antichain::Unq1 => &[Source::One],
            Antichain::Unq2 => &[Source::Two],
            Antichain::Syn => &[Source::Both],
        }
    }

    /// Lattice order `self ⪯ other`.
    pub fn le(self, other: Antichain) -> bool {
        use Antichain::*;
        match (self, other) {
            (a, b) if a == b => true,
            (Red, _) => true,
            (_, Syn) => true,
            _ => false,
        }
    }

    /// Möbius function μ(lower, upper) of the diamond lattice.
    pub fn mobius(lower: Antichain, upper: Antichain) -> i32 {
        use Antichain::*;
        if lower == upper {
            return 1;
        }
        match (lower, upper) {
            (Red, Unq1) | (Red, Unq2) | (Unq1, Syn) | (Unq2, Syn) => -1,
            (Red, Syn) => 1,
            _ => 0,
        }
    }

    /// Relabel variables 1 ↔ 2.
    pub fn swapped(self) -> Antichain {
        match self {
            Antichain::Unq1 => Antichain::Unq2,
            Antichain::Unq2 => Antichain::Unq1,
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// μ from its recursive definition over the order relation alone.
    fn mobius_recursive(x: Antichain, y: Antichain) -> i32 {
        if !x.le(y) {
            return 0;
        }
        if x == y {
            return 1;
        }
        -Antichain::ALL
            .iter()
            .filter(|&&z| x.le(z) && z.le(y) && z != y)
            .map(|&z| mobius_recursive(x, z))
            .sum::<i32>()
    }

    #[test]
    fn mobius_table_matches_recursive_definition() {
        for &x in &Antichain::ALL {
            for &y in &Antichain::ALL {
                assert_eq!(Antichain::mobius(x, y), mobius_recursive(x, y), "{x:?} {y:?}");
            }
        }
    }

    #[test]
    fn diamond_order() {
        use Antichain::*;
        assert!(Red.le(Unq1) && Unq1.le(Syn) && Red.le(Unq2) && Unq2.le(Syn));
        assert!(!Unq1.le(Unq2) && !Unq2.le(Unq1));
        assert!(!Syn.le(Red));
    }
}
